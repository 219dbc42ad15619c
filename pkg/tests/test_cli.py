import json

import pytest

from cnnregions import cli
from cnnregions.tables import two_layer_example

T1_CSV = (
    "row,d1=1,d1=2,d1=3,d1=4,d1=5,d1=6,d1=7,d1=8\n"
    "exact,4,15,40,85,156,259,400,585\n"
    "fully_connected_upper,4,15,42,93,176,299,470,697\n"
    "naive_upper,4,16,64,256,1024,4096,16384,65536\n"
)


def invoke(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def example5_config(tmp_path):
    path = tmp_path / "deep.json"
    path.write_text(two_layer_example(4).to_json())
    return str(path)


class TestTables:
    def test_t1(self, capsys):
        assert invoke(capsys, "table", "T1") == (0, T1_CSV, "")

    def test_lowercase_id(self, capsys):
        assert invoke(capsys, "table", "t1")[1] == T1_CSV

    def test_t2(self, capsys):
        code, out, _ = invoke(capsys, "table", "T2", "--samples", "200")
        lines = out.splitlines()
        assert code == 0
        assert lines[1] == "upper,220,880,3520,13585,46640,138050,356180,819115"
        assert lines[2].startswith("sampling_estimate,")
        assert lines[3] == "lower,32,120,320,680,1248,2072,3200,4680"

    def test_s5_json(self, capsys):
        code, out, _ = invoke(capsys, "table", "S5", "--format", "json")
        rows = json.loads(out)["rows"]
        assert code == 0
        assert rows[0]["row"] == "exact" and rows[0]["d1=8"] == "3459170397"

    def test_unknown_table(self, capsys):
        code, _, err = invoke(capsys, "table", "T9")
        assert code == 2 and json.loads(err)["error"] == "ParseError"


class TestCommands:
    def test_exact_s4(self, capsys):
        code, out, _ = invoke(capsys, "exact", "--input", "6x6x1", "--layer", "1x3/2/3")
        assert code == 0 and out == "d1,count\n3,250047\n"

    def test_exact_sweep_from_zero(self, capsys):
        out = invoke(capsys, "exact", "--input", "1x3x1", "--layer", "1x2/1/1", "--d1", "0..3")[1]
        assert out == "d1,count\n0,1\n1,4\n2,15\n3,40\n"

    def test_exact_and_poly_agree(self, capsys):
        args = ["--input", "2x3x1", "--layer", "2x2/1/1", "--d1", "1..6"]
        assert invoke(capsys, "exact", *args)[1] == invoke(capsys, "poly", *args)[1]

    def test_poly_coefficients(self, capsys):
        code, out, _ = invoke(capsys, "poly", "--input", "1x3x1", "--layer", "1x2/1/1", "--format", "json")
        data = json.loads(out)
        assert data["meta"]["polynomial"] == "d1^3 + d1^2 + d1 + 1"
        assert [r["coefficient"] for r in data["rows"]] == ["1", "1", "1", "1"]

    def test_oracle(self, capsys):
        code, out, _ = invoke(capsys, "oracle", "--input", "1x3x1", "--layer", "1x2/1/2", "--seed", "7")
        assert code == 0 and out == "d1,seeds,formula,oracle,match\n2,7,15,15,True\n"

    def test_dims_and_params(self, capsys, example5_config):
        assert invoke(capsys, "dims", "--config", example5_config)[1] == (
            "layer,height,width,depth\n1,1,3,2\n2,1,2,4\n"
        )
        assert invoke(capsys, "params", "--config", example5_config)[1] == "parameters\n26\n"

    def test_bounds(self, capsys, example5_config):
        code, out, _ = invoke(capsys, "bounds", "--config", example5_config, "--format", "json")
        row = json.loads(out)["rows"][0]
        assert code == 0
        assert (row["depth"], row["lower"], row["upper"]) == (4, "680", "13585")

    def test_bounds_sweep(self, capsys, example5_config):
        out = invoke(capsys, "bounds", "--config", example5_config, "--d1", "1..2")[1]
        assert [l.split(",")[:3] for l in out.splitlines()[1:]] == [["1", "32", "220"], ["2", "120", "880"]]

    def test_compose(self, capsys):
        code, out, _ = invoke(capsys, "compose", "--input", "9x9x2", "--layer", "3x3/2/3", "--layer", "2x2/2/2")
        assert code == 0 and out == "filter_height,filter_width,stride,depth,verified\n5,5,4,2,True\n"

    def test_compare(self, capsys, example5_config, tmp_path):
        other = tmp_path / "other.json"
        other.write_text('{"input": {"h": 1, "w": 4, "d": 1}, "layers": [{"fh": 1, "fw": 2, "stride": 1, "depth": 9}]}')
        code, out, _ = invoke(capsys, "compare", "--config", example5_config, "--against", str(other))
        lines = out.splitlines()
        assert code == 0 and lines[1].startswith("a,26,680,13585,")
        assert lines[2].startswith("b,27,")

    def test_sample_payload(self, capsys):
        args = ["sample", "--input", "1x3x1", "--layer", "1x2/1/2", "--samples", "500", "--std", "3,5"]
        code, out, _ = invoke(capsys, *args, "--format", "json")
        data = json.loads(out)
        assert code == 0
        assert set(data) == {"arch", "seed", "num_samples", "per_v", "max_distinct"}
        assert data["arch"]["input"] == {"h": 1, "w": 3, "d": 1}
        assert [p["v"] for p in data["per_v"]] == [3.0, 5.0]
        assert int(data["max_distinct"]) <= 15
        csv_rows = invoke(capsys, *args)[1].splitlines()[1:]
        assert [r.split(",")[1] for r in csv_rows] == [p["distinct"] for p in data["per_v"]]

    def test_threads_do_not_change_output(self, capsys):
        args = ["sample", "--input", "2x3x1", "--layer", "2x2/1/3", "--samples", "20000", "--std", "3,9"]
        assert invoke(capsys, *args)[1] == invoke(capsys, *args, "--threads", "3")[1]


class TestIO:
    def test_byte_stable(self, capsys):
        args = ["table", "S3", "--format", "json"]
        assert invoke(capsys, *args)[1] == invoke(capsys, *args)[1]

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / "t1.csv"
        code, out, _ = invoke(capsys, "table", "T1", "--out", str(target))
        assert code == 0 and out == "" and target.read_text() == T1_CSV

    def test_config_matches_flags(self, capsys, example5_config):
        flags = ["--input", "1x4x1", "--layer", "1x2/1/2", "--layer", "1x2/1/4"]
        assert invoke(capsys, "bounds", "--config", example5_config)[1] == invoke(capsys, "bounds", *flags)[1]

    def test_structural_ints_stay_ints(self, capsys):
        data = json.loads(invoke(capsys, "dims", "--input", "1x3x1", "--layer", "1x2/1/2", "--format", "json")[1])
        assert data["rows"][0] == {"layer": 1, "height": 1, "width": 2, "depth": 2}


class TestErrors:
    def test_missing_architecture(self, capsys):
        code, out, err = invoke(capsys, "exact", "--layer", "1x2/1/2")
        assert code == 2 and out == ""
        assert json.loads(err)["exit_code"] == 2

    def test_config_missing_input(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"layers": [{"fh": 1, "fw": 2, "stride": 1, "depth": 2}]}')
        code, _, err = invoke(capsys, "exact", "--config", str(path))
        assert code == 2 and "input" in json.loads(err)["message"]

    def test_unknown_key(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"input": {"h": 1, "w": 3, "d": 1, "c": 2}, "layers": [{"fh": 1, "fw": 2, "stride": 1, "depth": 2}]}')
        assert invoke(capsys, "exact", "--config", str(path))[0] == 2

    def test_bad_layer_syntax(self, capsys):
        assert invoke(capsys, "exact", "--input", "1x3x1", "--layer", "1x2/1")[0] == 2

    def test_unknown_command(self, capsys):
        assert invoke(capsys, "frobnicate")[0] == 2

    def test_filter_too_large(self, capsys):
        code, _, err = invoke(capsys, "exact", "--input", "1x3x1", "--layer", "1x4/1/2")
        assert code == 3
        assert json.loads(err)["error"] == "FilterExceedsInput"

    def test_zero_depth(self, capsys):
        assert invoke(capsys, "exact", "--input", "1x3x1", "--layer", "1x2/1/0")[0] == 3

    def test_exact_needs_one_layer(self, capsys, example5_config):
        assert invoke(capsys, "exact", "--config", example5_config)[0] == 3

    def test_hypothesis_violation(self, capsys):
        code, out, err = invoke(capsys, "bounds", "--input", "3x3x2", "--layer", "2x2/1/1", "--layer", "1x1/1/4")
        assert code == 4 and out == ""
        assert json.loads(err)["error"] == "HypothesisViolated"

    def test_oracle_mismatch(self, capsys, monkeypatch):
        import cnnregions.oracle as oracle

        monkeypatch.setattr(oracle, "count_regions_whitney", lambda a: 0)
        code, _, err = invoke(capsys, "oracle", "--input", "1x3x1", "--layer", "1x2/1/2", "--seed", "3")
        data = json.loads(err)
        assert code == 5 and data["seeds"][0] == 3
