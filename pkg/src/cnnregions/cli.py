"""Command-line front end.

Every command prints CSV (default) or JSON. Large integers are written as
decimal strings in JSON. Errors go to stderr as a JSON object and map to
stable exit codes.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .arch import Architecture, Dims, LayerSpec, compose_linear_layers, parameter_count, validate_architecture
from .bounds import bound_report, expressivity_report
from .counting import asymptotic_exponent, region_count_sweep, region_polynomial
from .errors import HypothesisViolated, OracleMismatch, ParseError, RegionError, ValidationError
from .oracle import check_one_layer
from .sampler import DEFAULT_STDS, SamplingConfig, estimate_region_count, he_init, verify_composition
from .tables import TABLE_IDS, reproduce_table

COMMANDS = ("dims", "params", "exact", "poly", "bounds", "oracle", "sample", "compose", "table", "compare")

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_HYPOTHESIS = 4
EXIT_ORACLE = 5


@dataclass
class RunSpec:
    command: str
    arch: Architecture | None = None
    other: Architecture | None = None
    d1: range | None = None
    seed: int = 0
    samples: int = 100_000
    std: tuple[float, ...] = DEFAULT_STDS
    table: str | None = None
    threads: int = 1
    format: str = "csv"
    out: str | None = None


@dataclass
class Report:
    rows: list[dict]
    meta: dict = field(default_factory=dict)
    payload: dict | None = None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParseError(message)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cnnregions", description="Linear-region counts and bounds for ReLU CNNs.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("table_id", nargs="?", help="table id for the 'table' command")
    p.add_argument("--config", help="architecture JSON file")
    p.add_argument("--against", help="second architecture JSON file (compare)")
    p.add_argument("--input", help="input dims HxWxD, instead of --config")
    p.add_argument("--layer", action="append", default=[], help="layer FHxFW/STRIDE/DEPTH, repeatable")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--d1", help="depth sweep a..b (last layer for 'bounds')")
    p.add_argument("--samples", type=int, default=100_000, help="samples per std value")
    p.add_argument("--std", help="comma-separated std values for input sampling")
    return p


def _parse_triple(text: str, what: str) -> tuple[int, int, int]:
    try:
        values = tuple(int(v) for v in text.lower().split("x"))
    except ValueError:
        raise ParseError(f"{what}: expected integers separated by 'x', got {text!r}") from None
    if len(values) != 3:
        raise ParseError(f"{what}: expected three values, got {text!r}")
    return values


def _parse_layer(text: str) -> LayerSpec:
    try:
        size, stride, depth = text.split("/")
        fh, fw = (int(v) for v in size.lower().split("x"))
        stride, depth = int(stride), int(depth)
    except ValueError:
        raise ParseError(f"--layer: expected FHxFW/STRIDE/DEPTH, got {text!r}") from None
    return LayerSpec(fh, fw, stride, depth)


def _parse_range(text: str) -> range:
    try:
        if ".." in text:
            lo, hi = (int(v) for v in text.split(".."))
        else:
            lo = hi = int(text)
    except ValueError:
        raise ParseError(f"--d1: expected a..b, got {text!r}") from None
    if lo < 0 or hi < lo:
        raise ParseError(f"--d1: empty or negative range {text!r}")
    return range(lo, hi + 1)


def _load_arch(path: str) -> Architecture:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    try:
        return Architecture.from_json(text)
    except ParseError as exc:
        raise ParseError(f"{path}: {exc}") from None


def parse_config(argv: list[str]) -> RunSpec:
    """Turn command-line arguments into a validated :class:`RunSpec`."""
    args = _build_parser().parse_args(argv)
    spec = RunSpec(args.command, seed=args.seed, samples=args.samples, threads=args.threads,
                   format=args.format, out=args.out)
    if args.std:
        try:
            spec.std = tuple(float(v) for v in args.std.split(","))
        except ValueError:
            raise ParseError(f"--std: expected comma-separated numbers, got {args.std!r}") from None
    if args.d1:
        spec.d1 = _parse_range(args.d1)
    if args.samples < 1 or args.threads < 1:
        raise ValidationError("--samples and --threads must be >= 1")

    if args.command == "table":
        if not args.table_id:
            raise ParseError("table: missing table id")
        if args.table_id.upper() not in TABLE_IDS:
            raise ParseError(f"table: unknown id {args.table_id!r}; choose from {', '.join(TABLE_IDS)}")
        spec.table = args.table_id.upper()
        return spec
    if args.table_id:
        raise ParseError(f"{args.command}: unexpected positional argument {args.table_id!r}")

    if args.config and (args.input or args.layer):
        raise ParseError("give either --config or --input/--layer, not both")
    if args.config:
        spec.arch = _load_arch(args.config)
    elif args.input:
        if not args.layer:
            raise ParseError("--input needs at least one --layer")
        spec.arch = Architecture(Dims(*_parse_triple(args.input, "--input")),
                                 tuple(_parse_layer(l) for l in args.layer))
    else:
        raise ParseError(f"{args.command}: missing architecture (--config or --input/--layer)")

    if args.command == "compare":
        if not args.against:
            raise ParseError("compare: missing --against")
        spec.other = _load_arch(args.against)
    if args.command in ("exact", "poly", "oracle") and spec.arch.n_layers != 1:
        raise ValidationError(f"{args.command}: needs a one-layer architecture")
    if args.command == "compose" and spec.arch.n_layers != 2:
        raise ValidationError("compose: needs a two-layer architecture")
    return spec


def _one_layer_sweep(spec: RunSpec):
    layer = spec.arch.layers[0]
    depths = spec.d1 if spec.d1 is not None else [layer.depth]
    for d in depths:
        yield d, LayerSpec(layer.filter_height, layer.filter_width, layer.stride, d)


def run(spec: RunSpec) -> Report:
    arch = spec.arch
    command = spec.command
    if command == "dims":
        rows = [{"layer": i, "height": d.height, "width": d.width, "depth": d.depth}
                for i, d in enumerate(validate_architecture(arch), start=1)]
        return Report(rows)
    if command == "params":
        return Report([{"parameters": parameter_count(arch)}])
    if command == "exact":
        depths = spec.d1 if spec.d1 is not None else [arch.layers[0].depth]
        counts = region_count_sweep(arch.input, arch.layers[0], depths)
        rows = [{"d1": d, "count": counts[d]} for d in depths]
        return Report(rows, {"exponent": asymptotic_exponent(arch.input, arch.layers[0])})
    if command == "poly":
        poly = region_polynomial(arch.input, arch.layers[0])
        meta = {"polynomial": str(poly), "degree": poly.degree, "leading_coefficient": str(poly.leading_coefficient)}
        if spec.d1 is not None:
            return Report([{"d1": d, "count": poly(d)} for d in spec.d1], meta)
        rows = [{"power": k, "coefficient": str(c)} for k, c in enumerate(poly.coefficients)]
        return Report(rows, meta)
    if command == "bounds":
        archs = [arch] if spec.d1 is None else [arch.with_depth(-1, d) for d in spec.d1]
        rows = []
        for a in archs:
            r = bound_report(a)
            if r.lower is None:
                raise HypothesisViolated(r.note)
            rows.append({"depth": a.layers[-1].depth, "lower": r.lower, "upper": r.upper,
                         "naive_upper": r.naive_upper, "lower_method": r.methods["lower"],
                         "upper_method": r.methods["upper"]})
        return Report(rows)
    if command == "oracle":
        rows = []
        for d, layer in _one_layer_sweep(spec):
            check = check_one_layer(arch.input, layer, spec.seed)
            rows.append({"d1": d, "seeds": " ".join(map(str, check.seeds)), "formula": check.formula,
                         "oracle": check.oracle, "match": check.match})
        return Report(rows)
    if command == "sample":
        cfg = SamplingConfig(num_samples=spec.samples, std_values=spec.std, seed=spec.seed, threads=spec.threads)
        estimate = estimate_region_count(arch, he_init(arch, spec.seed), cfg)
        rows = [{"v": v, "distinct": n} for v, n in estimate.per_std]
        return Report(rows, {"max_distinct": estimate.max_distinct}, payload=estimate.to_dict(arch))
    if command == "compose":
        spec1, spec2 = arch.layers
        composed = compose_linear_layers(spec1, spec2, arch.input)
        verified = verify_composition(arch.input, spec1, spec2, seed=spec.seed)
        return Report([{"filter_height": composed.filter_height, "filter_width": composed.filter_width,
                        "stride": composed.stride, "depth": composed.depth, "verified": verified}])
    if command == "table":
        table = reproduce_table(spec.table, samples=spec.samples if spec.table == "T2" else None,
                                seed=spec.seed, threads=spec.threads)
        return Report(table.records(), {"table": table.id, "notes": table.notes})
    if command == "compare":
        report = expressivity_report(arch, spec.other)
        rows = []
        for side, summary in report.items():
            rows.append({
                "arch": side,
                "parameters": summary["parameters"],
                "lower": summary["lower"],
                "upper": summary["upper"],
                "naive_upper": summary["naive_upper"],
                "lower_per_parameter": None if summary["lower_per_parameter"] is None else str(summary["lower_per_parameter"]),
                "upper_per_parameter": str(summary["upper_per_parameter"]),
                "lower_unavailable": summary.get("lower_unavailable"),
            })
        return Report(rows)
    raise ParseError(f"unknown command {command!r}")


COUNT_FIELDS = {"count", "lower", "upper", "naive_upper", "parameters", "formula", "oracle",
                "distinct", "max_distinct"}


def _is_count_field(key) -> bool:
    return key in COUNT_FIELDS or (isinstance(key, str) and key.startswith(("d1=", "d2=")))


def _jsonable(value, key=None):
    # counts become decimal strings; they routinely exceed 2**53
    if isinstance(value, int) and not isinstance(value, bool):
        return str(value) if _is_count_field(key) else value
    if isinstance(value, dict):
        return {k: _jsonable(v, k) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v, key) for v in value]
    if value is None or isinstance(value, (bool, float, str)):
        return value
    return str(value)


def render(report: Report, fmt: str, command: str) -> str:
    if fmt == "json":
        body = report.payload if report.payload is not None else {
            "command": command, "meta": report.meta, "rows": report.rows}
        return json.dumps(_jsonable(body), indent=2) + "\n"
    buf = io.StringIO()
    if report.rows:
        fields = list(report.rows[0])
        for row in report.rows[1:]:
            fields += [k for k in row if k not in fields]
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in report.rows:
            writer.writerow({k: "" if v is None else v for k, v in row.items()})
    return buf.getvalue()


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, ParseError):
        return EXIT_PARSE
    if isinstance(exc, HypothesisViolated):
        return EXIT_HYPOTHESIS
    if isinstance(exc, OracleMismatch):
        return EXIT_ORACLE
    return EXIT_VALIDATION


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        spec = parse_config(argv)
        report = run(spec)
    except RegionError as exc:
        code = _exit_code(exc)
        error = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
        if isinstance(exc, OracleMismatch):
            error["seeds"] = list(exc.seeds)
        sys.stderr.write(json.dumps(error) + "\n")
        return code
    text = render(report, spec.format, spec.command)
    if spec.out:
        Path(spec.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
