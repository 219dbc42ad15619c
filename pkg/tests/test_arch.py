import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cnnregions import (
    Architecture,
    Dims,
    LayerSpec,
    compose_linear_layers,
    fold_linear_weights,
    layer_output_dims,
    parameter_count,
    receptive_fields,
    validate_architecture,
)
from cnnregions.errors import FilterExceedsInput, ParseError, ValidationError
from cnnregions.sampler import verify_composition


def example5(d2):
    return Architecture(Dims(1, 4, 1), (LayerSpec(1, 2, 1, 2), LayerSpec(1, 2, 1, d2)))


class TestLayerOutputDims:
    def test_example5_first_layer(self):
        assert layer_output_dims(Dims(1, 4, 1), LayerSpec(1, 2, 1, 2)) == Dims(1, 3, 2)

    def test_strided(self):
        assert layer_output_dims(Dims(6, 6, 1), LayerSpec(1, 3, 2, 5)) == Dims(3, 2, 5)

    def test_filter_covers_input(self):
        assert layer_output_dims(Dims(4, 7, 3), LayerSpec(4, 7, 1, 2)) == Dims(1, 1, 2)

    def test_filter_too_large(self):
        with pytest.raises(FilterExceedsInput):
            layer_output_dims(Dims(1, 3, 1), LayerSpec(1, 4, 1, 1))

    @given(n=st.integers(1, 30), f=st.integers(1, 30), depth=st.integers(1, 4))
    def test_unit_stride_shrinks_by_filter_minus_one(self, n, f, depth):
        if f > n:
            return
        out = layer_output_dims(Dims(n, n + 1, 1), LayerSpec(f, f, 1, depth))
        assert (out.height, out.width) == (n - f + 1, n + 2 - f)


class TestValidate:
    def test_example5(self):
        assert validate_architecture(example5(4)) == [Dims(1, 3, 2), Dims(1, 2, 4)]

    def test_example1(self):
        arch = Architecture(Dims(1, 3, 1), (LayerSpec(1, 2, 1, 7),))
        assert validate_architecture(arch) == [Dims(1, 2, 7)]

    def test_reports_offending_layer(self):
        with pytest.raises(FilterExceedsInput) as info:
            Architecture(Dims(1, 4, 1), (LayerSpec(1, 2, 1, 2), LayerSpec(1, 4, 1, 1)))
        assert info.value.layer_index == 1

    def test_one_layer_too_wide(self):
        with pytest.raises(FilterExceedsInput):
            Architecture(Dims(2, 2, 1), (LayerSpec(1, 3, 1, 1),))

    @pytest.mark.parametrize("bad", [0, -1, 1.5, True])
    def test_rejects_nonpositive_fields(self, bad):
        with pytest.raises(ValidationError):
            LayerSpec(1, bad, 1, 1)
        with pytest.raises(ValidationError):
            Dims(bad, 1, 1)


class TestParameterCount:
    def test_single_layer(self):
        assert parameter_count(Architecture(Dims(1, 2, 1), (LayerSpec(1, 2, 1, 3),))) == 9

    def test_minimal(self):
        assert parameter_count(Architecture(Dims(1, 1, 1), (LayerSpec(1, 1, 1, 1),))) == 2

    def test_example5(self):
        # (1*2*1*2 + 2) + (1*2*2*4 + 4)
        assert parameter_count(example5(4)) == 26

    @given(
        depths=st.lists(st.integers(1, 5), min_size=1, max_size=3),
        fh=st.integers(1, 2),
        fw=st.integers(1, 2),
        layer=st.integers(0, 2),
    )
    def test_monotone(self, depths, fh, fw, layer):
        layer %= len(depths)
        specs = [LayerSpec(fh, fw, 1, d) for d in depths]
        arch = Architecture(Dims(8, 8, 2), specs)
        bigger_depth = arch.with_depth(layer, depths[layer] + 1)
        assert parameter_count(bigger_depth) > parameter_count(arch)
        grown = list(specs)
        s = grown[layer]
        grown[layer] = LayerSpec(s.filter_height + 1, s.filter_width, 1, s.depth)
        assert parameter_count(Architecture(Dims(8, 8, 2), grown)) > parameter_count(arch)


class TestReceptiveFields:
    def test_example1(self):
        rf = receptive_fields(Dims(1, 3, 1), LayerSpec(1, 2, 1, 1))
        assert rf.positions == ((1, 1), (1, 2))
        assert rf.sets[(1, 1)] == {(1, 1, 1), (1, 2, 1)}
        assert rf.sets[(1, 2)] == {(1, 2, 1), (1, 3, 1)}

    def test_fully_connected(self):
        rf = receptive_fields(Dims(2, 3, 2), LayerSpec(2, 3, 1, 1))
        assert rf.positions == ((1, 1),)
        assert len(rf.sets[(1, 1)]) == 12 == len(rf.universe)

    def test_stride_leaves_gap(self):
        rf = receptive_fields(Dims(1, 5, 1), LayerSpec(1, 2, 3, 1))
        assert rf.universe == {(1, 1, 1), (1, 2, 1), (1, 4, 1), (1, 5, 1)}

    @given(
        h=st.integers(1, 6), w=st.integers(1, 6), d=st.integers(1, 3),
        fh=st.integers(1, 4), fw=st.integers(1, 4), s=st.integers(1, 3),
    )
    def test_sizes_and_overlap(self, h, w, d, fh, fw, s):
        if fh > h or fw > w:
            return
        rf = receptive_fields(Dims(h, w, d), LayerSpec(fh, fw, s, 1))
        assert all(len(rf.sets[p]) == fh * fw * d for p in rf.positions)
        if s < min(fh, fw):
            for (i, j) in rf.positions:
                if (i, j + 1) in rf.sets:
                    assert rf.sets[(i, j)] & rf.sets[(i, j + 1)]
                if (i + 1, j) in rf.sets:
                    assert rf.sets[(i, j)] & rf.sets[(i + 1, j)]


class TestCompose:
    def test_pointwise_first_layer(self):
        composed = compose_linear_layers(LayerSpec(1, 1, 1, 4), LayerSpec(3, 3, 2, 5), Dims(7, 7, 2))
        assert composed == LayerSpec(3, 3, 2, 5)

    def test_two_unit_stride(self):
        composed = compose_linear_layers(LayerSpec(2, 2, 1, 3), LayerSpec(2, 2, 1, 2), Dims(5, 5, 1))
        assert composed == LayerSpec(3, 3, 1, 2)

    def test_strided_pair_is_exact(self):
        spec1, spec2, input = LayerSpec(3, 3, 2, 3), LayerSpec(2, 2, 2, 2), Dims(9, 9, 2)
        assert compose_linear_layers(spec1, spec2, input) == LayerSpec(5, 5, 4, 2)
        assert verify_composition(input, spec1, spec2, seed=11)

    def test_invalid_geometry(self):
        with pytest.raises(FilterExceedsInput):
            compose_linear_layers(LayerSpec(2, 2, 1, 1), LayerSpec(3, 3, 1, 1), Dims(3, 3, 1))

    def test_fold_float_weights(self):
        rng = np.random.default_rng(0)
        w1, b1 = rng.normal(size=(2, 2, 1, 1)), rng.normal(size=2)
        w2, b2 = rng.normal(size=(3, 1, 2, 2)), rng.normal(size=3)
        folded, bias = fold_linear_weights(LayerSpec(2, 1, 1, 2), w1, b1, LayerSpec(1, 2, 1, 3), w2, b2)
        assert folded.shape == (3, 2, 2, 1)
        assert bias.shape == (3,)

    def test_composed_output_grid_matches_stack(self):
        input = Dims(11, 10, 1)
        spec1, spec2 = LayerSpec(3, 2, 2, 2), LayerSpec(2, 3, 1, 1)
        stacked = layer_output_dims(layer_output_dims(input, spec1), spec2)
        single = layer_output_dims(input, compose_linear_layers(spec1, spec2, input))
        assert (stacked.height, stacked.width) == (single.height, single.width)


class TestSerialization:
    def test_round_trip(self):
        arch = example5(3)
        assert Architecture.from_json(arch.to_json()) == arch

    def test_schema(self):
        assert example5(3).to_dict() == {
            "input": {"h": 1, "w": 4, "d": 1},
            "layers": [{"fh": 1, "fw": 2, "stride": 1, "depth": 2}, {"fh": 1, "fw": 2, "stride": 1, "depth": 3}],
        }

    def test_missing_input(self):
        with pytest.raises(ParseError, match="input"):
            Architecture.from_dict({"layers": []})

    def test_unknown_key(self):
        data = example5(1).to_dict()
        data["layers"][0]["padding"] = 1
        with pytest.raises(ParseError, match="padding"):
            Architecture.from_dict(data)

    def test_bad_json_reports_position(self):
        with pytest.raises(ParseError, match="line 2"):
            Architecture.from_json('{"input": {"h": 1,\n "w": }}')
