"""CNN architecture model: layer geometry, parameter counts, layer folding.

Tensor indices handed to users (receptive-field sets, output positions) are
1-based ``(row, column, channel)`` triples. Array storage is 0-based: weights
of a layer are stored as ``(depth, filter_height, filter_width, in_depth)``
and activations as ``(height, width, depth)``, optionally with a leading batch
axis.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .coverage import ReceptiveFieldMap
from .errors import FilterExceedsInput, ParseError, ValidationError


def _check_positive(owner, **fields):
    for name, value in fields.items():
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            raise ValidationError(f"{owner}.{name} must be an integer, got {value!r}")
        if value < 1:
            raise ValidationError(f"{owner}.{name} must be >= 1, got {value}")


@dataclass(frozen=True)
class Dims:
    height: int
    width: int
    depth: int

    def __post_init__(self):
        _check_positive("Dims", height=self.height, width=self.width, depth=self.depth)

    @property
    def size(self) -> int:
        return self.height * self.width * self.depth

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.height, self.width, self.depth)


@dataclass(frozen=True)
class LayerSpec:
    """``depth`` filters of size ``filter_height x filter_width`` sliding by ``stride``.

    The same stride is used along both spatial axes.
    """

    filter_height: int
    filter_width: int
    stride: int
    depth: int

    def __post_init__(self):
        _check_positive(
            "LayerSpec",
            filter_height=self.filter_height,
            filter_width=self.filter_width,
            stride=self.stride,
            depth=self.depth,
        )


@dataclass(frozen=True)
class Architecture:
    input: Dims
    layers: tuple[LayerSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ValidationError("an architecture needs at least one layer")
        validate_architecture(self)

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    def hidden_dims(self) -> list[Dims]:
        return validate_architecture(self)

    def n_hidden_neurons(self) -> int:
        return sum(d.size for d in self.hidden_dims())

    def layer_inputs(self) -> list[Dims]:
        """Input dims seen by each layer (the input, then every hidden layer but the last)."""
        return [self.input] + self.hidden_dims()[:-1]

    def with_depth(self, layer: int, depth: int) -> "Architecture":
        layers = list(self.layers)
        spec = layers[layer]
        layers[layer] = LayerSpec(spec.filter_height, spec.filter_width, spec.stride, depth)
        return Architecture(self.input, tuple(layers))

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "input": {"h": self.input.height, "w": self.input.width, "d": self.input.depth},
            "layers": [
                {"fh": l.filter_height, "fw": l.filter_width, "stride": l.stride, "depth": l.depth}
                for l in self.layers
            ],
        }

    @classmethod
    def from_dict(cls, data) -> "Architecture":
        if not isinstance(data, dict):
            raise ParseError("architecture must be a JSON object")
        _reject_unknown(data, {"input", "layers"}, "architecture")
        if "input" not in data:
            raise ParseError("architecture: missing 'input' block")
        if "layers" not in data:
            raise ParseError("architecture: missing 'layers' list")
        inp = data["input"]
        if not isinstance(inp, dict):
            raise ParseError("architecture.input must be an object")
        _reject_unknown(inp, {"h", "w", "d"}, "input")
        missing = {"h", "w", "d"} - set(inp)
        if missing:
            raise ParseError(f"input: missing field(s) {sorted(missing)}")
        layers = data["layers"]
        if not isinstance(layers, list):
            raise ParseError("architecture.layers must be a list")
        specs = []
        for i, layer in enumerate(layers):
            where = f"layers[{i}]"
            if not isinstance(layer, dict):
                raise ParseError(f"{where} must be an object")
            _reject_unknown(layer, {"fh", "fw", "stride", "depth"}, where)
            missing = {"fh", "fw", "stride", "depth"} - set(layer)
            if missing:
                raise ParseError(f"{where}: missing field(s) {sorted(missing)}")
            specs.append(LayerSpec(layer["fh"], layer["fw"], layer["stride"], layer["depth"]))
        return cls(Dims(inp["h"], inp["w"], inp["d"]), tuple(specs))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Architecture":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
        return cls.from_dict(data)


def _reject_unknown(obj: dict, allowed: set, where: str):
    extra = set(obj) - allowed
    if extra:
        raise ParseError(f"{where}: unknown key(s) {sorted(extra)}")


def layer_output_dims(input: Dims, layer: LayerSpec) -> Dims:
    if input.height < layer.filter_height or input.width < layer.filter_width:
        raise FilterExceedsInput(
            f"filter {layer.filter_height}x{layer.filter_width} does not fit "
            f"input {input.height}x{input.width}"
        )
    return Dims(
        (input.height - layer.filter_height) // layer.stride + 1,
        (input.width - layer.filter_width) // layer.stride + 1,
        layer.depth,
    )


def validate_architecture(arch: Architecture) -> list[Dims]:
    dims = []
    current = arch.input
    for index, layer in enumerate(arch.layers):
        try:
            current = layer_output_dims(current, layer)
        except FilterExceedsInput as exc:
            raise FilterExceedsInput(f"layer {index + 1}: {exc}", layer_index=index) from None
        dims.append(current)
    return dims


def parameter_count(arch: Architecture) -> int:
    total = 0
    in_depth = arch.input.depth
    for layer in arch.layers:
        total += layer.filter_height * layer.filter_width * in_depth * layer.depth + layer.depth
        in_depth = layer.depth
    return total


def receptive_fields(input: Dims, layer: LayerSpec) -> ReceptiveFieldMap:
    """Input-neuron index sets read by each output position of a layer."""
    out = layer_output_dims(input, layer)
    s = layer.stride
    positions = [(i, j) for i in range(1, out.height + 1) for j in range(1, out.width + 1)]
    sets = {}
    for i, j in positions:
        sets[(i, j)] = frozenset(
            (a + (i - 1) * s, b + (j - 1) * s, c)
            for a in range(1, layer.filter_height + 1)
            for b in range(1, layer.filter_width + 1)
            for c in range(1, input.depth + 1)
        )
    return ReceptiveFieldMap(positions, sets)


def compose_linear_layers(spec1: LayerSpec, spec2: LayerSpec, input: Dims) -> LayerSpec:
    """Single layer equivalent to ``spec2`` applied after ``spec1`` with no ReLU between."""
    hidden = layer_output_dims(input, spec1)
    layer_output_dims(hidden, spec2)
    return LayerSpec(
        spec1.filter_height + (spec2.filter_height - 1) * spec1.stride,
        spec1.filter_width + (spec2.filter_width - 1) * spec1.stride,
        spec1.stride * spec2.stride,
        spec2.depth,
    )


def fold_linear_weights(spec1, w1, b1, spec2, w2, b2):
    """Weights and biases of the composed layer.

    ``w1`` is ``(d1, f1h, f1w, d0)``, ``w2`` is ``(d2, f2h, f2w, d1)``. Works for
    float or object (exact rational) arrays.
    """
    w1 = np.asarray(w1)
    w2 = np.asarray(w2)
    b1 = np.asarray(b1)
    b2 = np.asarray(b2)
    d1, f1h, f1w, d0 = w1.shape
    d2, f2h, f2w, d1_ = w2.shape
    if d1_ != d1 or spec1.depth != d1 or spec2.depth != d2:
        raise ValidationError("layer weights do not chain")
    s1 = spec1.stride
    fh = f1h + (f2h - 1) * s1
    fw = f1w + (f2w - 1) * s1
    dtype = object if object in (w1.dtype, w2.dtype) else np.result_type(w1, w2)
    folded = np.zeros((d2, fh, fw, d0), dtype=dtype)
    if dtype == object:
        folded[...] = 0
    for ap in range(f2h):
        for bp in range(f2w):
            # (d2, d1) @ (d1, f1h*f1w*d0) -> contribution of one outer tap
            block = np.tensordot(w2[:, ap, bp, :], w1, axes=([1], [0]))
            folded[:, ap * s1:ap * s1 + f1h, bp * s1:bp * s1 + f1w, :] += block
    bias = b2 + np.tensordot(w2.sum(axis=(1, 2)), b1, axes=([1], [0]))
    return folded, bias
