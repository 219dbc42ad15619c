"""Upper and lower bounds on the region count of multi-layer ReLU CNNs."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Sequence

from .arch import Architecture, Dims, LayerSpec, parameter_count
from .counting import exact_region_count, fc_region_count
from .errors import HypothesisViolated, ValidationError

SumLimit = Literal["previous_layer", "input"]


@dataclass(frozen=True)
class BoundReport:
    lower: int | None
    upper: int
    naive_upper: int
    methods: dict = field(default_factory=dict)
    note: str | None = None

    def __post_init__(self):
        if self.lower is not None and self.lower > self.upper:
            raise ValueError("lower bound exceeds upper bound")
        if self.upper > self.naive_upper:
            raise ValueError("upper bound exceeds naive bound")

    def to_dict(self) -> dict:
        # decimal strings: counts overflow 64-bit JSON consumers
        return {
            "lower": None if self.lower is None else str(self.lower),
            "upper": str(self.upper),
            "naive_upper": str(self.naive_upper),
            "methods": dict(self.methods),
            "note": self.note,
        }


def naive_bound(arch: Architecture) -> int:
    """Two activation states per hidden neuron."""
    return 2 ** arch.n_hidden_neurons()


def _check_depth_hypothesis(arch: Architecture):
    d0 = arch.input.depth
    for index, layer in enumerate(arch.layers, start=1):
        if layer.depth < d0:
            raise HypothesisViolated(
                f"layer {index} has depth {layer.depth} < input depth {d0}; "
                "the lower bound needs every d_l >= d_0"
            )


def multilayer_lower_bound(arch: Architecture) -> int:
    """Region count achieved by folding the first ``L-1`` layers onto a hypercube.

    The last layer is replaced by one acting on ``d_0`` channels of the
    ``(L-1)``-th hidden grid.
    """
    _check_depth_hypothesis(arch)
    d0 = arch.input.depth
    dims = arch.hidden_dims()
    last = arch.layers[-1]
    below = arch.input if arch.n_layers == 1 else dims[-2]
    head = exact_region_count(
        Dims(below.height, below.width, d0),
        LayerSpec(last.filter_height, last.filter_width, last.stride, last.depth),
    )
    factor = 1
    for layer, out in zip(arch.layers[:-1], dims[:-1]):
        factor *= (layer.depth // d0) ** (out.height * out.width * d0)
    return head * factor


def multilayer_upper_bound(arch: Architecture, sum_limit: SumLimit = "previous_layer") -> int:
    """Exact first-layer count times a Zaslavsky factor for every later layer.

    Layer ``l >= 2`` contributes ``sum_{i<=m} C(N_l, i)`` where ``N_l`` is its
    neuron count. ``sum_limit`` picks ``m``: ``"previous_layer"`` uses the
    neuron count of layer ``l-1`` (reproduces the published two-layer table);
    ``"input"`` uses the input size, tighter whenever the input has fewer
    neurons than the previous hidden layer.
    """
    if sum_limit not in ("previous_layer", "input"):
        raise ValidationError(f"unknown sum_limit {sum_limit!r}")
    dims = arch.hidden_dims()
    product = exact_region_count(arch.input, arch.layers[0])
    for l in range(1, arch.n_layers):
        limit = arch.input.size if sum_limit == "input" else dims[l - 1].size
        product *= fc_region_count(limit, dims[l].size)
    return product


def bound_report(arch: Architecture, sum_limit: SumLimit = "previous_layer") -> BoundReport:
    upper = multilayer_upper_bound(arch, sum_limit)
    naive = naive_bound(arch)
    note = None
    try:
        lower = multilayer_lower_bound(arch)
    except HypothesisViolated as exc:
        lower, note = None, str(exc)
    if arch.n_layers == 1:
        methods = {"lower": "exact", "upper": "exact", "naive_upper": "two_states_per_neuron"}
    else:
        methods = {
            "lower": "hypercube_folding",
            "upper": f"first_layer_exact_times_zaslavsky[{sum_limit}]",
            "naive_upper": "two_states_per_neuron",
        }
    if upper > naive:
        upper = naive
        methods["upper"] = methods["naive_upper"]
    return BoundReport(lower, upper, naive, methods, note)


def fc_bounds(d_0: int, depths: Sequence[int]) -> BoundReport:
    """Bounds for a fully-connected ReLU net with ``d_0`` inputs and hidden widths ``depths``."""
    depths = list(depths)
    if not depths:
        raise ValidationError("depths must be nonempty")
    if d_0 < 1 or any(d < 1 for d in depths):
        raise ValidationError("widths must be positive")
    lower = fc_region_count(d_0, depths[-1])
    for d in depths[:-1]:
        lower *= (d // d_0) ** d_0
    upper = 1
    for d in depths:
        upper *= fc_region_count(d_0, d)
    return BoundReport(
        lower,
        upper,
        2 ** sum(depths),
        {"lower": "hypercube_folding", "upper": "product_of_zaslavsky", "naive_upper": "two_states_per_neuron"},
    )


def _arch_summary(arch: Architecture, sum_limit: SumLimit) -> dict:
    params = parameter_count(arch)
    report = bound_report(arch, sum_limit)
    summary = {
        "architecture": arch.to_dict(),
        "parameters": params,
        "lower": report.lower,
        "upper": report.upper,
        "naive_upper": report.naive_upper,
        "upper_per_parameter": Fraction(report.upper, params),
    }
    if report.lower is None:
        summary["lower_per_parameter"] = None
        summary["lower_unavailable"] = report.note
    else:
        summary["lower_per_parameter"] = Fraction(report.lower, params)
    return summary


def expressivity_report(arch_a: Architecture, arch_b: Architecture, sum_limit: SumLimit = "previous_layer") -> dict:
    """Parameter counts, bounds, and bound-per-parameter ratios for two networks.

    Ratios are exact :class:`~fractions.Fraction` values at the given sizes.
    """
    return {"a": _arch_summary(arch_a, sum_limit), "b": _arch_summary(arch_b, sum_limit)}
