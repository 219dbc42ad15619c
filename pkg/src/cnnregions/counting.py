"""Exact region counts of one-layer ReLU CNNs.

The count is ``sum over t in K of prod_p C(d1, t[p])``. All arithmetic is on
Python integers and :class:`fractions.Fraction`; nothing here touches floats.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Iterable, Sequence

from .arch import Dims, LayerSpec, layer_output_dims, receptive_fields
from .coverage import ReceptiveFieldMap, enumerate_K


@dataclass(frozen=True)
class CountPolynomial:
    """Polynomial in the filter count ``d1``; ``coefficients[k]`` multiplies ``d1**k``."""

    coefficients: tuple[Fraction, ...]

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def leading_coefficient(self) -> Fraction:
        return self.coefficients[-1]

    def __call__(self, d1) -> Fraction | int:
        acc = Fraction(0)
        for c in reversed(self.coefficients):
            acc = acc * d1 + c
        if acc.denominator == 1:
            return int(acc)
        return acc

    def __str__(self):
        terms = []
        for k in range(self.degree, -1, -1):
            c = self.coefficients[k]
            if c == 0:
                continue
            mono = "" if k == 0 else ("d1" if k == 1 else f"d1^{k}")
            if k and c == 1:
                terms.append(mono)
            else:
                terms.append(f"{c}*{mono}" if mono else f"{c}")
        return " + ".join(terms) or "0"


def _poly_mul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


@lru_cache(maxsize=None)
def binomial_polynomial(t: int) -> tuple[Fraction, ...]:
    """Coefficients of ``x (x-1) ... (x-t+1) / t!``."""
    coeffs = [Fraction(1)]
    for i in range(t):
        coeffs = _poly_mul(coeffs, [Fraction(-i), Fraction(1)])
    scale = factorial(t)
    return tuple(c / scale for c in coeffs)


def _one_layer_map(input: Dims, layer: LayerSpec) -> ReceptiveFieldMap:
    return receptive_fields(input, layer)


def _count_from_K(K: Iterable[Sequence[int]], d1: int) -> int:
    # tuples are grouped by their multiset of entries; the product only depends on that
    signatures = Counter(tuple(sorted(t)) for t in K)
    total = 0
    for sig, mult in signatures.items():
        term = 1
        for v in sig:
            term *= comb(d1, v)
            if not term:
                break
        total += mult * term
    return total


def exact_region_count(input: Dims, layer: LayerSpec) -> int:
    """Maximal number of linear regions of the one-layer CNN ``input -> layer``."""
    rf = _one_layer_map(input, layer)
    d1 = layer.depth
    return _count_from_K(enumerate_K(rf, per_coordinate_cap=d1), d1)


def expected_region_count(input: Dims, layer: LayerSpec) -> int:
    """Expected number of regions when weights and biases have a joint density.

    For one layer this coincides with the maximum, so the same sum is returned.
    """
    return exact_region_count(input, layer)


def region_count_sweep(input: Dims, layer: LayerSpec, depths: Iterable[int]) -> dict[int, int]:
    """``exact_region_count`` for several filter counts, enumerating K once.

    ``layer.depth`` is ignored.
    """
    depths = sorted(set(depths))
    if not depths:
        return {}
    probe = LayerSpec(layer.filter_height, layer.filter_width, layer.stride, 1)
    rf = _one_layer_map(input, probe)
    signatures = Counter(
        tuple(sorted(t)) for t in enumerate_K(rf, per_coordinate_cap=max(depths[-1], 0))
    )
    out = {}
    for d1 in depths:
        total = 0
        for sig, mult in signatures.items():
            term = 1
            for v in sig:
                term *= comb(d1, v)
                if not term:
                    break
            total += mult * term
        out[d1] = total
    return out


def region_polynomial(input: Dims, layer: LayerSpec) -> CountPolynomial:
    """The count as an exact polynomial in the number of filters (``layer.depth`` ignored)."""
    rf = _one_layer_map(input, layer)
    signatures = Counter(tuple(sorted(t)) for t in enumerate_K(rf))
    total = [Fraction(0)]
    for sig, mult in signatures.items():
        term = [Fraction(1)]
        for v in sig:
            if v:
                term = _poly_mul(term, binomial_polynomial(v))
        if len(term) > len(total):
            total.extend([Fraction(0)] * (len(term) - len(total)))
        for k, c in enumerate(term):
            total[k] += mult * c
    while len(total) > 1 and total[-1] == 0:
        total.pop()
    return CountPolynomial(tuple(total))


def asymptotic_exponent(input: Dims, layer: LayerSpec) -> int:
    """Degree of growth in ``d1``: number of input neurons touched by some filter window."""
    return len(_one_layer_map(input, layer).universe)


def covers_input(input: Dims, layer: LayerSpec) -> bool:
    return asymptotic_exponent(input, layer) == input.size


def fc_region_count(n_0: int, n_1: int) -> int:
    """Regions of a one-layer fully-connected ReLU net (general-position maximum)."""
    if n_0 < 0 or n_1 < 0:
        raise ValueError("neuron counts must be nonnegative")
    return sum(comb(n_1, i) for i in range(n_0 + 1))


def flattened_fc_count(input: Dims, layer: LayerSpec) -> int:
    """``fc_region_count`` of the CNN viewed as a fully-connected layer."""
    out = layer_output_dims(input, layer)
    return fc_region_count(input.size, out.size)
