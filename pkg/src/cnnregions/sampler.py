"""Empirical lower bounds on the region count by sampling activation patterns.

Inputs are drawn i.i.d. Gaussian per coordinate at several standard deviations;
the number of distinct activation patterns seen is a lower bound on the number
of linear regions. Samples come from a keyed stream: sample ``n`` at std index
``v`` is always the same for a given seed, independent of batch size, thread
count, and total budget.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .arch import Architecture, compose_linear_layers, fold_linear_weights
from .errors import DimensionMismatch, ValidationError
from .oracle import WeightSet, sample_rational_weights

DEFAULT_STDS = (3.0, 5.0, 7.0, 9.0, 11.0, 13.0)
BLOCK_SIZE = 8192


@dataclass(frozen=True)
class SamplingConfig:
    num_samples: int = 1_000_000
    std_values: tuple[float, ...] = DEFAULT_STDS
    seed: int = 0
    batch_size: int = 65536
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "std_values", tuple(float(v) for v in self.std_values))
        if self.num_samples < 1:
            raise ValidationError("num_samples must be >= 1")
        if not self.std_values or any(v <= 0 for v in self.std_values):
            raise ValidationError("std_values must be a nonempty list of positive numbers")
        if self.batch_size < 1 or self.threads < 1:
            raise ValidationError("batch_size and threads must be >= 1")


@dataclass(frozen=True)
class RegionEstimate:
    max_distinct: int
    per_std: tuple[tuple[float, int], ...]
    seed: int
    num_samples: int

    def to_dict(self, arch: Architecture | None = None) -> dict:
        return {
            "arch": None if arch is None else arch.to_dict(),
            "seed": self.seed,
            "num_samples": self.num_samples,
            "per_v": [{"v": v, "distinct": n} for v, n in self.per_std],
            "max_distinct": self.max_distinct,
        }


def he_init(arch: Architecture, seed: int) -> WeightSet:
    """Gaussian weights and biases with std ``sqrt(2 / fan_in)``, ``fan_in = fh * fw * in_depth``."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    in_depth = arch.input.depth
    for layer in arch.layers:
        fan_in = layer.filter_height * layer.filter_width * in_depth
        scale = np.sqrt(2.0 / fan_in)
        weights.append(rng.normal(0.0, scale, size=(layer.depth, layer.filter_height, layer.filter_width, in_depth)))
        biases.append(rng.normal(0.0, scale, size=layer.depth))
        in_depth = layer.depth
    return WeightSet(tuple(weights), tuple(biases))


def _as_batch(arch: Architecture, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x)
    shape = arch.input.shape
    if x.shape == shape:
        return x[np.newaxis], False
    if x.ndim == 4 and x.shape[1:] == shape:
        return x, True
    raise DimensionMismatch(f"input of shape {x.shape}, expected {shape} or (N, *{shape})")


def _conv(x, weight, bias, stride):
    _, fh, fw, _ = weight.shape
    windows = sliding_window_view(x, (fh, fw), axis=(1, 2))[:, ::stride, ::stride]
    return np.einsum("nijcab,kabc->nijk", windows, weight) + bias


def forward_preactivations(arch: Architecture, w: WeightSet, x) -> list[np.ndarray]:
    """Pre-activations of every layer, each shaped ``(height, width, depth)``.

    ``x`` may carry a leading batch axis, which is kept. Object arrays of
    :class:`fractions.Fraction` are supported for exact evaluation.
    """
    w.check(arch)
    batch, batched = _as_batch(arch, x)
    out = []
    current = batch
    for layer, weight, bias in zip(arch.layers, w.weights, w.biases):
        z = _conv(current, weight, bias, layer.stride)
        out.append(z)
        current = np.maximum(z, 0) if z.dtype != object else np.where(z > 0, z, 0)
    return out if batched else [z[0] for z in out]


def activation_pattern(arch: Architecture, w: WeightSet, x) -> np.ndarray:
    """One bit per hidden neuron in ``(layer, i, j, k)`` order: 1 iff the pre-activation is positive.

    A pre-activation of exactly zero gives bit 0.
    """
    batch, batched = _as_batch(arch, x)
    zs = forward_preactivations(arch, w, batch)
    bits = np.concatenate([(z > 0).reshape(len(batch), -1) for z in zs], axis=1).astype(np.uint8)
    return bits if batched else bits[0]


def _block(arch: Architecture, seed: int, std_index: int, std: float, block: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, std_index, block])))
    return rng.standard_normal((BLOCK_SIZE, *arch.input.shape)) * std


def _unique_patterns(arch, w, x) -> set[bytes]:
    packed = np.packbits(activation_pattern(arch, w, x), axis=1)
    rows = np.unique(np.ascontiguousarray(packed).view(np.dtype((np.void, packed.shape[1]))))
    return {r.tobytes() for r in rows}


def sample_patterns(arch: Architecture, w: WeightSet, std: float, std_index: int, cfg: SamplingConfig) -> set[bytes]:
    """Packed distinct patterns among the first ``cfg.num_samples`` inputs at one std."""
    w.check(arch)
    n_blocks = -(-cfg.num_samples // BLOCK_SIZE)
    per_batch = max(1, cfg.batch_size // BLOCK_SIZE)
    groups = [range(start, min(start + per_batch, n_blocks)) for start in range(0, n_blocks, per_batch)]

    def run(group):
        xs = []
        for b in group:
            x = _block(arch, cfg.seed, std_index, std, b)
            xs.append(x[: cfg.num_samples - b * BLOCK_SIZE])
        return _unique_patterns(arch, w, np.concatenate(xs))

    seen: set[bytes] = set()
    if cfg.threads == 1:
        for group in groups:
            seen |= run(group)
    else:
        with ThreadPoolExecutor(cfg.threads) as pool:
            for found in pool.map(run, groups):
                seen |= found
    return seen


def estimate_region_count(arch: Architecture, w: WeightSet, cfg: SamplingConfig) -> RegionEstimate:
    per_std = []
    for index, std in enumerate(cfg.std_values):
        per_std.append((std, len(sample_patterns(arch, w, std, index, cfg))))
    return RegionEstimate(max(n for _, n in per_std), tuple(per_std), cfg.seed, cfg.num_samples)


class RegionSampler(TransformerMixin, BaseEstimator):
    """Estimate the number of linear regions of a ReLU CNN by sampling.

    ``fit`` draws He-initialized parameters (unless ``weights`` is given) and runs
    the std sweep. ``transform`` maps inputs, as rows of flattened
    ``(height, width, depth)`` tensors, to activation-pattern bits.

    Attributes
    ----------
    weights_ : WeightSet
    n_regions_ : int
        Largest distinct-pattern count over the std sweep.
    per_std_ : tuple of (std, count)
    """

    def __init__(
        self,
        architecture: Architecture | None = None,
        std_values: Sequence[float] = DEFAULT_STDS,
        n_samples: int = 1_000_000,
        batch_size: int = 65536,
        random_state: int = 0,
        n_jobs: int = 1,
        weights: WeightSet | None = None,
    ):
        self.architecture = architecture
        self.std_values = std_values
        self.n_samples = n_samples
        self.batch_size = batch_size
        self.random_state = random_state
        self.n_jobs = n_jobs
        self.weights = weights

    def _config(self) -> SamplingConfig:
        return SamplingConfig(
            num_samples=self.n_samples,
            std_values=tuple(self.std_values),
            seed=self.random_state,
            batch_size=self.batch_size,
            threads=self.n_jobs,
        )

    def fit(self, X=None, y=None):
        """Draw parameters and run the sweep; ``X`` is ignored."""
        if not isinstance(self.architecture, Architecture):
            raise ValidationError("architecture must be an Architecture")
        cfg = self._config()
        self.weights_ = self.weights if self.weights is not None else he_init(self.architecture, cfg.seed)
        self.weights_.check(self.architecture)
        estimate = estimate_region_count(self.architecture, self.weights_, cfg)
        self.n_regions_ = estimate.max_distinct
        self.per_std_ = estimate.per_std
        self.n_features_in_ = self.architecture.input.size
        return self

    def transform(self, X):
        check_is_fitted(self, "weights_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise DimensionMismatch(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        batch = X.reshape(len(X), *self.architecture.input.shape)
        return activation_pattern(self.architecture, self.weights_, batch)

    def count_patterns(self, X) -> int:
        """Distinct activation patterns among the rows of ``X``."""
        bits = self.transform(X)
        return len(np.unique(bits, axis=0))


def verify_composition(input, spec1, spec2, seed: int = 0, trials: int = 10) -> bool:
    """Check the folded single layer against the linear two-layer stack, exactly.

    Weights are random integers, inputs random fractions; no ReLU between layers.
    """
    two = Architecture(input, (spec1, spec2))
    w = sample_rational_weights(two, seed)
    folded_w, folded_b = fold_linear_weights(spec1, w.weights[0], w.biases[0], spec2, w.weights[1], w.biases[1])
    single = Architecture(input, (compose_linear_layers(spec1, spec2, input),))
    folded = WeightSet((folded_w,), (folded_b,))
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        x = np.empty(input.shape, dtype=object)
        numerators = rng.integers(-50, 51, input.size)
        denominators = rng.integers(1, 10, input.size)
        x.flat[:] = [Fraction(int(n), int(d)) for n, d in zip(numerators, denominators)]
        hidden = _conv(x[np.newaxis], w.weights[0], w.biases[0], spec1.stride)
        stacked = _conv(hidden, w.weights[1], w.biases[1], spec2.stride)[0]
        direct = forward_preactivations(single, folded, x)[0]
        if stacked.shape != direct.shape or not (stacked == direct).all():
            return False
    return True
