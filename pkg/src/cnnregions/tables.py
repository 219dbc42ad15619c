"""Built-in table fixtures: one-layer sweeps over d1 and the two-layer sweep over d2."""

from __future__ import annotations

from dataclasses import dataclass, field

from .arch import Architecture, Dims, LayerSpec
from .bounds import multilayer_lower_bound, multilayer_upper_bound, naive_bound
from .counting import fc_region_count, region_count_sweep
from .sampler import SamplingConfig, estimate_region_count, he_init

SWEEP = tuple(range(1, 9))

# id -> (input, filter height, filter width, stride)
ONE_LAYER_TABLES = {
    "T1": (Dims(1, 3, 1), 1, 2, 1),
    "S1": (Dims(2, 2, 1), 1, 2, 1),
    "S2": (Dims(1, 4, 1), 1, 2, 1),
    "S3": (Dims(2, 3, 1), 2, 2, 1),
    "S4": (Dims(6, 6, 1), 1, 3, 2),
    "S5": (Dims(3, 3, 2), 2, 2, 1),
}
TABLE_IDS = ("T1", "T2", "S1", "S2", "S3", "S4", "S5")


def two_layer_example(d2: int) -> Architecture:
    """1x4x1 input, 2 filters 1x2 then ``d2`` filters 1x2, stride 1."""
    return Architecture(Dims(1, 4, 1), (LayerSpec(1, 2, 1, 2), LayerSpec(1, 2, 1, d2)))


@dataclass
class Table:
    id: str
    sweep_name: str
    sweep: tuple[int, ...]
    rows: list[tuple[str, list[int]]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def row(self, label: str) -> list[int]:
        for name, values in self.rows:
            if name == label:
                return values
        raise KeyError(label)

    def records(self) -> list[dict]:
        return [
            {"row": label, **{f"{self.sweep_name}={d}": v for d, v in zip(self.sweep, values)}}
            for label, values in self.rows
        ]


def _one_layer_table(table_id: str) -> Table:
    input, fh, fw, stride = ONE_LAYER_TABLES[table_id]
    counts = region_count_sweep(input, LayerSpec(fh, fw, stride, 1), SWEEP)
    table = Table(table_id, "d1", SWEEP)
    table.rows.append(("exact", [counts[d] for d in SWEEP]))
    fc, naive = [], []
    for d in SWEEP:
        arch = Architecture(input, (LayerSpec(fh, fw, stride, d),))
        hidden = arch.n_hidden_neurons()
        fc.append(fc_region_count(input.size, hidden))
        naive.append(naive_bound(arch))
    table.rows.append(("fully_connected_upper", fc))
    table.rows.append(("naive_upper", naive))
    return table


def _two_layer_table(samples: int | None, seed: int, threads: int) -> Table:
    table = Table("T2", "d2", SWEEP)
    archs = [two_layer_example(d) for d in SWEEP]
    table.rows.append(("upper", [multilayer_upper_bound(a) for a in archs]))
    if samples:
        estimates = []
        for a in archs:
            cfg = SamplingConfig(num_samples=samples, seed=seed, threads=threads)
            estimates.append(estimate_region_count(a, he_init(a, seed), cfg).max_distinct)
        table.rows.append(("sampling_estimate", estimates))
        table.notes.append(
            f"sampling_estimate is this run's estimate (seed={seed}, samples per std={samples}); "
            "it depends on the seed and budget"
        )
    table.rows.append(("lower", [multilayer_lower_bound(a) for a in archs]))
    return table


def reproduce_table(table_id: str, samples: int | None = None, seed: int = 0, threads: int = 1) -> Table:
    """Recompute a table. ``samples`` adds a sampling row to T2 (ignored elsewhere)."""
    table_id = table_id.upper()
    if table_id == "T2":
        return _two_layer_table(samples, seed, threads)
    if table_id not in ONE_LAYER_TABLES:
        raise KeyError(f"unknown table {table_id!r}; choose from {', '.join(TABLE_IDS)}")
    return _one_layer_table(table_id)
