"""Coverage rank of a receptive-field family and its lattice-point set K.

``K`` is the set of integer tuples ``t >= 0`` over output positions with
``sum(t[J]) <= |union S[J]|`` for every subset ``J``. Membership is equivalent
to the existence of a transversal: ``t[p]`` pairwise distinct input neurons
picked from each ``S[p]``. That is checked with augmenting paths on the
position/neuron bipartite graph, so no subset is ever enumerated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Iterator, Mapping, Sequence

from .errors import DimensionMismatch, UnknownPosition, ValidationError

Position = Hashable


@dataclass(frozen=True)
class ReceptiveFieldMap:
    positions: tuple
    sets: Mapping[Position, frozenset]
    universe: frozenset = field(init=False)

    def __init__(self, positions: Sequence[Position], sets: Mapping[Position, Iterable]):
        positions = tuple(positions)
        if len(set(positions)) != len(positions):
            raise ValidationError("duplicate positions")
        if set(positions) != set(sets):
            raise ValidationError("sets must be keyed by exactly the positions")
        frozen = {p: frozenset(sets[p]) for p in positions}
        for p, s in frozen.items():
            if not s:
                raise ValidationError(f"receptive field of {p} is empty")
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "sets", frozen)
        object.__setattr__(self, "universe", frozenset().union(*frozen.values()))

    def __len__(self):
        return len(self.positions)

    def sizes(self) -> tuple[int, ...]:
        return tuple(len(self.sets[p]) for p in self.positions)


def coverage_rank(rf: ReceptiveFieldMap, J: Iterable[Position]) -> int:
    union = set()
    for p in J:
        if p not in rf.sets:
            raise UnknownPosition(p)
        union |= rf.sets[p]
    return len(union)


class _Transversal:
    """Incremental b-matching of positions to distinct universe elements."""

    def __init__(self, rf: ReceptiveFieldMap):
        self.rf = rf
        self.owner = {}
        self.held = {p: set() for p in rf.positions}

    def snapshot(self):
        return dict(self.owner), {p: set(h) for p, h in self.held.items()}

    def restore(self, state):
        owner, held = state
        self.owner = dict(owner)
        self.held = {p: set(h) for p, h in held.items()}

    def augment(self, p) -> bool:
        """Give ``p`` one more element, rerouting others if needed."""
        return self._search(p, set())

    def _search(self, p, seen) -> bool:
        candidates = self.rf.sets[p] - self.held[p]
        for e in candidates:
            if e in seen:
                continue
            seen.add(e)
            q = self.owner.get(e)
            if q is None or self._search(q, seen):
                if q is not None:
                    self.held[q].discard(e)
                self.owner[e] = p
                self.held[p].add(e)
                return True
        return False


def _as_tuple(rf: ReceptiveFieldMap, t) -> tuple[int, ...]:
    if isinstance(t, Mapping):
        if set(t) != set(rf.positions):
            raise DimensionMismatch("multi-index must be defined on exactly the positions")
        values = tuple(t[p] for p in rf.positions)
    else:
        values = tuple(t)
        if len(values) != len(rf.positions):
            raise DimensionMismatch(
                f"multi-index has {len(values)} entries, expected {len(rf.positions)}"
            )
    if any(v < 0 for v in values):
        raise ValidationError("multi-index entries must be nonnegative")
    return values


def is_feasible(rf: ReceptiveFieldMap, t) -> bool:
    """True iff ``t`` (a mapping over positions or a tuple in position order) lies in K."""
    values = _as_tuple(rf, t)
    matcher = _Transversal(rf)
    for p, demand in zip(rf.positions, values):
        if demand > len(rf.sets[p]):
            return False
        for _ in range(demand):
            if not matcher.augment(p):
                return False
    return True


def enumerate_K(rf: ReceptiveFieldMap, per_coordinate_cap: int | None = None) -> Iterator[tuple[int, ...]]:
    """Yield every element of K in lexicographic order over ``rf.positions``.

    With a cap, only tuples with every entry ``<= per_coordinate_cap`` are produced.
    Since K is down-closed, the first failed increment at a position ends that branch.
    """
    positions = rf.positions
    n = len(positions)
    caps = [len(rf.sets[p]) for p in positions]
    if per_coordinate_cap is not None:
        if per_coordinate_cap < 0:
            raise ValidationError("cap must be nonnegative")
        caps = [min(c, per_coordinate_cap) for c in caps]
    matcher = _Transversal(rf)
    current = [0] * n

    def extend(k):
        if k == n:
            yield tuple(current)
            return
        p = positions[k]
        state = matcher.snapshot()
        current[k] = 0
        yield from extend(k + 1)
        for value in range(1, caps[k] + 1):
            # deeper levels restore their own state, so only p's units are held here
            if not matcher.augment(p):
                break
            current[k] = value
            yield from extend(k + 1)
        current[k] = 0
        matcher.restore(state)

    yield from extend(0)


def max_total(rf: ReceptiveFieldMap) -> tuple[int, ...]:
    """Greedy marginal coverage: each position takes the neurons no earlier one covered."""
    covered = set()
    t = []
    for p in rf.positions:
        fresh = rf.sets[p] - covered
        t.append(len(fresh))
        covered |= fresh
    return tuple(t)
