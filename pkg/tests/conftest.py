import itertools

import pytest

from cnnregions import Dims, LayerSpec, receptive_fields

ACCEPTANCE_RESULTS = {}


def record(criterion, ok, detail=""):
    """Log one check toward an acceptance criterion; a criterion passes only if all its checks do."""
    ACCEPTANCE_RESULTS.setdefault(criterion, []).append((bool(ok), detail))
    return ok


@pytest.fixture
def acceptance():
    return record


def acceptance_lines():
    for criterion in sorted(ACCEPTANCE_RESULTS, key=lambda c: int(c.split()[0])):
        checks = ACCEPTANCE_RESULTS[criterion]
        ok = all(passed for passed, _ in checks)
        details = "; ".join(("" if passed else "FAILED ") + d for passed, d in checks if d)
        yield f"{'PASS' if ok else 'FAIL'}  {criterion}  [{details}]"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance_lines():
        terminalreporter.write_line(line)


def brute_force_K(rf):
    """Every t in the box prod [0, |S_p|] that satisfies all 2^n subset inequalities."""
    positions = rf.positions
    subsets = [
        (J, len(frozenset().union(*(rf.sets[positions[i]] for i in J))))
        for r in range(1, len(positions) + 1)
        for J in itertools.combinations(range(len(positions)), r)
    ]
    out = []
    for t in itertools.product(*(range(len(rf.sets[p]) + 1) for p in positions)):
        if all(sum(t[i] for i in J) <= rank for J, rank in subsets):
            out.append(t)
    return out


# one-layer geometries (input, filter h, filter w, stride) with at most 8 output positions
SMALL_GEOMETRIES = [
    (Dims(1, 3, 1), 1, 2, 1),
    (Dims(2, 2, 1), 1, 2, 1),
    (Dims(1, 4, 1), 1, 2, 1),
    (Dims(2, 3, 1), 2, 2, 1),
    (Dims(6, 6, 1), 1, 3, 2),
    (Dims(3, 3, 2), 2, 2, 1),
    (Dims(1, 5, 1), 1, 2, 3),
    (Dims(3, 3, 1), 2, 2, 1),
    (Dims(2, 4, 1), 1, 2, 1),
    (Dims(1, 6, 1), 1, 3, 1),
    (Dims(2, 2, 2), 1, 1, 1),
    (Dims(3, 4, 1), 2, 3, 1),
    (Dims(4, 4, 1), 2, 2, 2),
    (Dims(1, 9, 1), 1, 2, 1),
]


def small_rf(geometry):
    input, fh, fw, s = geometry
    return receptive_fields(input, LayerSpec(fh, fw, s, 1))


def geometry_id(geometry):
    input, fh, fw, s = geometry
    return f"{input.height}x{input.width}x{input.depth}-f{fh}x{fw}-s{s}"
