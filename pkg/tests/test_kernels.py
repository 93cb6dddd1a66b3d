"""Both backends must agree bit for bit."""

from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from groupoid_lab import _kernels
from groupoid_lab.group_words import ball, shortlex
from groupoid_lab.sft_groupoid import all_bisections
from strategies import F2

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")


def both(name, *args):
    out = [_kernels.impl(name, b)(*args) for b in ("numba", "numpy")]
    return out


def same(a, b):
    if isinstance(a, tuple):
        return len(a) == len(b) and all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def test_backend_flag_is_valid():
    assert _kernels.BACKEND in ("numba", "numpy")
    with pytest.raises(KeyError):
        _kernels.impl("no_such_kernel")


@needs_numba
@settings(max_examples=30)
@given(st.lists(st.tuples(st.integers(0, 60), st.integers(0, 8)), max_size=12))
def test_cylinder_indicator_parity(spans):
    starts = np.array([s for s, _ in spans], dtype=np.int64)
    widths = np.array([w for _, w in spans], dtype=np.int64)
    a, b = both("cylinder_indicator", starts, widths, 70)
    assert same(a, b)
    oracle = np.zeros(70, dtype=bool)
    for s, w in spans:
        oracle[s:s + w] = True
    assert same(a, oracle)


@needs_numba
@pytest.mark.parametrize("radius,max_size", [(1, 3), (1, 5), (2, 3)])
def test_folner_subset_parity(radius, max_size):
    B = F2.generators()
    cand = shortlex(ball(F2, radius))
    targets = cand + [g for g in shortlex(ball(F2, radius + 1)) if g.length > radius]
    idx = {g: i for i, g in enumerate(targets)}
    table = np.array([[idx[b * k] for k in cand] for b in B], dtype=np.int64)
    a, b = both("folner_subset_min", table, len(targets), max_size)
    assert same(a, b)


@needs_numba
@given(st.lists(st.integers(-5, 5), min_size=1, max_size=4, unique=True))
def test_interval_boundary_parity(offsets):
    arr = np.array(offsets, dtype=np.int64)
    a, b = both("interval_boundary_counts", arr, 40)
    assert same(a, b)
    for m in (1, 7, 40):
        K = set(range(m))
        assert a[m] == len({k + o for k in K for o in offsets} - K)


@needs_numba
@pytest.mark.parametrize("j", [0, 1, 2])
def test_invariance_sweep_parity(j):
    idx = shortlex(ball(F2, 1))
    gammas = shortlex(ball(F2, 1))
    universe = shortlex(ball(F2, 2))
    uid = {g: i for i, g in enumerate(universe)}
    trans = np.array([[uid[g.inverse() * t] for t in idx] for g in gammas], dtype=np.int64)
    rows = list(combinations(range(len(idx)), j))
    combos = np.array(rows, dtype=np.int64).reshape(len(rows), j)
    bis = list(all_bisections(2, 2, 1, reduce_inverse=True))
    lu = np.array([len(s.u) for s in bis], dtype=np.int64)
    lv = np.array([len(s.v) for s in bis], dtype=np.int64)
    a, b = both("invariance_sweep", trans, combos, lu, lv)
    assert same(a, b)
    # a corrupted length table must be caught identically
    a, b = both("invariance_sweep", trans, combos, lu, lv + (np.arange(len(lv)) == 3))
    assert same(a, b)
    assert j == 0 or a[1] > 0


@needs_numba
@pytest.mark.parametrize("n,d", [(2, 3), (3, 2), (2, 5)])
def test_tail_kernels_parity(n, d):
    a, b = both("tail_bounds", n, d)
    assert same(a, b)
    assert same(*both("tail_axiom_violations", a))
    bad = a.copy()
    bad[0, 1] = 1  # distinct words cannot have bound 1
    v1, v2 = both("tail_axiom_violations", bad)
    assert v1 == v2 > 0
