from itertools import product

import pytest
from hypothesis import given, strategies as st

from groupoid_lab import _kernels
from groupoid_lab.cantor_algebra import ClopenSet, words
from groupoid_lab.errors import CompositionError, DomainError, InvalidInput
from groupoid_lab.sft_groupoid import (PrefixBisection, SftArrow, all_arrows, all_bisections, apply_bisection,
                                       arrow_algebra, elementary_fiber, minimal_tail_bound, tail_class)


def brute_tail_bound(y, x):
    return min(k for k in range(1, len(x) + 2) if all(y[i - 1] == x[i - 1] for i in range(k, len(x) + 1)))


def test_arrow_examples():
    a = SftArrow("100", "000", 2)
    assert arrow_algebra(a, SftArrow("000", "000", 2), "compose") == a
    assert arrow_algebra(arrow_algebra(a, None, "inverse"), None, "inverse") == a
    c = arrow_algebra(SftArrow("100", "000", 2), SftArrow("000", "010", 2), "compose")
    assert (c.y, c.x, c.k) == ("100", "010", 3)
    with pytest.raises(CompositionError):
        a.compose(a)
    with pytest.raises(InvalidInput):
        SftArrow("10", "000", 2)


def test_bisection_examples():
    assert apply_bisection(PrefixBisection("01", "01", 2), "011").is_unit
    assert apply_bisection(PrefixBisection("0", "1", 2), "001") == SftArrow("101", "001", 2)
    assert apply_bisection(PrefixBisection("01", "10", 2), "011") == SftArrow("101", "011", 2)
    with pytest.raises(DomainError):
        apply_bisection(PrefixBisection("1", "0", 2), "001")
    with pytest.raises(InvalidInput):
        PrefixBisection("0", "11", 2)


def test_tail_class_examples():
    assert tail_class("000", 1, 2) == {"000"}
    assert tail_class("000", 2, 2) == {"000", "100"}
    assert tail_class("000", 4, 2) == set(words(3, 2))
    oracle = {w for w in words(3, 2) if w[1:] == "00"}
    assert tail_class("000", 2, 2) == oracle


def test_elementary_fiber_examples():
    assert elementary_fiber(1, "101", 2) == {SftArrow("101", "101", 2)}
    assert all(len(elementary_fiber(3, x, 2)) == 4 for x in words(3, 2))
    assert len(elementary_fiber(2, "00", 3)) == 3


@pytest.mark.parametrize("n,d", [(2, 1), (2, 2), (2, 3), (2, 4), (3, 1), (3, 2), (3, 3)])
def test_groupoid_axioms_exhaustive(n, d):
    ws = list(words(d, n))
    arrows = {(y, x): SftArrow(y, x, n) for y in ws for x in ws}
    for (y, x), a in arrows.items():
        assert a.k == brute_tail_bound(y, x)
        assert a.compose(a.source()) == a and a.range().compose(a) == a
        assert a.compose(a.inverse()) == a.range() and a.inverse().compose(a) == a.source()
    for z, y, x, w in product(ws, repeat=4):
        ab = arrows[z, y].compose(arrows[y, x])
        assert ab.compose(arrows[x, w]) == arrows[z, y].compose(arrows[y, x].compose(arrows[x, w]))
        # closure of each level E[k] under composition
        assert ab.k <= max(arrows[z, y].k, arrows[y, x].k)


@pytest.mark.parametrize("n,d", [(2, 4), (3, 3), (3, 4)])
def test_tail_levels_closed_kernel(n, d):
    k = _kernels.tail_bounds(n, d)
    assert _kernels.tail_axiom_violations(k) == 0
    for (i, y), (j, x) in product(enumerate(words(d, n)), repeat=2):
        if (i + j) % 97 == 0:
            assert k[i, j] == minimal_tail_bound(y, x)


@pytest.mark.parametrize("n,d", [(2, 3), (3, 2)])
def test_bisections_are_bijections(n, d):
    for sigma in all_bisections(n, d):
        image = {apply_bisection(sigma, x).y for x in words(d, n) if x.startswith(sigma.u)}
        assert image == {w for w in words(d, n) if w.startswith(sigma.v)}
        assert sigma.source().measure() == sigma.range().measure()
        for x in words(d, n):
            if x.startswith(sigma.u):
                assert sigma.contains(apply_bisection(sigma, x))


def test_bisection_reduction_counts():
    full = list(all_bisections(2, 3))
    reduced = list(all_bisections(2, 3, reduce_inverse=True))
    assert len(full) == 4 + 16 + 64
    assert len(reduced) == 3 + 10 + 36
    assert {(b.u, b.v) for b in full} == {(b.u, b.v) for b in reduced} | {(b.v, b.u) for b in reduced}


@given(st.integers(2, 3).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, 5))).flatmap(
    lambda nd: st.tuples(st.just(nd[0]), st.text("0123"[:nd[0]], min_size=nd[1], max_size=nd[1]),
                         st.text("0123"[:nd[0]], min_size=nd[1], max_size=nd[1]),
                         st.integers(1, nd[1] + 1))))
def test_tail_class_symmetry(args):
    n, x, y, k = args
    assert (y in tail_class(x, k, n)) == (x in tail_class(y, k, n))
    assert (SftArrow(y, x, n) in elementary_fiber(k, x, n)) == SftArrow(y, x, n).in_level(k)


def test_json_roundtrip_and_rejects_non_minimal_k():
    a = SftArrow("0110", "1010", 2)
    assert SftArrow.from_json(a.to_json(), 2) == a
    with pytest.raises(InvalidInput):
        SftArrow.from_json({"y": "01", "x": "11", "k": 3}, 2)


def test_all_arrows_count():
    assert len(list(all_arrows(2, 3))) == 64
    assert ClopenSet.cylinder("0", 2) == PrefixBisection("0", "1", 2).source()
