from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from groupoid_lab.cantor_algebra import ClopenSet, ProductCylinder, words
from groupoid_lab.errors import ConditioningOnNull, InfeasibleSystem, InvalidCover, InvalidInput
from groupoid_lab.invariant_measure import (ConstraintSystem, MeasureVector, ProductMeasure,
                                            conditional_invariance_check, minimal_covering_bound,
                                            pi_obstruction, sft_system, solve, twisted_system,
                                            twisted_unique_measure_solve, uniform_measure, unique_measure_solve,
                                            verify_infeasibility)
from groupoid_lab.sft_groupoid import PrefixBisection, all_bisections
from strategies import F2, Z, prefix_sets

e, a, b = F2.identity(), F2.parse("a"), F2.parse("b")


def test_unique_measure_examples():
    mu, res = unique_measure_solve(sft_system(2, 1, [PrefixBisection("0", "1", 2)]), 2, 1)
    assert mu.values == {"0": Fraction(1, 2), "1": Fraction(1, 2)}
    mu, res = unique_measure_solve(sft_system(2, 3, [s for s in all_bisections(2, 3, 3)]), 2, 3)
    assert set(mu.values.values()) == {Fraction(1, 8)}
    mu, res = unique_measure_solve(sft_system(2, 1, []), 2, 1)
    assert mu is None and res.dimension == 1 and res.rank == 1


@pytest.mark.parametrize("n,k", [(2, 1), (2, 4), (3, 3)])
def test_rank_matches_float_oracle(n, k):
    system = sft_system(n, k)
    res = solve(system)
    idx = {v: i for i, v in enumerate(system.variables)}
    M = np.zeros((len(system.rows), len(system.variables)))
    for r, (coeffs, _, _) in enumerate(system.rows):
        for v, c in coeffs.items():
            M[r, idx[v]] = float(c)
    assert res.rank == np.linalg.matrix_rank(M) == len(system.variables)
    assert system.satisfied_by(res.solution)


def test_symmetry_reduction_does_not_change_solution():
    full = sft_system(2, 3, all_bisections(2, 3))
    reduced = sft_system(2, 3)
    assert len(full.rows) > len(reduced.rows)
    assert solve(full).solution == solve(reduced).solution


def test_twisted_examples():
    # single coordinate reduces to the plain system
    cert = twisted_unique_measure_solve(F2, 2, 2, [e], 1)
    mu, _ = unique_measure_solve(sft_system(2, 2), 2, 2)
    assert cert.verdict == "pass" and cert.values["cell_mass"] == mu.values["00"]
    cert = twisted_unique_measure_solve(F2, 2, 1, [e, a, b], 1)
    assert cert.verdict == "pass" and cert.values["cell_mass"] == Fraction(1, 8)
    cert = twisted_unique_measure_solve(Z, 2, 2, [Z.element(0), Z.element(1)], 1)
    assert cert.verdict == "pass" and cert.values["cell_mass"] == Fraction(1, 16)


def test_twisted_rows_come_from_bisections():
    system, window = twisted_system(F2, 2, 1, [e, a], 1)
    assert window == (e, a)
    for coeffs, rhs, label in system.rows[:-1]:
        assert rhs == 0 and sum(coeffs.values()) == 0 and ":" in label
    mu = {c: Fraction(1, 4) for c in system.variables}
    assert system.satisfied_by(mu)


def test_infeasible_system_certificate():
    s = ConstraintSystem(["x", "y"])
    s.add_row({"x": 1, "y": 1}, 1, "sum")
    s.add_row({"x": 1}, 0, "x zero")
    s.add_row({"y": 1}, 0, "y zero")
    with pytest.raises(InfeasibleSystem) as info:
        solve(s)
    assert verify_infeasibility(s, info.value.combination)


@settings(max_examples=80)
@given(st.integers(2, 5), st.lists(st.lists(st.integers(-2, 2), min_size=5, max_size=5), min_size=1, max_size=6),
       st.lists(st.integers(-3, 3), min_size=6, max_size=6))
def test_solver_correctness(nvars, mat, rhs):
    s = ConstraintSystem([f"v{i}" for i in range(nvars)])
    for row, c in zip(mat, rhs):
        s.add_row({f"v{i}": row[i] for i in range(nvars)}, c, "r")
    A = np.array([r[:nvars] for r in mat], dtype=float)
    augmented = np.column_stack([A, np.array(rhs[:len(mat)], dtype=float)])
    try:
        res = solve(s)
    except InfeasibleSystem as exc:
        assert verify_infeasibility(s, exc.combination)
        assert np.linalg.matrix_rank(augmented) > np.linalg.matrix_rank(A)
        return
    assert s.satisfied_by(res.solution)
    assert res.rank == np.linalg.matrix_rank(A)
    assert res.dimension == nvars - res.rank
    for vec in res.null_basis:
        assert all(sum(c * vec[v] for v, c in coeffs.items()) == 0 for coeffs, _, _ in s.rows)


def test_measure_vector_validation():
    with pytest.raises(InvalidInput):
        MeasureVector({"0": Fraction(1, 2)}, 2, 1)
    with pytest.raises(InvalidInput):
        MeasureVector({"0": Fraction(3, 2), "1": Fraction(-1, 2)}, 2, 1)
    mu = uniform_measure(2, 3)
    assert mu.measure("01") == Fraction(1, 4)
    assert mu.measure(ClopenSet.of(["0", "11"], 2)) == Fraction(3, 4)


def product_vector(window, depth, n=2, bias=None):
    cells = {}
    ws = list(words(depth, n))
    from itertools import product
    for c in product(ws, repeat=len(window)):
        cells[c] = Fraction(1, len(ws) ** len(window))
    if bias:
        c0, c1 = sorted(cells)[:2]
        cells[c0] += bias
        cells[c1] -= bias
    return MeasureVector(cells, n, depth, tuple(window))


def test_conditional_invariance_examples():
    nu = product_vector([e, a, b], 2)
    cert = conditional_invariance_check(nu, {e: "0", a: ClopenSet.of(["1", "00"], 2)}, b)
    assert cert.verdict == "pass"
    free = conditional_invariance_check(nu, {}, b)
    assert free.values["a"] == 1
    assert free.values["conditional"] == nu.marginal(b).values
    bad = product_vector([e, a], 2, bias=Fraction(1, 32))
    assert conditional_invariance_check(bad, {e: "00"}, a).verdict == "fail"
    zero = MeasureVector({("0", "0"): Fraction(1, 2), ("0", "1"): Fraction(1, 2)}, 2, 1, (e, a))
    with pytest.raises(ConditioningOnNull):
        conditional_invariance_check(zero, {e: "1"}, a)


def test_pi_obstruction_examples():
    mu = uniform_measure(2, 2)
    full, c0 = ClopenSet.full(2), ClopenSet.cylinder("0", 2)
    assert pi_obstruction(mu, full, c0).verdict == "pass"
    assert pi_obstruction(mu, c0, full).verdict == "vacuous"
    muT = ProductMeasure(2)
    cert = pi_obstruction(muT, ProductCylinder({}, 2), ProductCylinder({e: "0", a: "1"}, 2))
    assert cert.verdict == "pass" and cert.values["measure_V"] == Fraction(1, 4)
    with pytest.raises(InvalidInput):
        pi_obstruction(mu, full, ClopenSet.empty(2))


@given(prefix_sets(2), prefix_sets(2), prefix_sets(2))
def test_pi_obstruction_monotone(pu, pv, pw):
    mu = uniform_measure(2, 4)
    U, V = ClopenSet.of(pu, 2), ClopenSet.of(pv, 2)
    W = V & ClopenSet.of(pw, 2)
    if V.is_empty() or W.is_empty():
        return
    if pi_obstruction(mu, U, V).verdict == "pass":
        assert pi_obstruction(mu, U, W).verdict == "pass"


def test_minimal_covering_examples():
    assert minimal_covering_bound([PrefixBisection("0", "0", 2), PrefixBisection("1", "0", 2)],
                                  ClopenSet.cylinder("0", 2)) == (Fraction(1, 2), Fraction(1, 2))
    assert minimal_covering_bound([PrefixBisection("", "", 2)], ClopenSet.full(2)) == (1, 1)
    cover = [PrefixBisection(w, "00", 2) for w in words(2, 2)]
    assert minimal_covering_bound(cover, ClopenSet.cylinder("00", 2), 2) == (Fraction(1, 4), Fraction(1, 4))
    with pytest.raises(InvalidCover):
        minimal_covering_bound([PrefixBisection("0", "0", 2)], ClopenSet.cylinder("0", 2))
    with pytest.raises(InvalidCover):
        minimal_covering_bound([PrefixBisection("0", "1", 2), PrefixBisection("1", "1", 2)],
                               ClopenSet.cylinder("0", 2))


@given(st.integers(2, 3).flatmap(lambda n: st.tuples(st.just(n), prefix_sets(n), st.integers(1, 3),
                                                     st.randoms(use_true_random=False))))
def test_covering_bound_below_true_measure(args):
    n, pt, depth, rnd = args
    target = ClopenSet.of(pt, n)
    if target.is_empty() or target.depth > depth:
        return
    inside = [w for w in words(depth, n) if target.contains(w)]
    cover = [PrefixBisection(w, rnd.choice(inside), n) for w in words(depth, n)]
    bound, actual = minimal_covering_bound(cover, target)
    assert bound <= actual == uniform_measure(n, depth).measure(target)
