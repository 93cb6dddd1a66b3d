"""Invariant measures as exact solutions of finite linear systems.

Unknowns are masses of depth-``k`` cylinders (or of product cells over a
window).  Every bisection contributes ``mass(source) - mass(range) = 0``; one
row fixes the total mass to 1.  Elimination runs over ``Fraction`` and keeps,
for each reduced row, the combination of input rows that produced it, so an
inconsistency comes with a checkable certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Hashable, Iterable, Sequence

from .cantor_algebra import ClopenSet, ProductCylinder, check_alphabet, product_measure, words
from .certificate import Certificate
from .errors import ConditioningOnNull, DepthInsufficient, InfeasibleSystem, InvalidCover, InvalidInput
from .group_words import ball, shortlex
from .sft_groupoid import PrefixBisection, all_bisections


@dataclass
class ConstraintSystem:
    """Rows ``sum coeff * var == rhs`` over an ordered variable list."""

    variables: list
    rows: list = field(default_factory=list)  # (coeffs: dict var -> Fraction, rhs, label)

    def __post_init__(self):
        self.variables = list(self.variables)
        self._index = {v: i for i, v in enumerate(self.variables)}
        if len(self._index) != len(self.variables):
            raise InvalidInput("duplicate variables")

    def add_row(self, coeffs: dict, rhs=0, label: str = "") -> None:
        clean = {}
        for v, c in coeffs.items():
            if v not in self._index:
                raise InvalidInput(f"unknown variable {v!r}")
            c = Fraction(c)
            if c:
                clean[v] = clean.get(v, 0) + c
        self.rows.append(({v: c for v, c in clean.items() if c}, Fraction(rhs), label))

    def add_equal(self, lhs: Iterable, rhs: Iterable, label: str = "") -> None:
        """``sum(lhs vars) == sum(rhs vars)``."""
        coeffs: dict = {}
        for v in lhs:
            coeffs[v] = coeffs.get(v, 0) + 1
        for v in rhs:
            coeffs[v] = coeffs.get(v, 0) - 1
        self.add_row(coeffs, 0, label)

    def add_normalization(self) -> None:
        self.add_row({v: 1 for v in self.variables}, 1, "total mass 1")

    def satisfied_by(self, values: dict) -> bool:
        return all(sum(c * values[v] for v, c in coeffs.items()) == rhs for coeffs, rhs, _ in self.rows)

    def to_json(self) -> dict:
        return {
            "variables": [_var_str(v) for v in self.variables],
            "rows": [{"coeffs": {_var_str(v): c for v, c in coeffs.items()}, "rhs": rhs, "label": label}
                     for coeffs, rhs, label in self.rows],
        }


def _var_str(v) -> str:
    return "|".join(v) if isinstance(v, tuple) else str(v)


@dataclass(frozen=True)
class MeasureVector:
    """Masses of depth-``depth`` cells.

    Without a window the cells are words; with a window (an ordered tuple of
    indices) they are tuples of words, one per index.
    """

    values: dict
    n: int
    depth: int
    window: tuple | None = None

    def __post_init__(self):
        check_alphabet(self.n)
        vals = {k: Fraction(v) for k, v in self.values.items()}
        if any(v < 0 for v in vals.values()):
            raise InvalidInput("measure values must be non-negative")
        if sum(vals.values()) != 1:
            raise InvalidInput(f"measure values sum to {sum(vals.values())}, not 1")
        object.__setattr__(self, "values", vals)

    def cells(self):
        return list(self.values)

    def measure(self, S) -> Fraction:
        """Mass of a clopen set (no window) or product cylinder (windowed)."""
        if self.window is None:
            if isinstance(S, str):
                S = ClopenSet.cylinder(S, self.n)
            if not isinstance(S, ClopenSet):
                raise InvalidInput("a single-coordinate measure evaluates clopen sets")
            if S.depth > self.depth:
                raise DepthInsufficient(f"clopen set depth {S.depth} exceeds measure depth {self.depth}")
            return sum((m for w, m in self.values.items() if S.contains(w)), Fraction(0))
        if not isinstance(S, ProductCylinder):
            raise InvalidInput("a windowed measure evaluates product cylinders")
        pos = {t: i for i, t in enumerate(self.window)}
        for t, u in S.assignment.items():
            if t not in pos:
                raise InvalidInput(f"index {t} is outside the measure window")
            if len(u) > self.depth:
                raise DepthInsufficient(f"cylinder at {t} is deeper than the measure")
        checks = [(pos[t], u) for t, u in S.assignment.items()]
        return sum((m for cell, m in self.values.items() if all(cell[i].startswith(u) for i, u in checks)),
                   Fraction(0))

    def marginal(self, t) -> MeasureVector:
        if self.window is None:
            raise InvalidInput("marginal needs a windowed measure")
        i = self.window.index(t)
        out: dict = {}
        for cell, m in self.values.items():
            out[cell[i]] = out.get(cell[i], 0) + m
        return MeasureVector(out, self.n, self.depth)

    def to_json(self) -> dict:
        data = {"depth": self.depth, "values": {_var_str(k): v for k, v in sorted(self.values.items())}}
        if self.window is not None:
            data["window"] = [str(t) for t in self.window]
        return data


def uniform_measure(n: int, depth: int) -> MeasureVector:
    return MeasureVector({w: Fraction(1, n**depth) for w in words(depth, n)}, n, depth)


class ProductMeasure:
    """The product of uniform cylinder measures, evaluated exactly on any cylinder."""

    def __init__(self, n: int):
        self.n = check_alphabet(n)

    def measure(self, S) -> Fraction:
        if isinstance(S, ProductCylinder):
            return product_measure(S)
        if isinstance(S, ClopenSet):
            return S.measure()
        if isinstance(S, str):
            return ClopenSet.cylinder(S, self.n).measure()
        raise InvalidInput(f"cannot measure {type(S).__name__}")


@dataclass
class SolveResult:
    unique: bool
    dimension: int
    solution: dict  # particular solution (free variables set to 0)
    null_basis: list
    rank: int
    rows_used: int
    nonnegative: bool

    def measure(self, n: int, depth: int, window: tuple | None = None) -> MeasureVector:
        if not self.unique:
            raise InvalidInput(f"solution space has dimension {self.dimension}")
        return MeasureVector(self.solution, n, depth, window)


def _pivot_choice(row: dict, order: dict):
    def score(v):
        c = row[v]
        return (-abs(c.numerator * c.denominator), order[v])
    return min(row, key=score)


def solve(system: ConstraintSystem) -> SolveResult:
    """Exact incremental Gauss-Jordan elimination.

    Each reduced row carries its provenance (input row index -> multiplier).
    Once the rank reaches the number of unknowns the remaining rows are only
    checked against the solution.
    """
    order = system._index
    nvars = len(system.variables)
    pivots: dict = {}  # pivot var -> (row, rhs, provenance)
    solution = None
    rows_used = 0
    for idx, (coeffs, rhs, label) in enumerate(system.rows):
        if solution is not None:
            if sum(c * solution[v] for v, c in coeffs.items()) != rhs:
                _raise_infeasible(system, pivots, idx)
            continue
        rows_used += 1
        row, b, prov = dict(coeffs), rhs, {idx: Fraction(1)}
        row, b, prov = _reduce(row, b, prov, pivots)
        if not row:
            if b != 0:
                raise InfeasibleSystem(f"row {idx} ({label}) contradicts earlier rows", _named(system, prov), b)
            continue
        p = _pivot_choice(row, order)
        scale = row[p]
        row = {v: c / scale for v, c in row.items()}
        b /= scale
        prov = {k: c / scale for k, c in prov.items()}
        for q, (qrow, qb, qprov) in list(pivots.items()):
            f = qrow.get(p)
            if f:
                pivots[q] = _axpy(qrow, qb, qprov, -f, row, b, prov)
        pivots[p] = (row, b, prov)
        if len(pivots) == nvars:
            solution = {v: pivots[v][1] for v in system.variables}
    free = [v for v in system.variables if v not in pivots]
    particular = {v: Fraction(0) for v in system.variables}
    for p, (row, b, _) in pivots.items():
        particular[p] = b
    basis = []
    for f in free:
        vec = {v: Fraction(0) for v in system.variables}
        vec[f] = Fraction(1)
        for p, (row, _, _) in pivots.items():
            vec[p] = -row.get(f, Fraction(0))
        basis.append(vec)
    return SolveResult(
        unique=not free,
        dimension=len(free),
        solution=particular,
        null_basis=basis,
        rank=len(pivots),
        rows_used=rows_used,
        nonnegative=all(v >= 0 for v in particular.values()),
    )


def _reduce(row, b, prov, pivots):
    for p in [v for v in row if v in pivots]:
        f = row.get(p)
        if f:
            prow, pb, pprov = pivots[p]
            row, b, prov = _axpy(row, b, prov, -f, prow, pb, pprov)
    return row, b, prov


def _axpy(row, b, prov, f, other, ob, oprov):
    out = dict(row)
    for v, c in other.items():
        nv = out.get(v, 0) + f * c
        if nv:
            out[v] = nv
        else:
            out.pop(v, None)
    outp = dict(prov)
    for k, c in oprov.items():
        nv = outp.get(k, 0) + f * c
        if nv:
            outp[k] = nv
        else:
            outp.pop(k, None)
    return out, b + f * ob, outp


def _raise_infeasible(system, pivots, idx):
    coeffs, rhs, label = system.rows[idx]
    row, b, prov = _reduce(dict(coeffs), rhs, {idx: Fraction(1)}, pivots)
    raise InfeasibleSystem(f"row {idx} ({label}) contradicts earlier rows", _named(system, prov), b)


def _named(system, prov) -> dict:
    return {f"{k}:{system.rows[k][2]}": c for k, c in sorted(prov.items())}


def verify_infeasibility(system: ConstraintSystem, combination: dict) -> bool:
    """The combination must cancel every variable and leave a nonzero constant."""
    total: dict = {}
    const = Fraction(0)
    for key, c in combination.items():
        coeffs, rhs, _ = system.rows[int(key.split(":", 1)[0])]
        for v, a in coeffs.items():
            total[v] = total.get(v, 0) + c * a
        const += c * rhs
    return all(v == 0 for v in total.values()) and const != 0


# ------------------------------------------------------------ system builders

def sft_system(n: int, depth: int, bisections: Iterable[PrefixBisection] | None = None) -> ConstraintSystem:
    """Cylinder masses at ``depth`` constrained by bisections (default: all, up to inverses)."""
    check_alphabet(n)
    if depth < 1:
        raise InvalidInput("depth must be >= 1")
    ws = list(words(depth, n))
    system = ConstraintSystem(ws)
    if bisections is None:
        bisections = all_bisections(n, depth, 1, reduce_inverse=True)
    for sigma in bisections:
        if sigma.n != n:
            raise InvalidInput("bisection alphabet mismatch")
        if sigma.length > depth:
            raise DepthInsufficient(f"bisection of length {sigma.length} deeper than {depth}")
        if sigma.u == sigma.v:
            continue
        system.add_equal(_extensions(sigma.u, depth, n), _extensions(sigma.v, depth, n),
                         f"sigma({sigma.u},{sigma.v})")
    system.add_normalization()
    return system


def _extensions(prefix, depth, n):
    return [prefix + tail for tail in words(depth - len(prefix), n)]


def unique_measure_solve(system: ConstraintSystem, n: int, depth: int, window: tuple | None = None):
    """Solve; returns ``(MeasureVector, result)`` when unique, ``(None, result)`` otherwise."""
    result = solve(system)
    return (result.measure(n, depth, window) if result.unique else None), result


def _cells(window, depth, n):
    return list(product(list(words(depth, n)), repeat=len(window)))


def _cylinder_cells(assignment: dict, window, depth, n):
    choices = [[""] for _ in window]
    for i, t in enumerate(window):
        u = assignment.get(t, "")
        choices[i] = _extensions(u, depth, n)
    return list(product(*choices)) if window else [()]


def twisted_system(group, n: int, depth: int, window, twist_radius: int) -> tuple[ConstraintSystem, tuple]:
    """Product-cell masses on ``window`` constrained by every basis bisection that fits inside it.

    A basis set (sigma_i at t_i, gamma) contributes when both its range indices
    ``t_i`` and its source indices ``gamma^-1 t_i`` lie in the window.
    """
    check_alphabet(n)
    if depth < 1 or twist_radius < 0:
        raise InvalidInput("depth must be >= 1 and twist radius >= 0")
    window = tuple(shortlex(window))
    if not window:
        raise InvalidInput("window must be nonempty")
    inside = set(window)
    system = ConstraintSystem(_cells(window, depth, n))
    bis = [b for b in all_bisections(n, depth, 1) if b.u != b.v] + \
          [PrefixBisection(w, w, n) for L in range(1, depth + 1) for w in words(L, n)]
    for gamma in shortlex(ball(group, twist_radius)):
        g_inv = gamma.inverse()
        for j in range(1, len(window) + 1):
            for combo in combinations(window, j):
                if not all(g_inv * t in inside for t in combo):
                    continue
                for choice in product(bis, repeat=j):
                    if gamma.is_identity and all(b.u == b.v for b in choice):
                        continue
                    src = {g_inv * t: b.u for t, b in zip(combo, choice)}
                    rng = {t: b.v for t, b in zip(combo, choice)}
                    system.add_equal(_cylinder_cells(src, window, depth, n), _cylinder_cells(rng, window, depth, n),
                                     f"{gamma}:" + ",".join(f"{t}:{b.u}>{b.v}" for t, b in zip(combo, choice)))
    system.add_normalization()
    return system, window


def twisted_unique_measure_solve(group, n: int, depth: int, window, twist_radius: int) -> Certificate:
    """Solve the windowed system and compare with the product measure cell by cell."""
    system, window = twisted_system(group, n, depth, window, twist_radius)
    mu, result = unique_measure_solve(system, n, depth, window)
    params = {"group": group.name, "n": n, "depth": depth, "window": list(window), "twist_radius": twist_radius}
    values = {"rows": len(system.rows), "variables": len(system.variables), "rank": result.rank,
              "dimension": result.dimension}
    if mu is None:
        return Certificate("twisted_measure_uniqueness", params, "fail",
                           {"particular": {_var_str(k): v for k, v in result.solution.items()}}, values)
    expected = Fraction(1, n ** (depth * len(window)))
    mismatched = [c for c, v in mu.values.items() if v != expected]
    values["cell_mass"] = expected
    values["matches_product_measure"] = not mismatched
    return Certificate("twisted_measure_uniqueness", params, "fail" if mismatched else "pass",
                       {"mismatched_cells": [_var_str(c) for c in mismatched]}, values)


# ------------------------------------------------------ conditional measures

def conditional_invariance_check(nu: MeasureVector, fixed: dict, t_n) -> Certificate:
    """Condition ``nu`` on the fixed constraints and test the marginal at ``t_n``.

    ``fixed`` maps indices to clopen sets (or prefixes).  The conditional
    marginal must be invariant under every bisection at ``t_n`` and equal the
    uniform measure.
    """
    if nu.window is None:
        raise InvalidInput("conditioning needs a windowed measure")
    window = nu.window
    if t_n not in window:
        raise InvalidInput(f"{t_n} is outside the measure window")
    if t_n in fixed:
        raise InvalidInput("the free coordinate cannot also be constrained")
    pos = {t: i for i, t in enumerate(window)}
    cons = []
    for t, U in fixed.items():
        if t not in pos:
            raise InvalidInput(f"constraint index {t} is outside the window")
        if isinstance(U, str):
            U = ClopenSet.cylinder(U, nu.n)
        if U.depth > nu.depth:
            raise DepthInsufficient(f"constraint at {t} is deeper than the measure")
        cons.append((pos[t], U))
    i_n = pos[t_n]
    a = Fraction(0)
    joint: dict = {w: Fraction(0) for w in words(nu.depth, nu.n)}
    for cell, m in nu.values.items():
        if all(U.contains(cell[i]) for i, U in cons):
            a += m
            joint[cell[i_n]] += m
    if a == 0:
        raise ConditioningOnNull("the fixed constraints have measure 0")
    mu_n = {w: m / a for w, m in joint.items()}
    violations = []
    for sigma in all_bisections(nu.n, nu.depth, 1, reduce_inverse=True):
        su = sum(mu_n[w] for w in _extensions(sigma.u, nu.depth, nu.n))
        sv = sum(mu_n[w] for w in _extensions(sigma.v, nu.depth, nu.n))
        if su != sv:
            violations.append({"u": sigma.u, "v": sigma.v, "source": su, "range": sv})
    uniform = Fraction(1, nu.n**nu.depth)
    not_uniform = [w for w, m in mu_n.items() if m != uniform]
    return Certificate(
        "conditional_measure_invariance",
        {"fixed": {str(t): U for t, U in fixed.items()}, "free_index": str(t_n), "depth": nu.depth,
         "window": [str(t) for t in window]},
        "fail" if violations or not_uniform else "pass",
        {"violations": violations[:10], "non_uniform_words": not_uniform},
        {"a": a, "conditional": mu_n, "violation_count": len(violations)},
    )


# -------------------------------------------------- pure infiniteness and minimality

def pi_obstruction(mu, U, V) -> Certificate:
    """Mass comparison ruling out a bisection with source ``U`` and range inside ``V``.

    ``mu`` is anything with an exact ``measure`` method.  When
    ``mu(U) <= mu(V)`` this pair gives no obstruction and the verdict is
    ``vacuous``.
    """
    mV = mu.measure(V)
    if mV == 0 and _is_empty(V):
        raise InvalidInput("V must be nonempty")
    mU = mu.measure(U)
    found = mU > mV
    return Certificate(
        "not_purely_infinite",
        {"U": U, "V": V, "measure": type(mu).__name__},
        "pass" if found else "vacuous",
        {"U": U, "V": V} if found else None,
        {"measure_U": mU, "measure_V": mV, "obstruction": found},
    )


def _is_empty(S) -> bool:
    if isinstance(S, ClopenSet):
        return S.is_empty()
    if isinstance(S, (set, frozenset, list, tuple)):
        return not S
    return False


def minimal_covering_bound(cover: Sequence[PrefixBisection], target: ClopenSet, depth: int | None = None):
    """``(1 / len(cover), mu(target))`` for a verified cover by bisections into ``target``."""
    if not cover:
        raise InvalidCover("empty cover")
    n = target.n
    sources = ClopenSet.empty(n)
    for sigma in cover:
        if sigma.n != n:
            raise InvalidCover("alphabet mismatch in cover")
        if depth is not None and sigma.length > depth:
            raise InvalidCover(f"bisection longer than the working depth {depth}")
        if not sigma.range().issubset(target):
            raise InvalidCover(f"range of sigma({sigma.u},{sigma.v}) is not inside the target")
        sources = sources | sigma.source()
    if not sources.is_full():
        raise InvalidCover(f"sources miss {sources.complement().to_json()}")
    return Fraction(1, len(cover)), target.measure()
