"""The twisted groupoid T E_n x| Gamma with T = Gamma acting by left multiplication.

A :class:`SupportedArrow` ``(f, gamma)`` is stored on a finite window ``W`` of
indices: ``entries[t]`` is the E_n arrow ``f(t)`` (unit arrows included, since
they carry the coordinate of the base point).  Outside ``W`` the map ``f`` is
a unit at an unconstrained point, so a stored arrow stands for every arrow of
the infinite groupoid that agrees with it on ``W``.

Conventions used throughout::

    (gamma . f)(t)        = f(gamma^-1 t)
    s(f, gamma)(t)        = s(f)(gamma t)        window gamma^-1 W
    r(f, gamma)(t)        = r(f)(t)              window W
    (f, g) * (f', g')     = (f . (g . f'), g g')
    (f, g)^-1             = (g^-1 . f^-1, g^-1)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import comb
from typing import Mapping

import numpy as np

from . import _kernels
from .cantor_algebra import ClopenSet, ProductCylinder, _FrozenDict, check_alphabet, check_word, product_measure, words
from .certificate import Certificate
from .errors import CompositionError, DepthInsufficient, InvalidInput, WindowOverflow
from .group_words import GroupElement, ball, shortlex
from .sft_groupoid import PrefixBisection, SftArrow, all_bisections, apply_bisection


@lru_cache(maxsize=None)
def default_cap(group) -> frozenset:
    return ball(group, 3)


@dataclass(frozen=True)
class Truncation:
    """Finite scale at which the infinite groupoid is examined."""

    group: object
    n: int = 2
    depth: int = 2
    window_radius: int = 1
    twist_radius: int = 1
    cap: frozenset | None = None

    def __post_init__(self):
        check_alphabet(self.n)
        if self.depth < 1 or self.window_radius < 0 or self.twist_radius < 0:
            raise InvalidInput("depth must be >= 1 and radii >= 0")

    @property
    def window(self) -> frozenset:
        return ball(self.group, self.window_radius)

    @property
    def twists(self) -> frozenset:
        return ball(self.group, self.twist_radius)

    @property
    def max_window(self) -> frozenset:
        return default_cap(self.group) if self.cap is None else self.cap


@dataclass(frozen=True)
class UnitPoint:
    """A point of the product of unit spaces, known on a finite window at depth ``depth``."""

    coords: Mapping[GroupElement, str]
    n: int

    def __post_init__(self):
        coords = _FrozenDict(self.coords)
        depths = {len(w) for w in coords.values()}
        if len(depths) > 1:
            raise InvalidInput(f"mixed depths in unit point: {sorted(depths)}")
        for w in coords.values():
            check_word(w, self.n)
        object.__setattr__(self, "coords", coords)

    @classmethod
    def constant(cls, word: str, window, n: int) -> UnitPoint:
        return cls({t: word for t in window}, n)

    @property
    def window(self) -> frozenset:
        return frozenset(self.coords)

    @property
    def depth(self) -> int:
        return len(next(iter(self.coords.values()))) if self.coords else 0

    def __getitem__(self, t) -> str:
        return self.coords[t]

    def translate(self, gamma: GroupElement) -> UnitPoint:
        """``(gamma . x)(t) = x(gamma^-1 t)``."""
        return UnitPoint({gamma * t: w for t, w in self.coords.items()}, self.n)

    def agrees(self, other: UnitPoint) -> bool:
        """Equality on every coordinate both points know."""
        return all(other.coords[t] == w for t, w in self.coords.items() if t in other.coords)

    def restrict(self, window) -> UnitPoint:
        return UnitPoint({t: w for t, w in self.coords.items() if t in window}, self.n)

    def units(self, gamma: GroupElement | None = None) -> SupportedArrow:
        """The arrow ``(x, gamma)`` whose every entry is the unit at ``x(t)``."""
        if not self.coords and gamma is None:
            raise InvalidInput("empty point needs an explicit twist")
        group_elt = gamma if gamma is not None else next(iter(self.coords)).group.identity()
        return SupportedArrow({t: SftArrow(w, w, self.n) for t, w in self.coords.items()}, group_elt,
                              self.n, self.depth)

    def to_json(self) -> dict:
        return {str(t): self.coords[t] for t in shortlex(self.coords)}


@dataclass(frozen=True)
class SupportedArrow:
    entries: Mapping[GroupElement, SftArrow]
    gamma: GroupElement
    n: int
    depth: int

    def __post_init__(self):
        entries = _FrozenDict(self.entries)
        for t, a in entries.items():
            if a.n != self.n or a.depth != self.depth:
                raise InvalidInput(f"entry at {t} has alphabet/depth {a.n}/{a.depth}, expected {self.n}/{self.depth}")
            if t.group != self.gamma.group:
                raise InvalidInput("window index from a different group")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def _trusted(cls, entries: dict, gamma, n: int, depth: int) -> SupportedArrow:
        # entries already validated by the operands; skip the per-entry checks
        obj = object.__new__(cls)
        object.__setattr__(obj, "entries", _FrozenDict(entries))
        object.__setattr__(obj, "gamma", gamma)
        object.__setattr__(obj, "n", n)
        object.__setattr__(obj, "depth", depth)
        return obj

    @property
    def group(self):
        return self.gamma.group

    @property
    def window(self) -> frozenset:
        return frozenset(self.entries)

    @property
    def support(self) -> dict:
        """Coordinates where ``f`` is not a unit."""
        return {t: a for t, a in self.entries.items() if not a.is_unit}

    def fiber_key(self):
        """Identity inside a fiber over a fixed base point, where units are determined."""
        return (self.gamma, frozenset(self.support.items()))

    def source(self) -> UnitPoint:
        g_inv = self.gamma.inverse()
        return UnitPoint({g_inv * t: a.x for t, a in self.entries.items()}, self.n)

    def range(self) -> UnitPoint:
        return UnitPoint({t: a.y for t, a in self.entries.items()}, self.n)

    def inverse(self) -> SupportedArrow:
        g_inv = self.gamma.inverse()
        return SupportedArrow({g_inv * t: a.inverse() for t, a in self.entries.items()}, g_inv,
                              self.n, self.depth)

    def twist(self, gamma: GroupElement) -> SupportedArrow:
        """``tau_gamma`` on the T E_n part; the twist coordinate is untouched."""
        return SupportedArrow({gamma * t: a for t, a in self.entries.items()}, self.gamma, self.n, self.depth)

    def compose(self, other: SupportedArrow, cap: frozenset | None = None) -> SupportedArrow:
        """``self * other`` after aligning windows (missing coordinates become matching units)."""
        if other.group != self.group:
            raise InvalidInput(f"group mismatch: {self.group.name} vs {other.group.name}")
        if other.n != self.n or other.depth != self.depth:
            raise CompositionError("alphabet/depth mismatch")
        moved = {self.gamma * t: a for t, a in other.entries.items()}
        out = dict(self.entries)
        for t, b in moved.items():
            a = out.get(t)
            if a is None:
                out[t] = b
            elif a.x != b.y:
                raise CompositionError(f"source {a.x!r} != range {b.y!r} at index {t}")
            else:
                out[t] = a.compose(b)
        cap = default_cap(self.group) if cap is None else cap
        if not cap.issuperset(out):
            escaped = shortlex(set(out) - cap)
            raise WindowOverflow(f"composite window leaves the cap at {', '.join(map(str, escaped[:4]))}")
        return SupportedArrow._trusted(out, self.gamma * other.gamma, self.n, self.depth)

    __mul__ = compose

    def is_unit(self) -> bool:
        return self.gamma.is_identity and not self.support

    def is_isotropic(self) -> bool:
        """Source and range agree on every coordinate both determine."""
        return self.source().agrees(self.range())

    def to_json(self) -> dict:
        return {
            "support": {str(t): self.entries[t].to_json() for t in shortlex(self.support)},
            "units": {str(t): self.entries[t].x for t in shortlex(self.entries) if self.entries[t].is_unit},
            "gamma": str(self.gamma),
            "depth": self.depth,
        }

    @classmethod
    def from_json(cls, data: dict, group, n: int) -> SupportedArrow:
        entries = {group.parse(t): SftArrow.from_json(a, n) for t, a in data.get("support", {}).items()}
        for t, w in data.get("units", {}).items():
            entries[group.parse(t)] = SftArrow(w, w, n)
        return cls(entries, group.parse(data["gamma"]), n, int(data["depth"]))


def twist_action(gamma: GroupElement, f: SupportedArrow) -> SupportedArrow:
    return f.twist(gamma)


def twisted_algebra(p: SupportedArrow, q: SupportedArrow | None, op: str, cap: frozenset | None = None):
    """Dispatch ``compose``, ``inverse``, ``source`` or ``range``."""
    if op == "compose":
        if q is None:
            raise InvalidInput("compose needs two arrows")
        return p.compose(q, cap)
    if op in ("inverse", "source", "range"):
        return getattr(p, op)()
    raise InvalidInput(f"unknown twisted operation {op!r}")


@dataclass(frozen=True)
class BasisSet:
    """``O(B_1, ..., B_k; t_1, ..., t_k) x {gamma}``.

    A constraint is either a prefix bisection of E_n or a clopen set of units.
    Coordinates without a constraint must carry units.
    """

    constraints: Mapping[GroupElement, PrefixBisection | ClopenSet]
    gamma: GroupElement
    n: int

    def __post_init__(self):
        cons = _FrozenDict(self.constraints)
        for t, c in cons.items():
            if not isinstance(c, (PrefixBisection, ClopenSet)):
                raise InvalidInput(f"constraint at {t} must be a PrefixBisection or ClopenSet")
            if c.n != self.n:
                raise InvalidInput(f"constraint at {t} uses alphabet {c.n}, expected {self.n}")
        object.__setattr__(self, "constraints", cons)

    def contains(self, p: SupportedArrow) -> bool:
        if p.gamma != self.gamma:
            return False
        missing = set(self.constraints) - p.window
        if missing:
            raise InvalidInput(f"arrow window does not cover constrained indices {shortlex(missing)}")
        for t, a in p.entries.items():
            c = self.constraints.get(t)
            if c is None:
                if not a.is_unit:
                    return False
            elif isinstance(c, PrefixBisection):
                if not c.contains(a):
                    return False
            elif not (a.is_unit and c.contains(a.x)):
                return False
        return True

    def to_json(self) -> dict:
        return {
            "constraints": {str(t): self.constraints[t].to_json() for t in shortlex(self.constraints)},
            "gamma": str(self.gamma),
        }


def basis_source_range(S: BasisSet, which: str) -> ProductCylinder:
    """Image of a bisection basis set under ``s`` or ``r``, as a product cylinder of units."""
    if which not in ("source", "range"):
        raise InvalidInput(f"which must be 'source' or 'range', got {which!r}")
    for t, c in S.constraints.items():
        if not isinstance(c, PrefixBisection):
            raise InvalidInput(f"constraint at {t} is not a bisection")
    if which == "range":
        return ProductCylinder({t: c.v for t, c in S.constraints.items()}, S.n)
    g_inv = S.gamma.inverse()
    image: dict = {}
    for t, c in S.constraints.items():
        s = g_inv * t
        if s in image:  # cannot happen for a free action; kept as a loud guard
            raise InvalidInput(f"source coordinates collide at {s}")
        image[s] = c.u
    return ProductCylinder(image, S.n)


def enumerate_basis_sets(group, n: int, depth: int, window_radius: int, twist_radius: int, max_constraints: int):
    """Bisection basis sets in the order the invariance sweep visits them.

    Constraint index sets are unordered subsets of ``ball(window_radius)``;
    per index only sigma_{u,v} with ``u <= v`` (inverse symmetry).  With
    ``max_constraints == 0`` only the unconstrained sets are produced.
    """
    indices = shortlex(ball(group, window_radius))
    gammas = shortlex(ball(group, twist_radius))
    bis = list(all_bisections(n, depth, 1, reduce_inverse=True))
    sizes = range(1, max_constraints + 1) if max_constraints > 0 else [0]
    for j in sizes:
        for combo in combinations(indices, j):
            for gamma in gammas:
                for choice in _product_indices(len(bis), j):
                    yield BasisSet({t: bis[i] for t, i in zip(combo, choice)}, gamma, n)


def _product_indices(m, j):
    if j == 0:
        yield ()
        return
    idx = [0] * j
    while True:
        yield tuple(idx)
        pos = j - 1
        while pos >= 0 and idx[pos] == m - 1:
            idx[pos] = 0
            pos -= 1
        if pos < 0:
            return
        idx[pos] += 1


def invariance_count(group, n: int, depth: int, window_radius: int, twist_radius: int, max_constraints: int) -> int:
    """Closed-form size of the enumeration in :func:`enumerate_basis_sets`."""
    n_idx = len(ball(group, window_radius))
    n_g = len(ball(group, twist_radius))
    n_bis = sum((n**L) * (n**L + 1) // 2 for L in range(1, depth + 1))
    sizes = range(1, max_constraints + 1) if max_constraints > 0 else [0]
    return sum(comb(n_idx, j) * n_bis**j * n_g for j in sizes)


def measure_invariance_check(group, n: int, depth: int, window_radius: int, twist_radius: int,
                             max_constraints: int, engine: str = "kernel") -> Certificate:
    """Product-measure invariance ``mu_T(s(S)) == mu_T(r(S))`` over every enumerated basis set.

    ``engine="objects"`` builds each :class:`BasisSet` and evaluates exact
    rational masses; ``engine="kernel"`` runs the same enumeration on integer
    exponent codes.  Violations are reported, never raised.
    """
    check_alphabet(n)
    if depth < 1 or window_radius < 0 or twist_radius < 0 or max_constraints < 0:
        raise InvalidInput("bounds must be non-negative (depth >= 1)")
    params = {"group": group.name, "n": n, "depth": depth, "window_radius": window_radius,
              "twist_radius": twist_radius, "max_constraints": max_constraints, "engine": engine}
    if engine == "objects":
        count, violations, first, values = 0, 0, None, set()
        for S in enumerate_basis_sets(group, n, depth, window_radius, twist_radius, max_constraints):
            count += 1
            ms = product_measure(basis_source_range(S, "source"))
            mr = product_measure(basis_source_range(S, "range"))
            values.add(ms)
            if ms != mr:
                violations += 1
                first = first or S
        lo, hi = min(values), max(values)
    elif engine == "kernel":
        count, violations, first, lo, hi = _invariance_by_kernel(group, n, depth, window_radius,
                                                                 twist_radius, max_constraints)
    else:
        raise InvalidInput(f"unknown engine {engine!r}")
    return Certificate(
        "product_measure_invariance",
        params,
        "fail" if violations else "pass",
        {"first_violation": first},
        {"checked": count, "violations": violations, "min_mass": lo, "max_mass": hi,
         "expected_count": invariance_count(group, n, depth, window_radius, twist_radius, max_constraints)},
    )


def _invariance_by_kernel(group, n, depth, window_radius, twist_radius, max_constraints):
    indices = shortlex(ball(group, window_radius))
    gammas = shortlex(ball(group, twist_radius))
    universe = shortlex(ball(group, window_radius + twist_radius))
    uid = {g: i for i, g in enumerate(universe)}
    pos = {t: i for i, t in enumerate(indices)}
    trans = np.array([[uid[g.inverse() * t] for t in indices] for g in gammas], dtype=np.int64)
    bis = list(all_bisections(n, depth, 1, reduce_inverse=True))
    len_u = np.array([len(b.u) for b in bis], dtype=np.int64)
    len_v = np.array([len(b.v) for b in bis], dtype=np.int64)
    sizes = range(1, max_constraints + 1) if max_constraints > 0 else [0]
    count = violations = 0
    first = None
    lo_exp, hi_exp = None, None
    for j in sizes:
        rows = [[pos[t] for t in c] for c in combinations(indices, j)]
        combos = np.array(rows, dtype=np.int64).reshape(len(rows), j)
        c, v, fv, lo, hi = _kernels.invariance_sweep(trans, combos, len_u, len_v)
        count += c
        violations += v
        if v and first is None:
            combo = [indices[i] for i in combos[fv[0]]]
            first = BasisSet({t: bis[b] for t, b in zip(combo, fv[2:])}, gammas[fv[1]], n)
        lo_exp = lo if lo_exp is None else min(lo_exp, lo)
        hi_exp = hi if hi_exp is None else max(hi_exp, hi)
    # masses are n^-exponent: the largest exponent is the smallest mass
    return count, violations, first, Fraction(1, n**hi_exp), Fraction(1, n**lo_exp)


def minimality_witness(x: UnitPoint, target: ProductCylinder, gamma: GroupElement) -> SupportedArrow:
    """An arrow ``(f, gamma)`` with source extending ``x`` and range inside ``target``.

    Each constrained coordinate gets the prefix swap from the current prefix of
    the point to the target prefix; everything else is a unit.
    """
    d = x.depth
    if target.n != x.n:
        raise InvalidInput("alphabet mismatch between point and target")
    for t, w in target.assignment.items():
        if len(w) > d:
            raise DepthInsufficient(f"target word {w!r} at {t} is deeper than the point (depth {d})")
    points = {gamma * t: w for t, w in x.coords.items()}  # s(f)(t) = x(gamma^-1 t)
    for t, w in target.assignment.items():
        points.setdefault(t, (w + "0" * d)[:d])
    entries = {}
    for t, p in points.items():
        w = target.assignment.get(t)
        if w is None or p.startswith(w):
            entries[t] = SftArrow(p, p, x.n)
        else:
            entries[t] = apply_bisection(PrefixBisection(p[:len(w)], w, x.n), p)
    return SupportedArrow(entries, gamma, x.n, d)


def verify_minimality_witness(p: SupportedArrow, x: UnitPoint, target: ProductCylinder,
                              gamma: GroupElement) -> bool:
    """Independent re-evaluation: source restricted to ``x``'s window is ``x``, range lies in ``target``."""
    src = p.twist(p.gamma.inverse()).entries  # keys gamma^-1 t, independent of UnitPoint plumbing
    source_ok = all(t in src and src[t].x == w for t, w in x.coords.items())
    rng = {t: a.y for t, a in p.entries.items()}
    range_ok = all(t in rng and rng[t].startswith(w) for t, w in target.assignment.items())
    return p.gamma == gamma and source_ok and range_ok


def effectiveness_witness(p: SupportedArrow, neighborhood: BasisSet) -> SupportedArrow:
    """Perturb one coordinate of ``p`` inside ``neighborhood`` so that source != range.

    Picks the shortlex-first ``t0`` in the window with ``gamma t0 != t0`` and
    ``gamma t0`` also in the window, then the lexicographically first
    admissible replacement arrow at ``t0``.
    """
    gamma = p.gamma
    if gamma.is_identity:
        raise InvalidInput("effectiveness witness needs a nontrivial twist")
    if not neighborhood.contains(p):
        raise InvalidInput("the arrow is not in the given neighborhood")
    window = p.window
    candidates = [t for t in shortlex(window) if gamma * t != t and gamma * t in window]
    if not candidates:
        raise InvalidInput("window too small: no index t0 with gamma t0 != t0 inside it")
    t0 = candidates[0]
    forbidden = p.entries[gamma * t0].x  # s(p~)(t0) = s(f)(gamma t0), untouched by the change
    d = p.depth
    constraint = neighborhood.constraints.get(t0)
    g0 = None
    if isinstance(constraint, PrefixBisection):
        m = constraint.length
        for tail in words(d - m, p.n):
            if constraint.v + tail != forbidden:
                g0 = SftArrow(constraint.v + tail, constraint.u + tail, p.n)
                break
    else:
        for q in words(d, p.n):
            if q != forbidden and (constraint is None or constraint.contains(q)):
                g0 = SftArrow(q, q, p.n)
                break
    if g0 is None:
        raise DepthInsufficient(f"no alternative arrow at {t0} at depth {d}")
    entries = dict(p.entries)
    entries[t0] = g0
    return SupportedArrow(entries, gamma, p.n, d)


def verify_effectiveness_witness(p: SupportedArrow, q: SupportedArrow, neighborhood: BasisSet) -> bool:
    """Recompute both endpoint maps coordinatewise and compare against ``p``."""
    if q.gamma != p.gamma or not neighborhood.contains(q):
        return False
    changed = [t for t in p.entries if p.entries[t] != q.entries.get(t)]
    if len(changed) > 1 or set(q.entries) != set(p.entries):
        return False
    g = q.gamma
    differs = any(
        g * t in q.entries and q.entries[g * t].x != q.entries[t].y for t in q.entries
    )  # s(q)(t) = s(f)(g t) versus r(q)(t) = r(f)(t)
    return differs


def diagonal_measure(t: GroupElement, t_prime: GroupElement, depth: int, n: int) -> Fraction:
    """Mass of ``{x : x(t), x(t') share their depth-``depth`` prefix}`` under the product measure."""
    if t == t_prime:
        raise InvalidInput("diagonal needs two distinct indices")
    if depth < 1:
        raise InvalidInput("depth must be >= 1")
    check_alphabet(n)
    return sum((product_measure(ProductCylinder({t: w, t_prime: w}, n)) for w in words(depth, n)), Fraction(0))


def random_point(rng: np.random.Generator, window, n: int, depth: int) -> UnitPoint:
    return UnitPoint({t: "".join(str(int(s)) for s in rng.integers(0, n, depth)) for t in shortlex(window)}, n)


def random_minimality_instance(rng: np.random.Generator, trunc: Truncation):
    """A random point on the window, random target cylinder and random twist."""
    x = random_point(rng, trunc.window, trunc.n, trunc.depth)
    indices = shortlex(trunc.window)
    twists = shortlex(trunc.twists)
    gamma = twists[int(rng.integers(len(twists)))]
    k = int(rng.integers(1, min(3, len(indices)) + 1))
    chosen = rng.choice(len(indices), size=k, replace=False)
    target = {}
    for i in sorted(int(c) for c in chosen):
        length = int(rng.integers(1, trunc.depth + 1))
        target[indices[i]] = "".join(str(int(s)) for s in rng.integers(0, trunc.n, length))
    return x, ProductCylinder(target, trunc.n), gamma


def random_effectiveness_instance(rng: np.random.Generator, trunc: Truncation):
    """A random arrow with nontrivial twist on the window, plus a basis set containing it.

    Constraints leave at least one free symbol so an alternative always exists.
    """
    indices = shortlex(trunc.window)
    twists = [g for g in shortlex(trunc.twists) if not g.is_identity]
    gamma = twists[int(rng.integers(len(twists)))]
    d, n = trunc.depth, trunc.n
    entries, constraints = {}, {}
    for t in indices:
        x = "".join(str(int(s)) for s in rng.integers(0, n, d))
        kind = int(rng.integers(3))
        if kind == 0:
            entries[t] = SftArrow(x, x, n)
        elif kind == 1:
            m = int(rng.integers(1, d)) if d > 1 else 0
            if m:
                v = "".join(str(int(s)) for s in rng.integers(0, n, m))
                sigma = PrefixBisection(x[:m], v, n)
                entries[t] = apply_bisection(sigma, x)
                constraints[t] = sigma
            else:
                entries[t] = SftArrow(x, x, n)
        else:
            entries[t] = SftArrow(x, x, n)
            m = int(rng.integers(0, d))
            constraints[t] = ClopenSet.cylinder(x[:m], n)
    p = SupportedArrow(entries, gamma, n, d)
    return p, BasisSet(constraints, gamma, n)
