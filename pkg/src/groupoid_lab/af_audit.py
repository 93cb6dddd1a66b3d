"""Boundary counting for fibers of elementary subgroupoids of the twisted groupoid.

A fiber is a finite set of arrows sharing one source point ``x``.  The test
set ``C`` is the set of unit-valued arrows ``(b . r, b)`` for ``b`` in a
finite ``B``; ``C F`` is computed by actual composition, and compared with
the orbit-class count ``sum |B K_i - K_i| / sum |K_i|``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from ._workers import parallel_map
from .cantor_algebra import check_alphabet
from .certificate import Certificate
from .errors import InvalidInput
from .group_words import GroupElement, IntegerGroup, ball, left_translate, shortlex
from .sft_groupoid import SftArrow, elementary_fiber, tail_class
from .twisted_groupoid import SupportedArrow, UnitPoint, default_cap, random_point


def arrow_key(p: SupportedArrow):
    """Identity of an arrow inside a fiber (units there are fixed by the common source)."""
    return p.fiber_key()


@dataclass(frozen=True)
class Fiber:
    base: UnitPoint
    arrows: tuple
    label: str = ""

    def __post_init__(self):
        unique = {}
        for p in self.arrows:
            if not p.source().agrees(self.base):
                raise InvalidInput(f"arrow {p.to_json()} does not start at the base point")
            unique.setdefault(arrow_key(p), p)
        if not unique:
            raise InvalidInput("a fiber must be nonempty")
        if not any(p.is_unit() for p in unique.values()):
            raise InvalidInput("a fiber must contain the unit arrow at its base point")
        ordered = tuple(unique[k] for k in sorted(unique, key=_key_order))
        object.__setattr__(self, "arrows", ordered)

    @property
    def group(self):
        return self.arrows[0].group

    def __len__(self):
        return len(self.arrows)

    def keys(self) -> frozenset:
        return frozenset(arrow_key(p) for p in self.arrows)


def _key_order(key):
    gamma, support = key
    return (gamma.sort_key(), sorted((t.sort_key(), a.y, a.x) for t, a in support))


@dataclass(frozen=True)
class TestSet:
    """``C = (unit space) x B``; only ``B`` needs storing."""

    __test__ = False  # keep pytest from collecting this class

    B: frozenset

    def __post_init__(self):
        object.__setattr__(self, "B", frozenset(self.B))
        if not self.B:
            raise InvalidInput("B must be nonempty")

    def element_at(self, b: GroupElement, point: UnitPoint) -> SupportedArrow:
        """The element of ``C`` with twist ``b`` composable on the left with range ``point``."""
        return point.translate(b).units(b)


def orbit_partition(F: Fiber) -> list[tuple[frozenset, list[SupportedArrow]]]:
    """Classes of ``F`` under ``(k, g) ~ (g1 . k, g1 g)`` with their labels ``K_i``.

    The class of ``(k, g)`` is named by ``g^-1 . k`` (its support, moved back);
    ``K_i`` collects the twists of the members.  Classes come out in a fixed order.
    """
    classes: dict = {}
    for p in F.arrows:
        g_inv = p.gamma.inverse()
        name = frozenset((g_inv * t, a) for t, a in p.support.items())
        classes.setdefault(name, []).append(p)
    out = []
    for name in sorted(classes, key=lambda s: sorted((t.sort_key(), a.y, a.x) for t, a in s)):
        members = classes[name]
        K = frozenset(p.gamma for p in members)
        if len(K) != len(members):
            raise AssertionError("orbit identification is not injective")
        out.append((K, members))
    return out


def deficiency_direct(B: TestSet, F: Fiber, cap: frozenset | None = None) -> Fraction:
    """``|C F - F| / |F|`` by composing every pair and comparing arrow identities."""
    cap = default_cap(F.group) if cap is None else cap
    produced = set()
    for p in F.arrows:
        for b in B.B:
            c = B.element_at(b, p.range())
            produced.add(arrow_key(c.compose(p, cap)))
    return Fraction(len(produced - F.keys()), len(F))


def deficiency_formula(B: TestSet, F: Fiber) -> Fraction:
    parts = orbit_partition(F)
    boundary = sum(len(left_translate(B.B, K) - K) for K, _ in parts)
    return Fraction(boundary, sum(len(K) for K, _ in parts))


def class_disjointness(B: TestSet, F: Fiber, cap: frozenset | None = None) -> bool:
    """``C K_i`` misses ``K_j`` for every pair of distinct classes."""
    cap = default_cap(F.group) if cap is None else cap
    parts = orbit_partition(F)
    owner = {arrow_key(p): i for i, (_, members) in enumerate(parts) for p in members}
    for i, (_, members) in enumerate(parts):
        for p in members:
            for b in B.B:
                q = arrow_key(B.element_at(b, p.range()).compose(p, cap))
                if owner.get(q, i) != i:
                    return False
    return True


def _audit_one(args):
    idx, B, F, cap = args
    direct = deficiency_direct(B, F, cap)
    formula = deficiency_formula(B, F)
    parts = orbit_partition(F)
    return {
        "id": F.label or f"fiber-{idx}",
        "size": len(F),
        "classes": len(parts),
        "class_sizes": sorted(len(K) for K, _ in parts),
        "deficiency_direct": direct,
        "deficiency_formula": formula,
    }


def af_audit(fibers, B: TestSet, delta: Fraction, scale: dict | None = None,
             cap: frozenset | None = None) -> Certificate:
    """Check direct = formula on every fiber, and deficiency ``>= delta``.

    ``delta`` should come from :func:`group_words.folner_audit` at a scale
    covering the classes the fibers can produce; ``scale`` is recorded as is.
    Over an amenable group the bound is expected to fail for large fibers,
    and the certificate names the offending ones.
    """
    fibers = list(fibers)
    params = {"B": shortlex(B.B), "delta": Fraction(delta), "scale": scale or {}}
    if not fibers:
        return Certificate("not_almost_finite_at_scale", params, "vacuous", None,
                           {"count": 0, "fibers": [], "min_deficiency": None})
    group = fibers[0].group
    params["group"] = group.name
    if any(F.group != group for F in fibers):
        raise InvalidInput("all fibers must live over the same group")
    records = parallel_map(_audit_one, [(i, B, F, cap) for i, F in enumerate(fibers)], chunksize=4)
    records.sort(key=lambda r: r["id"])
    mismatch = [r["id"] for r in records if r["deficiency_direct"] != r["deficiency_formula"]]
    below = [r["id"] for r in records if r["deficiency_direct"] < delta]
    lowest = min(records, key=lambda r: (r["deficiency_direct"], r["id"]))
    return Certificate(
        "not_almost_finite_at_scale",
        params,
        "fail" if mismatch or below else "pass",
        {"formula_mismatch": mismatch, "below_delta": below, "minimiser": lowest["id"]},
        {"count": len(records), "fibers": records, "min_deficiency": lowest["deficiency_direct"]},
    )


# ------------------------------------------------------------ fiber generators

def elementary_product_fiber(x: UnitPoint, k: int, indices) -> Fiber:
    """``O(E_n[k], ..., E_n[k]; t_1..t_j) x {e}`` restricted to source ``x``."""
    indices = shortlex(indices)
    missing = [t for t in indices if t not in x.coords]
    if missing:
        raise InvalidInput(f"base point is not known at {missing}")
    e = next(iter(x.coords)).group.identity()
    choices = [sorted(elementary_fiber(k, x[t], x.n)) for t in indices]
    arrows = []
    for combo in product(*choices):
        entries = {t: SftArrow(w, w, x.n) for t, w in x.coords.items()}
        entries.update(zip(indices, combo))
        arrows.append(SupportedArrow(entries, e, x.n, x.depth))
    return Fiber(x, tuple(arrows), f"E[{k}] at {','.join(map(str, indices))}")


def shift_fiber(x: UnitPoint, m: int) -> Fiber:
    """``{(j . x, j) : 0 <= j < m}`` over Z."""
    Z = next(iter(x.coords)).group
    if not isinstance(Z, IntegerGroup):
        raise InvalidInput("shift fibers are built over Z")
    if m < 1:
        raise InvalidInput("m must be >= 1")
    arrows = tuple(x.translate(Z.element(j)).units(Z.element(j)) for j in range(m))
    return Fiber(x, arrows, f"shift m={m:06d}")


def shift_cap(m: int, window_radius: int, B) -> frozenset:
    """A cap large enough for composing ``B`` with a length-``m`` shift fiber."""
    Z = IntegerGroup()
    reach = max(b.length for b in B)
    return frozenset(Z.element(j) for j in range(-window_radius - reach, m + window_radius + reach))


def random_fiber(rng: np.random.Generator, group, n: int, depth: int, *, class_radius: int = 2,
                 max_class_size: int = 6, max_classes: int = 4, shape_radius: int = 1,
                 base_radius: int = 4, label: str = "") -> Fiber:
    """A seeded fiber made of whole orbit classes.

    Each class is ``{(g . rho, g) : g in K}`` for a random shape ``rho`` with
    source ``x`` supported in ``ball(shape_radius)`` and a random ``K`` inside
    ``ball(class_radius)`` of size at most ``max_class_size``.  The unit class
    always contains ``e``.
    """
    check_alphabet(n)
    x = random_point(rng, ball(group, base_radius), n, depth)
    shape_window = shortlex(ball(group, shape_radius))
    pool = shortlex(ball(group, class_radius))
    e = group.identity()
    shapes = [frozenset()]
    for _ in range(int(rng.integers(0, max_classes))):
        support = {}
        for t in shape_window:
            if rng.random() < 0.4:
                options = sorted(tail_class(x[t], depth + 1, n) - {x[t]})
                support[t] = options[int(rng.integers(len(options)))]
        if support:
            shapes.append(frozenset(support.items()))
    arrows = []
    for i, shape in enumerate(dict.fromkeys(shapes)):
        size = int(rng.integers(1, max_class_size + 1))
        picks = rng.choice(len(pool), size=min(size, len(pool)), replace=False)
        K = {pool[int(j)] for j in picks}
        if i == 0:
            K.add(e)
            while len(K) > max_class_size:
                K.discard(max((g for g in K if g != e), key=GroupElement.sort_key))
        rho_y = dict(shape)
        for g in shortlex(K):
            # (g . rho)(t) = rho(g^-1 t); source of (g . rho, g) is x again
            entries = {}
            for s in shape_window:
                y = rho_y.get(s, x[s])
                entries[g * s] = SftArrow(y, x[s], n)
            arrows.append(SupportedArrow(entries, g, n, depth))
    return Fiber(x, tuple(arrows), label)


def random_fiber_family(seed: int, count: int, group, n: int, depth: int, **kw) -> list[Fiber]:
    children = np.random.SeedSequence(seed).spawn(count)
    return [random_fiber(np.random.default_rng(c), group, n, depth, label=f"random-{i:04d}", **kw)
            for i, c in enumerate(children)]


def random_cap(group, shape_radius: int = 1, class_radius: int = 2, reach: int = 1) -> frozenset:
    return ball(group, shape_radius + class_radius + reach)
