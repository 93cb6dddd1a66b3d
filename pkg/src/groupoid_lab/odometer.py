"""Odometers of residually finite groups through explicit chains of finite quotients.

Level ``i`` is the left action of the group on the cosets ``G / G_i``, given
by one permutation per generator of the points ``0..N_i - 1``; point 0 is the
trivial coset.  A word acts letter by letter from the right, so
``(g h) . p = g . (h . p)``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .certificate import Certificate
from .errors import ChainError, InvalidInput
from .group_words import FreeGroup, GroupElement, IntegerGroup

MAX_LEVELS = 5
MAX_ORDER = 120


@dataclass(frozen=True)
class QuotientLevel:
    """Generator permutations on the coset space of one level."""

    perms: tuple  # perms[k] is the image table of generator k + 1
    order: int

    def apply_letter(self, letter: int, p: int) -> int:
        table = self.perms[abs(letter) - 1]
        if letter > 0:
            return table[p]
        return self.inverse_tables()[abs(letter) - 1][p]

    def inverse_tables(self):
        cached = self.__dict__.get("_inv")
        if cached is None:
            cached = []
            for table in self.perms:
                inv = [0] * len(table)
                for p, q in enumerate(table):
                    inv[q] = p
                cached.append(tuple(inv))
            object.__setattr__(self, "_inv", tuple(cached))
        return cached

    def multiplication_table(self, transversal) -> list[list[int]]:
        """``table[p][q]`` is the coset of ``w_p w_q`` (the quotient group law)."""
        return [[apply_word_at_level(self, w, q) for q in range(self.order)] for w in transversal]


def _letters(group, gamma: GroupElement) -> tuple:
    if isinstance(group, IntegerGroup):
        v = gamma.value
        return (1,) * v if v >= 0 else (-1,) * (-v)
    return gamma.value


def apply_word_at_level(level: QuotientLevel, letters: Sequence[int], p: int) -> int:
    for letter in reversed(letters):
        p = level.apply_letter(letter, p)
    return p


@dataclass(frozen=True)
class QuotientChain:
    group: object
    levels: tuple
    connecting: tuple  # connecting[i] maps level i+1 points to level i points
    transversals: tuple  # transversals[i][p]: a word (letter tuple) carrying 0 to p

    @property
    def orders(self) -> list[int]:
        return [lv.order for lv in self.levels]

    def act_at(self, gamma: GroupElement, level: int, p: int) -> int:
        lv = self.levels[level]
        if isinstance(self.group, IntegerGroup):
            # the generator's order divides N, so reduce the exponent first
            v = gamma.value % lv.order
            for _ in range(v):
                p = lv.perms[0][p]
            return p
        return apply_word_at_level(lv, _letters(self.group, gamma), p)

    def word(self, letters) -> GroupElement:
        if isinstance(self.group, IntegerGroup):
            return self.group.element(sum(letters))
        return self.group.element(letters)


def _check_perm_table(table, size, where):
    if len(table) != size or sorted(table) != list(range(size)):
        raise ChainError(f"{where}: image table is not a permutation of 0..{size - 1}", list(table))


def _transversal(level: QuotientLevel, rank: int, base: int = 0) -> dict:
    """BFS words carrying ``base`` to each reachable point."""
    words = {base: ()}
    queue = deque([base])
    letters = [s * k for k in range(1, rank + 1) for s in (1, -1)]
    while queue:
        p = queue.popleft()
        for letter in letters:
            q = level.apply_letter(letter, p)
            if q not in words:
                words[q] = (letter,) + words[p]
                queue.append(q)
    return words


def _schreier_generators(level: QuotientLevel, carry: dict, rank: int) -> tuple:
    """Words ``w_q^-1 k w_p`` (``q = k p``) generating the stabilizer of the transversal's base."""
    gens = set()
    for p, w_p in carry.items():
        for k in range(1, rank + 1):
            q = level.apply_letter(k, p)
            h = _free_reduce(tuple(-x for x in reversed(carry[q])) + (k,) + w_p)
            if h:
                gens.add(h)
    return tuple(sorted(gens, key=lambda w: (len(w), w)))


def _free_reduce(letters):
    out: list = []
    for x in letters:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def _rank(group) -> int:
    if isinstance(group, IntegerGroup):
        return 1
    if isinstance(group, FreeGroup):
        return group.rank
    raise InvalidInput(f"unsupported group {group!r}")


def regular_level(images: Sequence[Sequence[int]]) -> QuotientLevel:
    """Left-regular action of the permutation group generated by ``images``.

    ``images[k]`` is the permutation (as an image list) assigned to generator
    ``k + 1``.  Group elements are enumerated breadth-first from the identity,
    which becomes point 0.
    """
    images = [tuple(int(x) for x in im) for im in images]
    if not images:
        raise InvalidInput("need at least one generator image")
    size = len(images[0])
    for im in images:
        if len(im) != size:
            raise InvalidInput("generator images must act on the same set")
        _check_perm_table(im, size, "generator image")
    compose = lambda g, h: tuple(g[h[i]] for i in range(size))
    identity = tuple(range(size))
    index = {identity: 0}
    elems = [identity]
    queue = deque([identity])
    while queue:
        h = queue.popleft()
        for g in images:
            for x in (g, _inverse_perm(g)):
                gh = compose(x, h)
                if gh not in index:
                    if len(elems) >= MAX_ORDER:
                        raise InvalidInput(f"quotient order exceeds the cap {MAX_ORDER}")
                    index[gh] = len(elems)
                    elems.append(gh)
                    queue.append(gh)
    perms = tuple(tuple(index[compose(g, h)] for h in elems) for g in images)
    return QuotientLevel(perms, len(elems))


def _inverse_perm(g):
    inv = [0] * len(g)
    for i, x in enumerate(g):
        inv[x] = i
    return tuple(inv)


def cyclic_level(m: int) -> QuotientLevel:
    if m < 1:
        raise InvalidInput("modulus must be >= 1")
    if m > MAX_ORDER:
        raise InvalidInput(f"quotient order exceeds the cap {MAX_ORDER}")
    return QuotientLevel((tuple((p + 1) % m for p in range(m)),), m)


def build_chain(group, levels: Sequence[QuotientLevel]) -> QuotientChain:
    """Validate a chain of coset actions and derive the connecting maps.

    Checks per level: permutation tables, transitivity, normality of the
    point stabilizer.  Between levels: an equivariant surjection exists and
    the order strictly grows.  Failures raise :class:`ChainError` carrying a
    separating word.
    """
    rank = _rank(group)
    levels = tuple(levels)
    if not levels:
        raise InvalidInput("a chain needs at least one level")
    if len(levels) > MAX_LEVELS:
        raise InvalidInput(f"at most {MAX_LEVELS} levels")
    transversals = []
    for i, lv in enumerate(levels):
        if lv.order > MAX_ORDER:
            raise InvalidInput(f"level {i + 1}: order {lv.order} exceeds the cap {MAX_ORDER}")
        if len(lv.perms) != rank:
            raise ChainError(f"level {i + 1}: expected {rank} generator tables, got {len(lv.perms)}")
        for k, table in enumerate(lv.perms):
            _check_perm_table(table, lv.order, f"level {i + 1}, generator {k + 1}")
        tr = _transversal(lv, rank)
        if len(tr) != lv.order:
            missing = min(set(range(lv.order)) - set(tr))
            raise ChainError(f"level {i + 1}: generators do not reach point {missing}", missing)
        for h in _schreier_generators(lv, tr, rank):
            for p in range(lv.order):
                if apply_word_at_level(lv, h, p) != p:
                    # h fixes 0 but w_p^-1 h w_p does not: the stabilizer is not normal
                    w = _free_reduce(tuple(-x for x in reversed(tr[p])) + h + tr[p])
                    raise ChainError(f"level {i + 1}: stabilizer of the base coset is not normal",
                                     _show(group, w))
        transversals.append(tuple(tr[p] for p in range(lv.order)))
    connecting = []
    for i in range(len(levels) - 1):
        lo, hi = levels[i], levels[i + 1]
        if hi.order <= lo.order:
            raise ChainError(f"level orders must strictly increase: {lo.order} then {hi.order}",
                             [lo.order, hi.order])
        phi = _equivariant_map(group, hi, lo, transversals[i + 1], rank, i)
        connecting.append(tuple(phi))
    return QuotientChain(group, levels, tuple(connecting), tuple(transversals))


def _show(group, letters):
    if isinstance(group, IntegerGroup):
        return str(sum(letters))
    return str(group.element(letters))


def _equivariant_map(group, hi, lo, tr_hi, rank, i):
    phi = {}
    for p, w in enumerate(tr_hi):
        phi[p] = apply_word_at_level(lo, w, 0)
    for p in range(hi.order):
        for k in range(1, rank + 1):
            q = hi.apply_letter(k, p)
            if lo.apply_letter(k, phi[p]) != phi[q]:
                # w_q^-1 k w_p fixes the base coset above but moves it below
                w = _free_reduce(tuple(-x for x in reversed(tr_hi[q])) + (k,) + tr_hi[p])
                raise ChainError(f"no connecting map from level {i + 2} onto level {i + 1}: "
                                 f"word {_show(group, w)} lies in the deeper kernel only", _show(group, w))
    return [phi[p] for p in range(hi.order)]


def cyclic_chain(moduli: Sequence[int]) -> QuotientChain:
    """``Z / m_1 <- Z / m_2 <- ...``; requires ``m_i | m_{i+1}``."""
    return build_chain(IntegerGroup(), [cyclic_level(int(m)) for m in moduli])


def dyadic_chain(levels: int = 4) -> QuotientChain:
    return cyclic_chain([2**i for i in range(1, levels + 1)])


# generator images for a C2 <- S3 <- S4 <- S4 x C2 chain of F2
F2_CHAIN_IMAGES = (
    ((1, 0), (1, 0)),
    ((0, 2, 1), (2, 1, 0)),
    ((1, 0, 2, 3), (1, 2, 3, 0)),
    ((1, 0, 2, 3, 5, 4), (1, 2, 3, 0, 4, 5)),
)


def free_chain(images=F2_CHAIN_IMAGES, rank: int = 2) -> QuotientChain:
    return build_chain(FreeGroup(rank), [regular_level(im) for im in images])


@dataclass(frozen=True)
class OdometerPoint:
    """Compatible cosets ``(p_1, ..., p_L)``, one per level."""

    cosets: tuple

    def truncate(self, level: int) -> OdometerPoint:
        return OdometerPoint(self.cosets[:level])


def make_point(chain: QuotientChain, top: int) -> OdometerPoint:
    """The point whose deepest coordinate is ``top``; lower ones follow by the connecting maps."""
    L = len(chain.levels)
    if not 0 <= top < chain.levels[-1].order:
        raise InvalidInput(f"coset {top} out of range")
    cosets = [top]
    for i in range(L - 2, -1, -1):
        cosets.append(chain.connecting[i][cosets[-1]])
    return OdometerPoint(tuple(reversed(cosets)))


def is_compatible(chain: QuotientChain, x: OdometerPoint) -> bool:
    return all(chain.connecting[i][x.cosets[i + 1]] == x.cosets[i] for i in range(len(x.cosets) - 1))


def act(chain: QuotientChain, gamma: GroupElement, x: OdometerPoint) -> OdometerPoint:
    if gamma.group != chain.group:
        raise InvalidInput("group mismatch")
    if len(x.cosets) > len(chain.levels):
        raise InvalidInput("point has more levels than the chain")
    return OdometerPoint(tuple(chain.act_at(gamma, i, p) for i, p in enumerate(x.cosets)))


@dataclass(frozen=True)
class Subgroup:
    """Finite-index subgroup: the stabilizer of ``base`` at ``level``."""

    chain: QuotientChain
    level: int
    base: int
    generators: tuple

    @property
    def index(self) -> int:
        return self.chain.levels[self.level].order

    def contains(self, gamma: GroupElement) -> bool:
        return self.chain.act_at(gamma, self.level, self.base) == self.base

    def issubset(self, other: Subgroup) -> bool:
        return all(other.contains(self.chain.word(w)) for w in self.generators)

    def __eq__(self, other):
        return isinstance(other, Subgroup) and self.issubset(other) and other.issubset(self)

    __hash__ = None

    def to_json(self) -> dict:
        return {"level": self.level + 1, "index": self.index,
                "generators": [_show(self.chain.group, w) for w in self.generators]}


def kernel(chain: QuotientChain, level: int) -> Subgroup:
    """``G_i``: the stabilizer of the base coset."""
    return stabilizer_level(chain, OdometerPoint((0,) * (level + 1)), level)


def stabilizer_level(chain: QuotientChain, x: OdometerPoint, level: int) -> Subgroup:
    """Stabilizer of the level-``level`` coordinate of ``x`` (0-based level), with Schreier generators."""
    if not 0 <= level < min(len(chain.levels), len(x.cosets)):
        raise InvalidInput(f"level {level} outside the chain")
    lv = chain.levels[level]
    base = x.cosets[level]
    gens = _schreier_generators(lv, _transversal(lv, _rank(chain.group), base), _rank(chain.group))
    return Subgroup(chain, level, base, gens)


def intersection_index(chain: QuotientChain, upto: int) -> int:
    """Index of ``G_1 cap ... cap G_upto``: the orbit size of the base point in the product action."""
    rank = _rank(chain.group)
    levels = chain.levels[:upto]
    start = (0,) * len(levels)
    seen = {start}
    queue = deque([start])
    while queue:
        pt = queue.popleft()
        for letter in [s * k for k in range(1, rank + 1) for s in (1, -1)]:
            nxt = tuple(lv.apply_letter(letter, p) for lv, p in zip(levels, pt))
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return len(seen)


class UniformLevelMeasure:
    """Uniform probability on the cosets of one level; sets are collections of cosets."""

    def __init__(self, chain: QuotientChain, level: int):
        self.order = chain.levels[level].order
        self.level = level

    def measure(self, S) -> Fraction:
        S = set(S)
        if not all(isinstance(p, int) and 0 <= p < self.order for p in S):
            raise InvalidInput("cosets out of range")
        return Fraction(len(S), self.order)


def uniform_invariance_check(chain: QuotientChain, level: int) -> Certificate:
    """Every generator translation must preserve the uniform measure on the level.

    On a finite set that means each table is a bijection; the check counts
    preimages of every point and compares masses exactly.
    """
    if not 0 <= level < len(chain.levels):
        raise InvalidInput(f"level {level} outside the chain")
    lv = chain.levels[level]
    N = lv.order
    bad = []
    tables = {}
    for k, table in enumerate(lv.perms, start=1):
        counts = [0] * N
        for q in table:
            if not 0 <= q < N:
                bad.append({"generator": k, "point": q, "reason": "image out of range"})
                continue
            counts[q] += 1
        for p, c in enumerate(counts):
            if Fraction(c, N) != Fraction(1, N):
                bad.append({"generator": k, "point": p, "preimage_mass": Fraction(c, N)})
        tables[_show(chain.group, (k,))] = list(table)
    return Certificate(
        "odometer_uniform_invariance",
        {"group": chain.group.name, "level": level + 1, "order": N},
        "fail" if bad else "pass",
        {"violations": bad[:10], "tables": tables},
        {"violation_count": len(bad), "point_mass": Fraction(1, N)},
    )
