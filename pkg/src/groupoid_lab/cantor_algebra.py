"""Clopen subsets of the full shift {0,...,n-1}^N with exact measures.

Words are digit strings (so the alphabet size is capped at 10).  Position
``i`` of a sequence is the ``i``-th character, counted from 1.  A cylinder
``C_u`` is the set of sequences with prefix ``u``; the empty word gives the
whole space.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Hashable, Iterable, Iterator, Mapping

import numpy as np

from . import _kernels
from .errors import InvalidInput

MAX_ALPHABET = 10


def check_alphabet(n: int) -> int:
    if not isinstance(n, int) or isinstance(n, bool) or not 2 <= n <= MAX_ALPHABET:
        raise InvalidInput(f"alphabet size must be an integer in [2, {MAX_ALPHABET}], got {n!r}")
    return n


def check_word(word: str, n: int) -> str:
    """Return ``word`` unchanged if every symbol lies in ``[0, n-1]``."""
    check_alphabet(n)
    if not isinstance(word, str):
        raise InvalidInput(f"words are digit strings, got {type(word).__name__}")
    for ch in word:
        if not ch.isdigit() or int(ch) >= n:
            raise InvalidInput(f"symbol {ch!r} of {word!r} is outside the alphabet of size {n}")
    return word


def words(length: int, n: int) -> Iterator[str]:
    """All words of the given length in lexicographic order."""
    digits = "0123456789"[:check_alphabet(n)]
    for tup in product(digits, repeat=length):
        yield "".join(tup)


def word_code(word: str, n: int) -> int:
    """Position of ``word`` in the lexicographic list of words of its length."""
    return int(word, n) if word else 0


def code_word(code: int, length: int, n: int) -> str:
    out = []
    for _ in range(length):
        code, r = divmod(code, n)
        out.append(str(r))
    return "".join(reversed(out))


@dataclass(frozen=True)
class Cylinder:
    prefix: str
    n: int

    def __post_init__(self):
        check_word(self.prefix, self.n)

    def measure(self) -> Fraction:
        return cylinder_measure(self.prefix, self.n)

    def contains(self, point: str) -> bool:
        return point.startswith(self.prefix)


def cylinder_measure(c: Cylinder | str, n: int | None = None) -> Fraction:
    """Canonical mass ``n ** -len(prefix)`` of a cylinder."""
    if isinstance(c, Cylinder):
        prefix, n = c.prefix, c.n if n is None else n
    else:
        prefix = c
    if n is None:
        raise InvalidInput("alphabet size required")
    check_word(prefix, n)
    return Fraction(1, n ** len(prefix))


def _normalize(prefixes: Iterable[str], n: int) -> tuple[str, ...]:
    # drop cylinders nested inside shorter ones
    kept: set[str] = set()
    for u in sorted(set(prefixes), key=lambda w: (len(w), w)):
        if not any(u[:i] in kept for i in range(len(u) + 1)):
            kept.add(u)
    # merge complete sibling families, deepest level first
    if kept:
        for length in range(max(map(len, kept)), 0, -1):
            parents = Counter(u[:-1] for u in kept if len(u) == length)
            for p, count in parents.items():
                if count == n:
                    kept.difference_update(p + str(a) for a in range(n))
                    kept.add(p)
    return tuple(sorted(kept))


def _cylinder_minus(u: str, v: str, n: int) -> list[str]:
    if u.startswith(v):
        return []
    if v.startswith(u):
        return [v[:i] + str(a) for i in range(len(u), len(v)) for a in range(n) if str(a) != v[i]]
    return [u]


@dataclass(frozen=True)
class ClopenSet:
    """A finite disjoint union of cylinders kept in canonical normal form.

    The stored ``prefixes`` are exactly the maximal cylinders contained in the
    set, so two instances are equal iff they denote the same subset.
    """

    prefixes: tuple[str, ...]
    n: int

    def __post_init__(self):
        check_alphabet(self.n)
        for u in self.prefixes:
            check_word(u, self.n)
        object.__setattr__(self, "prefixes", _normalize(self.prefixes, self.n))

    @classmethod
    def of(cls, prefixes: Iterable[str], n: int) -> ClopenSet:
        return cls(tuple(prefixes), n)

    @classmethod
    def full(cls, n: int) -> ClopenSet:
        return cls(("",), n)

    @classmethod
    def empty(cls, n: int) -> ClopenSet:
        return cls((), n)

    @classmethod
    def cylinder(cls, prefix: str, n: int) -> ClopenSet:
        return cls((prefix,), n)

    def _same_alphabet(self, other: ClopenSet) -> None:
        if not isinstance(other, ClopenSet):
            raise InvalidInput(f"expected ClopenSet, got {type(other).__name__}")
        if other.n != self.n:
            raise InvalidInput(f"alphabet mismatch: {self.n} vs {other.n}")

    def union(self, other: ClopenSet) -> ClopenSet:
        self._same_alphabet(other)
        return ClopenSet(self.prefixes + other.prefixes, self.n)

    def intersect(self, other: ClopenSet) -> ClopenSet:
        self._same_alphabet(other)
        out = []
        for u in self.prefixes:
            for v in other.prefixes:
                if u.startswith(v):
                    out.append(u)
                elif v.startswith(u):
                    out.append(v)
        return ClopenSet(tuple(out), self.n)

    def difference(self, other: ClopenSet) -> ClopenSet:
        self._same_alphabet(other)
        pieces = list(self.prefixes)
        for v in other.prefixes:
            pieces = [w for u in pieces for w in _cylinder_minus(u, v, self.n)]
        return ClopenSet(tuple(pieces), self.n)

    def complement(self) -> ClopenSet:
        return ClopenSet.full(self.n).difference(self)

    __or__ = union
    __and__ = intersect
    __sub__ = difference
    __invert__ = complement

    def is_empty(self) -> bool:
        return not self.prefixes

    def is_full(self) -> bool:
        return self.prefixes == ("",)

    def issubset(self, other: ClopenSet) -> bool:
        return self.difference(other).is_empty()

    def contains(self, point: str) -> bool:
        """Membership of a (truncated) point; the point must be at least as deep as the set."""
        if len(point) < self.depth:
            raise InvalidInput(f"point {point!r} is shallower than the set (depth {self.depth})")
        return any(point.startswith(u) for u in self.prefixes)

    @property
    def depth(self) -> int:
        return max((len(u) for u in self.prefixes), default=0)

    def measure(self) -> Fraction:
        return sum((cylinder_measure(u, self.n) for u in self.prefixes), Fraction(0))

    def indicator(self, depth: int) -> np.ndarray:
        """Boolean vector over all depth-``depth`` words (lexicographic order)."""
        if depth < self.depth:
            raise InvalidInput(f"indicator depth {depth} below set depth {self.depth}")
        starts = np.array(
            [word_code(u, self.n) * self.n ** (depth - len(u)) for u in self.prefixes], dtype=np.int64
        )
        spans = np.array([self.n ** (depth - len(u)) for u in self.prefixes], dtype=np.int64)
        return _kernels.cylinder_indicator(starts, spans, self.n**depth)

    def to_json(self) -> list[str]:
        return list(self.prefixes)


def boolean_algebra(a: ClopenSet, b: ClopenSet | None, op: str) -> ClopenSet:
    """Dispatch ``union``, ``intersect``, ``difference`` or ``complement`` (``b`` ignored)."""
    if op == "complement":
        return a.complement()
    if b is None:
        raise InvalidInput(f"{op} needs two operands")
    try:
        method = {"union": a.union, "intersect": a.intersect, "difference": a.difference}[op]
    except KeyError:
        raise InvalidInput(f"unknown boolean operation {op!r}") from None
    return method(b)


def clopen_measure(a: ClopenSet) -> Fraction:
    return a.measure()


@dataclass(frozen=True)
class ProductCylinder:
    """Constraint ``x(t) in C_{u_t}`` for finitely many indices ``t``.

    Coordinates outside ``assignment`` are unconstrained.  ``window`` is the
    index set the cylinder is considered over; it always contains the keys.
    """

    assignment: Mapping[Hashable, str]
    n: int
    window: frozenset = field(default=frozenset())

    def __post_init__(self):
        check_alphabet(self.n)
        items = dict(self.assignment)
        for w in items.values():
            check_word(w, self.n)
        object.__setattr__(self, "assignment", _FrozenDict(items))
        object.__setattr__(self, "window", frozenset(self.window) | frozenset(items))

    def measure(self) -> Fraction:
        return product_measure(self)

    def intersect(self, other: ProductCylinder) -> ProductCylinder | None:
        """Coordinatewise intersection, or ``None`` when empty."""
        if other.n != self.n:
            raise InvalidInput(f"alphabet mismatch: {self.n} vs {other.n}")
        merged = dict(self.assignment)
        for t, v in other.assignment.items():
            u = merged.get(t)
            if u is None or v.startswith(u):
                merged[t] = v
            elif not u.startswith(v):
                return None
        return ProductCylinder(merged, self.n, self.window | other.window)

    def contains(self, point: Mapping[Hashable, str]) -> bool:
        for t, u in self.assignment.items():
            if t not in point:
                raise InvalidInput(f"point does not constrain index {t}")
            if len(point[t]) < len(u):
                raise InvalidInput(f"point coordinate at {t} is shallower than the constraint")
            if not point[t].startswith(u):
                return False
        return True

    def relabel(self, fn) -> ProductCylinder:
        return ProductCylinder({fn(t): u for t, u in self.assignment.items()}, self.n,
                               frozenset(fn(t) for t in self.window))

    def to_json(self) -> dict[str, str]:
        return {str(t): u for t, u in sorted(self.assignment.items(), key=lambda kv: _index_key(kv[0]))}


def product_measure(p: ProductCylinder, n: int | None = None) -> Fraction:
    """Product of cylinder masses over assigned coordinates; free coordinates contribute 1."""
    n = p.n if n is None else n
    out = Fraction(1)
    for u in p.assignment.values():
        out *= cylinder_measure(u, n)
    return out


def _index_key(t):
    key = getattr(t, "sort_key", None)
    return key() if callable(key) else (0, str(t))


class _FrozenDict(dict):
    """Read-only, hashable dict used for immutable mappings inside dataclasses."""

    def _blocked(self, *args, **kwargs):
        raise TypeError("immutable mapping")

    __setitem__ = __delitem__ = clear = pop = popitem = setdefault = update = _blocked

    def __hash__(self):
        return hash(frozenset(self.items()))

    def __reduce__(self):
        return (_FrozenDict, (dict(self),))
