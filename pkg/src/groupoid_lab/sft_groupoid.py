"""The tail-equivalence groupoid E_n on the full shift, truncated at depth d.

An arrow ``(y, x)`` relates two points that agree from some position on.  At
depth ``d`` it is stored as two length-``d`` words together with the minimal
tail bound ``k``: ``y_i == x_i`` for every ``k <= i <= d``.  The arrow stands
for every pair ``(y w, x w)`` with a common infinite tail ``w``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .cantor_algebra import ClopenSet, check_word, words
from .errors import CompositionError, DomainError, InvalidInput


def minimal_tail_bound(y: str, x: str) -> int:
    """Smallest ``k`` (1-based) with ``y_i == x_i`` for all ``i >= k``."""
    last = 0
    for i, (a, b) in enumerate(zip(y, x), start=1):
        if a != b:
            last = i
    return last + 1


@dataclass(frozen=True, order=True)
class SftArrow:
    y: str
    x: str
    n: int
    k: int = field(init=False, compare=False)

    def __post_init__(self):
        check_word(self.y, self.n)
        check_word(self.x, self.n)
        if len(self.y) != len(self.x):
            raise InvalidInput(f"arrow words must share a depth: {self.y!r}, {self.x!r}")
        object.__setattr__(self, "k", minimal_tail_bound(self.y, self.x))

    @classmethod
    def unit(cls, x: str, n: int) -> SftArrow:
        return cls(x, x, n)

    @property
    def depth(self) -> int:
        return len(self.x)

    @property
    def is_unit(self) -> bool:
        return self.y == self.x

    def source(self) -> SftArrow:
        return SftArrow(self.x, self.x, self.n)

    def range(self) -> SftArrow:
        return SftArrow(self.y, self.y, self.n)

    def inverse(self) -> SftArrow:
        return SftArrow(self.x, self.y, self.n)

    def compose(self, other: SftArrow) -> SftArrow:
        """``self * other``; defined when ``source(self) == range(other)``."""
        if self.n != other.n or self.depth != other.depth:
            raise CompositionError(f"depth/alphabet mismatch: {self} vs {other}")
        if self.x != other.y:
            raise CompositionError(f"source {self.x!r} does not match range {other.y!r}")
        return SftArrow(self.y, other.x, self.n)

    __mul__ = compose

    def in_level(self, k: int) -> bool:
        """Membership in the elementary subgroupoid E_n[k]."""
        return self.k <= k

    def to_json(self) -> dict:
        return {"y": self.y, "x": self.x, "k": self.k}

    @classmethod
    def from_json(cls, data: dict, n: int) -> SftArrow:
        arrow = cls(data["y"], data["x"], n)
        if "k" in data and data["k"] != arrow.k:
            raise InvalidInput(f"stored tail bound {data['k']} is not minimal ({arrow.k})")
        return arrow


def arrow_algebra(a: SftArrow, b: SftArrow | None, op: str) -> SftArrow:
    """Dispatch ``compose``, ``inverse``, ``source`` or ``range`` (``b`` used only by compose)."""
    if op == "compose":
        if b is None:
            raise InvalidInput("compose needs two arrows")
        return a.compose(b)
    if op in ("inverse", "source", "range"):
        return getattr(a, op)()
    raise InvalidInput(f"unknown arrow operation {op!r}")


@dataclass(frozen=True)
class PrefixBisection:
    """The compact open bisection sigma_{u,v}: ``(v w, u w)`` for every tail ``w``."""

    u: str
    v: str
    n: int

    def __post_init__(self):
        check_word(self.u, self.n)
        check_word(self.v, self.n)
        if len(self.u) != len(self.v):
            raise InvalidInput(f"bisection prefixes must have equal length: {self.u!r}, {self.v!r}")

    @property
    def length(self) -> int:
        return len(self.u)

    def source(self) -> ClopenSet:
        return ClopenSet.cylinder(self.u, self.n)

    def range(self) -> ClopenSet:
        return ClopenSet.cylinder(self.v, self.n)

    def inverse(self) -> PrefixBisection:
        return PrefixBisection(self.v, self.u, self.n)

    def contains(self, arrow: SftArrow) -> bool:
        m = self.length
        if arrow.depth < m:
            raise InvalidInput(f"arrow depth {arrow.depth} below bisection length {m}")
        return arrow.x[:m] == self.u and arrow.y[:m] == self.v and arrow.x[m:] == arrow.y[m:]

    def apply(self, x: str) -> SftArrow:
        return apply_bisection(self, x)

    def to_json(self) -> dict:
        return {"u": self.u, "v": self.v}


def apply_bisection(sigma: PrefixBisection, x: str) -> SftArrow:
    """The unique arrow of ``sigma`` with source ``x``."""
    check_word(x, sigma.n)
    if len(x) < sigma.length:
        raise InvalidInput(f"point {x!r} is shallower than the bisection prefix")
    if not x.startswith(sigma.u):
        raise DomainError(f"{x!r} is not in C_{sigma.u or 'e'}")
    return SftArrow(sigma.v + x[sigma.length:], x, sigma.n)


def tail_class(x: str, k: int, n: int) -> set[str]:
    """Depth-``len(x)`` words agreeing with ``x`` at every position ``>= k``."""
    check_word(x, n)
    if not 1 <= k <= len(x) + 1:
        raise InvalidInput(f"tail bound {k} outside [1, {len(x) + 1}]")
    tail = x[k - 1:]
    return {head + tail for head in words(k - 1, n)}


def elementary_fiber(k: int, x: str, n: int) -> set[SftArrow]:
    """The fiber ``E_n[k] x``: all arrows of level ``k`` with source ``x``."""
    check_word(x, n)
    if len(x) < k - 1 or k < 1:
        raise InvalidInput(f"depth {len(x)} too small for tail bound {k}")
    return {SftArrow(y, x, n) for y in tail_class(x, k, n)}


def all_arrows(n: int, d: int):
    """Every arrow of the depth-``d`` truncation, in lexicographic order."""
    ws = list(words(d, n))
    for y in ws:
        for x in ws:
            yield SftArrow(y, x, n)


def all_bisections(n: int, max_len: int, min_len: int = 1, reduce_inverse: bool = False):
    """Prefix bisections with ``min_len <= |u| = |v| <= max_len``.

    With ``reduce_inverse`` only ``u <= v`` is kept, since sigma_{v,u} is the
    inverse of sigma_{u,v}.
    """
    for length in range(min_len, max_len + 1):
        ws = list(words(length, n))
        for u in ws:
            for v in ws:
                if reduce_inverse and v < u:
                    continue
                yield PrefixBisection(u, v, n)
