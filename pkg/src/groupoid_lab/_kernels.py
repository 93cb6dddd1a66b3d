"""Integer hot loops, each in a numba and a pure-numpy flavour.

The backend is picked once at import from ``GROUPOID_LAB_BACKEND``
(``numba`` or ``numpy``; default ``numba`` when importable).  Both flavours
return identical results, including tie-breaks, so callers never need to know
which one ran.  Every kernel works on integer codes only; exact rational
bookkeeping happens in the calling modules.
"""

from __future__ import annotations

import os
from itertools import combinations

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

_requested = os.environ.get("GROUPOID_LAB_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"GROUPOID_LAB_BACKEND must be 'numba' or 'numpy', got {_requested!r}")
BACKEND = "numba" if (_requested == "numba" and HAVE_NUMBA) else "numpy"


def _njit(fn):
    if HAVE_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn


# ---------------------------------------------------------------- indicators

@_njit
def _cylinder_indicator_numba(starts, spans, size):
    out = np.zeros(size, dtype=np.bool_)
    for i in range(starts.shape[0]):
        for j in range(starts[i], starts[i] + spans[i]):
            out[j] = True
    return out


def _cylinder_indicator_numpy(starts, spans, size):
    out = np.zeros(size, dtype=np.bool_)
    for s, w in zip(starts.tolist(), spans.tolist()):
        out[s:s + w] = True
    return out


# ------------------------------------------------------------ Folner subsets

@_njit
def _folner_subset_min_numba(table, n_targets, max_size):
    n_b, n_k = table.shape
    memb = np.zeros(n_targets, dtype=np.int64)
    seen = np.zeros(n_targets, dtype=np.int64)
    best_count = -1
    best_size = 1
    best = np.zeros(max_size, dtype=np.int64)
    checked = 0
    stamp = 0
    idx = np.zeros(max_size, dtype=np.int64)
    for size in range(1, min(max_size, n_k) + 1):
        for i in range(size):
            idx[i] = i
        while True:
            stamp += 1
            checked += 1
            for i in range(size):
                memb[idx[i]] = stamp
            count = 0
            for b in range(n_b):
                for i in range(size):
                    tgt = table[b, idx[i]]
                    if memb[tgt] != stamp and seen[tgt] != stamp:
                        seen[tgt] = stamp
                        count += 1
            # count/size < best_count/best_size, exact
            if best_count < 0 or count * best_size < best_count * size:
                best_count = count
                best_size = size
                for i in range(size):
                    best[i] = idx[i]
            # next combination in lexicographic order
            pos = size - 1
            while pos >= 0 and idx[pos] == n_k - size + pos:
                pos -= 1
            if pos < 0:
                break
            idx[pos] += 1
            for i in range(pos + 1, size):
                idx[i] = idx[i - 1] + 1
    return best_count, best_size, best[:best_size].copy(), checked


def _folner_subset_min_numpy(table, n_targets, max_size):
    n_b, n_k = table.shape
    best_count, best_size, best, checked = -1, 1, None, 0
    for size in range(1, min(max_size, n_k) + 1):
        combos = np.array(list(combinations(range(n_k), size)), dtype=np.int64)
        rows = np.arange(len(combos))
        mark = np.zeros((len(combos), n_targets), dtype=np.bool_)
        images = table[:, combos]  # (n_b, C, size)
        for b in range(n_b):
            mark[rows[:, None], images[b]] = True
        mark[rows[:, None], combos] = False
        counts = mark.sum(axis=1)
        i = int(np.argmin(counts))  # first minimum, matching lexicographic scan
        c = int(counts[i])
        if best_count < 0 or c * best_size < best_count * size:
            best_count, best_size, best = c, size, combos[i].copy()
        checked += len(combos)
    return best_count, best_size, best, checked


# ---------------------------------------------------------- integer intervals

@_njit
def _interval_boundary_counts_numba(offsets, m_max):
    lo = offsets.min()
    hi = offsets.max()
    span = m_max + (hi - lo) + 1
    seen = np.zeros(span, dtype=np.int64)
    out = np.zeros(m_max + 1, dtype=np.int64)
    for m in range(1, m_max + 1):
        count = 0
        for j in range(m):
            for b in offsets:
                v = j + b
                if v < 0 or v >= m:
                    slot = v - lo
                    if seen[slot] != m:
                        seen[slot] = m
                        count += 1
        out[m] = count
    return out


def _interval_boundary_counts_numpy(offsets, m_max):
    out = np.zeros(m_max + 1, dtype=np.int64)
    for m in range(1, m_max + 1):
        vals = (np.arange(m, dtype=np.int64)[:, None] + offsets[None, :]).ravel()
        outside = vals[(vals < 0) | (vals >= m)]
        out[m] = np.unique(outside).size
    return out


# --------------------------------------------------- product-measure sweeps

@_njit
def _invariance_sweep_numba(trans, combos, len_u, len_v):
    # exponent sums depend only on the bisection tuple, so tabulate them once
    n_c, j = combos.shape
    n_g = trans.shape[0]
    n_b = len_u.shape[0]
    per_pair = 1
    for _ in range(j):
        per_pair *= n_b
    n_bad = 0
    first_bad = -1
    min_exp = 1 << 30
    max_exp = -1
    for code in range(per_pair):
        su = 0
        sv = 0
        rest = code
        for i in range(j):
            b = rest % n_b
            rest //= n_b
            su += len_u[b]
            sv += len_v[b]
        if n_c * n_g > 0:
            min_exp = min(min_exp, su)
            max_exp = max(max_exp, su)
        if su != sv:
            n_bad += 1
            if first_bad < 0:
                first_bad = code
    count = 0
    violations = 0
    first = np.full(2 + j, -1, dtype=np.int64)
    for c in range(n_c):
        for g in range(n_g):
            count += per_pair
            degenerate = False
            for i in range(j):
                for h in range(i):
                    if trans[g, combos[c, h]] == trans[g, combos[c, i]]:
                        degenerate = True
            if degenerate:
                violations += per_pair
                hit = 0
            elif n_bad > 0:
                violations += n_bad
                hit = first_bad
            else:
                continue
            if first[0] < 0:
                first[0] = c
                first[1] = g
                # sums are symmetric in the digits, so report the code big-endian as unravel_index does
                for i in range(j - 1, -1, -1):
                    first[2 + i] = hit % n_b
                    hit //= n_b
    return count, violations, first, min_exp, max_exp


def _invariance_sweep_numpy(trans, combos, len_u, len_v):
    n_c, j = combos.shape
    n_g = trans.shape[0]
    n_b = len_u.shape[0]
    su = np.zeros(1, dtype=np.int64)
    sv = np.zeros(1, dtype=np.int64)
    for _ in range(j):
        su = np.add.outer(su, len_u).ravel()
        sv = np.add.outer(sv, len_v).ravel()
    bad = np.flatnonzero(su != sv)
    per_pair = n_b**j
    count = violations = 0
    first = np.full(2 + j, -1, dtype=np.int64)
    min_exp = int(su.min()) if n_c * n_g else 1 << 30
    max_exp = int(su.max()) if n_c * n_g else -1
    for c in range(n_c):
        src = trans[:, combos[c]]  # (n_g, j)
        srt = np.sort(src, axis=1)
        degenerate = (srt[:, 1:] == srt[:, :-1]).any(axis=1) if j > 1 else np.zeros(n_g, dtype=bool)
        for g in range(n_g):
            count += per_pair
            if degenerate[g]:
                violations += per_pair
                hit = 0
            elif bad.size:
                violations += bad.size
                hit = int(bad[0])
            else:
                continue
            if first[0] < 0:
                first[0], first[1] = c, g
                first[2:] = np.unravel_index(hit, (n_b,) * j) if j else ()
    return count, violations, first, min_exp, max_exp


# ------------------------------------------------ tail-equivalence axioms

@_njit
def _tail_bounds_numba(n, d):
    size = n**d
    digits = np.zeros((size, d), dtype=np.int64)
    for c in range(size):
        v = c
        for p in range(d - 1, -1, -1):
            digits[c, p] = v % n
            v //= n
    k = np.zeros((size, size), dtype=np.int64)
    for y in range(size):
        for x in range(size):
            last = 0
            for p in range(d):
                if digits[y, p] != digits[x, p]:
                    last = p + 1
            k[y, x] = last + 1
    return k


def _tail_bounds_numpy(n, d):
    size = n**d
    codes = np.arange(size, dtype=np.int64)
    digits = (codes[:, None] // (n ** np.arange(d - 1, -1, -1, dtype=np.int64))) % n
    diff = digits[:, None, :] != digits[None, :, :]
    pos = np.arange(1, d + 1, dtype=np.int64)
    return (diff * pos).max(axis=2, initial=0) + 1


@_njit
def _tail_axiom_violations_numba(k):
    # closure of E[m] under composition and inversion; unit bounds
    size = k.shape[0]
    bad = 0
    for y in range(size):
        if k[y, y] != 1:
            bad += 1
        for x in range(size):
            if k[y, x] != k[x, y]:
                bad += 1
            for z in range(size):
                kzy = k[z, y]
                kyx = k[y, x]
                bound = kzy if kzy > kyx else kyx
                if k[z, x] > bound:
                    bad += 1
    return bad


def _tail_axiom_violations_numpy(k):
    size = k.shape[0]
    bad = int((np.diag(k) != 1).sum()) + int((k != k.T).sum())
    for y in range(size):
        bound = np.maximum(k[:, y][:, None], k[y, :][None, :])  # (z, x)
        bad += int((k > bound).sum())
    return bad


_IMPL = {
    "numba": {
        "cylinder_indicator": _cylinder_indicator_numba,
        "folner_subset_min": _folner_subset_min_numba,
        "interval_boundary_counts": _interval_boundary_counts_numba,
        "invariance_sweep": _invariance_sweep_numba,
        "tail_bounds": _tail_bounds_numba,
        "tail_axiom_violations": _tail_axiom_violations_numba,
    },
    "numpy": {
        "cylinder_indicator": _cylinder_indicator_numpy,
        "folner_subset_min": _folner_subset_min_numpy,
        "interval_boundary_counts": _interval_boundary_counts_numpy,
        "invariance_sweep": _invariance_sweep_numpy,
        "tail_bounds": _tail_bounds_numpy,
        "tail_axiom_violations": _tail_axiom_violations_numpy,
    },
}


def impl(name: str, backend: str | None = None):
    """Return the named kernel for ``backend`` (default: the active one)."""
    return _IMPL[backend or BACKEND][name]


def cylinder_indicator(starts, spans, size):
    return impl("cylinder_indicator")(starts, spans, int(size))


def folner_subset_min(table, n_targets, max_size):
    """Minimise ``|B K - K| / |K|`` over all index subsets ``K`` with ``|K| <= max_size``.

    ``table[b, k]`` is the target index of ``b * k``; the first ``table.shape[1]``
    target indices must be the candidate elements themselves.  Returns
    ``(count, size, members, number_checked)`` for the lexicographically first
    minimiser in order of increasing size.
    """
    count, size, members, checked = impl("folner_subset_min")(
        np.ascontiguousarray(table, dtype=np.int64), int(n_targets), int(max_size)
    )
    return int(count), int(size), np.asarray(members, dtype=np.int64), int(checked)


def interval_boundary_counts(offsets, m_max):
    """``out[m] = |(B + [0, m)) - [0, m)|`` for ``m = 1..m_max`` over the integers."""
    return impl("interval_boundary_counts")(np.asarray(offsets, dtype=np.int64), int(m_max))


def invariance_sweep(trans, combos, len_u, len_v):
    """Check source/range mass equality over every basis set of one constraint count.

    ``trans[g, t]`` is the id of the source coordinate ``g^-1 t``; ``combos`` lists
    the constrained index tuples; ``len_u``/``len_v`` are the source/range prefix
    lengths of each candidate bisection.  Returns ``(count, violations,
    first_violation, min_exponent, max_exponent)``.
    """
    count, violations, first, lo, hi = impl("invariance_sweep")(
        np.ascontiguousarray(trans, dtype=np.int64),
        np.ascontiguousarray(combos, dtype=np.int64),
        np.asarray(len_u, dtype=np.int64),
        np.asarray(len_v, dtype=np.int64),
    )
    return int(count), int(violations), np.asarray(first), int(lo), int(hi)


def tail_bounds(n, d):
    """Minimal tail bound ``k`` for every pair of depth-``d`` word codes."""
    return impl("tail_bounds")(int(n), int(d))


def tail_axiom_violations(k):
    return int(impl("tail_axiom_violations")(np.ascontiguousarray(k, dtype=np.int64)))
