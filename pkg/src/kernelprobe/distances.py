"""Normalized distance measures for permutations, plus two string distances.

Permutations are integer arrays holding each of ``1..m`` exactly once.  Every
permutation measure returns its raw value divided by the largest value it can
attain for the given ``m``, so all outputs lie in ``[0, 1]``.

The raw kernels are compiled with numba and dispatched on a small integer
code, which lets :func:`distance_matrices` fill whole batches of distance
matrices without touching the interpreter per pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numba as nb
import numpy as np

__all__ = [
    "DistanceMeasure",
    "MEASURES",
    "PERMUTATION_MEASURES",
    "STRING_MEASURES",
    "get_measure",
    "as_permutation",
    "distance",
    "raw_distance",
    "distance_matrix",
    "distance_matrices",
    "distance_table",
    "lexicographic_ranks",
    "lexicographic_rank",
    "lexicographic_unrank",
    "all_permutations",
    "osa_distance",
    "jaro_winkler_distance",
    "string_distance",
    "string_distance_matrix",
]

MAX_RANK_M = 20

# numba dispatch codes
LEV, SWA, INT, INS, LCSTR, R, ADJ, POS, POSQ, HAM, EUC, MAN, CHE, LEE, COS, LEX = range(16)


def _cos_normalizer(m: int) -> float:
    # attained by the reversed pair: 1 - <id, rev> / <id, id>
    k = np.arange(1, m + 1, dtype=float)
    return 1.0 - float(k @ k[::-1]) / float(k @ k)


@dataclass(frozen=True)
class DistanceMeasure:
    """A named distance with its metric class and normalizer.

    ``normalizer(m)`` is the largest raw value the measure attains over pairs
    of permutations of length ``m``.
    """

    id: str
    name: str
    metric_class: str
    code: int
    normalizer: Callable[[int], float]
    domain: str = "permutation"

    @property
    def is_metric(self) -> bool:
        return self.metric_class == "metric"

    def scale(self, m: int) -> float:
        """Return the normalizer for length ``m``; raise if it is not positive."""
        if m < 1:
            raise ValueError("permutation length must be at least 1")
        value = float(self.normalizer(m))
        if not value > 0.0:
            raise ValueError(f"measure {self.id!r} is undefined for m={m} (normalizer {value})")
        return value

    def __str__(self) -> str:
        return self.id


PERMUTATION_MEASURES: dict[str, DistanceMeasure] = {
    mm.id: mm
    for mm in (
        DistanceMeasure("lev", "Levenshtein", "metric", LEV, lambda m: m),
        DistanceMeasure("swa", "Swap", "metric", SWA, lambda m: m * (m - 1) / 2),
        DistanceMeasure("int", "Interchange", "metric", INT, lambda m: m - 1),
        DistanceMeasure("ins", "Insert", "metric", INS, lambda m: m - 1),
        DistanceMeasure("lcstr", "Longest common substring", "metric", LCSTR, lambda m: m - 1),
        DistanceMeasure("r", "R", "metric", R, lambda m: m - 1),
        DistanceMeasure("adj", "Adjacency", "pseudo-metric", ADJ, lambda m: m - 1),
        DistanceMeasure("pos", "Position", "metric", POS, lambda m: m * m // 2),
        DistanceMeasure("posq", "Squared position", "non-metric", POSQ, lambda m: (m**3 - m) / 3),
        DistanceMeasure("ham", "Hamming", "metric", HAM, lambda m: m),
        DistanceMeasure("euc", "Euclidean", "metric", EUC, lambda m: math.sqrt((m**3 - m) / 3)),
        DistanceMeasure("man", "Manhattan", "metric", MAN, lambda m: m * m // 2),
        DistanceMeasure("che", "Chebyshev", "metric", CHE, lambda m: m - 1),
        DistanceMeasure("lee", "Lee", "metric", LEE, lambda m: m * (m // 2)),
        DistanceMeasure("cos", "Cosine", "non-metric", COS, _cos_normalizer),
        DistanceMeasure("lex", "Lexicographic", "metric", LEX, lambda m: math.factorial(m) - 1),
    )
}

STRING_MEASURES: dict[str, DistanceMeasure] = {
    "osa": DistanceMeasure("osa", "Optimal string alignment", "non-metric", -1, lambda m: 1.0, "string"),
    "jw": DistanceMeasure("jw", "Jaro-Winkler", "non-metric", -2, lambda m: 1.0, "string"),
}

MEASURES: dict[str, DistanceMeasure] = {**PERMUTATION_MEASURES, **STRING_MEASURES}


def get_measure(measure: str | DistanceMeasure) -> DistanceMeasure:
    """Look up a measure by its lowercase id (``"ins"``, ``"lcstr"``, ...)."""
    if isinstance(measure, DistanceMeasure):
        return measure
    try:
        return MEASURES[measure.lower()]
    except KeyError:
        raise ValueError(f"unknown distance measure {measure!r}; choose from {sorted(MEASURES)}") from None


def _permutation_measure(measure: str | DistanceMeasure) -> DistanceMeasure:
    mm = get_measure(measure)
    if mm.domain != "permutation":
        raise ValueError(f"{mm.id!r} is a string distance; use string_distance")
    return mm


def as_permutation(values: Sequence[int] | np.ndarray) -> np.ndarray:
    """Validate ``values`` as a permutation of ``1..m`` and return an int64 copy."""
    perm = np.asarray(values, dtype=np.int64).copy()
    if perm.ndim != 1 or perm.size == 0:
        raise ValueError("a permutation is a non-empty one-dimensional sequence")
    if not np.array_equal(np.sort(perm), np.arange(1, perm.size + 1)):
        raise ValueError(f"{values!r} is not a permutation of 1..{perm.size}")
    return perm


def _as_permutation_array(perms) -> np.ndarray:
    arr = np.asarray(perms, dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] == 0:
        raise ValueError("expected a collection of equal-length permutations")
    m = arr.shape[1]
    if not np.array_equal(np.sort(arr, axis=1), np.broadcast_to(np.arange(1, m + 1), arr.shape)):
        raise ValueError(f"rows must be permutations of 1..{m}")
    return arr


# ---------------------------------------------------------------------------
# compiled kernels; inputs hold values 1..m


@nb.njit(cache=True)
def _positions(a):
    pos = np.empty(a.size, np.int64)
    for i in range(a.size):
        pos[a[i] - 1] = i
    return pos


@nb.njit(cache=True)
def _levenshtein(a, b):
    m = a.size
    prev = np.arange(m + 1)
    cur = np.empty(m + 1, np.int64)
    for i in range(1, m + 1):
        cur[0] = i
        for j in range(1, m + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            best = prev[j - 1] + cost
            if prev[j] + 1 < best:
                best = prev[j] + 1
            if cur[j - 1] + 1 < best:
                best = cur[j - 1] + 1
            cur[j] = best
        prev, cur = cur, prev
    return prev[m]


@nb.njit(cache=True)
def _lexicographic_rank(a):
    m = a.size
    rank = 0
    for i in range(m):
        smaller = 0
        for j in range(i + 1, m):
            if a[j] < a[i]:
                smaller += 1
        rank = rank * (m - i) + smaller
    return rank


@nb.njit(cache=True)
def _raw(code, a, b):
    m = a.size
    if code == LEV:
        return float(_levenshtein(a, b))
    if code == SWA:
        count = 0
        for i in range(m):
            for j in range(i + 1, m):
                if (a[i] < a[j]) != (b[i] < b[j]):
                    count += 1
        return float(count)
    if code == LEX:
        return float(abs(_lexicographic_rank(a) - _lexicographic_rank(b)))
    if code in (HAM, EUC, MAN, CHE, LEE, COS):
        acc = 0.0
        for i in range(m):
            d = abs(a[i] - b[i])
            if code == HAM:
                acc += 1.0 if d != 0 else 0.0
            elif code == EUC:
                acc += d * d
            elif code == MAN:
                acc += d
            elif code == CHE:
                acc = max(acc, float(d))
            elif code == LEE:
                acc += min(d, m - d)
            else:
                acc += a[i] * b[i]
        if code == EUC:
            return np.sqrt(acc)
        if code == COS:
            # both vectors hold 1..m, so the norms are equal
            nrm = m * (m + 1) * (2 * m + 1) / 6.0
            return max(0.0, 1.0 - acc / nrm)
        return acc

    posb = _positions(b)
    if code == POS or code == POSQ:
        posa = _positions(a)
        acc = 0.0
        for k in range(m):
            d = abs(posa[k] - posb[k])
            acc += d if code == POS else d * d
        return acc
    # s[i]: where a[i] sits in b
    s = np.empty(m, np.int64)
    for i in range(m):
        s[i] = posb[a[i] - 1]
    if code == INT:
        # m minus the number of cycles of the relative permutation
        seen = np.zeros(m, np.bool_)
        cycles = 0
        for i in range(m):
            if not seen[i]:
                cycles += 1
                j = i
                while not seen[j]:
                    seen[j] = True
                    j = s[j]
        return float(m - cycles)
    if code == INS:
        # LCS of two permutations is the LIS of s (patience sorting)
        tails = np.empty(m, np.int64)
        size = 0
        for x in s:
            lo, hi = 0, size
            while lo < hi:
                mid = (lo + hi) >> 1
                if tails[mid] < x:
                    lo = mid + 1
                else:
                    hi = mid
            tails[lo] = x
            if lo == size:
                size += 1
        return float(m - size)
    if code == LCSTR:
        best = 1
        run = 1
        for i in range(1, m):
            if s[i] == s[i - 1] + 1:
                run += 1
                if run > best:
                    best = run
            else:
                run = 1
        return float(m - best)
    if code == R or code == ADJ:
        count = 0
        for i in range(m - 1):
            step = s[i + 1] - s[i]
            if code == R:
                kept = step == 1
            else:
                kept = step == 1 or step == -1
            if not kept:
                count += 1
        return float(count)
    return np.nan


@nb.njit(cache=True)
def _pairwise(code, sets):
    t, n, _ = sets.shape
    out = np.zeros((t, n, n))
    for k in range(t):
        for i in range(n):
            for j in range(i + 1, n):
                v = _raw(code, sets[k, i], sets[k, j])
                out[k, i, j] = v
                out[k, j, i] = v
    return out


@nb.njit(cache=True)
def _table(code, perms):
    n = perms.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            v = _raw(code, perms[i], perms[j])
            out[i, j] = v
            out[j, i] = v
    return out


@nb.njit(cache=True)
def _unrank_into(rank, m, fact, out):
    avail = np.arange(1, m + 1)
    size = m
    for i in range(m):
        f = fact[m - 1 - i]
        idx = rank // f
        rank = rank % f
        out[i] = avail[idx]
        for j in range(idx, size - 1):
            avail[j] = avail[j + 1]
        size -= 1


@nb.njit(cache=True)
def _unrank_many(ranks, m, fact):
    flat = ranks.ravel()
    out = np.empty((flat.size, m), np.int64)
    for k in range(flat.size):
        _unrank_into(flat[k], m, fact, out[k])
    return out


@nb.njit(cache=True)
def _rank_many(perms):
    out = np.empty(perms.shape[0], np.int64)
    for k in range(perms.shape[0]):
        out[k] = _lexicographic_rank(perms[k])
    return out


def _factorials(m: int) -> np.ndarray:
    return np.array([math.factorial(i) for i in range(m + 1)], dtype=np.int64)


# ---------------------------------------------------------------------------
# public API


def raw_distance(measure: str | DistanceMeasure, a, b) -> float:
    """Unnormalized distance between two permutations."""
    mm = _permutation_measure(measure)
    pa, pb = as_permutation(a), as_permutation(b)
    if pa.size != pb.size:
        raise ValueError(f"permutation lengths differ ({pa.size} vs {pb.size})")
    if mm.code == LEX and pa.size > MAX_RANK_M:
        raise OverflowError(f"lexicographic rank is limited to m <= {MAX_RANK_M}")
    return float(_raw(mm.code, pa, pb))


def distance(measure: str | DistanceMeasure, a, b) -> float:
    """Normalized distance in ``[0, 1]`` between permutations ``a`` and ``b``.

    >>> distance("ins", [1, 2, 3, 4], [1, 3, 4, 2])
    0.3333333333333333
    >>> distance("swa", [1, 2, 3, 4], [4, 3, 2, 1])
    1.0
    """
    mm = _permutation_measure(measure)
    m = len(a)
    scale = mm.scale(m)
    return raw_distance(mm, a, b) / scale


def distance_matrices(measure: str | DistanceMeasure, sets) -> np.ndarray:
    """Normalized distance matrices for a batch of solution sets.

    ``sets`` has shape ``(t, n, m)``; the result has shape ``(t, n, n)``.
    Rows are not validated here; callers pass permutations they generated.
    """
    mm = _permutation_measure(measure)
    arr = np.ascontiguousarray(sets, dtype=np.int64)
    if arr.ndim != 3:
        raise ValueError("expected an array of shape (t, n, m)")
    m = arr.shape[2]
    if mm.code == LEX and m > MAX_RANK_M:
        raise OverflowError(f"lexicographic rank is limited to m <= {MAX_RANK_M}")
    scale = mm.scale(m)
    return _pairwise(mm.code, arr) / scale


def distance_matrix(measure: str | DistanceMeasure, perms) -> np.ndarray:
    """Symmetric ``n x n`` matrix of normalized pairwise distances."""
    arr = _as_permutation_array(perms)
    if arr.shape[0] < 2:
        raise ValueError("a distance matrix needs at least two elements")
    return distance_matrices(measure, arr[None])[0]


def distance_table(measure: str | DistanceMeasure, m: int) -> np.ndarray:
    """Normalized distances between all ``m!`` permutations, indexed by lexicographic rank."""
    mm = _permutation_measure(measure)
    if math.factorial(m) > 5040:
        raise MemoryError(f"refusing to tabulate {math.factorial(m)}! pairs")
    return _table(mm.code, all_permutations(m)) / mm.scale(m)


def lexicographic_rank(perm) -> int:
    """Zero-based position of ``perm`` among all permutations of its length in lexicographic order.

    >>> lexicographic_rank([2, 1, 3, 4])
    6
    """
    p = as_permutation(perm)
    if p.size > MAX_RANK_M:
        raise OverflowError(f"lexicographic rank is limited to m <= {MAX_RANK_M}")
    return int(_lexicographic_rank(p))


def lexicographic_unrank(rank, m: int) -> np.ndarray:
    """Inverse of :func:`lexicographic_rank`; accepts a scalar or an array of ranks.

    An array of ranks of shape ``s`` yields permutations of shape ``s + (m,)``.
    """
    if m > MAX_RANK_M:
        raise OverflowError(f"lexicographic rank is limited to m <= {MAX_RANK_M}")
    ranks = np.asarray(rank, dtype=np.int64)
    total = math.factorial(m)
    if ranks.size and (ranks.min() < 0 or ranks.max() >= total):
        raise ValueError(f"ranks must lie in 0..{total - 1}")
    out = _unrank_many(ranks, m, _factorials(m))
    return out.reshape(ranks.shape + (m,))


def lexicographic_ranks(perms) -> np.ndarray:
    arr = np.ascontiguousarray(perms, dtype=np.int64)
    flat = arr.reshape(-1, arr.shape[-1])
    return _rank_many(flat).reshape(arr.shape[:-1])


def all_permutations(m: int) -> np.ndarray:
    """All ``m!`` permutations of ``1..m`` in lexicographic order, shape ``(m!, m)``."""
    return lexicographic_unrank(np.arange(math.factorial(m)), m)


# ---------------------------------------------------------------------------
# string distances


def _check_strings(a: str, b: str) -> None:
    if not a or not b:
        raise ValueError("string distances need non-empty strings")


def osa_distance(a: str, b: str) -> int:
    """Optimal string alignment (restricted Damerau-Levenshtein) edit count.

    >>> osa_distance("abc", "acc")
    1
    """
    _check_strings(a, b)
    la, lb = len(a), len(b)
    d = [[0] * (lb + 1) for _ in range(la + 1)]
    for i in range(la + 1):
        d[i][0] = i
    for j in range(lb + 1):
        d[0][j] = j
    for i in range(1, la + 1):
        for j in range(1, lb + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost)
            if i > 1 and j > 1 and a[i - 1] == b[j - 2] and a[i - 2] == b[j - 1]:
                d[i][j] = min(d[i][j], d[i - 2][j - 2] + 1)
    return d[la][lb]


def jaro_winkler_distance(a: str, b: str, prefix_scale: float = 0.0, max_prefix: int = 4) -> float:
    """Jaro-Winkler distance in ``[0, 1]``.

    The default ``prefix_scale=0`` gives the plain Jaro distance, which is
    what reproduces the shipped string fixtures; pass ``0.1`` for the usual
    Winkler boost.

    >>> round(jaro_winkler_distance("bbbb", "bbba"), 12)
    0.166666666667
    """
    _check_strings(a, b)
    if not 0.0 <= prefix_scale <= 0.25:
        raise ValueError("prefix_scale must lie in [0, 0.25]")
    la, lb = len(a), len(b)
    window = max(max(la, lb) // 2 - 1, 0)
    a_hit = [False] * la
    b_hit = [False] * lb
    matches = 0
    for i, ch in enumerate(a):
        for j in range(max(0, i - window), min(lb, i + window + 1)):
            if not b_hit[j] and b[j] == ch:
                a_hit[i] = b_hit[j] = True
                matches += 1
                break
    if matches == 0:
        return 1.0
    a_seq = [c for c, hit in zip(a, a_hit) if hit]
    b_seq = [c for c, hit in zip(b, b_hit) if hit]
    half_transpositions = sum(x != y for x, y in zip(a_seq, b_seq))
    t = half_transpositions / 2
    sim = (matches / la + matches / lb + (matches - t) / matches) / 3
    prefix = 0
    for x, y in zip(a[:max_prefix], b[:max_prefix]):
        if x != y:
            break
        prefix += 1
    sim += prefix * prefix_scale * (1 - sim)
    return 1.0 - sim


def string_distance(measure: str | DistanceMeasure, a: str, b: str) -> float:
    mm = get_measure(measure)
    if mm.id == "osa":
        return float(osa_distance(a, b))
    if mm.id == "jw":
        return jaro_winkler_distance(a, b)
    raise ValueError(f"{mm.id!r} is not a string distance")


def string_distance_matrix(measure: str | DistanceMeasure, strings: Sequence[str]) -> np.ndarray:
    if len(strings) < 2:
        raise ValueError("a distance matrix needs at least two elements")
    n = len(strings)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = string_distance(measure, strings[i], strings[j])
    return out
