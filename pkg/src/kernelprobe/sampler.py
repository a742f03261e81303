"""Random-sampling and exhaustive probes of CNSD failure rates.

A probe draws solution sets of ``n`` distinct permutations of length ``m``,
builds each set's distance matrix, and counts how often the reduced matrix
has an eigenvalue above ``epsilon``.

Random streams: repeat ``r`` of a campaign with master seed ``s`` draws from
``numpy.random.default_rng(SeedSequence(s, spawn_key=(r,)))``.  Each repeat
is therefore reproducible on its own, whatever order repeats run in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .definiteness import DEFAULT_EPSILON, lambda_max_batch
from .distances import (
    MAX_RANK_M,
    distance_matrices,
    distance_table,
    get_measure,
    lexicographic_unrank,
)

__all__ = [
    "RepeatRecord",
    "ProbeReport",
    "BruteForceResult",
    "repeat_rng",
    "random_solution_set",
    "random_solution_sets",
    "sample_probe",
    "brute_force_probe",
    "count_subsets",
    "MAX_WITNESSES",
    "BRUTE_FORCE_GUARD",
]

MAX_WITNESSES = 10
BRUTE_FORCE_GUARD = 10_000_000
# tabulate all pairwise distances up front when m! is at most this
TABLE_LIMIT = 720
BATCH = 4096


def repeat_rng(seed: int, repeat: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(repeat,)))


@nb.njit(cache=True)
def _floyd(draws, total, n):
    # Floyd's subset sampling; draws[k, i] is uniform on 0..total-n+i
    t = draws.shape[0]
    out = np.empty((t, n), np.int64)
    for k in range(t):
        for i in range(n):
            j = total - n + i
            r = draws[k, i]
            hit = False
            for q in range(i):
                if out[k, q] == r:
                    hit = True
                    break
            out[k, i] = j if hit else r
    return out


def _random_rank_sets(m: int, n: int, t: int, rng: np.random.Generator) -> np.ndarray:
    total = math.factorial(m)
    if n > total:
        raise ValueError(f"cannot draw {n} distinct permutations of length {m} ({total} exist)")
    highs = np.arange(total - n + 1, total + 1, dtype=np.int64)
    draws = rng.integers(0, np.broadcast_to(highs, (t, n)), dtype=np.int64)
    ranks = _floyd(draws, total, n)
    # Floyd's output order is biased; set order must not be
    return rng.permuted(ranks, axis=1)


def random_solution_sets(m: int, n: int, t: int, rng: np.random.Generator, ranks: bool = False) -> np.ndarray:
    """``t`` independent sets of ``n`` distinct uniform permutations, shape ``(t, n, m)``.

    Each set is a uniform draw from the ``n``-subsets of all permutations of
    ``1..m``.  Lengths above 20 fall back to rejection sampling of
    individual permutations.  With ``ranks=True`` the lexicographic ranks
    ``(t, n)`` are returned instead (``m <= 20`` only).
    """
    if n < 1 or t < 0:
        raise ValueError("need n >= 1 and t >= 0")
    if m <= MAX_RANK_M:
        r = _random_rank_sets(m, n, t, rng)
        return r if ranks else lexicographic_unrank(r, m)
    if ranks:
        raise OverflowError(f"ranks are limited to m <= {MAX_RANK_M}")
    sets = np.empty((t, n, m), np.int64)
    for k in range(t):
        seen: set[bytes] = set()
        i = 0
        while i < n:
            p = rng.permutation(m) + 1
            key = p.tobytes()
            if key not in seen:
                seen.add(key)
                sets[k, i] = p
                i += 1
    return sets


def random_solution_set(m: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """One set of ``n`` distinct random permutations, shape ``(n, m)``."""
    return random_solution_sets(m, n, 1, rng)[0]


@dataclass
class RepeatRecord:
    repeat: int
    t: int
    n_lambda_plus: int
    p: float
    lambda_max: float


@dataclass
class ProbeReport:
    measure: str
    n: int
    m: int
    t: int
    epsilon: float
    seed: int
    repeats: list[RepeatRecord] = field(default_factory=list)
    witnesses: list[np.ndarray] = field(default_factory=list)
    argmax_set: np.ndarray | None = None

    @property
    def n_lambda_plus(self) -> int:
        return sum(r.n_lambda_plus for r in self.repeats)

    @property
    def p(self) -> float:
        """Mean proportion over repeats."""
        return float(np.mean([r.p for r in self.repeats]))

    @property
    def mean_lambda_max(self) -> float:
        return float(np.mean([r.lambda_max for r in self.repeats]))

    @property
    def lambda_max_overall(self) -> float:
        return max(r.lambda_max for r in self.repeats)

    @property
    def found(self) -> bool:
        return self.n_lambda_plus > 0


class _LambdaEvaluator:
    """Batched lambda_max for sets of a fixed measure and m."""

    def __init__(self, measure, m: int):
        self.measure = get_measure(measure)
        self.m = m
        self.table = distance_table(self.measure, m) if math.factorial(m) <= TABLE_LIMIT else None

    def from_ranks(self, ranks: np.ndarray) -> np.ndarray:
        d = self.table[ranks[:, :, None], ranks[:, None, :]]
        return lambda_max_batch(d)

    def from_sets(self, sets: np.ndarray) -> np.ndarray:
        return lambda_max_batch(distance_matrices(self.measure, sets))


def sample_probe(
    measure,
    n: int,
    m: int,
    t: int,
    repeats: int = 1,
    epsilon: float = DEFAULT_EPSILON,
    seed: int = 0,
    batch_size: int = BATCH,
) -> ProbeReport:
    """Estimate the proportion ``p`` of random ``n``-sets whose distance matrix is not CNSD."""
    mm = get_measure(measure)
    if t < 1:
        raise ValueError("t must be at least 1")
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    if n < 2:
        raise ValueError("solution sets need n >= 2")
    if m <= MAX_RANK_M and n > math.factorial(m):
        raise ValueError(f"n={n} exceeds the {math.factorial(m)} permutations of length {m}")
    ev = _LambdaEvaluator(mm, m)
    report = ProbeReport(measure=mm.id, n=n, m=m, t=t, epsilon=epsilon, seed=seed)
    best = -np.inf
    for rep in range(repeats):
        rng = repeat_rng(seed, rep)
        count = 0
        rep_max = -np.inf
        done = 0
        while done < t:
            size = min(batch_size, t - done)
            if ev.table is not None:
                ranks = random_solution_sets(m, n, size, rng, ranks=True)
                lam = ev.from_ranks(ranks)
                sets = None
            else:
                sets = random_solution_sets(m, n, size, rng)
                lam = ev.from_sets(sets)
            hits = np.flatnonzero(lam > epsilon)
            count += hits.size
            for h in hits[: max(0, MAX_WITNESSES - len(report.witnesses))]:
                report.witnesses.append(sets[h].copy() if sets is not None else lexicographic_unrank(ranks[h], m))
            k = int(np.argmax(lam))
            if lam[k] > rep_max:
                rep_max = float(lam[k])
            if lam[k] > best:
                best = float(lam[k])
                report.argmax_set = sets[k].copy() if sets is not None else lexicographic_unrank(ranks[k], m)
            done += size
        report.repeats.append(RepeatRecord(repeat=rep, t=t, n_lambda_plus=count, p=count / t, lambda_max=rep_max))
    return report


@dataclass
class BruteForceResult:
    measure: str
    n: int
    m: int
    n_sets: int
    n_lambda_plus: int
    lambda_max: float
    epsilon: float
    witness: np.ndarray | None = None

    @property
    def p(self) -> float:
        return self.n_lambda_plus / self.n_sets


def count_subsets(m: int, n: int) -> int:
    return math.comb(math.factorial(m), n)


@nb.njit(cache=True)
def _next_combinations(state, total, count):
    # fills up to `count` successive lexicographic combinations starting at `state`;
    # advances `state` in place and returns how many were written
    n = state.size
    out = np.empty((count, n), np.int64)
    written = 0
    while written < count:
        if state[0] < 0:
            break
        out[written] = state
        written += 1
        i = n - 1
        while i >= 0 and state[i] == total - n + i:
            i -= 1
        if i < 0:
            state[0] = -1
        else:
            state[i] += 1
            for j in range(i + 1, n):
                state[j] = state[j - 1] + 1
    return out[:written]


def brute_force_probe(
    measure,
    n: int,
    m: int,
    epsilon: float = DEFAULT_EPSILON,
    guard: int = BRUTE_FORCE_GUARD,
    chunk: int = 50_000,
) -> BruteForceResult:
    """Exact failure proportion over every ``n``-subset of the permutations of length ``m``.

    Subsets are enumerated as lexicographic combinations of permutation ranks.
    """
    mm = get_measure(measure)
    if n < 2:
        raise ValueError("solution sets need n >= 2")
    total = math.factorial(m)
    if n > total:
        raise ValueError(f"n={n} exceeds the {total} permutations of length {m}")
    n_sets = count_subsets(m, n)
    if n_sets > guard:
        raise OverflowError(f"{n_sets} subsets exceed the enumeration guard of {guard}")
    table = distance_table(mm, m)
    state = np.arange(n, dtype=np.int64)
    hits = 0
    lam_max = -np.inf
    witness = None
    seen = 0
    while True:
        combos = _next_combinations(state, total, chunk)
        if combos.shape[0] == 0:
            break
        lam = lambda_max_batch(table[combos[:, :, None], combos[:, None, :]])
        failing = lam > epsilon
        hits += int(failing.sum())
        if witness is None and failing.any():
            witness = lexicographic_unrank(combos[int(np.argmax(failing))], m)
        lam_max = max(lam_max, float(lam.max()))
        seen += combos.shape[0]
    assert seen == n_sets
    return BruteForceResult(
        measure=mm.id, n=n, m=m, n_sets=n_sets, n_lambda_plus=hits, lambda_max=lam_max, epsilon=epsilon, witness=witness
    )
