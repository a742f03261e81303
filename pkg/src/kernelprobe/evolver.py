"""Evolutionary search for solution sets with a positive reduced-matrix eigenvalue.

Individuals are solution sets (``(n, m)`` arrays of distinct permutations);
fitness is ``lambda_max`` of the set's reduced distance matrix, maximized.
The loop is generational with plus-selection: ``r`` offspring are bred from
the better half of the population, and the best ``r`` of parents and
offspring survive.  A run stops at the first evaluation whose fitness
exceeds ``epsilon`` or when the evaluation budget is spent.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import asdict, dataclass, field

import numpy as np

from .definiteness import DEFAULT_EPSILON, cnsd_check, lambda_max_batch
from .distances import distance_matrices, distance_matrix, get_measure, lexicographic_unrank
from .sampler import random_solution_sets

__all__ = [
    "SUBMUTATIONS",
    "EaConfig",
    "EaResult",
    "fitness",
    "swap_mutation",
    "interchange_mutation",
    "reversal_mutation",
    "submutate",
    "mutate",
    "recombine",
    "repair",
    "ea_probe",
]

SUBMUTATIONS = ("swap", "interchange", "reversal")


@dataclass
class EaConfig:
    population_size: int = 100
    budget: int = 10_000
    recombination_rate: float = 0.5
    mutation_rate: float | None = None  # None means 1/m
    submutation: str = "swap"
    epsilon: float = DEFAULT_EPSILON
    seed: int = 0
    parent_fraction: float = 0.5

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.budget < self.population_size:
            raise ValueError("budget must cover the initial population")
        if not 0.0 <= self.recombination_rate <= 1.0:
            raise ValueError("recombination_rate must lie in [0, 1]")
        if self.mutation_rate is not None and not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if self.submutation not in SUBMUTATIONS:
            raise ValueError(f"submutation must be one of {SUBMUTATIONS}")
        if not 0.0 < self.parent_fraction <= 1.0:
            raise ValueError("parent_fraction must lie in (0, 1]")


@dataclass
class EaResult:
    measure: str
    n: int
    m: int
    config: EaConfig
    found: bool
    evaluations_used: int
    best_lambda: float
    witness: np.ndarray | None
    history: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "measure": self.measure,
            "n": self.n,
            "m": self.m,
            "config": asdict(self.config),
            "found": self.found,
            "evaluations_used": self.evaluations_used,
            "best_lambda": self.best_lambda,
            "witness": None if self.witness is None else self.witness.tolist(),
            "history": list(self.history),
        }


def fitness(x, measure) -> float:
    """``lambda_max`` of the reduced distance matrix of solution set ``x``."""
    return cnsd_check(distance_matrix(measure, x)).lambda_max


def swap_mutation(perm: np.ndarray, a: int) -> np.ndarray:
    """Exchange the adjacent entries at (zero-based) positions ``a`` and ``a + 1``."""
    out = np.array(perm, copy=True)
    out[a], out[a + 1] = out[a + 1], out[a]
    return out


def interchange_mutation(perm: np.ndarray, a: int, b: int) -> np.ndarray:
    """Exchange the entries at positions ``a`` and ``b``."""
    out = np.array(perm, copy=True)
    out[a], out[b] = out[b], out[a]
    return out


def reversal_mutation(perm: np.ndarray, a: int, b: int) -> np.ndarray:
    """Reverse the slice ``a..b`` (both ends included, ``a < b``)."""
    out = np.array(perm, copy=True)
    out[a : b + 1] = out[a : b + 1][::-1]
    return out


def submutate(perm: np.ndarray, kind: str, rng: np.random.Generator) -> np.ndarray:
    m = len(perm)
    if m < 2:
        return np.array(perm, copy=True)
    if kind == "swap":
        return swap_mutation(perm, int(rng.integers(m - 1)))
    a, b = sorted(rng.choice(m, size=2, replace=False))
    if kind == "interchange":
        return interchange_mutation(perm, a, b)
    if kind == "reversal":
        return reversal_mutation(perm, a, b)
    raise ValueError(f"unknown submutation {kind!r}")


@lru_cache(maxsize=8)
def _all_perms(m: int) -> np.ndarray:
    return lexicographic_unrank(np.arange(math.factorial(m)), m)


def repair(x, rng: np.random.Generator) -> np.ndarray:
    """Replace repeated members with fresh random permutations not already in the set.

    First occurrences stay where they are.
    """
    x = np.array(x, dtype=np.int64, copy=True)
    n, m = x.shape
    total = math.factorial(m)
    if n > total:
        raise ValueError(f"cannot hold {n} distinct permutations of length {m}")
    seen: set[bytes] = set()
    dup = []
    for i in range(n):
        key = x[i].tobytes()
        if key in seen:
            dup.append(i)
        else:
            seen.add(key)
    if not dup:
        return x
    if total <= 5040:
        pool = _all_perms(m)
        free = [r for r in range(total) if pool[r].tobytes() not in seen]
        picks = rng.choice(len(free), size=len(dup), replace=False)
        for i, k in zip(dup, picks):
            x[i] = pool[free[k]]
        return x
    for i in dup:
        while True:
            p = rng.permutation(m) + 1
            key = p.tobytes()
            if key not in seen:
                seen.add(key)
                x[i] = p
                break
    return x


def mutate(x, submutation: str, mutation_rate: float, rng: np.random.Generator) -> np.ndarray:
    """Submutate each member with probability ``mutation_rate``; at least one member always changes."""
    x = np.array(x, dtype=np.int64, copy=True)
    n = x.shape[0]
    chosen = np.flatnonzero(rng.random(n) < mutation_rate)
    if chosen.size == 0:
        chosen = np.array([rng.integers(n)])
    for j in chosen:
        x[j] = submutate(x[j], submutation, rng)
    return repair(x, rng)


def recombine(x1, x2, rng: np.random.Generator, k: int | None = None) -> np.ndarray:
    """Child with ``k`` members drawn from ``x1`` and ``n - k`` from ``x2``.

    ``k`` is uniform on ``1..n-1`` unless given.  Members are drawn without
    replacement from each parent; duplicates are repaired.
    """
    x1 = np.asarray(x1, dtype=np.int64)
    x2 = np.asarray(x2, dtype=np.int64)
    if x1.shape != x2.shape:
        raise ValueError("parents must have the same shape")
    n = x1.shape[0]
    if n < 2:
        return x1.copy()
    if k is None:
        k = int(rng.integers(1, n))
    if not 0 <= k <= n:
        raise ValueError("k must lie in 0..n")
    a = x1[np.sort(rng.choice(n, size=k, replace=False))]
    b = x2[np.sort(rng.choice(n, size=n - k, replace=False))]
    return repair(np.concatenate([a, b]), rng)


class _Evaluator:
    def __init__(self, measure, budget: int, epsilon: float):
        self.measure = measure
        self.budget = budget
        self.epsilon = epsilon
        self.used = 0
        self.hit: tuple[np.ndarray, float] | None = None

    def __call__(self, sets: list[np.ndarray]) -> np.ndarray:
        """Evaluate in order, stopping at the budget or the first success."""
        room = self.budget - self.used
        sets = sets[:room]
        if not sets:
            return np.empty(0)
        lam = lambda_max_batch(distance_matrices(self.measure, np.stack(sets)))
        over = np.flatnonzero(lam > self.epsilon)
        if over.size:
            first = int(over[0])
            lam = lam[: first + 1]
            self.hit = (sets[first], float(lam[first]))
        self.used += lam.size
        return lam

    @property
    def done(self) -> bool:
        return self.hit is not None or self.used >= self.budget


def ea_probe(measure, n: int, m: int, cfg: EaConfig | None = None, initial_population=None) -> EaResult:
    """Search for a solution set whose distance matrix is not CNSD.

    ``initial_population`` optionally supplies starting sets; the rest of the
    population is filled with random sets.
    """
    cfg = cfg or EaConfig()
    mm = get_measure(measure)
    if n < 2:
        raise ValueError("solution sets need n >= 2")
    if m <= 20 and n > math.factorial(m):
        raise ValueError(f"n={n} exceeds the {math.factorial(m)} permutations of length {m}")
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    rate = cfg.mutation_rate if cfg.mutation_rate is not None else 1.0 / m
    r = cfg.population_size
    evaluate = _Evaluator(mm, cfg.budget, cfg.epsilon)

    pop: list[np.ndarray] = []
    for x in initial_population or []:
        x = np.asarray(x, dtype=np.int64)
        if x.shape != (n, m):
            raise ValueError(f"initial sets must have shape {(n, m)}")
        pop.append(repair(x, rng))
    pop = pop[:r]
    if len(pop) < r:
        pop.extend(random_solution_sets(m, n, r - len(pop), rng))
    fit = evaluate(pop)
    pop = pop[: fit.size]
    history = [float(fit.max())]

    n_parents = max(1, int(math.ceil(cfg.parent_fraction * r)))
    while not evaluate.done:
        order = np.argsort(-fit, kind="stable")
        parents = [pop[i] for i in order[:n_parents]]
        children = []
        for _ in range(r):
            p1 = parents[rng.integers(n_parents)]
            if rng.random() < cfg.recombination_rate:
                p2 = parents[rng.integers(n_parents)]
                child = recombine(p1, p2, rng)
            else:
                child = p1
            children.append(mutate(child, cfg.submutation, rate, rng))
        child_fit = evaluate(children)
        pop = pop + children[: child_fit.size]
        fit = np.concatenate([fit, child_fit])
        keep = np.argsort(-fit, kind="stable")[:r]
        pop = [pop[i] for i in keep]
        fit = fit[keep]
        history.append(float(fit.max()))

    if evaluate.hit is not None:
        witness, best = evaluate.hit
        check = cnsd_check(distance_matrix(mm, witness), cfg.epsilon)
        if check.is_cnsd:
            raise RuntimeError("witness failed re-verification")
        return EaResult(mm.id, n, m, cfg, True, evaluate.used, check.lambda_max, witness.copy(), history)
    best_i = int(np.argmax(fit))
    return EaResult(mm.id, n, m, cfg, False, evaluate.used, float(fit[best_i]), None, history)
