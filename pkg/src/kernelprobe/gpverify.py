"""Gaussian-process regression with the exponential distance kernel.

Used to check whether sets with a large ``lambda_max`` also give worse
models.  The model is ordinary kriging: constant mean, kernel
``exp(-theta * d)``, with ``mu`` and ``sigma^2`` profiled out of the
likelihood so that only ``log10(theta)`` is searched (DIRECT-L, bounded
evaluation budget).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import direct

from .definiteness import cnsd_check
from .distances import (
    distance,
    distance_matrices,
    distance_matrix,
    get_measure,
    lexicographic_ranks,
    lexicographic_unrank,
)
from .sampler import random_solution_set

__all__ = [
    "NUGGETS",
    "LOG10_THETA_BOUNDS",
    "GpFitError",
    "GpModel",
    "RmseRun",
    "make_dataset",
    "concentrated_loglik",
    "factorize",
    "fit_gp",
    "predict",
    "rmse_experiment",
]

NUGGETS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4)
LOG10_THETA_BOUNDS = (-3.0, 3.0)
_PENALTY = 1e12


class GpFitError(RuntimeError):
    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


def make_dataset(measure, n: int, m: int, rng: np.random.Generator):
    """Random training set of ``n`` distinct permutations and targets ``d(x, identity)``."""
    mm = get_measure(measure)
    x = random_solution_set(m, n, rng)
    ref = np.arange(1, m + 1)
    y = np.array([distance(mm, xi, ref) for xi in x])
    return x, y


def factorize(k: np.ndarray):
    """Cholesky factor of ``k + nugget * I`` for the smallest workable nugget.

    Returns ``(factor, nugget)``; ``factor`` is ``None`` when every nugget fails.
    """
    eye = np.eye(k.shape[0])
    for nug in NUGGETS:
        try:
            return cho_factor(k + nug * eye, lower=True), nug
        except np.linalg.LinAlgError:
            continue
    return None, None


def _profile(factor, y: np.ndarray):
    ones = np.ones_like(y)
    ki_y = cho_solve(factor, y)
    ki_1 = cho_solve(factor, ones)
    mu = float(ones @ ki_y) / float(ones @ ki_1)
    r = y - mu
    sigma2 = float(r @ cho_solve(factor, r)) / y.size
    return mu, sigma2


def concentrated_loglik(d: np.ndarray, y: np.ndarray, theta: float, mu: float | None = None, sigma2: float | None = None):
    """Log-likelihood (up to constants) at ``theta`` with ``mu``/``sigma^2`` profiled out.

    Passing ``mu`` or ``sigma2`` evaluates the full likelihood at those values
    instead of their maximizers.  Returns ``(loglik, nugget)``; ``loglik`` is
    ``-inf`` when the kernel matrix cannot be factorized.
    """
    k = np.exp(-theta * d)
    factor, nug = factorize(k)
    if factor is None:
        return -np.inf, None
    n = y.size
    if mu is None:
        mu, _ = _profile(factor, y)
    r = y - mu
    quad = float(r @ cho_solve(factor, r))
    s2 = quad / n if sigma2 is None else sigma2
    if not s2 > 0:
        return -np.inf, nug
    logdet = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    return -0.5 * n * math.log(s2) - 0.5 * logdet - 0.5 * quad / s2, nug


@dataclass
class GpModel:
    x: np.ndarray
    y: np.ndarray
    measure: str
    theta: float
    mu_hat: float
    sigma2_hat: float
    nugget: float
    loglik: float = float("nan")
    _factor: tuple | None = field(default=None, repr=False)
    _weights: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def at_theta(cls, x, y, measure, theta: float) -> "GpModel":
        """Condition the model on ``(x, y)`` at a fixed ``theta`` without fitting."""
        x = np.atleast_2d(np.asarray(x, dtype=np.int64))
        y = np.asarray(y, dtype=float)
        mm = get_measure(measure)
        d = distance_matrix(mm, x) if x.shape[0] > 1 else np.zeros((1, 1))
        factor, nug = factorize(np.exp(-theta * d))
        if factor is None:
            raise GpFitError("kernel matrix is not positive definite", {"theta": theta})
        mu, s2 = _profile(factor, y)
        model = cls(x, y, mm.id, theta, mu, s2, nug, _factor=factor)
        model._weights = cho_solve(factor, y - mu)
        return model

    @property
    def fitted(self) -> bool:
        return self._weights is not None


def fit_gp(x, y, measure, likelihood_budget: int = 1000) -> GpModel:
    """Maximum-likelihood ``theta`` over ``log10(theta) in [-3, 3]``."""
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=float)
    mm = get_measure(measure)
    if x.shape[0] < 3:
        raise ValueError("fitting needs at least three training points")
    if y.shape != (x.shape[0],):
        raise ValueError("y must hold one value per training point")
    if np.allclose(y, y[0]):
        raise ValueError("training targets are constant")
    d = distance_matrix(mm, x)
    tried = {"evaluations": 0, "failed": 0}
    best = {"ll": -np.inf, "log_theta": None}

    def objective(v):
        tried["evaluations"] += 1
        ll, _ = concentrated_loglik(d, y, 10.0 ** float(v[0]))
        if not np.isfinite(ll):
            tried["failed"] += 1
            return _PENALTY
        if ll > best["ll"]:
            best["ll"], best["log_theta"] = ll, float(v[0])
        return -ll

    direct(objective, [LOG10_THETA_BOUNDS], maxfun=likelihood_budget, maxiter=likelihood_budget, locally_biased=True)
    if best["log_theta"] is None:
        raise GpFitError("no theta gave a factorizable kernel matrix", tried)
    model = GpModel.at_theta(x, y, mm, 10.0 ** best["log_theta"])
    model.loglik = best["ll"]
    return model


def predict(model: GpModel, x) -> np.ndarray | float:
    """Kriging predictor ``mu + psi^T K^{-1} (y - mu)`` at one or many permutations."""
    if model is None or not model.fitted:
        raise RuntimeError("model has not been fitted")
    pts = np.asarray(x, dtype=np.int64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    n = model.x.shape[0]
    pairs = np.empty((pts.shape[0] * n, 2, pts.shape[1]), np.int64)
    pairs[:, 0] = np.repeat(pts, n, axis=0)
    pairs[:, 1] = np.tile(model.x, (pts.shape[0], 1))
    dist = distance_matrices(model.measure, pairs)[:, 0, 1].reshape(pts.shape[0], n)
    out = model.mu_hat + np.exp(-model.theta * dist) @ model._weights
    return float(out[0]) if single else out


@dataclass
class RmseRun:
    measure: str
    n: int
    m: int
    seed: int
    lambda_n: float
    theta: float
    nugget: float
    rmse: float
    fit_status: str

    def row(self) -> dict:
        return dict(self.__dict__)


def _test_points(m: int, train: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    total = math.factorial(m)
    taken = set(lexicographic_ranks(train).tolist())
    if len(taken) >= total:
        raise ValueError("no permutations left outside the training set")
    ranks = np.empty(0, np.int64)
    while ranks.size < size:
        draw = rng.integers(0, total, size=2 * size)
        draw = draw[~np.isin(draw, list(taken))]
        ranks = np.concatenate([ranks, draw])
    return lexicographic_unrank(ranks[:size], m)


def rmse_experiment(measure, n: int, m: int, test_size: int = 1000, seed: int = 0, likelihood_budget: int = 1000) -> RmseRun:
    """Fit on a random set, report test RMSE alongside the set's ``lambda_max``.

    Test permutations are drawn uniformly with replacement from those not in
    the training set.
    """
    mm = get_measure(measure)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    x, y = make_dataset(mm, n, m, rng)
    lam = cnsd_check(distance_matrix(mm, x)).lambda_max
    try:
        model = fit_gp(x, y, mm, likelihood_budget)
    except (GpFitError, ValueError) as exc:
        return RmseRun(mm.id, n, m, seed, lam, float("nan"), float("nan"), float("nan"), f"failed: {exc}")
    test = _test_points(m, x, test_size, rng)
    ref = np.arange(1, m + 1)
    truth = distance_matrices(mm, np.stack([test, np.broadcast_to(ref, test.shape)], axis=1))[:, 0, 1]
    pred = predict(model, test)
    rmse = float(np.sqrt(np.mean((pred - truth) ** 2)))
    return RmseRun(mm.id, n, m, seed, lam, model.theta, model.nugget, rmse, "ok")
