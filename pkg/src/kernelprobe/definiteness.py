"""Matrix definiteness: PSD checks, conditional negative definiteness, distance kernels.

A symmetric matrix ``D`` is conditionally negative semi-definite (CNSD) when
``c @ D @ c <= 0`` for every ``c`` with ``sum(c) == 0``.  :func:`cnsd_check`
decides this by centering ``D`` with ``Q = I - ee^T/n``, dropping the last
row and column, and testing the remaining block for negative
semi-definiteness.  The block's largest eigenvalue, ``lambda_max``, is the
quantity every probe in this package tracks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distances import DistanceMeasure, distance_matrix, get_measure

__all__ = [
    "DEFAULT_EPSILON",
    "CnsdTransform",
    "CnsdReport",
    "PsdReport",
    "KernelConfig",
    "symmetric_eigenvalues",
    "jacobi_eigh",
    "cnsd_transform",
    "anchored_reduction",
    "cnsd_check",
    "lambda_max_batch",
    "exp_kernel",
    "kernel_matrix",
    "psd_check",
]

DEFAULT_EPSILON = 1e-10
SYMMETRY_TOL = 1e-12


def _check_symmetric(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    if a.size and not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    if a.size and float(np.abs(a - a.T).max()) > SYMMETRY_TOL * scale:
        raise ValueError(f"{name} is not symmetric")
    return a


def jacobi_eigh(a, tol: float = 1e-12, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi rotations for a dense symmetric matrix.

    Sweeps until the off-diagonal Frobenius norm drops below
    ``tol * ||a||_F``.  Returns ascending eigenvalues and the matching
    eigenvector columns.
    """
    a = np.array(_check_symmetric(a), dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    norm = np.linalg.norm(a)
    if n < 2 or norm == 0.0:
        order = np.argsort(np.diag(a), kind="stable")
        return np.diag(a)[order].copy(), v[:, order]
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(tau) > 1e150:
                    t = 0.5 / tau
                else:
                    t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # A <- J^T A J applied to rows/columns p and q
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def symmetric_eigenvalues(a, eigenvectors: bool = False, method: str = "lapack"):
    """Full ascending spectrum of a symmetric matrix.

    ``method="lapack"`` delegates to :func:`numpy.linalg.eigh`;
    ``method="jacobi"`` runs :func:`jacobi_eigh`.  With ``eigenvectors=True``
    a ``(w, V)`` pair is returned such that ``a ~= V @ diag(w) @ V.T``.
    """
    a = _check_symmetric(a)
    if method == "jacobi":
        w, v = jacobi_eigh(a)
    elif method == "lapack":
        if not eigenvectors:
            return np.linalg.eigvalsh(a)
        w, v = np.linalg.eigh(a)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    return (w, v) if eigenvectors else w


@dataclass(frozen=True)
class CnsdTransform:
    """Centered matrix ``B = Q D Q`` and its leading ``(n-1)`` block."""

    n: int
    projected: np.ndarray
    reduced: np.ndarray


@dataclass(frozen=True)
class CnsdReport:
    lambda_max: float
    spectrum: np.ndarray
    epsilon: float
    verdict: str

    @property
    def is_cnsd(self) -> bool:
        return self.verdict == "cnsd"


@dataclass(frozen=True)
class PsdReport:
    min_eigenvalue: float
    epsilon: float
    verdict: str

    @property
    def is_psd(self) -> bool:
        return self.verdict == "psd"


def cnsd_transform(d) -> CnsdTransform:
    """Center ``d`` on both sides and cut off the last row and column."""
    d = _check_symmetric(d, "distance matrix")
    n = d.shape[0]
    if n < 2:
        raise ValueError("conditional definiteness needs n >= 2")
    q = np.eye(n) - np.full((n, n), 1.0 / n)
    b = q @ d @ q
    b = 0.5 * (b + b.T)
    return CnsdTransform(n=n, projected=b, reduced=b[: n - 1, : n - 1].copy())


def anchored_reduction(d) -> np.ndarray:
    """Reduction ``M_ij = D_ij - D_in - D_nj + D_nn`` over ``i, j < n``.

    Congruent to the centered reduction, so it has the same inertia and
    therefore the same CNSD verdict, though different eigenvalues.
    """
    d = _check_symmetric(d, "distance matrix")
    n = d.shape[0]
    if n < 2:
        raise ValueError("conditional definiteness needs n >= 2")
    last = d[:-1, -1]
    return d[:-1, :-1] - last[:, None] - last[None, :] + d[-1, -1]


def cnsd_check(d, epsilon: float = DEFAULT_EPSILON, method: str = "lapack") -> CnsdReport:
    """Decide whether distance matrix ``d`` is CNSD.

    The verdict is ``"not_cnsd"`` exactly when the largest eigenvalue of the
    reduced matrix exceeds ``epsilon``.
    """
    reduced = cnsd_transform(d).reduced
    spectrum = np.asarray(symmetric_eigenvalues(reduced, method=method))
    lam = float(spectrum[-1])
    return CnsdReport(
        lambda_max=lam,
        spectrum=spectrum,
        epsilon=epsilon,
        verdict="not_cnsd" if lam > epsilon else "cnsd",
    )


def lambda_max_batch(ds) -> np.ndarray:
    """Largest reduced-matrix eigenvalue for each matrix in a ``(t, n, n)`` stack."""
    ds = np.asarray(ds, dtype=float)
    if ds.ndim != 3 or ds.shape[1] != ds.shape[2]:
        raise ValueError("expected a stack of square matrices")
    if ds.shape[1] < 2:
        raise ValueError("conditional definiteness needs n >= 2")
    row = ds.mean(axis=2, keepdims=True)
    col = ds.mean(axis=1, keepdims=True)
    tot = ds.mean(axis=(1, 2), keepdims=True)
    b = ds - row - col + tot
    reduced = b[:, :-1, :-1]
    reduced = 0.5 * (reduced + np.swapaxes(reduced, 1, 2))
    return np.linalg.eigvalsh(reduced)[:, -1]


@dataclass(frozen=True)
class KernelConfig:
    theta: float
    measure: DistanceMeasure = field(default_factory=lambda: get_measure("ham"))

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError("theta must be positive")
        object.__setattr__(self, "measure", get_measure(self.measure))


def exp_kernel(d, theta: float) -> np.ndarray:
    """Elementwise ``exp(-theta * d)``."""
    if not theta > 0:
        raise ValueError("theta must be positive")
    return np.exp(-theta * np.asarray(d, dtype=float))


def kernel_matrix(cfg: KernelConfig, perms) -> np.ndarray:
    """Exponential distance kernel matrix ``K_ij = exp(-theta d(x_i, x_j))``."""
    return exp_kernel(distance_matrix(cfg.measure, perms), cfg.theta)


def psd_check(k, epsilon: float = DEFAULT_EPSILON) -> PsdReport:
    k = _check_symmetric(k, "kernel matrix")
    lo = float(np.linalg.eigvalsh(k)[0])
    return PsdReport(min_eigenvalue=lo, epsilon=epsilon, verdict="not_psd" if lo < -epsilon else "psd")
