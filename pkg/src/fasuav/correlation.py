"""Jakes spatial correlation across fluid-antenna ports and its eigenstructure."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, ParameterError
from .specfun import bessel_j0

__all__ = [
    "DEFAULT_RANK_THRESHOLD",
    "JakesConfig",
    "EigenModel",
    "build_jakes",
    "jacobi_eigh",
    "eigen_decompose",
    "effective_rank",
    "jakes_eigen_model",
    "feasible_threshold_interval",
    "calibrate_rank_threshold",
    "REFERENCE_RANK_TABLE",
]

# (N, W) -> M pairs the default threshold must reproduce
REFERENCE_RANK_TABLE = (((4, 1.0), 4), ((8, 1.5), 7), ((16, 1.5), 8))

# Geometric centre of the feasible interval for REFERENCE_RANK_TABLE,
# ~[1.84e-6, 6.06e-6); see calibrate_rank_threshold.
DEFAULT_RANK_THRESHOLD = 3.3e-6


@dataclass(frozen=True)
class JakesConfig:
    """``ports`` positions spread evenly over ``aperture`` wavelengths."""

    ports: int
    aperture: float

    def __post_init__(self):
        if int(self.ports) != self.ports or self.ports < 2:
            raise ParameterError(f"need at least 2 ports, got {self.ports}")
        if not (self.aperture > 0 and math.isfinite(self.aperture)):
            raise ParameterError(f"aperture must be positive, got {self.aperture}")


@dataclass(frozen=True)
class EigenModel:
    """Retained eigenvalues (descending) of the port covariance.

    ``full`` keeps the complete spectrum before truncation.
    """

    eigenvalues: tuple
    threshold: float
    full: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", tuple(float(v) for v in self.eigenvalues))
        object.__setattr__(self, "full", tuple(float(v) for v in self.full))
        lam = self.eigenvalues
        if not lam:
            raise ParameterError("EigenModel needs at least one eigenvalue")
        if any(v <= 0 for v in lam):
            raise ParameterError("retained eigenvalues must be positive")
        if any(x < y for x, y in zip(lam, lam[1:])):
            raise ParameterError("eigenvalues must be sorted descending")

    @property
    def rank(self):
        return len(self.eigenvalues)

    M = rank

    @classmethod
    def from_eigenvalues(cls, eigenvalues):
        """Model that keeps exactly the given branch weights."""
        lam = sorted((float(v) for v in eigenvalues), reverse=True)
        return cls(tuple(lam), 0.0, tuple(lam))


def build_jakes(cfg):
    """Covariance ``J[p, q] = J0(2 pi |p - q| W / (N - 1))``."""
    n = cfg.ports
    lags = np.arange(n)
    col = bessel_j0(2.0 * np.pi * lags * cfg.aperture / (n - 1))
    return col[np.abs(lags[:, None] - lags[None, :])]


def jacobi_eigh(a, tol=1e-12, max_sweeps=100):
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi.

    Returns ``(eigenvalues, vectors)`` sorted by descending eigenvalue, with
    ``a = V diag(w) V^T``.  Sweeps stop once the off-diagonal Frobenius
    norm is at most ``tol * N``.
    """
    a = np.array(a, dtype=float, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = math.sqrt(np.sum(a[offdiag] ** 2))
        if off <= tol * n:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise ConvergenceError("Jacobi sweeps did not converge")
    w = np.diag(a).copy()
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


def eigen_decompose(cov):
    """Full spectrum (descending) and orthonormal eigenvectors of ``cov``."""
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ParameterError("covariance must be square")
    scale = max(np.max(np.abs(cov)), 1.0)
    if np.max(np.abs(cov - cov.T)) > 1e-12 * scale:
        raise ParameterError("covariance must be symmetric")
    return jacobi_eigh(0.5 * (cov + cov.T))


def effective_rank(eigenvalues, threshold=DEFAULT_RANK_THRESHOLD):
    """Keep eigenvalues larger than ``threshold * lambda_1``.

    The retained values are not renormalised.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.size == 0:
        raise ParameterError("empty eigenvalue list")
    if np.any(np.diff(lam) > 1e-12 * max(abs(lam[0]), 1.0)):
        raise ParameterError("eigenvalues must be sorted descending")
    if lam[0] <= 0:
        raise ParameterError("largest eigenvalue must be positive")
    if np.any(lam < -1e-9 * lam[0]):
        raise ParameterError("covariance is not positive semidefinite")
    lam = np.clip(lam, 0.0, None)
    kept = lam[lam > threshold * lam[0]]
    return EigenModel(tuple(kept), float(threshold), tuple(lam))


def jakes_eigen_model(ports, aperture, threshold=DEFAULT_RANK_THRESHOLD):
    """Convenience: Jakes covariance -> spectrum -> truncated model."""
    w, _ = eigen_decompose(build_jakes(JakesConfig(ports, aperture)))
    return effective_rank(w, threshold)


def feasible_threshold_interval(table=REFERENCE_RANK_TABLE):
    """Interval ``[lo, hi)`` of relative thresholds reproducing ``table``."""
    lo, hi = 0.0, math.inf
    for (n, w), m in table:
        lam, _ = eigen_decompose(build_jakes(JakesConfig(n, w)))
        rel = np.clip(lam / lam[0], 0.0, None)
        # need rel[m-1] > tau >= rel[m]
        hi = min(hi, rel[m - 1])
        if m < n:
            lo = max(lo, rel[m])
    if not lo < hi:
        raise ParameterError("no single threshold reproduces the rank table")
    return lo, hi


def calibrate_rank_threshold(table=REFERENCE_RANK_TABLE):
    """Geometric centre of :func:`feasible_threshold_interval`."""
    lo, hi = feasible_threshold_interval(table)
    if lo == 0.0:
        return hi / 10.0
    return math.sqrt(lo * hi)
