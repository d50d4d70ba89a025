"""Shared numerical primitives: polynomial bases, (weighted) least squares,
Gaussian log-densities.

All functions here are pure; every fitting algorithm in the package is built
on top of them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteValueError, NonMonotonicTimeError, RankDeficientError

# Applied wherever a variance estimate is formed; exact interpolation would
# otherwise give sigma2 = 0 and an unbounded log-likelihood.
VARIANCE_FLOOR = 1e-8


@dataclass(frozen=True)
class Signal:
    """A univariate time series: strictly increasing times t and values x."""

    t: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if t.ndim != 1 or x.ndim != 1 or len(t) != len(x):
            raise ValueError("t and x must be 1-d arrays of equal length")
        if len(t) < 1:
            raise ValueError("signal must contain at least one sample")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(x))):
            raise NonFiniteValueError("signal contains non-finite values")
        steps = np.diff(t)
        if np.any(steps <= 0):
            raise NonMonotonicTimeError(int(np.argmax(steps <= 0)) + 1)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return len(self.t)


@dataclass(frozen=True)
class GaussianComponent:
    """One polynomial regression component: coefficients and noise variance."""

    beta: np.ndarray
    sigma2: float

    def __post_init__(self):
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float))
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")

    def mean(self, t) -> np.ndarray:
        """Polynomial mean curve evaluated at times t."""
        return design_matrix(t, len(self.beta) - 1) @ self.beta


def polynomial_basis(t: float, p: int) -> np.ndarray:
    """Covariate vector (1, t, t^2, ..., t^p)."""
    if p < 0:
        raise ValueError("degree must be non-negative")
    return np.asarray(t, dtype=float) ** np.arange(p + 1)


def design_matrix(t, p: int) -> np.ndarray:
    """n x (p+1) matrix whose row i is polynomial_basis(t_i, p).

    Accepts a Signal or an array of times.
    """
    if isinstance(t, Signal):
        t = t.t
    t = np.asarray(t, dtype=float)
    return np.vander(t, p + 1, increasing=True)


def weighted_least_squares(T: np.ndarray, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """argmin_beta sum_i w_i (x_i - beta^T r_i)^2.

    Solved through an orthogonal decomposition of the sqrt(w)-scaled design
    (stable for ill-conditioned polynomial bases), not raw normal equations.

    Raises RankDeficientError when the weighted design has effective rank
    below the number of coefficients.
    """
    T = np.asarray(T, dtype=float)
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    if w.sum() <= 0:
        raise ValueError("weights must have positive sum")
    sw = np.sqrt(w)
    beta, _, rank, _ = np.linalg.lstsq(T * sw[:, None], x * sw, rcond=None)
    if rank < T.shape[1]:
        raise RankDeficientError(
            f"weighted design has rank {rank} < {T.shape[1]} coefficients"
        )
    return beta


def gaussian_log_density(x, mean, sigma2):
    """log N(x; mean, sigma2), elementwise."""
    x = np.asarray(x, dtype=float)
    mean = np.asarray(mean, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    if np.any(sigma2 <= 0):
        raise ValueError("sigma2 must be positive")
    return -0.5 * (np.log(2.0 * np.pi) + np.log(sigma2) + (x - mean) ** 2 / sigma2)
