"""Regression with a hidden logistic process.

K polynomial components whose mixing proportions vary over time through a
softmax of a degree-q polynomial in t. Fitting alternates an E step
(posterior responsibilities), weighted least squares for the component
parameters, and an exact-Hessian Newton (multi-class IRLS) solve for the
logistic coefficients. Also provides denoising, hard labeling, BIC, and a
BIC-driven model-selection sweep.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .core import (
    VARIANCE_FLOOR,
    GaussianComponent,
    Signal,
    design_matrix,
    gaussian_log_density,
    weighted_least_squares,
)
from .errors import EmptyComponentError
from .piecewise import uniform_partition

_STARVATION_TOL = 1e-10


@dataclass(frozen=True)
class LogisticProcess:
    """Time-varying mixing weights: softmax over K linear scores in
    (1, t, ..., t^q). The last coefficient vector is pinned to zero so the
    parametrization is identifiable."""

    w: np.ndarray  # (K, q+1); w[K-1] is identically zero

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 2 or not np.all(np.isfinite(w)):
            raise ValueError("w must be a finite (K, q+1) array")
        if np.any(w[-1] != 0.0):
            raise ValueError("reference coefficient vector w[K-1] must be zero")
        object.__setattr__(self, "w", w)

    @property
    def K(self) -> int:
        return self.w.shape[0]

    @property
    def q(self) -> int:
        return self.w.shape[1] - 1


@dataclass(frozen=True)
class RhlpParams:
    """Full parameter set: logistic process plus K regression components."""

    logistic: LogisticProcess
    components: tuple[GaussianComponent, ...]

    def __post_init__(self):
        if len(self.components) != self.logistic.K:
            raise ValueError("component count must match logistic process K")

    @property
    def K(self) -> int:
        return self.logistic.K

    @property
    def p(self) -> int:
        return len(self.components[0].beta) - 1

    @property
    def q(self) -> int:
        return self.logistic.q

    @property
    def betas(self) -> np.ndarray:
        return np.stack([c.beta for c in self.components])

    @property
    def sigma2s(self) -> np.ndarray:
        return np.array([c.sigma2 for c in self.components])


@dataclass(frozen=True)
class FitReport:
    """Everything produced by one EM fit."""

    params: RhlpParams
    log_likelihood_trace: tuple[float, ...]
    bic: float
    labels: np.ndarray
    denoised: np.ndarray
    runtime_seconds: float
    converged: bool
    em_iterations: int
    seed: int | None = None

    @property
    def log_likelihood(self) -> float:
        return self.log_likelihood_trace[-1]


def _logsumexp_rows(scores: np.ndarray) -> np.ndarray:
    """Row-wise log-sum-exp with max shift. Faster than scipy's general
    implementation, which dominated EM profiles at n=1000."""
    shift = scores.max(axis=1, keepdims=True)
    return shift + np.log(np.exp(scores - shift).sum(axis=1, keepdims=True))


def _log_proportions(w: np.ndarray, t: np.ndarray) -> np.ndarray:
    """log pi_ik, computed with max-shifted exponentials."""
    V = design_matrix(t, w.shape[1] - 1)
    scores = V @ w.T  # (n, K)
    return scores - _logsumexp_rows(scores)


def logistic_proportions(logistic: LogisticProcess, t) -> np.ndarray:
    """n x K matrix of mixing proportions pi_ik; rows sum to 1."""
    if isinstance(t, Signal):
        t = t.t
    return np.exp(_log_proportions(logistic.w, np.asarray(t, dtype=float)))


def _log_joint(params: RhlpParams, signal: Signal) -> np.ndarray:
    """log [pi_ik * N(x_i; beta_k^T r_i, sigma2_k)], an (n, K) matrix."""
    T = design_matrix(signal.t, params.p)
    means = T @ params.betas.T  # (n, K)
    logdens = gaussian_log_density(signal.x[:, None], means, params.sigma2s[None, :])
    return _log_proportions(params.logistic.w, signal.t) + logdens


def mixture_log_likelihood(params: RhlpParams, signal: Signal) -> float:
    """Observed-data log-likelihood: per-sample log-sum-exp over components."""
    return float(np.sum(_logsumexp_rows(_log_joint(params, signal))))


def e_step(params: RhlpParams, signal: Signal) -> np.ndarray:
    """Posterior responsibilities tau_ik, row-normalized in log space."""
    lj = _log_joint(params, signal)
    return np.exp(lj - _logsumexp_rows(lj))


def m_step_regression(
    tau: np.ndarray,
    signal: Signal,
    p: int,
    variance_floor: float = VARIANCE_FLOOR,
    iteration: int = -1,
) -> tuple[GaussianComponent, ...]:
    """Component updates: beta_k by tau-weighted least squares, sigma2_k as
    the tau-weighted mean squared residual under the new beta_k (floored)."""
    T = design_matrix(signal.t, p)
    comps = []
    for k in range(tau.shape[1]):
        wk = tau[:, k]
        mass = wk.sum()
        if mass < _STARVATION_TOL:
            raise EmptyComponentError(k + 1, iteration)
        beta = weighted_least_squares(T, signal.x, wk)
        sse = float(wk @ (signal.x - T @ beta) ** 2)
        comps.append(GaussianComponent(beta, max(sse / mass, variance_floor)))
    return tuple(comps)


# --- IRLS (exact-Hessian Newton) for the logistic coefficients -------------
#
# The free parameters are the first K-1 coefficient vectors, stacked into one
# vector of length (K-1)(q+1); the K-th vector stays zero.


def _stack(w: np.ndarray) -> np.ndarray:
    return w[:-1].ravel()


def _unstack(flat: np.ndarray, K: int, q: int) -> np.ndarray:
    w = np.zeros((K, q + 1))
    w[:-1] = flat.reshape(K - 1, q + 1)
    return w


def _log_proportions_v(w: np.ndarray, V: np.ndarray) -> np.ndarray:
    """log pi_ik against a precomputed logistic design matrix."""
    scores = V @ w.T
    return scores - _logsumexp_rows(scores)


def _gradient_v(pi: np.ndarray, tau: np.ndarray, V: np.ndarray) -> np.ndarray:
    return ((tau - pi)[:, :-1].T @ V).ravel()


def _hessian_v(pi: np.ndarray, V: np.ndarray) -> np.ndarray:
    K = pi.shape[1]
    q1 = V.shape[1]
    H = np.empty(((K - 1) * q1, (K - 1) * q1))
    for k in range(K - 1):
        for l in range(k, K - 1):
            coef = pi[:, k] * ((k == l) - pi[:, l])
            block = -(V * coef[:, None]).T @ V
            H[k * q1:(k + 1) * q1, l * q1:(l + 1) * q1] = block
            H[l * q1:(l + 1) * q1, k * q1:(k + 1) * q1] = block.T
    return H


def irls_objective_q1(w: np.ndarray, tau: np.ndarray, t: np.ndarray) -> float:
    """Q1(w) = sum_ik tau_ik log pi_ik(w); always <= 0."""
    return float(np.sum(tau * _log_proportions(w, np.asarray(t, dtype=float))))


def irls_gradient(w: np.ndarray, tau: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Stacked gradient of Q1; block k is sum_i (tau_ik - pi_ik) v_i."""
    t = np.asarray(t, dtype=float)
    V = design_matrix(t, w.shape[1] - 1)
    pi = np.exp(_log_proportions_v(w, V))
    return _gradient_v(pi, tau, V)


def irls_hessian(w: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Exact Hessian of Q1: block (k, l) is -sum_i pi_ik (delta_kl - pi_il)
    v_i v_i^T. Symmetric negative semi-definite."""
    t = np.asarray(t, dtype=float)
    V = design_matrix(t, w.shape[1] - 1)
    pi = np.exp(_log_proportions_v(w, V))
    return _hessian_v(pi, V)


def irls_solve(
    w_init: np.ndarray,
    tau: np.ndarray,
    t: np.ndarray,
    delta: float = 1e-6,
    max_iter: int = 50,
    max_halvings: int = 30,
) -> np.ndarray:
    """Maximize Q1 by Newton steps with the exact Hessian. A full step that
    decreases Q1 is halved (up to max_halvings); a singular Hessian is
    ridge-damped instead of aborting. Q1 never decreases across accepted
    iterations."""
    t = np.asarray(t, dtype=float)
    K, q1 = w_init.shape
    if K == 1:
        return w_init.copy()
    V = design_matrix(t, q1 - 1)
    w = w_init.copy()
    logpi = _log_proportions_v(w, V)
    q_old = float(np.sum(tau * logpi))
    for _ in range(max_iter):
        pi = np.exp(logpi)
        g = _gradient_v(pi, tau, V)
        H = _hessian_v(pi, V)
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            lam = 1e-6 * max(1.0, abs(np.trace(H)) / H.shape[0])
            step = np.linalg.solve(H - lam * np.eye(H.shape[0]), g)
        flat = _stack(w)
        alpha = 1.0
        w_new = w
        q_new = q_old
        for _ in range(max_halvings + 1):
            cand = _unstack(flat - alpha * step, K, q1 - 1)
            logpi_cand = _log_proportions_v(cand, V)
            q_cand = float(np.sum(tau * logpi_cand))
            if np.isfinite(q_cand) and q_cand >= q_old:
                w_new, q_new, logpi = cand, q_cand, logpi_cand
                break
            alpha *= 0.5
        if q_new - q_old <= delta:
            return w_new
        w, q_old = w_new, q_new
    return w


# --- EM driver --------------------------------------------------------------


def _uniform_segment_init(
    signal: Signal, K: int, p: int, q: int, cuts: np.ndarray | None = None
) -> RhlpParams:
    """Paper-style initialization: zero logistic coefficients, unit variances,
    and per-segment OLS coefficients on a uniform (or supplied) partition."""
    if cuts is None:
        cuts = uniform_partition(signal.n, K, min_len=1).gamma
    T = design_matrix(signal.t, p)
    comps = []
    for k in range(K):
        sl = slice(cuts[k], cuts[k + 1])
        beta, _, _, _ = np.linalg.lstsq(T[sl], signal.x[sl], rcond=None)
        comps.append(GaussianComponent(beta, 1.0))
    return RhlpParams(LogisticProcess(np.zeros((K, q + 1))), tuple(comps))


def _perturbed_cuts(rng: np.random.Generator, n: int, K: int) -> np.ndarray:
    """Uniform cut indices jittered by up to a quarter segment each way."""
    base = np.rint(np.linspace(0, n, K + 1)).astype(int)
    jitter = max(1, n // (4 * K))
    for _ in range(1000):
        cuts = base.copy()
        cuts[1:K] = base[1:K] + rng.integers(-jitter, jitter + 1, size=K - 1)
        if np.all(np.diff(cuts) >= 1):
            return cuts
    return base


def _em_once(
    signal: Signal,
    init: RhlpParams,
    epsilon: float,
    delta: float,
    max_iter: int,
    max_irls_iter: int,
    variance_floor: float,
) -> tuple[RhlpParams, list[float], bool, int]:
    params = init
    trace: list[float] = []
    converged = False
    T = design_matrix(signal.t, init.p)
    V = design_matrix(signal.t, init.q)
    for m in range(max_iter):
        lj = _log_proportions_v(params.logistic.w, V) + gaussian_log_density(
            signal.x[:, None], T @ params.betas.T, params.sigma2s[None, :]
        )
        per_sample = _logsumexp_rows(lj)
        ll = float(per_sample.sum())
        trace.append(ll)
        if m > 0 and ll - trace[-2] < epsilon:
            converged = True
            break
        tau = np.exp(lj - per_sample)
        comps = m_step_regression(tau, signal, params.p, variance_floor, iteration=m)
        w = irls_solve(params.logistic.w, tau, signal.t, delta, max_irls_iter)
        params = RhlpParams(LogisticProcess(w), comps)
    else:
        trace.append(mixture_log_likelihood(params, signal))
    return params, trace, converged, len(trace) - 1


def em_fit(
    signal: Signal,
    K: int,
    p: int,
    q: int,
    epsilon: float = 1e-6,
    delta: float = 1e-6,
    max_iter: int = 1000,
    max_irls_iter: int = 50,
    init_strategy: str = "uniform",
    n_restarts: int = 0,
    seed: int | None = None,
    variance_floor: float = VARIANCE_FLOOR,
) -> FitReport:
    """Fit the model by EM until the log-likelihood increment drops below
    epsilon. init_strategy "uniform" follows the standard recipe (uniform
    segments, zero logistic coefficients, unit variances); "random" adds
    n_restarts extra runs from jittered uniform cuts and keeps the best
    final likelihood. Deterministic given the seed."""
    if K < 1 or p < 0 or q < 0:
        raise ValueError("require K >= 1, p >= 0, q >= 0")
    if init_strategy not in ("uniform", "random"):
        raise ValueError(f"unknown init strategy {init_strategy!r}")
    start = time.perf_counter()
    inits = [_uniform_segment_init(signal, K, p, q)]
    if init_strategy == "random":
        rng = np.random.default_rng(seed)
        for _ in range(n_restarts):
            inits.append(
                _uniform_segment_init(
                    signal, K, p, q, _perturbed_cuts(rng, signal.n, K)
                )
            )
    best = None
    for init in inits:
        result = _em_once(
            signal, init, epsilon, delta, max_iter, max_irls_iter, variance_floor
        )
        if best is None or result[1][-1] > best[1][-1]:
            best = result
    params, trace, converged, iters = best
    runtime = time.perf_counter() - start

    pi = logistic_proportions(params.logistic, signal.t)
    labels = _argmax_labels(pi)
    denoised = denoise(params, signal.t)
    return FitReport(
        params=params,
        log_likelihood_trace=tuple(trace),
        bic=bic(params, trace[-1], signal.n),
        labels=labels,
        denoised=denoised,
        runtime_seconds=runtime,
        converged=converged,
        em_iterations=iters,
        seed=seed,
    )


def _argmax_labels(pi: np.ndarray) -> np.ndarray:
    # np.argmax takes the first maximum, i.e. ties go to the smallest k
    return np.argmax(pi, axis=1) + 1


def denoise(params: RhlpParams, t) -> np.ndarray:
    """Model mean curve: x_hat_i = sum_k pi_ik beta_k^T r_i."""
    if isinstance(t, Signal):
        t = t.t
    t = np.asarray(t, dtype=float)
    pi = logistic_proportions(params.logistic, t)
    means = design_matrix(t, params.p) @ params.betas.T
    return np.sum(pi * means, axis=1)


def hard_labels(params: RhlpParams, t) -> np.ndarray:
    """Per-sample argmax of the proportions, labels in 1..K."""
    if isinstance(t, Signal):
        t = t.t
    return _argmax_labels(logistic_proportions(params.logistic, np.asarray(t, float)))


def n_free_parameters(K: int, p: int, q: int) -> int:
    """K(p+1) regression coefficients + K variances + (K-1)(q+1) logistic
    coefficients, which simplifies to K(p+q+3) - (q+1)."""
    return K * (p + q + 3) - (q + 1)


def bic(params: RhlpParams, log_likelihood: float, n: int) -> float:
    """Penalized log-likelihood L - nu log(n)/2."""
    nu = n_free_parameters(params.K, params.p, params.q)
    return log_likelihood - nu * np.log(n) / 2.0


@dataclass(frozen=True)
class SelectionEntry:
    """One cell of a model-selection sweep."""

    K: int
    p: int
    q: int
    bic: float | None
    log_likelihood: float | None
    converged: bool | None
    error: str | None = None


def select_model(
    signal: Signal,
    K_range,
    p_range,
    q: int,
    **fit_kwargs,
) -> tuple[FitReport, list[SelectionEntry]]:
    """Fit every (K, p) combination at fixed q and pick the maximum-BIC fit.
    Per-fit failures become table entries instead of aborting the sweep; ties
    break toward smaller (K, then p)."""
    table: list[SelectionEntry] = []
    best: FitReport | None = None
    best_key = None
    for K in K_range:
        for p in p_range:
            try:
                report = em_fit(signal, K, p, q, **fit_kwargs)
            except Exception as exc:  # record and continue the sweep
                table.append(SelectionEntry(K, p, q, None, None, None, str(exc)))
                continue
            table.append(
                SelectionEntry(K, p, q, report.bic, report.log_likelihood,
                               report.converged)
            )
            key = (-report.bic, K, p)
            if best_key is None or key < best_key:
                best, best_key = report, key
    if best is None:
        raise RuntimeError(
            "every candidate fit failed: " + "; ".join(e.error or "" for e in table)
        )
    return best, table
