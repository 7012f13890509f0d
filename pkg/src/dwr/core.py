"""Decorrelated weighting regression.

Sample weights ``w`` are learned so that the columns of ``x`` become
uncorrelated on the reweighted sample, and the regression coefficients are
fit by L1-penalized weighted least squares on those weights. The two are
optimized jointly by alternating a projected gradient step on ``w`` with a
proximal gradient step on ``beta``.

Conventions
-----------
With ``C = x.T @ diag(w) @ x / n`` and ``m = x.T @ w / n`` the decorrelation
loss is::

    L_B(w) = sum_j || C[j, -j] - m[j] * m[-j] ||^2 = sum_{j != k} (C - m m^T)_{jk}^2

where ``-j`` means column ``j`` replaced by zeros (so the ``k == j`` entry is
identically zero). The joint objective is::

    J(w, beta) = sum_i w_i (y_i - x_i beta)^2 / (2n) + lambda1 |beta|_1
                 + lambda2 L_B(w) + lambda3 / n sum_i w_i^2
                 + lambda4 (mean(w) - 1)^2

The regression term uses the same ``1/(2n)`` scaling as :func:`dwr.baselines.lasso_fit`,
so freezing ``w = 1`` and zeroing lambda2..lambda4 reproduces the Lasso.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import logsumexp

from .data import Dataset
from .exceptions import (
    ContractError,
    DegenerateColumnError,
    DivergenceError,
    SingularDesignError,
)

logger = logging.getLogger(__name__)

# Sufficient-decrease backtracking stops shrinking below this n-scaled step.
_MIN_STEP = 1e-14
_STEP_GROWTH = 1.25


@dataclass(frozen=True)
class HyperParams:
    """Penalty weights and optimizer settings for :func:`dwr_fit`.

    ``lr_w`` is the initial weight step in n-scaled units (the update is
    ``w - lr_w * n * grad``) and is adapted by backtracking. ``lr_beta=None``
    uses ``1 / L`` with ``L`` the largest eigenvalue of ``x' diag(w) x / n``.
    """

    lambda1: float = 0.005
    lambda2: float = 10.0
    lambda3: float = 0.03
    lambda4: float = 10.0
    lr_w: float = 1.0
    lr_beta: Optional[float] = None
    max_iters: int = 5000
    tol: float = 1e-6
    weight_cap: Optional[float] = None
    seed: int = 0
    window: int = 5
    lipschitz_every: int = 50

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3", "lambda4"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ContractError(f"{name} must be finite and >= 0, got {v}")
        if not self.lr_w > 0:
            raise ContractError("lr_w must be > 0")
        if self.lr_beta is not None and not self.lr_beta > 0:
            raise ContractError("lr_beta must be > 0")
        if int(self.max_iters) < 1:
            raise ContractError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ContractError("tol must be > 0")
        if self.weight_cap is not None and not self.weight_cap > 0:
            raise ContractError("weight_cap must be > 0")
        if int(self.window) < 1 or int(self.lipschitz_every) < 1:
            raise ContractError("window and lipschitz_every must be >= 1")

    def with_(self, **kw):
        return replace(self, **kw)

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class FitResult:
    beta: np.ndarray
    weights: np.ndarray
    loss_trace: list = field(default_factory=list)
    converged: bool = False
    iters_used: int = 0


class OracleWeights(NamedTuple):
    weights: np.ndarray
    floored: bool


def _as_xw(x, w):
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if x.ndim != 2:
        raise ContractError(f"x must be 2-D, got shape {x.shape}")
    if w.shape != (x.shape[0],):
        raise ContractError(f"w must have shape ({x.shape[0]},), got {w.shape}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(w))):
        raise ContractError("x and w must be finite")
    return x, w


def _offdiag_moments(x, w):
    n = x.shape[0]
    cross = (x * w[:, None]).T @ x / n
    m = x.T @ w / n
    d = cross - np.outer(m, m)
    np.fill_diagonal(d, 0.0)
    return d, m


def decorrelation_loss(x, w):
    """Sum of squared weighted cross-covariances between distinct columns."""
    x, w = _as_xw(x, w)
    d, _ = _offdiag_moments(x, w)
    return float(np.sum(d * d))


def decorrelation_gradient(x, w):
    """Analytic gradient of :func:`decorrelation_loss` with respect to ``w``.

    For ``D = C - m m'`` with zeroed diagonal,
    ``dL/dw_i = (2/n) (x_i' D x_i - 2 x_i' D m)``. Cost is O(n p^2).
    """
    x, w = _as_xw(x, w)
    n = x.shape[0]
    d, m = _offdiag_moments(x, w)
    xd = x @ d
    return (2.0 / n) * (np.einsum("ij,ij->i", xd, x) - 2.0 * (xd @ m))


def _penalties(w, hp):
    n = w.shape[0]
    return hp.lambda3 / n * float(w @ w) + hp.lambda4 * (w.mean() - 1.0) ** 2


def _penalty_gradient(w, hp):
    n = w.shape[0]
    return 2.0 * hp.lambda3 * w / n + 2.0 * hp.lambda4 * (w.mean() - 1.0) / n


def weight_objective(x, w, hp):
    """Decorrelation loss plus the weight second-moment and mean penalties."""
    x, w = _as_xw(x, w)
    return decorrelation_loss(x, w) + _penalties(w, hp)


def weight_objective_gradient(x, w, hp):
    x, w = _as_xw(x, w)
    return decorrelation_gradient(x, w) + _penalty_gradient(w, hp)


def _project(w, cap):
    return np.clip(w, 0.0, cap)


def _projected_step(fun, w, f, g, step, cap):
    """One projected gradient step with sufficient-decrease backtracking.

    ``step`` is the n-scaled step size. Returns ``(w_new, f_new, step_used)``;
    when no decrease is possible the input point is returned unchanged.
    """
    n = w.shape[0]
    while step >= _MIN_STEP:
        alpha = step * n
        w_new = _project(w - alpha * g, cap)
        d = w_new - w
        f_new = fun(w_new)
        if np.isfinite(f_new) and f_new <= f + g @ d + (d @ d) / (2.0 * alpha):
            return w_new, f_new, step
        step *= 0.5
    return w, f, step


def _converged(trace, window, tol):
    if len(trace) <= window:
        return False
    old, new = trace[-1 - window], trace[-1]
    return abs(old - new) <= tol * max(abs(new), 1e-300)


def learn_weights(x, hp=None, w0=None):
    """Minimize :func:`weight_objective` over nonnegative (optionally capped) weights.

    Projected gradient descent from ``w0`` (default: all ones). The returned
    weights never have a larger objective than the starting point.
    """
    hp = hp or HyperParams()
    x = np.asarray(x, dtype=np.float64)
    n, p = x.shape
    if n < p:
        raise ContractError(f"learn_weights needs n >= p, got n={n}, p={p}")
    w = np.ones(n) if w0 is None else np.array(w0, dtype=np.float64)
    w = _project(w, hp.weight_cap)
    x, w = _as_xw(x, w)

    fun = lambda v: weight_objective(x, v, hp)  # noqa: E731
    f = fun(w)
    if not np.isfinite(f):
        raise DivergenceError("non-finite weight objective at iteration 0", iteration=0)
    trace = [f]
    step = hp.lr_w
    for it in range(1, int(hp.max_iters) + 1):
        g = weight_objective_gradient(x, w, hp)
        w, f, step = _projected_step(fun, w, f, g, step, hp.weight_cap)
        if not np.isfinite(f):
            raise DivergenceError(f"weight objective diverged at iteration {it}", iteration=it, trace=trace)
        trace.append(f)
        if step < _MIN_STEP or _converged(trace, hp.window, hp.tol):
            break
        step *= _STEP_GROWTH
    return w


def silverman_bandwidth(x):
    """Per-column rule-of-thumb bandwidth ``0.9 min(sd, IQR/1.34) n^(-1/5)``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    sd = x.std(axis=0, ddof=1)
    q75, q25 = np.percentile(x, [75, 25], axis=0)
    spread = np.where((q75 - q25) > 0, np.minimum(sd, (q75 - q25) / 1.34), sd)
    return 0.9 * spread * n ** (-0.2)


def kde_oracle_weights(x, bandwidths=None, eps=1e-300, chunk_elems=4_000_000):
    """Density-ratio weights: product of marginal KDEs over the joint KDE.

    Gaussian kernels; the joint estimator is the product kernel with
    ``H = diag(bandwidths)``. Weights are rescaled to mean 1. A joint density
    below ``eps`` is floored at ``eps`` and reported through ``floored``.

    Raises :class:`DegenerateColumnError` for a constant column, whose
    bandwidth would be zero.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ContractError("x must be 2-D")
    n, p = x.shape
    if n < 2:
        raise ContractError("kde_oracle_weights needs at least two samples")
    sd = x.std(axis=0)
    for j in range(p):
        if sd[j] == 0:
            raise DegenerateColumnError(f"column {j} is constant", column=j)
    h = silverman_bandwidth(x) if bandwidths is None else np.asarray(bandwidths, dtype=np.float64)
    if h.shape != (p,) or not np.all(h > 0):
        raise ContractError("bandwidths must be positive, one per column")

    log_norm = -0.5 * np.log(2 * np.pi) - np.log(h)
    log_marg = np.empty(n)
    log_joint = np.empty(n)
    step = max(1, chunk_elems // (n * p))
    for s in range(0, n, step):
        u = (x[s : s + step, None, :] - x[None, :, :]) / h
        logk = -0.5 * u * u + log_norm  # (b, n, p)
        log_marg[s : s + step] = np.sum(logsumexp(logk, axis=1) - np.log(n), axis=1)
        log_joint[s : s + step] = logsumexp(logk.sum(axis=2), axis=1) - np.log(n)

    floor = np.log(eps)
    floored = bool(np.any(log_joint < floor))
    log_joint = np.maximum(log_joint, floor)
    log_w = log_marg - log_joint
    w = np.exp(log_w - log_w.max())
    return OracleWeights(w / w.mean(), floored)


def weighted_least_squares(ds, w, ridge_fallback=False, ridge_eps=1e-8):
    """Minimize ``sum_i w_i (y_i - x_i beta)^2``.

    Solved by least squares on ``sqrt(w)``-scaled rows, so uniform weights give
    exactly the OLS computation. A rank-deficient weighted design raises
    :class:`SingularDesignError` unless ``ridge_fallback`` adds ``ridge_eps * I``
    to the normal equations.
    """
    y = ds.require_y()
    x, w = _as_xw(ds.x, w)
    if np.any(w < 0):
        raise ContractError("weights must be nonnegative")
    if not w.sum() > 0:
        raise ContractError("weights must have a positive sum")
    sw = np.sqrt(w)
    xs = x * sw[:, None]
    ys = y * sw
    beta, _, rank, _ = np.linalg.lstsq(xs, ys, rcond=None)
    if rank < x.shape[1]:
        if not ridge_fallback:
            raise SingularDesignError(f"weighted design has rank {rank} < p={x.shape[1]}")
        beta = np.linalg.solve(xs.T @ xs + ridge_eps * np.eye(x.shape[1]), xs.T @ ys)
    return beta


def _check_fit_inputs(ds, w, beta):
    y = ds.require_y()
    x, w = _as_xw(ds.x, w)
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (x.shape[1],):
        raise ContractError(f"beta must have shape ({x.shape[1]},), got {beta.shape}")
    return x, y, w, beta


def _smooth_w_part(x, resid2, w, hp):
    n = x.shape[0]
    return float(w @ resid2) / (2.0 * n) + hp.lambda2 * decorrelation_loss(x, w) + _penalties(w, hp)


def total_objective(ds, w, beta, hp):
    """Joint objective ``J(w, beta)`` including ``lambda1 |beta|_1``."""
    x, y, w, beta = _check_fit_inputs(ds, w, beta)
    r = y - x @ beta
    return _smooth_w_part(x, r * r, w, hp) + hp.lambda1 * float(np.abs(beta).sum())


def total_objective_gradient(ds, w, beta, hp):
    """Gradients of ``J`` in ``w`` and ``beta``.

    The ``beta`` gradient includes ``lambda1 * sign(beta)``, so it is the true
    gradient only away from ``beta_j = 0``.
    """
    x, y, w, beta = _check_fit_inputs(ds, w, beta)
    n = x.shape[0]
    r = y - x @ beta
    gw = r * r / (2.0 * n) + hp.lambda2 * decorrelation_gradient(x, w) + _penalty_gradient(w, hp)
    gb = -(x.T @ (w * r)) / n + hp.lambda1 * np.sign(beta)
    return gw, gb


def _lipschitz(x, w):
    n = x.shape[0]
    return float(np.linalg.eigvalsh((x * w[:, None]).T @ x / n)[-1])


def soft_threshold(z, t):
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def dwr_fit(ds, hp=None, update_weights=True):
    """Jointly fit sample weights and L1-penalized regression coefficients.

    Starts from ``w = 1`` and ``beta = 0``. Each iteration takes a projected
    gradient step on ``w`` with ``beta`` fixed (skipped when
    ``update_weights`` is false), then a proximal gradient step on ``beta``
    with ``w`` fixed. Both steps backtrack, so the recorded objective never
    increases. Stops when the relative change of ``J`` over ``hp.window``
    iterations drops below ``hp.tol``.
    """
    hp = hp or HyperParams()
    y = ds.require_y()
    x = ds.x
    n, p = x.shape
    if n < 2:
        raise ContractError("dwr_fit needs at least two samples")

    w = _project(np.ones(n), hp.weight_cap)
    beta = np.zeros(p)
    r = y - x @ beta
    j = total_objective(ds, w, beta, hp)
    if not np.isfinite(j):
        raise DivergenceError("non-finite objective at initialization", iteration=0)
    trace = [j]
    w_step = hp.lr_w
    lip = _lipschitz(x, w)
    converged = False
    it = 0

    for it in range(1, int(hp.max_iters) + 1):
        if update_weights:
            resid2 = r * r
            fun = lambda v: _smooth_w_part(x, resid2, v, hp)  # noqa: E731
            f = fun(w)
            g = resid2 / (2.0 * n) + hp.lambda2 * decorrelation_gradient(x, w) + _penalty_gradient(w, hp)
            w, _, w_step = _projected_step(fun, w, f, g, w_step, hp.weight_cap)
            w_step = max(w_step, _MIN_STEP) * _STEP_GROWTH

        if it % hp.lipschitz_every == 0:
            lip = _lipschitz(x, w)
        beta, r = _beta_step(x, y, w, beta, hp, lip)

        j = total_objective(ds, w, beta, hp)
        if not np.isfinite(j):
            raise DivergenceError(
                f"objective became non-finite at iteration {it}", iteration=it, trace=trace
            )
        trace.append(j)
        if _converged(trace, hp.window, hp.tol):
            converged = True
            break

    if not converged:
        logger.info("dwr_fit stopped at max_iters=%d without converging", hp.max_iters)
    return FitResult(beta=beta, weights=w, loss_trace=trace, converged=converged, iters_used=it)


def _beta_step(x, y, w, beta, hp, lip):
    n = x.shape[0]
    r = y - x @ beta

    def value(b, res):
        return float(w @ (res * res)) / (2.0 * n) + hp.lambda1 * float(np.abs(b).sum())

    f0 = value(beta, r)
    grad = -(x.T @ (w * r)) / n
    step = hp.lr_beta if hp.lr_beta is not None else (1.0 / lip if lip > 0 else 1.0)
    for attempt in range(60):
        cand = soft_threshold(beta - step * grad, step * hp.lambda1)
        rc = y - x @ cand
        if value(cand, rc) <= f0 + 1e-15 * abs(f0):
            return cand, rc
        if attempt == 0 and hp.lr_beta is None:
            fresh = _lipschitz(x, w)
            step = 1.0 / fresh if fresh > 0 else step * 0.5
        else:
            step *= 0.5
    return beta, r
