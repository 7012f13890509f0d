"""Reference regressors: OLS, Lasso, Ridge and IILasso.

Penalized objectives use the ``1/(2n)`` squared-loss scaling for Lasso and
IILasso::

    lasso:   ||y - X b||^2 / (2n) + lambda1 |b|_1
    iilasso: ||y - X b||^2 / (2n) + lambda1 |b|_1 + lambda2 |b|' R |b|

Ridge keeps the unnormalized closed form ``(X'X + lambda1 I)^-1 X'y``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .core import soft_threshold, weighted_least_squares
from .exceptions import ContractError, DegenerateCorrelationError, SingularDesignError


class BaselineKind(str, enum.Enum):
    OLS = "OLS"
    LASSO = "Lasso"
    RIDGE = "Ridge"
    IILASSO = "IILasso"


@dataclass(frozen=True)
class BaselineSpec:
    kind: BaselineKind
    lambda1: float = 0.0
    lambda2: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", BaselineKind(self.kind))
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ContractError("baseline penalties must be >= 0")

    def fit(self, ds):
        if self.kind is BaselineKind.OLS:
            return ols_fit(ds)
        if self.kind is BaselineKind.LASSO:
            if self.lambda1 == 0:
                return ols_fit(ds)
            return lasso_fit(ds, self.lambda1)
        if self.kind is BaselineKind.RIDGE:
            return ridge_fit(ds, self.lambda1)
        return iilasso_fit(ds, self.lambda1, self.lambda2)


def ols_fit(ds):
    """Least squares via an SVD-based solver; singular designs raise."""
    return weighted_least_squares(ds, np.ones(ds.n))


def _gram(ds):
    y = ds.require_y()
    n = ds.n
    return ds.x.T @ ds.x / n, ds.x.T @ y / n


def _coordinate_descent(G, c, lambda1, R=None, lambda2=0.0, beta0=None, max_sweeps=100_000, tol=1e-12):
    p = G.shape[0]
    diag = np.diag(G).copy()
    if np.any(diag <= 0):
        raise SingularDesignError("a column is identically zero")
    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=np.float64)
    for _ in range(max_sweeps):
        delta = 0.0
        for j in range(p):
            old = beta[j]
            z = c[j] - G[j] @ beta + diag[j] * old
            thresh = lambda1
            if R is not None:
                thresh = thresh + 2.0 * lambda2 * (R[j] @ np.abs(beta))
            new = soft_threshold(z, thresh) / diag[j]
            if new != old:
                beta[j] = new
                delta = max(delta, abs(new - old))
        if delta <= tol * max(1.0, np.abs(beta).max()):
            break
    return beta


def lasso_fit(ds, lambda1):
    """Cyclic coordinate descent on ``||y - X b||^2/(2n) + lambda1 |b|_1``."""
    if not lambda1 > 0:
        raise ContractError("lasso_fit needs lambda1 > 0")
    G, c = _gram(ds)
    return _coordinate_descent(G, c, lambda1)


def ridge_fit(ds, lambda1, literal_norm=False):
    """Ridge regression.

    By default the squared penalty ``lambda1 ||b||_2^2`` with closed form
    ``(X'X + lambda1 I)^-1 X'y``. With ``literal_norm`` the penalty is the
    unsquared ``lambda1 ||b||_2``, solved by a scalar root search on ``||b||``.
    """
    if not lambda1 > 0:
        raise ContractError("ridge_fit needs lambda1 > 0")
    y = ds.require_y()
    x = ds.x
    xtx = x.T @ x
    xty = x.T @ y
    eye = np.eye(ds.p)
    if not literal_norm:
        return np.linalg.solve(xtx + lambda1 * eye, xty)

    # Stationarity: 2 X'X b + lambda1 b / ||b|| = 2 X'y, so b(t) solves a ridge
    # system with multiplier lambda1 / t and t = ||b|| is a fixed point.
    if np.linalg.norm(xty) <= lambda1 / 2.0:
        return np.zeros(ds.p)

    def b_of(t):
        return np.linalg.solve(2.0 * xtx + (lambda1 / t) * eye, 2.0 * xty)

    def gap(t):
        return np.linalg.norm(b_of(t)) - t

    hi = max(np.linalg.norm(np.linalg.lstsq(x, y, rcond=None)[0]), 1e-12)
    lo = hi * 1e-12
    while gap(lo) <= 0 and lo > 1e-300:
        lo *= 1e-6
    t = optimize.brentq(gap, lo, hi, xtol=1e-15, rtol=1e-14)
    return b_of(t)


def correlation_penalty_matrix(x):
    """``R_jk = |r_jk| / (1 - |r_jk|)`` from standardized columns, zero diagonal.

    ``r_jk = |x_j' x_k| / n`` on centered unit-variance columns, i.e. the
    absolute Pearson correlation.
    """
    x = np.asarray(x, dtype=np.float64)
    xc = x - x.mean(axis=0)
    sd = np.sqrt((xc * xc).mean(axis=0))
    if np.any(sd == 0):
        raise DegenerateCorrelationError("a column is constant, correlation undefined")
    z = xc / sd
    r = np.abs(z.T @ z) / x.shape[0]
    np.fill_diagonal(r, 0.0)
    if np.any(r >= 1.0 - 1e-12):
        j, k = np.argwhere(r >= 1.0 - 1e-12)[0]
        raise DegenerateCorrelationError(f"columns {j} and {k} are perfectly correlated")
    return r / (1.0 - r)


def iilasso_fit(ds, lambda1, lambda2):
    """Independently interpretable Lasso by coordinate descent.

    The extra term ``lambda2 |b|' R |b|`` discourages selecting correlated
    pairs together; for coordinate ``j`` it raises the soft-threshold level to
    ``lambda1 + 2 lambda2 sum_k R_jk |b_k|``.
    """
    if not (lambda1 > 0 and lambda2 > 0):
        raise ContractError("iilasso_fit needs lambda1 > 0 and lambda2 > 0")
    R = correlation_penalty_matrix(ds.x)
    G, c = _gram(ds)
    return _coordinate_descent(G, c, lambda1, R=R, lambda2=lambda2)
