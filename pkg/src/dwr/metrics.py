"""Prediction-error, stability and correlation metrics."""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import (
    ContractError,
    DegenerateColumnError,
    GroundTruthUnavailableError,
    InsufficientEnvironmentsError,
)


def rmse(y_true, y_pred):
    """Root mean squared error."""
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1 or y_true.size == 0:
        raise ContractError(f"rmse needs equal-length non-empty vectors, got {y_true.shape} and {y_pred.shape}")
    d = np.abs(y_true - y_pred)
    # Scale first so tiny residuals do not underflow to an exact zero.
    top = d.max()
    if top == 0 or not np.isfinite(top):
        return float(top)
    return float(top * np.sqrt(np.mean((d / top) ** 2)))


def beta_error(beta_hat, beta_true, cols=None):
    """L1 distance between coefficient vectors, optionally restricted to ``cols``."""
    beta_hat = np.asarray(beta_hat, dtype=np.float64)
    beta_true = np.asarray(beta_true, dtype=np.float64)
    if beta_hat.shape != beta_true.shape:
        raise ContractError(f"coefficient shapes differ: {beta_hat.shape} vs {beta_true.shape}")
    d = np.abs(beta_true - beta_hat)
    if cols is not None:
        d = d[np.asarray(cols, dtype=np.int64)]
    return float(d.sum())


def stability_metrics(per_env_rmse):
    """Return ``(average_error, stability_error)`` over environments.

    Stability is the sample standard deviation (``|E| - 1`` denominator),
    computed in exact rational arithmetic and rounded once, so equal inputs
    give exactly zero.
    """
    e = np.asarray(per_env_rmse, dtype=np.float64).ravel()
    if e.size < 2:
        raise InsufficientEnvironmentsError(f"need at least two environments, got {e.size}")
    vals = e.tolist()
    return float(statistics.mean(vals)), statistics.stdev(vals)


@dataclass
class MetricsReport:
    per_env_rmse: dict
    average_error: float
    stability_error: float
    beta_error_s: Optional[float] = None
    beta_error_v: Optional[float] = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_rmses(cls, per_env_rmse, beta_error_s=None, beta_error_v=None):
        avg, stab = stability_metrics(list(per_env_rmse.values()))
        return cls(dict(per_env_rmse), avg, stab, beta_error_s, beta_error_v)

    def to_row(self):
        return {
            "beta_s_error": self.beta_error_s,
            "beta_v_error": self.beta_error_v,
            "average_error": self.average_error,
            "stability_error": self.stability_error,
        }

    def to_json(self):
        d = self.to_row()
        d["per_env_rmse"] = {str(k): v for k, v in self.per_env_rmse.items()}
        d.update(self.extra)
        return json.dumps(d, indent=2, sort_keys=True)


def pearson_matrix(x, w=None):
    """Pearson correlations between columns, optionally under weights ``w``.

    Weighted correlations use the probability measure ``w / sum(w)``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ContractError("x must be 2-D")
    if w is None:
        prob = np.full(x.shape[0], 1.0 / x.shape[0])
    else:
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (x.shape[0],) or np.any(w < 0) or not w.sum() > 0:
            raise ContractError("w must be nonnegative with positive sum, one per row")
        prob = w / w.sum()
    xc = x - prob @ x
    cov = (xc * prob[:, None]).T @ xc
    var = np.diag(cov).copy()
    scale = np.maximum(np.abs(x).max(axis=0), 1.0)
    for j in np.flatnonzero(var <= 1e-26 * scale**2):
        raise DegenerateColumnError(f"column {j} has zero variance", column=int(j))
    sd = np.sqrt(var)
    corr = cov / np.outer(sd, sd)
    corr = np.clip((corr + corr.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return corr


def distribution_distance(x_i, x_j):
    """L1 distance between the column-mean vectors of two samples."""
    x_i = np.asarray(x_i, dtype=np.float64)
    x_j = np.asarray(x_j, dtype=np.float64)
    if x_i.ndim != 2 or x_j.ndim != 2 or x_i.shape[1] != x_j.shape[1]:
        raise ContractError(f"column counts differ: {x_i.shape} vs {x_j.shape}")
    return float(np.abs(x_i.mean(axis=0) - x_j.mean(axis=0)).sum())


def omitted_variable_diagnostics(ds, w=None):
    """Weighted cross moments of unstable features with ``g(S)`` and with ``S``.

    Returns ``(cross_vg, cross_vs)`` with ``cross_vg[k] = mean_i w_i V_ik g_i``
    and ``cross_vs[k, l] = mean_i w_i V_ik S_il``. These are the sample
    moments that bias least squares on unstable features when ``g`` is omitted.
    """
    truth = ds.truth
    if truth is None or truth.nonlinear_term is None:
        raise GroundTruthUnavailableError("omitted-variable diagnostics need g(S) and the S/V split")
    w = np.ones(ds.n) if w is None else np.asarray(w, dtype=np.float64)
    if w.shape != (ds.n,):
        raise ContractError("w must have one entry per row")
    s = ds.x[:, truth.stable_cols]
    v = ds.x[:, truth.unstable_cols]
    vw = v * w[:, None]
    return vw.T @ truth.nonlinear_term / ds.n, vw.T @ s / ds.n
