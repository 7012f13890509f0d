"""Synthetic stable/unstable feature data and biased-selection environments.

Columns are ordered ``[S_1..S_ps, V_1..V_pv]`` with ``ps = pv = p / 2``.
The outcome is ``Y = S beta_s + g(S) + eps`` where ``g`` is ``S1 S2 S3``
(polynomial) or ``exp(S1 S2 S3)`` (exponential) and unstable features have
zero coefficients. Environments differ in ``P(V_b | S)``: rows are accepted
with probability ``prod_{v in V_b} |r| ** (-5 |f(S) - sign(r) v|)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset, GroundTruth, concat
from .exceptions import ContractError, StarvationError

BETA_S_PATTERN = (1 / 3, -2 / 3, 1.0, -1 / 3, 2 / 3, -1.0)


class GraphKind(str, enum.Enum):
    S_INDEP_V = "SIndepV"
    S_TO_V = "StoV"
    V_TO_S = "VtoS"


class OutcomeForm(str, enum.Enum):
    POLY = "poly"
    EXP = "exp"


@dataclass(frozen=True)
class OutcomeSpec:
    form: OutcomeForm = OutcomeForm.POLY
    noise_sd: float = 0.3
    beta_s_pattern: tuple = BETA_S_PATTERN

    def __post_init__(self):
        form = self.form if isinstance(self.form, OutcomeForm) else OutcomeForm(str(self.form).lower())
        object.__setattr__(self, "form", form)
        object.__setattr__(self, "beta_s_pattern", tuple(float(b) for b in self.beta_s_pattern))
        if not self.noise_sd > 0:
            raise ContractError("noise_sd must be > 0")
        if not self.beta_s_pattern:
            raise ContractError("beta_s_pattern must be non-empty")

    def beta_s(self, ps):
        return np.resize(np.asarray(self.beta_s_pattern), ps)

    def to_dict(self):
        return {"form": self.form.value, "noise_sd": self.noise_sd, "beta_s_pattern": list(self.beta_s_pattern)}


@dataclass(frozen=True)
class EnvironmentSpec:
    bias_rate: float
    target_n: int
    vb_fraction: float = 0.1

    def __post_init__(self):
        r = float(self.bias_rate)
        if not (1.0 < abs(r) <= 3.0):
            raise ContractError(f"bias rate must satisfy 1 < |r| <= 3, got {r}")
        if int(self.target_n) < 1:
            raise ContractError("target_n must be >= 1")
        if not self.vb_fraction > 0:
            raise ContractError("vb_fraction must be > 0")

    def n_biased(self, p):
        k = math.ceil(round(self.vb_fraction * p, 9))
        if k < 1:
            raise ContractError("vb_fraction * p rounds below one biased feature")
        return k


def _split(p):
    if p % 2 != 0 or p < 2:
        raise ContractError(f"p must be even and >= 2, got {p}")
    return p // 2


def generate_covariates(graph, n, p, seed):
    """Draw ``X = [S, V]`` for one of the three stable/unstable structures.

    The returned dataset has no outcome; ground truth records the column split
    and the default coefficient pattern.
    """
    graph = GraphKind(graph)
    ps = _split(p)
    pv = p - ps
    if n < 1:
        raise ContractError("n must be >= 1")
    rng = np.random.default_rng(seed)

    def dependent_s():
        z = rng.standard_normal((n, p))
        return 0.8 * z[:, :ps] + 0.2 * z[:, 1 : ps + 1]

    if graph is GraphKind.S_INDEP_V:
        s = dependent_s()
        v = rng.standard_normal((n, pv))
    elif graph is GraphKind.S_TO_V:
        s = dependent_s()
        nxt = (np.arange(pv) + 1) % ps
        v = 0.8 * s[:, :pv] + 0.2 * s[:, nxt] + rng.standard_normal((n, pv))
    else:
        v = rng.standard_normal((n, pv))
        nxt = (np.arange(ps) + 1) % pv
        s = 0.2 * v[:, :ps] + 0.8 * v[:, nxt] + rng.standard_normal((n, ps))

    beta = np.concatenate([OutcomeSpec().beta_s(ps), np.zeros(pv)])
    truth = GroundTruth(
        stable_cols=np.arange(ps),
        unstable_cols=np.arange(ps, p),
        beta_true=beta,
        generator={"graph": graph.value, "p": p},
    )
    return Dataset(np.hstack([s, v]), None, None, truth)


def nonlinear_term(s, form):
    """``g(S)`` from the first three stable columns."""
    s = np.asarray(s, dtype=np.float64)
    if s.shape[1] < 3:
        raise ContractError("the nonlinear term needs at least three stable features")
    prod = s[:, 0] * s[:, 1] * s[:, 2]
    return np.exp(prod) if OutcomeForm(form) is OutcomeForm.EXP else prod


def generate_outcome(ds, spec, seed):
    """Fill ``Y = S beta_s + g(S) + eps`` and record ``f(S)`` and ``g(S)``."""
    truth = ds.truth
    if truth is None:
        raise ContractError("generate_outcome needs a dataset with ground truth")
    spec = spec if isinstance(spec, OutcomeSpec) else OutcomeSpec(**spec)
    rng = np.random.default_rng(seed)
    s = ds.x[:, truth.stable_cols]
    beta_s = spec.beta_s(len(truth.stable_cols))
    g = nonlinear_term(s, spec.form)
    f = s @ beta_s + g
    y = f + spec.noise_sd * rng.standard_normal(ds.n)
    beta = np.zeros(ds.p)
    beta[truth.stable_cols] = beta_s
    generator = dict(truth.generator)
    generator["outcome"] = spec.to_dict()
    new_truth = replace(truth, beta_true=beta, nonlinear_term=g, f_values=f, generator=generator)
    return Dataset(ds.x, y, ds.feature_names, new_truth)


def acceptance_probability(f, v_biased, bias_rate):
    """Per-row selection probability ``prod_k |r| ** (-5 |f - sign(r) v_k|)``."""
    f = np.asarray(f, dtype=np.float64)
    v = np.asarray(v_biased, dtype=np.float64)
    if v.ndim == 1:
        v = v[:, None]
    d = np.abs(f[:, None] - np.sign(bias_rate) * v)
    return np.exp(-5.0 * math.log(abs(bias_rate)) * d.sum(axis=1))


def biased_columns(truth, env):
    k = env.n_biased(truth.p)
    if k > len(truth.unstable_cols):
        raise ContractError("more biased features requested than unstable features exist")
    return truth.unstable_cols[-k:]


def select_environment(ds, env, seed, max_candidates=10_000_000, min_rate=1e-6):
    """Biased sample selection at rate ``env.bias_rate``.

    The rows of ``ds`` are the first candidates; further candidates are drawn
    fresh from the generator recorded in ``ds.truth`` until exactly
    ``env.target_n`` rows are accepted. Rows keep candidate order.
    """
    truth = ds.truth
    if truth is None or truth.f_values is None or ds.y is None:
        raise ContractError("select_environment needs a dataset with outcome and f(S)")
    gen = truth.generator
    if "graph" not in gen or "outcome" not in gen:
        raise ContractError("ground truth does not record its generator")
    vb = biased_columns(truth, env)
    rng = np.random.default_rng(seed)
    outcome = OutcomeSpec(**gen["outcome"])

    accepted = []
    n_acc = 0
    n_seen = 0
    batch = ds
    while True:
        prob = acceptance_probability(batch.truth.f_values, batch.x[:, vb], env.bias_rate)
        keep = np.flatnonzero(rng.random(batch.n) < prob)
        n_seen += batch.n
        if keep.size:
            keep = keep[: env.target_n - n_acc]
            accepted.append(batch.take(keep))
            n_acc += keep.size
        if n_acc >= env.target_n:
            break
        rate = n_acc / n_seen
        if n_seen >= max_candidates and rate < min_rate:
            raise StarvationError(
                f"accepted {n_acc} of {n_seen} candidates (rate {rate:.2e}) at r={env.bias_rate}"
            )
        need = env.target_n - n_acc
        size = int(np.clip(1.2 * need / max(rate, 1e-3), 1000, 200_000))
        fresh = generate_covariates(gen["graph"], size, truth.p, int(rng.integers(2**63)))
        batch = generate_outcome(fresh, outcome, int(rng.integers(2**63)))

    out = concat(accepted)
    return Dataset(out.x, out.y, ds.feature_names, replace(out.truth, biased_cols=vb))


def generate_environment(graph, outcome, env, p, seed):
    """Generate a fresh population pool and run biased selection on it."""
    ss = np.random.SeedSequence(seed)
    s_cov, s_out, s_sel = (int(c.generate_state(1, np.uint64)[0]) for c in ss.spawn(3))
    pool = generate_covariates(graph, env.target_n, p, s_cov)
    pool = generate_outcome(pool, outcome, s_out)
    env_ds = select_environment(pool, env, s_sel)
    generator = dict(env_ds.truth.generator, bias_rate=float(env.bias_rate), seed=seed)
    return Dataset(env_ds.x, env_ds.y, env_ds.feature_names, replace(env_ds.truth, generator=generator))
