"""Experiment orchestration: scenario grids, sweeps, real-data runs and outputs.

Seeding: replication ``k`` of a scenario draws its training environment from
seed ``base_seed + k`` and its validation environment from the seed sequence
``[base_seed + k, 1]``. The shared test pool for bias rate index ``a`` and
set index ``b`` uses ``[base_seed, 2, a, b]``. Nothing else is random.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import baselines
from .core import FitResult, HyperParams, dwr_fit
from .data import Dataset, read_dataset_csv
from .exceptions import (
    ConfigError,
    DivergenceError,
    IngestionError,
    ScenarioFailure,
    SingularDesignError,
)
from .metrics import beta_error, distribution_distance, rmse, stability_metrics
from .synthetic import EnvironmentSpec, GraphKind, OutcomeSpec, generate_environment

logger = logging.getLogger(__name__)

METHODS = ("OLS", "Lasso", "Ridge", "IILasso", "DWR")
DEFAULT_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)
DEFAULT_R_TEST = (-3.0, -2.5, -2.0, -1.7, -1.5, -1.3, 1.3, 1.5, 1.7, 2.0, 2.5, 3.0)
MAX_FAILURE_FRACTION = 0.2

RESULT_COLUMNS = (
    "method",
    "n",
    "p",
    "r_train",
    "beta_s_error",
    "beta_v_error",
    "average_error",
    "stability_error",
    "seed",
)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(row[h]) for h in header])
    return Path(path)


# --------------------------------------------------------------------------
# Fitted models


@dataclass
class FittedModel:
    """A fitted linear predictor on centered (optionally scaled) features.

    ``predict(x) = ((x - x_mean) / x_scale) @ beta + y_mean``.
    """

    method: str
    beta: np.ndarray
    x_mean: np.ndarray
    y_mean: float
    x_scale: Optional[np.ndarray] = None
    params: dict = field(default_factory=dict)
    weights: Optional[np.ndarray] = None
    fit_info: dict = field(default_factory=dict)

    def transform(self, x):
        z = np.asarray(x, dtype=np.float64) - self.x_mean
        return z if self.x_scale is None else z / self.x_scale

    def predict(self, x):
        return self.transform(x) @ self.beta + self.y_mean

    def weight_summary(self):
        if self.weights is None:
            return None
        w = self.weights
        return {
            "n": int(w.size),
            "mean": float(w.mean()),
            "sd": float(w.std()),
            "min": float(w.min()),
            "max": float(w.max()),
            "zero_fraction": float(np.mean(w == 0)),
            "effective_n": float(w.sum() ** 2 / max(float(w @ w), 1e-300)),
        }

    def to_dict(self, include_weights=False):
        d = {
            "method": self.method,
            "beta": self.beta.tolist(),
            "x_mean": self.x_mean.tolist(),
            "y_mean": self.y_mean,
            "x_scale": None if self.x_scale is None else self.x_scale.tolist(),
            "params": self.params,
            "fit_info": self.fit_info,
            "weight_summary": self.weight_summary(),
        }
        if include_weights and self.weights is not None:
            d["weights"] = self.weights.tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            method=d["method"],
            beta=np.asarray(d["beta"], dtype=np.float64),
            x_mean=np.asarray(d["x_mean"], dtype=np.float64),
            y_mean=float(d["y_mean"]),
            x_scale=None if d.get("x_scale") is None else np.asarray(d["x_scale"], dtype=np.float64),
            params=d.get("params", {}),
            weights=None if d.get("weights") is None else np.asarray(d["weights"], dtype=np.float64),
            fit_info=d.get("fit_info", {}),
        )


def preprocess(ds, standardize=False):
    """Center (and optionally scale) columns of ``x`` and center ``y``."""
    y = ds.require_y()
    x_mean = ds.x.mean(axis=0)
    xc = ds.x - x_mean
    scale = None
    if standardize:
        scale = xc.std(axis=0)
        scale[scale == 0] = 1.0
        xc = xc / scale
    y_mean = float(y.mean())
    return Dataset(xc, y - y_mean, ds.feature_names, ds.truth), x_mean, y_mean, scale


def fit_method(method, ds, params=None, dwr_base=None, standardize=False):
    """Fit one method on ``ds`` after centering; returns a :class:`FittedModel`."""
    params = dict(params or {})
    work, x_mean, y_mean, scale = preprocess(ds, standardize)
    weights = None
    info = {}
    if method == "DWR":
        hp = (dwr_base or HyperParams()).with_(**params)
        res: FitResult = dwr_fit(work, hp)
        beta, weights = res.beta, res.weights
        info = {"converged": res.converged, "iters_used": res.iters_used, "final_objective": res.loss_trace[-1]}
        params = {k: getattr(hp, k) for k in ("lambda1", "lambda2", "lambda3", "lambda4")}
    elif method == "OLS":
        beta = baselines.ols_fit(work)
    elif method == "Lasso":
        lam = params.get("lambda1", 0.0)
        beta = baselines.ols_fit(work) if lam == 0 else baselines.lasso_fit(work, lam)
    elif method == "Ridge":
        beta = baselines.ridge_fit(work, params["lambda1"], literal_norm=params.get("literal_norm", False))
    elif method == "IILasso":
        beta = baselines.iilasso_fit(work, params["lambda1"], params["lambda2"])
    else:
        raise ConfigError(f"unknown method {method!r}; expected one of {METHODS}")
    return FittedModel(method, np.asarray(beta, dtype=np.float64), x_mean, y_mean, scale, params, weights, info)


def candidate_params(method, grid, dwr_tuned=(), allow_zero_lasso=False):
    grid = list(grid)
    if method == "OLS":
        return [{}]
    if method == "Lasso":
        vals = ([0.0] if allow_zero_lasso else []) + grid
        return [{"lambda1": v} for v in vals]
    if method == "Ridge":
        return [{"lambda1": v} for v in grid]
    if method == "IILasso":
        return [{"lambda1": a, "lambda2": b} for a, b in itertools.product(grid, grid)]
    if method == "DWR":
        names = list(dwr_tuned)
        if not names:
            return [{}]
        return [dict(zip(names, combo)) for combo in itertools.product(grid, repeat=len(names))]
    raise ConfigError(f"unknown method {method!r}; expected one of {METHODS}")


def tune_and_fit(method, train, validations, grid, dwr_base=None, dwr_tuned=(), allow_zero_lasso=False, standardize=False):
    """Grid search by mean validation RMSE; ties keep the earliest candidate."""
    cands = candidate_params(method, grid, dwr_tuned, allow_zero_lasso)
    if len(cands) == 1 or not validations:
        return fit_method(method, train, cands[0], dwr_base, standardize)
    best, best_score = None, math.inf
    for params in cands:
        try:
            model = fit_method(method, train, params, dwr_base, standardize)
        except (DivergenceError, SingularDesignError):
            continue
        score = float(np.mean([rmse(v.y, model.predict(v.x)) for v in validations]))
        if score < best_score:
            best, best_score = model, score
    if best is None:
        raise DivergenceError(f"every {method} candidate failed")
    best.fit_info["validation_rmse"] = best_score
    return best


# --------------------------------------------------------------------------
# Synthetic scenarios


def _check_rate(r):
    if not (1.0 < abs(float(r)) <= 3.0):
        raise ConfigError(f"bias rate {r} outside 1 < |r| <= 3")


@dataclass
class ScenarioConfig:
    graph: str = "SIndepV"
    outcome: dict = field(default_factory=lambda: {"form": "poly", "noise_sd": 0.3})
    n: int = 2000
    p: int = 10
    r_train: float = 1.7
    r_test_grid: list = field(default_factory=lambda: list(DEFAULT_R_TEST))
    replications: int = 50
    methods: list = field(default_factory=lambda: list(METHODS))
    hyper_grid: list = field(default_factory=lambda: list(DEFAULT_GRID))
    base_seed: int = 0
    test_sets_per_rate: int = 10
    test_n: Optional[int] = None
    validation_n: Optional[int] = None
    vb_fraction: float = 0.1
    dwr: dict = field(default_factory=dict)
    dwr_tuned: list = field(default_factory=list)
    workers: int = 1

    def __post_init__(self):
        try:
            GraphKind(self.graph)
            OutcomeSpec(**self.outcome)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        if int(self.replications) < 1:
            raise ConfigError("replications must be >= 1")
        if self.p % 2 or self.p < 6:
            raise ConfigError("p must be even and >= 6")
        if self.n < 2 or self.test_sets_per_rate < 1:
            raise ConfigError("n must be >= 2 and test_sets_per_rate >= 1")
        if int(self.base_seed) < 0:
            raise ConfigError("base_seed must be >= 0")
        _check_rate(self.r_train)
        if len(self.r_test_grid) < 2:
            raise ConfigError("r_test_grid needs at least two rates")
        for r in self.r_test_grid:
            _check_rate(r)
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}")
        try:
            HyperParams(**self.dwr)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad dwr hyperparameters: {exc}") from exc
        for name in self.dwr_tuned:
            if name not in ("lambda1", "lambda2", "lambda3", "lambda4"):
                raise ConfigError(f"cannot tune {name!r}")

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown scenario fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @property
    def hyperparams(self):
        return HyperParams(**self.dwr)

    def environment(self, rate, n):
        return EnvironmentSpec(bias_rate=rate, target_n=n, vb_fraction=self.vb_fraction)


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    records: list
    rmse: dict  # method -> (replications, rates) array
    params: dict  # method -> list of chosen params per replication
    failures: int = 0

    def method_records(self, method):
        return [r for r in self.records if r["method"] == method]

    def summary(self):
        out = {}
        for m in self.config.methods:
            recs = [r for r in self.method_records(m) if not math.isnan(r["average_error"])]
            if not recs:
                continue
            col = lambda k: np.array([r[k] for r in recs])  # noqa: E731
            out[m] = {
                "beta_s_error_mean": float(col("beta_s_error").mean()),
                "beta_s_error_var": float(col("beta_s_error").var()),
                "beta_v_error_mean": float(col("beta_v_error").mean()),
                "beta_v_error_var": float(col("beta_v_error").var()),
                "average_error": float(col("average_error").mean()),
                "stability_error": float(col("stability_error").mean()),
                "rmse_by_rate": dict(
                    zip(map(str, self.config.r_test_grid), np.nanmean(self.rmse[m], axis=0).tolist())
                ),
                "replications": len(recs),
            }
        return out

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "results.csv", RESULT_COLUMNS, self.records)
        rows = []
        for m in self.config.methods:
            for k in range(self.rmse[m].shape[0]):
                for r, v in zip(self.config.r_test_grid, self.rmse[m][k]):
                    rows.append({"method": m, "replication": k, "r_test": float(r), "rmse": float(v)})
        _write_csv(out / "rmse_by_rate.csv", ("method", "replication", "r_test", "rmse"), rows)
        with open(out / "summary.json", "w") as fh:
            json.dump(
                {"config": self.config.to_dict(), "summary": self.summary(), "failures": self.failures},
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")
        return out


def build_test_pool(cfg):
    """``[rate_index][set_index] -> Dataset`` shared by all replications."""
    outcome = OutcomeSpec(**cfg.outcome)
    n = cfg.test_n or cfg.n
    return [
        [
            generate_environment(cfg.graph, outcome, cfg.environment(r, n), cfg.p, [cfg.base_seed, 2, a, b])
            for b in range(cfg.test_sets_per_rate)
        ]
        for a, r in enumerate(cfg.r_test_grid)
    ]


def _needs_validation(cfg):
    return any(len(candidate_params(m, cfg.hyper_grid, cfg.dwr_tuned)) > 1 for m in cfg.methods)


def _run_replication(cfg, k, pool):
    outcome = OutcomeSpec(**cfg.outcome)
    seed = cfg.base_seed + k
    train = generate_environment(cfg.graph, outcome, cfg.environment(cfg.r_train, cfg.n), cfg.p, seed)
    validations = []
    if _needs_validation(cfg):
        vn = cfg.validation_n or cfg.n
        validations = [generate_environment(cfg.graph, outcome, cfg.environment(cfg.r_train, vn), cfg.p, [seed, 1])]
    truth = train.truth
    base = cfg.hyperparams
    rows, rmses, params, failures = [], {}, {}, 0
    for m in cfg.methods:
        row = {"method": m, "n": cfg.n, "p": cfg.p, "r_train": float(cfg.r_train), "seed": seed}
        try:
            model = tune_and_fit(m, train, validations, cfg.hyper_grid, base, cfg.dwr_tuned)
        except (DivergenceError, SingularDesignError) as exc:
            logger.warning("replication %d: %s failed: %s", k, m, exc)
            failures += 1
            row.update(beta_s_error=math.nan, beta_v_error=math.nan, average_error=math.nan, stability_error=math.nan)
            rows.append(row)
            rmses[m] = np.full(len(cfg.r_test_grid), math.nan)
            params[m] = None
            continue
        per_rate = np.array(
            [np.mean([rmse(t.y, model.predict(t.x)) for t in sets]) for sets in pool]
        )
        avg, stab = stability_metrics(per_rate)
        row.update(
            beta_s_error=beta_error(model.beta, truth.beta_true, truth.stable_cols),
            beta_v_error=beta_error(model.beta, truth.beta_true, truth.unstable_cols),
            average_error=avg,
            stability_error=stab,
        )
        rows.append(row)
        rmses[m] = per_rate
        params[m] = model.params
    return rows, rmses, params, failures


def run_scenario(cfg, test_pool=None):
    """Run every replication of a scenario and collect per-method metrics.

    Raises :class:`ScenarioFailure` if more than 20% of (method, replication)
    cells fail numerically; isolated failures are recorded as NaN rows.
    """
    pool = test_pool if test_pool is not None else build_test_pool(cfg)
    reps = range(int(cfg.replications))
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            outs = list(ex.map(_run_replication, [cfg] * len(reps), reps, [pool] * len(reps)))
    else:
        outs = [_run_replication(cfg, k, pool) for k in reps]

    records, failures = [], 0
    rmse_tab = {m: [] for m in cfg.methods}
    params = {m: [] for m in cfg.methods}
    for rows, rm, pr, nf in outs:
        records.extend(rows)
        failures += nf
        for m in cfg.methods:
            rmse_tab[m].append(rm[m])
            params[m].append(pr[m])
    cells = len(cfg.methods) * len(reps)
    if cells and failures > MAX_FAILURE_FRACTION * cells:
        raise ScenarioFailure(f"{failures} of {cells} fits failed")
    n_rates = len(cfg.r_test_grid)
    rmse_arr = {m: np.array(v).reshape(len(reps), n_rates) for m, v in rmse_tab.items()}
    return ScenarioResult(cfg, records, rmse_arr, params, failures)


@dataclass
class SweepResult:
    param: str
    rows: list = field(default_factory=list)

    def best(self, key="stability_error"):
        return min(self.rows, key=lambda r: r[key])["value"]


def run_sweep(cfg, param="lambda2", grid=None, method="DWR"):
    """Vary one DWR penalty over ``grid`` with the others fixed at ``cfg.dwr``."""
    if param not in ("lambda1", "lambda2", "lambda3", "lambda4"):
        raise ConfigError(f"cannot sweep {param!r}")
    grid = list(grid if grid is not None else cfg.hyper_grid)
    pool = build_test_pool(cfg)
    out = SweepResult(param)
    for v in grid:
        sub = ScenarioConfig.from_dict(
            dict(cfg.to_dict(), methods=[method], dwr=dict(cfg.dwr, **{param: v}), dwr_tuned=[])
        )
        s = run_scenario(sub, pool).summary()[method]
        out.rows.append(
            {
                "param": param,
                "value": float(v),
                "average_error": s["average_error"],
                "stability_error": s["stability_error"],
                "beta_s_error": s["beta_s_error_mean"],
                "beta_v_error": s["beta_v_error_mean"],
            }
        )
    return out


# --------------------------------------------------------------------------
# Real data


@dataclass
class RealDataConfig:
    train_csv: str
    validation_csvs: list
    test_csvs: list
    outcome_column: str = "Y"
    feature_columns: Optional[list] = None
    methods: list = field(default_factory=lambda: ["Lasso", "Ridge", "IILasso", "DWR"])
    hyper_grid: list = field(default_factory=lambda: list(DEFAULT_GRID))
    lasso_allows_zero: bool = True
    standardize: bool = True
    dwr: dict = field(default_factory=dict)
    dwr_tuned: list = field(default_factory=lambda: ["lambda2"])

    def __post_init__(self):
        if not self.test_csvs or len(self.test_csvs) < 2:
            raise ConfigError("need at least two test files")
        if self.feature_columns is not None and self.outcome_column in self.feature_columns:
            raise ConfigError("outcome column must not be a feature")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}")
        try:
            HyperParams(**self.dwr)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad dwr hyperparameters: {exc}") from exc

    @classmethod
    def from_dict(cls, d, base_dir=None):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown real-data fields: {sorted(unknown)}")
        missing = {"train_csv", "validation_csvs", "test_csvs"} - set(d)
        if missing:
            raise ConfigError(f"missing real-data fields: {sorted(missing)}")
        d = dict(d)
        if base_dir is not None:
            rel = lambda s: str(Path(base_dir) / s) if not Path(s).is_absolute() else s  # noqa: E731
            d["train_csv"] = rel(d["train_csv"])
            d["validation_csvs"] = [rel(s) for s in d["validation_csvs"]]
            d["test_csvs"] = [rel(s) for s in d["test_csvs"]]
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh), base_dir=Path(path).parent)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc


@dataclass
class RealResult:
    rows: list  # per (method, test file), ascending distribution distance
    summary: dict  # method -> {"average_error", "stability_error", "params"}

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "real_results.csv", ("method", "environment", "distribution_distance", "rmse"), self.rows)
        with open(out / "real_summary.json", "w") as fh:
            json.dump(self.summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return out


def run_real_datasets(train, validations, tests, test_names=None, methods=None, hyper_grid=DEFAULT_GRID,
                      lasso_allows_zero=True, standardize=True, dwr=None, dwr_tuned=("lambda2",)):
    """In-memory real-data protocol: tune on validations, score on each test set."""
    methods = list(methods if methods is not None else ["Lasso", "Ridge", "IILasso", "DWR"])
    names = list(test_names) if test_names is not None else [f"env{i + 1}" for i in range(len(tests))]
    base = HyperParams(**(dwr or {}))
    dist = [distribution_distance(train.x, t.x) for t in tests]
    order = sorted(range(len(tests)), key=lambda i: (dist[i], i))
    rows, summary = [], {}
    for m in methods:
        model = tune_and_fit(m, train, validations, hyper_grid, base, dwr_tuned, lasso_allows_zero, standardize)
        errs = [rmse(t.y, model.predict(t.x)) for t in tests]
        avg, stab = stability_metrics(errs)
        summary[m] = {"average_error": avg, "stability_error": stab, "params": model.params}
        for i in order:
            rows.append({"method": m, "environment": names[i], "distribution_distance": dist[i], "rmse": errs[i]})
    rows.sort(key=lambda r: (r["distribution_distance"], methods.index(r["method"])))
    return RealResult(rows, summary)


def load_real(cfg):
    train = read_dataset_csv(cfg.train_csv, cfg.outcome_column, cfg.feature_columns, attach_truth=False)
    cols = list(train.feature_names)
    read = lambda p: read_dataset_csv(p, cfg.outcome_column, cols, attach_truth=False)  # noqa: E731
    return train, [read(p) for p in cfg.validation_csvs], [read(p) for p in cfg.test_csvs]


def run_real(cfg):
    """Ingest CSV environments and run :func:`run_real_datasets`."""
    train, validations, tests = load_real(cfg)
    return run_real_datasets(
        train, validations, tests, [Path(p).stem for p in cfg.test_csvs], cfg.methods, cfg.hyper_grid,
        cfg.lasso_allows_zero, cfg.standardize, cfg.dwr, cfg.dwr_tuned,
    )


# --------------------------------------------------------------------------
# Plot data


def emit_plots(result, out_dir, svg=False):
    """Write the per-figure CSVs for a scenario, sweep or real-data result.

    Returns the list of files written. With ``svg`` a static rendering is
    written next to each CSV (requires matplotlib).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if isinstance(result, ScenarioResult):
        summ = result.summary()
        rows = [
            {"method": m, "r_test": float(r), "rmse": float(v)}
            for m in result.config.methods if m in summ
            for r, v in zip(result.config.r_test_grid, np.nanmean(result.rmse[m], axis=0))
        ]
        written.append(_write_csv(out / "rmse_vs_rtest.csv", ("method", "r_test", "rmse"), rows))
        bar_cols = ("method", "beta_s_error_mean", "beta_s_error_var", "beta_v_error_mean", "beta_v_error_var",
                    "average_error", "stability_error")
        bars = [dict(method=m, **{k: summ[m][k] for k in bar_cols[1:]}) for m in summ]
        written.append(_write_csv(out / "error_bars.csv", bar_cols, bars))
        if svg:
            written.extend(_svg_lines(rows, "r_test", "rmse", out / "rmse_vs_rtest.svg"))
    elif isinstance(result, SweepResult):
        cols = ("param", "value", "average_error", "stability_error", "beta_s_error", "beta_v_error")
        written.append(_write_csv(out / "lambda_sweep.csv", cols, result.rows))
        if svg:
            rows = [dict(method=k, value=r["value"], err=r[k]) for r in result.rows
                    for k in ("average_error", "stability_error")]
            written.extend(_svg_lines(rows, "value", "err", out / "lambda_sweep.svg", logx=True))
    elif isinstance(result, RealResult):
        cols = ("method", "environment", "distribution_distance", "rmse")
        written.append(_write_csv(out / "rmse_vs_distance.csv", cols, result.rows))
        bars = [{"method": m, "average_error": s["average_error"], "stability_error": s["stability_error"]}
                for m, s in result.summary.items()]
        written.append(_write_csv(out / "error_bars.csv", ("method", "average_error", "stability_error"), bars))
        if svg:
            written.extend(_svg_lines(result.rows, "distribution_distance", "rmse", out / "rmse_vs_distance.svg"))
    else:
        raise TypeError(f"cannot plot {type(result).__name__}")
    return written


def _svg_lines(rows, xkey, ykey, path, logx=False):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for m in dict.fromkeys(r["method"] for r in rows):
        pts = [(r[xkey], r[ykey]) for r in rows if r["method"] == m]
        ax.plot(*zip(*pts), marker="o", label=m)
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(xkey)
    ax.set_ylabel(ykey)
    if rows:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return [Path(path)]
