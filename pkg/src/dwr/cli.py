"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 ingestion error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .core import HyperParams
from .data import read_dataset_csv, read_metadata, write_dataset_csv
from .exceptions import (
    ConfigError,
    ContractError,
    DegenerateColumnError,
    DegenerateCorrelationError,
    DivergenceError,
    IngestionError,
    InsufficientEnvironmentsError,
    ScenarioFailure,
    SingularDesignError,
    StarvationError,
)
from .metrics import beta_error, pearson_matrix, rmse, stability_metrics
from .synthetic import EnvironmentSpec, OutcomeSpec, generate_environment, nonlinear_term

EXIT_CONFIG = 2
EXIT_INGEST = 3
EXIT_NUMERIC = 4


def _parse_params(items):
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value, got {item!r}")
        try:
            out[key] = json.loads(val)
        except json.JSONDecodeError:
            out[key] = val
    return out


def _dump(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_gen(args):
    outcome = OutcomeSpec(form=args.form, noise_sd=args.noise_sd)
    env = EnvironmentSpec(bias_rate=args.r, target_n=args.n, vb_fraction=args.vb_fraction)
    ds = generate_environment(args.graph, outcome, env, args.p, args.seed)
    path = write_dataset_csv(ds, args.out, metadata={"seed": args.seed, "bias_rate": args.r})
    print(f"wrote {path} ({ds.n} rows, {ds.p} features)")
    return 0


def _fit_model(ds, method, params, standardize):
    dwr_base = HyperParams()
    return harness.fit_method(method, ds, params, dwr_base, standardize)


def cmd_fit(args):
    ds = read_dataset_csv(args.data, args.outcome_column)
    model = _fit_model(ds, args.method, _parse_params(args.param), args.standardize)
    d = model.to_dict(include_weights=args.save_weights)
    d["feature_names"] = list(ds.feature_names)
    if args.out:
        _dump(d, args.out)
    print(f"method: {model.method}")
    for name, b in zip(ds.feature_names, model.beta):
        print(f"  {name:>8s} {b: .6f}")
    summ = model.weight_summary()
    if summ:
        print("weights: " + ", ".join(f"{k}={v:.4g}" for k, v in summ.items()))
    return 0


def cmd_eval(args):
    try:
        model = harness.FittedModel.from_dict(json.loads(Path(args.model).read_text()))
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise ConfigError(f"{args.model}: {exc}") from exc
    per_env = {}
    out = {"method": model.method}
    truth = None
    for path in args.data:
        ds = read_dataset_csv(path, args.outcome_column)
        if ds.p != model.beta.size:
            raise IngestionError(f"{path}: {ds.p} features, model expects {model.beta.size}", path=str(path))
        per_env[Path(path).stem] = rmse(ds.y, model.predict(ds.x))
        truth = truth or ds.truth
    out["per_env_rmse"] = per_env
    if len(per_env) >= 2:
        avg, stab = stability_metrics(list(per_env.values()))
        out.update(average_error=avg, stability_error=stab)
    if truth is not None and model.x_scale is None:
        out["beta_s_error"] = beta_error(model.beta, truth.beta_true, truth.stable_cols)
        out["beta_v_error"] = beta_error(model.beta, truth.beta_true, truth.unstable_cols)
    _dump(out, args.out)
    return 0


def cmd_scenario(args):
    cfg = harness.ScenarioConfig.from_json(args.config)
    if args.workers:
        cfg.workers = args.workers
    res = harness.run_scenario(cfg)
    out = res.write(args.out)
    harness.emit_plots(res, out, svg=args.svg)
    for m, s in res.summary().items():
        print(
            f"{m:8s} beta_s={s['beta_s_error_mean']:.3f} beta_v={s['beta_v_error_mean']:.3f} "
            f"avg={s['average_error']:.3f} stab={s['stability_error']:.3f}"
        )
    return 0


def cmd_real(args):
    cfg = harness.RealDataConfig.from_json(args.config)
    res = harness.run_real(cfg)
    out = res.write(args.out)
    harness.emit_plots(res, out, svg=args.svg)
    for m, s in res.summary.items():
        print(f"{m:8s} avg={s['average_error']:.4f} stab={s['stability_error']:.4f} params={s['params']}")
    return 0


def cmd_sweep(args):
    cfg = harness.ScenarioConfig.from_json(args.config)
    grid = [float(v) for v in args.grid.split(",")] if args.grid else None
    res = harness.run_sweep(cfg, args.param, grid)
    harness.emit_plots(res, args.out, svg=args.svg)
    for row in res.rows:
        print(f"{args.param}={row['value']:g} avg={row['average_error']:.4f} stab={row['stability_error']:.4f}")
    return 0


def cmd_corr(args):
    ds = read_dataset_csv(args.data, args.outcome_column)
    cols = list(ds.feature_names)
    x = ds.x
    truth = ds.truth
    if args.with_g:
        meta = read_metadata(args.data)
        if truth is None or meta is None or "outcome" not in truth.generator:
            raise IngestionError(f"{args.data}: g(S) needs the generator metadata sidecar", path=str(args.data))
        form = truth.generator["outcome"]["form"]
        x = np.column_stack([x, nonlinear_term(x[:, truth.stable_cols], form)])
        cols.append("g")
    out = {"columns": cols, "uniform": pearson_matrix(x).tolist()}
    if args.method:
        model = _fit_model(ds, args.method, _parse_params(args.param), False)
        if model.weights is None:
            raise ConfigError(f"method {args.method} does not learn sample weights")
        out["weighted"] = pearson_matrix(x, model.weights).tolist()
    _dump(out, args.out)
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="dwr", description="Decorrelated weighting regression experiments.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic environment as CSV plus JSON metadata")
    g.add_argument("--graph", default="SIndepV", choices=["SIndepV", "StoV", "VtoS"])
    g.add_argument("--form", default="poly", choices=["poly", "exp"])
    g.add_argument("--noise-sd", type=float, default=0.3)
    g.add_argument("-n", type=int, default=2000)
    g.add_argument("-p", type=int, default=10)
    g.add_argument("-r", type=float, default=1.7, help="bias rate, 1 < |r| <= 3")
    g.add_argument("--vb-fraction", type=float, default=0.1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    f = sub.add_parser("fit", help="fit one method on one dataset")
    f.add_argument("data")
    f.add_argument("--method", default="DWR", choices=list(harness.METHODS))
    f.add_argument("--param", action="append", metavar="KEY=VALUE", help="e.g. lambda2=10")
    f.add_argument("--outcome-column", default="Y")
    f.add_argument("--standardize", action="store_true", help="scale features to unit variance")
    f.add_argument("--save-weights", action="store_true")
    f.add_argument("--out", help="write the fitted model as JSON")
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("eval", help="score a saved fit on one or more datasets")
    e.add_argument("model")
    e.add_argument("data", nargs="+")
    e.add_argument("--outcome-column", default="Y")
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    for name, fn, hlp in (
        ("scenario", cmd_scenario, "run a synthetic scenario grid from a JSON config"),
        ("real", cmd_real, "run the per-file environment protocol from a JSON config"),
    ):
        s = sub.add_parser(name, help=hlp)
        s.add_argument("config")
        s.add_argument("--out", required=True)
        s.add_argument("--svg", action="store_true")
        if name == "scenario":
            s.add_argument("--workers", type=int)
        s.set_defaults(func=fn)

    w = sub.add_parser("sweep", help="vary one DWR penalty over a grid")
    w.add_argument("config")
    w.add_argument("--param", default="lambda2")
    w.add_argument("--grid", help="comma-separated values; default is the config hyper_grid")
    w.add_argument("--out", required=True)
    w.add_argument("--svg", action="store_true")
    w.set_defaults(func=cmd_sweep)

    c = sub.add_parser("corr", help="uniform and weighted Pearson matrices")
    c.add_argument("data")
    c.add_argument("--method", choices=["DWR"], help="also report correlations under this method's weights")
    c.add_argument("--param", action="append", metavar="KEY=VALUE")
    c.add_argument("--with-g", action="store_true", help="append g(S) using the metadata sidecar")
    c.add_argument("--outcome-column", default="Y")
    c.add_argument("--out")
    c.set_defaults(func=cmd_corr)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ContractError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IngestionError as exc:
        print(f"ingestion error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except (
        DivergenceError,
        SingularDesignError,
        DegenerateColumnError,
        DegenerateCorrelationError,
        StarvationError,
        InsufficientEnvironmentsError,
        ScenarioFailure,
    ) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
