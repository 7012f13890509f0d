import json
import subprocess
import sys

import numpy as np
import pytest

from dwr.cli import main
from dwr.data import read_dataset_csv


@pytest.fixture()
def data_csv(tmp_path):
    path = tmp_path / "train.csv"
    assert main(["gen", "-n", "300", "-r", "1.7", "--seed", "1", "--out", str(path)]) == 0
    return path


def test_gen_writes_csv_and_sidecar(data_csv):
    ds = read_dataset_csv(data_csv)
    assert ds.n == 300 and ds.p == 10
    meta = json.loads(data_csv.with_suffix(".json").read_text())
    assert meta["seed"] == 1
    assert meta["truth"]["biased_cols"] == [9]
    assert data_csv.read_text().endswith("\n")


def test_fit_and_eval(data_csv, tmp_path, capsys):
    model = tmp_path / "model.json"
    assert main(["fit", str(data_csv), "--method", "DWR", "--param", "max_iters=200", "--out", str(model)]) == 0
    printed = capsys.readouterr().out
    assert "X10" in printed and "effective_n" in printed
    other = tmp_path / "test.csv"
    main(["gen", "-n", "200", "-r", "-2", "--seed", "2", "--out", str(other)])
    out = tmp_path / "metrics.json"
    assert main(["eval", str(model), str(data_csv), str(other), "--out", str(out)]) == 0
    m = json.loads(out.read_text())
    assert set(m["per_env_rmse"]) == {"train", "test"}
    assert m["stability_error"] >= 0 and "beta_v_error" in m


def test_corr_reports_weighted_and_g(data_csv, tmp_path):
    out = tmp_path / "corr.json"
    args = ["corr", str(data_csv), "--with-g", "--method", "DWR", "--param", "max_iters=200", "--out", str(out)]
    assert main(args) == 0
    d = json.loads(out.read_text())
    assert d["columns"][-1] == "g"
    assert np.array(d["uniform"]).shape == (11, 11)
    assert np.array(d["weighted"]).shape == (11, 11)


def test_scenario_and_sweep(tmp_path):
    cfg = {"n": 200, "replications": 1, "test_sets_per_rate": 1, "r_test_grid": [-2.0, 2.0],
           "methods": ["OLS", "DWR"], "hyper_grid": [1.0, 10.0]}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert main(["scenario", str(path), "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "results.csv").exists()
    assert (tmp_path / "out" / "rmse_vs_rtest.csv").exists()
    assert main(["sweep", str(path), "--out", str(tmp_path / "sw"), "--grid", "1,10"]) == 0
    assert len((tmp_path / "sw" / "lambda_sweep.csv").read_text().splitlines()) == 3


def test_real_subcommand(tmp_path):
    names = {"train": 1.7, "val": -1.5, "a": -2.0, "b": 2.0}
    for i, (name, r) in enumerate(names.items()):
        main(["gen", "-n", "200", "-r", str(r), "--seed", str(10 + i), "--out", str(tmp_path / f"{name}.csv")])
    cfg = {"train_csv": "train.csv", "validation_csvs": ["val.csv"], "test_csvs": ["a.csv", "b.csv"],
           "methods": ["Lasso", "Ridge"], "hyper_grid": [1.0]}
    (tmp_path / "real.json").write_text(json.dumps(cfg))
    assert main(["real", str(tmp_path / "real.json"), "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "rmse_vs_distance.csv").exists()


def test_exit_codes(tmp_path, data_csv):
    bad_cfg = tmp_path / "bad.json"
    bad_cfg.write_text(json.dumps({"replications": 0}))
    assert main(["scenario", str(bad_cfg), "--out", str(tmp_path / "o")]) == 2
    assert main(["gen", "-r", "0.5", "--out", str(tmp_path / "x.csv")]) == 2
    assert main(["fit", str(tmp_path / "missing.csv")]) == 3
    assert main(["fit", str(data_csv), "--outcome-column", "Target"]) == 3
    dup = tmp_path / "dup.csv"
    dup.write_text("X1,X2,Y\n1,1,0\n2,2,1\n3,3,1\n")
    assert main(["fit", str(dup), "--method", "OLS"]) == 4


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "dwr", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "scenario" in proc.stdout
