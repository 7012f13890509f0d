# %% [markdown]
# The per-file environment protocol on synthetic "states": one training file,
# validation files for tuning, and test files ordered by distribution distance.

# %%
import tempfile
from pathlib import Path

from dwr import EnvironmentSpec, OutcomeSpec, RealDataConfig, generate_environment, run_real, write_dataset_csv

rates = {"state1": 1.7, "state2": 1.5, "state3": -1.5, "state4": 2.5,
         "state5": -3.0, "state6": -2.0, "state7": 1.3, "state8": 3.0}
root = Path(tempfile.mkdtemp())
for i, (name, r) in enumerate(rates.items()):
    ds = generate_environment("SIndepV", OutcomeSpec(), EnvironmentSpec(r, 1000), 10, 100 + i)
    write_dataset_csv(ds, root / f"{name}.csv")

# %%
cfg = RealDataConfig(
    train_csv=str(root / "state1.csv"),
    validation_csvs=[str(root / f"state{i}.csv") for i in (2, 3, 4)],
    test_csvs=[str(root / f"state{i}.csv") for i in (5, 6, 7, 8)],
)
res = run_real(cfg)
for m, s in res.summary.items():
    print(f"{m:8s} avg={s['average_error']:.4f} stab={s['stability_error']:.4f} {s['params']}")

# %%
for row in res.rows:
    if row["method"] in ("Lasso", "DWR"):
        print(f"{row['environment']:7s} d={row['distribution_distance']:.3f} {row['method']:6s} rmse={row['rmse']:.3f}")
