# %% [markdown]
# Stability as a function of the decorrelation weight lambda2, other penalties
# fixed at their defaults.

# %%
from dwr import ScenarioConfig, run_sweep

cfg = ScenarioConfig(n=2000, p=10, r_train=1.7, replications=5, test_sets_per_rate=3, methods=["DWR"])
sweep = run_sweep(cfg, "lambda2", [0.01, 0.1, 1.0, 10.0, 100.0])
for row in sweep.rows:
    print(f"lambda2={row['value']:<6g} avg={row['average_error']:.4f} stab={row['stability_error']:.4f}")
print("most stable at lambda2 =", sweep.best())
