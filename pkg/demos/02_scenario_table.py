# %% [markdown]
# A reduced run of the n=2000, p=10, r=1.7 scenario comparing every method.
# Raise REPS to 50 for the full protocol (about a minute per method on one core).

# %%
import sys

from dwr import ScenarioConfig, emit_plots, run_scenario

REPS = int(sys.argv[1]) if len(sys.argv) > 1 else 5
cfg = ScenarioConfig(n=2000, p=10, r_train=1.7, replications=REPS, test_sets_per_rate=3)
res = run_scenario(cfg)

# %%
print(f"{'method':8s} {'beta_S':>7s} {'beta_V':>7s} {'avg':>7s} {'stab':>7s}")
for m, s in res.summary().items():
    print(
        f"{m:8s} {s['beta_s_error_mean']:7.3f} {s['beta_v_error_mean']:7.3f} "
        f"{s['average_error']:7.3f} {s['stability_error']:7.4f}"
    )

# %%
# RMSE per test bias rate: baselines degrade as r_test turns negative,
# DWR stays roughly flat.
summ = res.summary()
print("r_test  " + "  ".join(f"{m:>7s}" for m in summ))
for r in cfg.r_test_grid:
    print(f"{r:6.1f}  " + "  ".join(f"{summ[m]['rmse_by_rate'][str(r)]:7.3f}" for m in summ))

out = res.write("scenario_out")
emit_plots(res, out)
