# %% [markdown]
# Learned sample weights remove the correlation between stable and unstable
# features, including the spurious link between the biased feature V5 and the
# omitted nonlinear term g(S).

# %%
import numpy as np

from dwr import EnvironmentSpec, HyperParams, OutcomeSpec, generate_environment, learn_weights, pearson_matrix
from dwr.synthetic import nonlinear_term

ds = generate_environment("SIndepV", OutcomeSpec(), EnvironmentSpec(bias_rate=1.7, target_n=2000), p=10, seed=0)
x = ds.x - ds.x.mean(axis=0)
g = nonlinear_term(ds.x[:, ds.truth.stable_cols], "poly")

# %%
# Only the weight-learning part of the objective: decorrelation plus the
# variance and mean penalties on w.
w = learn_weights(x, HyperParams(lambda3=0.003, lambda4=1.0))
print(f"weights: mean {w.mean():.3f}, max {w.max():.1f}, zero fraction {np.mean(w == 0):.2f}")

# %%
names = list(ds.feature_names) + ["g"]
xg = np.column_stack([x, g])
for label, c in (("uniform", pearson_matrix(xg)), ("learned", pearson_matrix(xg, w))):
    off = np.abs(c[:10, :10] - np.eye(10))
    j, k = np.unravel_index(off.argmax(), off.shape)
    print(f"{label:8s} max |corr| {off.max():.3f} ({names[j]}, {names[k]})   corr(X10, g) {c[9, 10]: .3f}")

# %%
np.set_printoptions(precision=2, suppress=True)
print(pearson_matrix(xg, w)[[0, 1, 9, 10]][:, [0, 1, 9, 10]])
