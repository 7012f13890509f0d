import numpy as np
import pytest
from scipy.stats import norm

from dwr import core
from dwr.baselines import lasso_fit, ols_fit
from dwr.core import (
    HyperParams,
    decorrelation_gradient,
    decorrelation_loss,
    dwr_fit,
    kde_oracle_weights,
    learn_weights,
    total_objective,
    total_objective_gradient,
    weight_objective,
    weighted_least_squares,
)
from dwr.data import Dataset
from dwr.exceptions import ContractError, DegenerateColumnError, DivergenceError, SingularDesignError
from dwr.metrics import pearson_matrix

ORTHO = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])


def loss_by_definition(x, w):
    """Direct transcription: one summand per column, with column j zeroed."""
    n, p = x.shape
    total = 0.0
    for j in range(p):
        x_minus = x.copy()
        x_minus[:, j] = 0.0
        cross = x[:, j] @ np.diag(w) @ x_minus / n
        means = (x[:, j] @ w / n) * (x_minus.T @ w / n)
        total += np.sum((cross - means) ** 2)
    return total


def central_diff(f, v, h=1e-5):
    g = np.empty_like(v)
    for i in range(v.size):
        e = np.zeros_like(v)
        e[i] = h
        g[i] = (f(v + e) - f(v - e)) / (2 * h)
    return g


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12)


def correlated_pair(n, rho, seed):
    rng = np.random.default_rng(seed)
    return rng.multivariate_normal([0, 0], [[1, rho], [rho, 1]], size=n)


# -- decorrelation loss ------------------------------------------------------


def test_loss_orthogonal_design_is_zero():
    assert decorrelation_loss(ORTHO, np.ones(4)) == 0.0


def test_loss_two_point_example():
    x = np.array([[1.0, 1.0], [-1.0, -1.0]])
    assert decorrelation_loss(x, np.ones(2)) == pytest.approx(2.0, abs=1e-14)
    assert loss_by_definition(x, np.ones(2)) == pytest.approx(2.0, abs=1e-14)


def test_loss_zero_weights():
    x = np.random.default_rng(0).standard_normal((7, 3))
    assert decorrelation_loss(x, np.zeros(7)) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_loss_matches_definition(seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((12, 4)) + rng.normal(size=4)
    w = rng.uniform(0, 3, 12)
    assert decorrelation_loss(x, w) == pytest.approx(loss_by_definition(x, w), rel=1e-12)


def test_loss_shape_errors():
    with pytest.raises(ContractError):
        decorrelation_loss(np.ones((3, 2)), np.ones(4))
    with pytest.raises(ContractError):
        decorrelation_loss(np.array([[np.nan, 1.0], [1.0, 2.0]]), np.ones(2))


def test_loss_zero_pattern_survives_weight_scaling():
    for gamma in (1e-3, 0.5, 7.0):
        assert decorrelation_loss(ORTHO, gamma * np.ones(4)) == 0.0


# -- gradients -----------------------------------------------------------------


def test_gradient_zero_at_orthogonal_design():
    np.testing.assert_array_equal(decorrelation_gradient(ORTHO, np.ones(4)), np.zeros(4))


def test_gradient_componentwise_finite_difference():
    rng = np.random.default_rng(11)
    x = rng.standard_normal((6, 3))
    w = rng.uniform(0.5, 2.0, 6)
    g = decorrelation_gradient(x, w)
    fd = central_diff(lambda v: loss_by_definition(x, v), w)
    assert np.all(np.abs(g - fd) <= 1e-5 * np.abs(fd) + 1e-10)


def test_gradient_even_in_x():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((9, 3))
    w = rng.uniform(0, 2, 9)
    np.testing.assert_allclose(decorrelation_gradient(x, w), decorrelation_gradient(-x, w), rtol=0, atol=1e-15)


def test_total_gradient_finite_difference():
    rng = np.random.default_rng(5)
    n, p = 20, 4
    ds = Dataset(rng.standard_normal((n, p)), rng.standard_normal(n))
    hp = HyperParams(lambda1=0.3, lambda2=2.0, lambda3=0.5, lambda4=3.0)
    w = rng.uniform(0.3, 2.0, n)
    beta = rng.choice([-1, 1], p) * rng.uniform(0.2, 1.0, p)
    gw, gb = total_objective_gradient(ds, w, beta, hp)
    assert rel_err(gw, central_diff(lambda v: total_objective(ds, v, beta, hp), w)) < 1e-6
    assert rel_err(gb, central_diff(lambda b: total_objective(ds, w, b, hp), beta)) < 1e-6


# -- weight objective ---------------------------------------------------------


def test_weight_objective_uniform_equals_loss():
    x = np.random.default_rng(1).standard_normal((10, 3))
    hp = HyperParams(lambda3=0.0, lambda4=1.0)
    assert weight_objective(x, np.ones(10), hp) == decorrelation_loss(x, np.ones(10))


def test_weight_objective_penalty_example():
    x = np.array([[1.0, 0.0], [0.0, 0.0]])
    w = np.array([2.0, 0.0])
    assert decorrelation_loss(x, w) == 0.0
    assert weight_objective(x, w, HyperParams(lambda3=1.0, lambda4=1.0)) == pytest.approx(2.0, abs=1e-15)


def test_weight_objective_orthogonal_without_penalties():
    assert weight_objective(ORTHO, np.ones(4), HyperParams(lambda3=0.0, lambda4=0.0)) == 0.0


# -- learn_weights ------------------------------------------------------------


def test_learn_weights_no_gain_on_uncorrelated_design():
    x = np.tile(ORTHO, (25, 1))
    w = learn_weights(x, HyperParams(lambda3=0.01, lambda4=1.0))
    assert abs(decorrelation_loss(x, w) - decorrelation_loss(x, np.ones(100))) <= 1e-6


def test_learn_weights_decorrelates_bivariate_gaussian():
    x = correlated_pair(2000, 0.8, 3)
    hp = HyperParams(lambda3=0.003, lambda4=1.0)
    w = learn_weights(x, hp)
    assert abs(pearson_matrix(x, w)[0, 1]) <= 0.1
    assert np.all(w >= 0)
    assert weight_objective(x, w, hp) <= weight_objective(x, np.ones(2000), hp)


def test_learn_weights_unique_under_strong_variance_penalty():
    x = np.random.default_rng(4).standard_normal((200, 3)) @ np.array([[1, 0.6, 0], [0, 1, 0.4], [0, 0, 1]])
    hp = HyperParams(lambda3=1.0, lambda4=1.0, tol=1e-10)
    runs = [learn_weights(x, hp, w0=np.random.default_rng(s).uniform(0.2, 3.0, 200)) for s in (0, 1, 2)]
    for w in runs[1:]:
        assert np.max(np.abs(w - runs[0])) <= 0.05


def test_learn_weights_respects_cap():
    x = correlated_pair(500, 0.8, 0)
    w = learn_weights(x, HyperParams(lambda3=0.001, lambda4=1.0, weight_cap=1.5))
    assert w.max() <= 1.5 and w.min() >= 0


def test_learn_weights_needs_n_ge_p():
    with pytest.raises(ContractError):
        learn_weights(np.ones((2, 3)))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_learn_weights_divergence_names_iteration():
    x = np.full((4, 2), 1e200)
    with pytest.raises(DivergenceError) as err:
        learn_weights(x)
    assert err.value.iteration == 0


# -- KDE oracle ---------------------------------------------------------------


def kde_weights_by_loops(x, h):
    n, p = x.shape
    w = np.empty(n)
    for i in range(n):
        marg = np.prod([norm.pdf(x[i, j], loc=x[:, j], scale=h[j]).mean() for j in range(p)])
        joint = np.mean(np.prod(norm.pdf(x[i], loc=x, scale=h), axis=1))
        w[i] = marg / joint
    return w / w.mean()


def test_kde_matches_direct_evaluation():
    x = correlated_pair(60, 0.5, 8)
    h = np.array([0.4, 0.6])
    res = kde_oracle_weights(x, h, chunk_elems=50)
    np.testing.assert_allclose(res.weights, kde_weights_by_loops(x, h), rtol=1e-10)
    assert not res.floored


def test_kde_default_bandwidth_is_silverman():
    x = correlated_pair(80, 0.3, 1)
    np.testing.assert_allclose(kde_oracle_weights(x).weights, kde_weights_by_loops(x, core.silverman_bandwidth(x)))


def test_kde_weights_concentrate_for_independent_columns():
    sds = []
    for n in (200, 3000):
        x = np.random.default_rng(n).standard_normal((n, 2))
        sds.append(kde_oracle_weights(x).weights.std(ddof=1))
    assert sds[1] < sds[0]


def test_kde_constant_column():
    x = np.column_stack([np.arange(10.0), np.ones(10)])
    with pytest.raises(DegenerateColumnError) as err:
        kde_oracle_weights(x)
    assert err.value.column == 1


def test_kde_floor_flag():
    # Very wide kernels push every joint density below the floor.
    x = np.array([[0.0, 0.0], [1.0, 1.0], [50.0, -50.0]])
    res = kde_oracle_weights(x, np.array([1e3, 1e3]), eps=1e-6)
    assert res.floored
    assert np.all(np.isfinite(res.weights))


# -- weighted least squares ---------------------------------------------------


def test_wls_recovers_exact_linear_model():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((30, 4))
    beta = np.array([1.0, -2.0, 0.5, 3.0])
    ds = Dataset(x, x @ beta)
    np.testing.assert_allclose(weighted_least_squares(ds, rng.uniform(0.1, 5, 30)), beta, atol=1e-10)


def test_wls_uniform_is_ols():
    rng = np.random.default_rng(1)
    ds = Dataset(rng.standard_normal((40, 3)), rng.standard_normal(40))
    np.testing.assert_array_equal(weighted_least_squares(ds, np.ones(40)), ols_fit(ds))


def test_wls_rank_deficiency():
    x = np.column_stack([np.arange(5.0), 2 * np.arange(5.0)])
    ds = Dataset(x, np.arange(5.0))
    with pytest.raises(SingularDesignError):
        weighted_least_squares(ds, np.ones(5))
    beta = weighted_least_squares(ds, np.ones(5), ridge_fallback=True)
    assert np.all(np.isfinite(beta))


def test_wls_zero_weights_rejected():
    ds = Dataset(np.eye(3), np.ones(3))
    with pytest.raises(ContractError):
        weighted_least_squares(ds, np.zeros(3))


# -- total objective and dwr_fit ----------------------------------------------


def test_total_objective_at_start_is_half_mean_square():
    rng = np.random.default_rng(0)
    ds = Dataset(rng.standard_normal((8, 2)), rng.standard_normal(8))
    hp = HyperParams(lambda1=0, lambda2=0, lambda3=0, lambda4=0)
    assert total_objective(ds, np.ones(8), np.zeros(2), hp) == pytest.approx(np.sum(ds.y**2) / 16, rel=1e-15)


def test_total_objective_variance_penalty_only():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((8, 2))
    beta = np.array([0.5, -1.0])
    ds = Dataset(x, x @ beta)
    hp = HyperParams(lambda1=0, lambda2=0, lambda3=1.0, lambda4=0)
    assert total_objective(ds, np.ones(8), beta, hp) == pytest.approx(1.0, abs=1e-14)


@pytest.fixture(scope="module")
def biased_env():
    from dwr.synthetic import EnvironmentSpec, OutcomeSpec, generate_environment

    ds = generate_environment("SIndepV", OutcomeSpec(), EnvironmentSpec(1.7, 600), 10, 123)
    x = ds.x - ds.x.mean(axis=0)
    return Dataset(x, ds.y - ds.y.mean())


def test_dwr_fit_trace_and_invariants(biased_env):
    res = dwr_fit(biased_env)
    trace = np.array(res.loss_trace)
    assert np.all(np.isfinite(trace))
    assert np.all(np.diff(trace[10:]) <= 1e-12 * np.abs(trace[10:-1]))
    assert trace[-1] <= trace[0]
    assert np.all(res.weights >= 0)
    assert res.weights.mean() > 0.5
    assert res.iters_used == len(trace) - 1


def test_dwr_fit_weight_cap(biased_env):
    res = dwr_fit(biased_env, HyperParams(weight_cap=3.0, max_iters=300))
    assert res.weights.max() <= 3.0


def test_dwr_fit_frozen_weights_is_lasso(biased_env):
    hp = HyperParams(lambda1=0.02, lambda2=0, lambda3=0, lambda4=0, tol=1e-12, window=20)
    res = dwr_fit(biased_env, hp, update_weights=False)
    np.testing.assert_array_equal(res.weights, np.ones(biased_env.n))
    assert np.max(np.abs(res.beta - lasso_fit(biased_env, 0.02))) <= 1e-3


def test_dwr_fit_row_permutation(biased_env):
    # Rounding differences from summation order are eventually amplified by
    # the nonconvex weight step, so compare over a short horizon.
    perm = np.random.default_rng(0).permutation(biased_env.n)
    hp = HyperParams(max_iters=100)
    a = dwr_fit(biased_env, hp)
    b = dwr_fit(biased_env.take(perm), hp)
    np.testing.assert_allclose(b.weights, a.weights[perm], rtol=0, atol=1e-8)
    np.testing.assert_allclose(b.beta, a.beta, rtol=0, atol=1e-8)


def test_learn_weights_row_permutation_at_optimum(biased_env):
    perm = np.random.default_rng(1).permutation(biased_env.n)
    hp = HyperParams(lambda3=1.0, lambda4=1.0, tol=1e-12)
    a = learn_weights(biased_env.x, hp)
    b = learn_weights(biased_env.x[perm], hp)
    np.testing.assert_allclose(b, a[perm], rtol=0, atol=1e-8)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_dwr_fit_divergence():
    ds = Dataset(np.full((4, 2), 1e200), np.ones(4))
    with pytest.raises(DivergenceError):
        dwr_fit(ds)


def test_hyperparams_validation():
    with pytest.raises(ContractError):
        HyperParams(lambda2=-1)
    with pytest.raises(ContractError):
        HyperParams(max_iters=0)
    with pytest.raises(ContractError):
        HyperParams(tol=0)
    assert HyperParams().with_(lambda2=3).lambda2 == 3
