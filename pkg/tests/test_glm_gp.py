import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.special import expit

from boggn.dataset import labeled_from_arrays
from boggn.glm_gp import fit_linearized_gp, gp_mc_predictive, gp_predictive, gram, kernel
from boggn.laplace import ggn_posterior, linearized_predictive
from boggn.mlp import MlpParams, MlpSpec, init_params


def random_net(seed, d=2, widths=(6, 5), activation="tanh"):
    spec = MlpSpec(d, widths, activation)
    rng = np.random.default_rng(seed)
    return MlpParams(rng.normal(scale=0.7, size=spec.n_params), spec)


def test_linear_model_kernel_is_dot_product():
    spec = MlpSpec(3, (), bias=False)
    params = MlpParams(np.array([0.2, -0.1, 0.4]), spec)
    gp = fit_linearized_gp(params, np.zeros((0, 3)), 1.0)
    x, x2 = np.array([1.0, 2.0, -1.0]), np.array([0.5, 0.0, 3.0])
    assert kernel(gp, x, x2) == pytest.approx(x @ x2, rel=1e-14)
    gp4 = fit_linearized_gp(params, np.zeros((0, 3)), 4.0)
    assert kernel(gp4, x, x2) == pytest.approx(x @ x2 / 4, rel=1e-14)


def test_kernel_is_positive_semidefinite():
    params = random_net(0)
    gp = fit_linearized_gp(params, np.zeros((0, 2)), 0.5)
    X = np.random.default_rng(1).uniform(-2, 2, size=(40, 2))
    K = gram(gp, X)
    np.testing.assert_allclose(K, K.T, atol=1e-12)
    assert np.linalg.eigvalsh(K).min() >= -1e-10
    for x in X[:5]:
        assert kernel(gp, x, x) >= 0


def test_prior_when_no_training_data():
    params = random_net(2)
    gp = fit_linearized_gp(params, np.zeros((0, 2)), 2.0)
    x = np.array([0.3, -0.7])
    mean, var = gp_predictive(gp, x)
    assert var == pytest.approx(kernel(gp, x, x), rel=1e-12)
    from boggn.mlp import logits
    assert mean == pytest.approx(float(logits(params, x[None])[0]))


def test_conditioning_reduces_variance_at_training_points():
    params = random_net(3)
    X = np.random.default_rng(4).uniform(-1, 1, size=(15, 2))
    prior = fit_linearized_gp(params, np.zeros((0, 2)), 0.1)
    post = fit_linearized_gp(params, X, 0.1)
    _, v0 = gp_predictive(prior, X)
    _, v1 = gp_predictive(post, X)
    assert np.all(v1 <= v0 + 1e-12)
    assert np.all(v1 < v0)


@pytest.mark.parametrize("seed", range(20))
def test_weight_and_function_space_variances_agree(seed):
    params = random_net(seed, activation=("relu", "elu", "tanh")[seed % 3])
    rng = np.random.default_rng(100 + seed)
    X = rng.uniform(-1, 1, size=(12, 2))
    z = (rng.uniform(size=12) < 0.5).astype(int)
    delta = float(10 ** rng.uniform(-1, 1))
    post = ggn_posterior(params, labeled_from_arrays(X, z), delta, diagonal=False)
    gp = fit_linearized_gp(params, X, delta)
    Xs = rng.uniform(-1.5, 1.5, size=(8, 2))
    f_w, v_w = linearized_predictive(post, Xs)
    f_g, v_g = gp_predictive(gp, Xs)
    np.testing.assert_allclose(f_w, f_g, rtol=0, atol=1e-12)
    np.testing.assert_allclose(v_w, v_g, rtol=1e-6, atol=1e-10)


def test_mc_predictive_converges():
    params = random_net(7)
    X = np.random.default_rng(8).uniform(-1, 1, size=(10, 2))
    gp = fit_linearized_gp(params, X, 0.3)
    x = np.array([0.4, 0.1])
    mean, var = gp_predictive(gp, x)
    grid = np.linspace(-10, 10, 200001)
    dens = np.exp(-0.5 * grid**2) / np.sqrt(2 * np.pi)
    exact = trapezoid(expit(mean + np.sqrt(var) * grid) * dens, grid)
    est, se = gp_mc_predictive(gp, x, 10000, np.random.default_rng(9))
    assert abs(est - exact) < 2 * se
    assert se < 0.01


def test_unanchored_init_params_also_work():
    spec = MlpSpec(1, (4,), "relu")
    params = init_params(spec, np.random.default_rng(0))
    gp = fit_linearized_gp(params, np.array([[0.1], [0.5]]), 1.0)
    _, v = gp_predictive(gp, np.linspace(-1, 1, 5)[:, None])
    assert v.shape == (5,) and np.all(v >= 0)
