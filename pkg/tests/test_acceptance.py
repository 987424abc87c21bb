"""Acceptance criteria, one test per criterion.

Each test appends a ``PASS``/``FAIL`` line to a shared report that is printed
at the end of the pytest session. The regret experiments are the slow part
(about 25 minutes on one core).
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import minimize_scalar
from scipy.special import expit, log_expit
from scipy.stats import multivariate_normal, norm

from boggn.blackbox import get_benchmark
from boggn.dataset import labeled_from_arrays
from boggn.glm_gp import fit_linearized_gp, gp_predictive
from boggn.laplace import (
    ggn_posterior,
    laplace_log_evidence,
    linearized_predictive,
    log_marginal_likelihood,
)
from boggn.mlp import MlpParams, MlpSpec, batch_loss_and_grad, jacobian, logits, probabilities
from boggn.optimizer import SuggestStrategy, run
from boggn.ratio import (
    bayes_posterior,
    fit_cpe,
    mixture_quantiles,
    ratio_demo_table,
    sample_two_gaussians,
)

GAMMA = 1.0 / 3.0
N_SEEDS = 20
REGRET_SETUPS = [("branin", 100), ("camel6", 150), ("hartmann3", 150)]


def report_line(report, number, ok, detail, seconds, limit):
    status = "PASS" if ok else "FAIL"
    bound = f"limit {limit}s" if limit is not None else "no time limit"
    report.append(f"criterion {number}: {status}  {detail}  [{seconds:.1f}s, {bound}]")


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12)


def central_diff(fun, theta, h=1e-5):
    cols = []
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        cols.append((fun(theta + e) - fun(theta - e)) / (2 * h))
    return np.array(cols).T


def test_1_gradients_match_finite_differences(acceptance_report):
    t0 = time.perf_counter()
    worst_jac = worst_grad = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        spec = MlpSpec(int(rng.integers(1, 4)), (5, 4), ("relu", "elu", "tanh")[seed % 3])
        theta = rng.normal(0, 0.8, spec.n_params)
        X = rng.normal(size=(6, spec.input_dim))
        z = rng.integers(0, 2, 6)
        J = jacobian(MlpParams(theta, spec), X)
        J_fd = central_diff(lambda t: logits(MlpParams(t, spec), X), theta)
        _, g = batch_loss_and_grad(theta, spec, X, z, 0.3, 6)
        g_fd = central_diff(lambda t: np.array(batch_loss_and_grad(t, spec, X, z, 0.3, 6)[0]),
                            theta).ravel()
        worst_jac = max(worst_jac, rel_err(J, J_fd))
        worst_grad = max(worst_grad, rel_err(g, g_fd))
    dt = time.perf_counter() - t0
    ok = worst_jac < 1e-5 and worst_grad < 1e-5 and dt < 10
    report_line(acceptance_report, 1, ok,
                f"max rel err jacobian {worst_jac:.2e}, loss grad {worst_grad:.2e} (tol 1e-5)", dt, 10)
    assert ok


def test_2_ggn_is_exact_for_logistic_regression(acceptance_report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    X = rng.normal(size=(25, 3))
    data = labeled_from_arrays(X, rng.integers(0, 2, 25))
    params = MlpParams(rng.normal(size=4), MlpSpec(3, ()))
    post = ggn_posterior(params, data, 0.7)
    Phi = np.hstack([X, np.ones((25, 1))])
    p = expit(Phi @ params.flat)
    hessian = Phi.T @ (Phi * (p * (1 - p))[:, None]) + 0.7 * np.eye(4)
    err = float(np.abs(post.precision - hessian).max())
    dt = time.perf_counter() - t0
    ok = err <= 1e-8 and dt < 1
    report_line(acceptance_report, 2, ok, f"max |GGN - Hessian| {err:.2e} (tol 1e-8)", dt, 1)
    assert ok


def one_param_logistic_errors(scale):
    x = scale * np.array([-1.5, -0.5, 0.3, 1.0, 2.0])
    z = np.array([1, 1, 0, 0, 1])

    def log_joint(t):
        f = t * x
        return ((z * log_expit(f) + (1 - z) * log_expit(-f)).sum()
                - 0.5 * t * t - 0.5 * math.log(2 * math.pi))

    mode = minimize_scalar(lambda t: -log_joint(t), bounds=(-20, 20), method="bounded",
                           options={"xatol": 1e-12}).x
    integral, _ = quad(lambda t: math.exp(log_joint(t) - log_joint(mode)), -np.inf, np.inf,
                       epsabs=1e-14, epsrel=1e-12)
    exact = math.log(integral) + log_joint(mode)
    data = labeled_from_arrays(x[:, None], z)
    post = ggn_posterior(MlpParams([mode], MlpSpec(1, (), bias=False)), data, 1.0)
    return abs(exact - log_marginal_likelihood(post, data))


def test_3_laplace_evidence_oracles(acceptance_report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    N, P, sigma, delta = 12, 3, 0.4, 2.0
    Phi = rng.normal(size=(N, P))
    y = Phi @ rng.normal(size=P) + sigma * rng.normal(size=N)
    precision = Phi.T @ Phi / sigma**2 + delta * np.eye(P)
    mode = np.linalg.solve(precision, Phi.T @ y / sigma**2)
    lj = (norm.logpdf(y, Phi @ mode, sigma).sum()
          + multivariate_normal.logpdf(mode, np.zeros(P), np.eye(P) / delta))
    approx = laplace_log_evidence(lj, np.linalg.slogdet(precision)[1], P)
    closed = multivariate_normal.logpdf(y, np.zeros(N), sigma**2 * np.eye(N) + Phi @ Phi.T / delta)
    conj_err = abs(approx - closed)
    quad_err = one_param_logistic_errors(0.2)
    unit_err = one_param_logistic_errors(1.0)
    dt = time.perf_counter() - t0
    ok = conj_err < 1e-6 and quad_err < 1e-3 and dt < 5
    report_line(acceptance_report, 3, ok,
                f"conjugate err {conj_err:.2e} (tol 1e-6); 1-param logistic vs quadrature "
                f"{quad_err:.2e} (tol 1e-3, inputs scaled by 0.2; {unit_err:.2e} at unit scale)",
                dt, 5)
    assert ok


def test_4_cpe_recovers_the_ratio(acceptance_report):
    t0 = time.perf_counter()
    x, z = sample_two_gaussians(5000, GAMMA, np.random.default_rng(0))
    params = fit_cpe(x, z, GAMMA, seed=0)
    q = mixture_quantiles(GAMMA, np.linspace(0.1, 0.9, 9))
    pi_err = float(np.abs(probabilities(params, q[:, None]) - bayes_posterior(q, GAMMA)).max())
    table = ratio_demo_table(GAMMA, 5000, seed=0)
    cpe_mae = float(np.abs(table["cpe_r_gamma"] - table["true_r_gamma"]).mean())
    kde_mae = float(np.abs(table["kde_r_gamma"] - table["true_r_gamma"]).mean())
    dt = time.perf_counter() - t0
    ok = pi_err < 0.1 and cpe_mae < kde_mae and dt < 60
    report_line(acceptance_report, 4, ok,
                f"max |pi - pi*| at mixture deciles {pi_err:.3f} (tol 0.1); "
                f"ratio MAE cpe {cpe_mae:.4f} vs kde {kde_mae:.4f}", dt, 60)
    assert ok


def test_5_weight_and_function_space_agree(acceptance_report):
    t0 = time.perf_counter()
    worst_mean = worst_var = 0.0
    max_p = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        spec = MlpSpec(2, (16, 16), ("relu", "elu", "tanh")[seed % 3])
        max_p = max(max_p, spec.n_params)
        params = MlpParams(rng.normal(scale=0.5, size=spec.n_params), spec)
        X = rng.uniform(-1, 1, size=(int(rng.integers(5, 51)), 2))
        data = labeled_from_arrays(X, rng.integers(0, 2, X.shape[0]))
        delta = float(10 ** rng.uniform(-1, 1))
        post = ggn_posterior(params, data, delta, diagonal=False)
        gp = fit_linearized_gp(params, X, delta)
        Xs = rng.uniform(-1.5, 1.5, size=(10, 2))
        f_w, v_w = linearized_predictive(post, Xs)
        f_g, v_g = gp_predictive(gp, Xs)
        worst_mean = max(worst_mean, float(np.abs(f_w - f_g).max()))
        worst_var = max(worst_var, float((np.abs(v_w - v_g) / np.abs(v_g)).max()))
    dt = time.perf_counter() - t0
    ok = worst_mean == 0.0 and worst_var < 1e-6 and dt < 30
    report_line(acceptance_report, 5, ok,
                f"max mean diff {worst_mean:.1e}, max rel var diff {worst_var:.2e} "
                f"(tol 1e-6, P <= {max_p}, N <= 50)", dt, 30)
    assert ok


@pytest.fixture(scope="module")
def regret_runs():
    """All acceptance runs: ``{(benchmark, kind): (records per seed, seconds)}``."""
    out = {}
    for name, budget in REGRET_SETUPS:
        bench = get_benchmark(name)
        for kind in ("boggn", "random"):
            strategy = SuggestStrategy(kind=kind, gamma=GAMMA, epsilon=0.1)
            t0 = time.perf_counter()
            runs = [run(bench, strategy, budget, seed=s) for s in range(N_SEEDS)]
            out[(name, kind)] = (runs, time.perf_counter() - t0)
    return out


@pytest.mark.slow
def test_6_boggn_beats_random_search(acceptance_report, regret_runs):
    oks = []
    parts = []
    for name, budget in REGRET_SETUPS:
        med = {}
        for kind in ("boggn", "random"):
            runs, _ = regret_runs[(name, kind)]
            med[kind] = float(np.median([r[-1].regret for r in runs]))
        ok = med["boggn"] < med["random"]
        if name == "branin":
            ok = ok and med["boggn"] < 1.0
        oks.append(ok)
        parts.append(f"{name}@{budget}: boggn {med['boggn']:.4f} vs random {med['random']:.4f}")
    branin_time = regret_runs[("branin", "boggn")][1]
    ok = all(oks) and branin_time < 900
    report_line(acceptance_report, 6, ok,
                "median final regret over 20 seeds; " + "; ".join(parts)
                + " (branin boggn must also be < 1.0)", branin_time, 900)
    assert ok


def test_7_traces_are_byte_identical(acceptance_report, tmp_path):
    t0 = time.perf_counter()
    cfg = tmp_path / "det.ini"
    cfg.write_text("[run]\nbenchmark = branin\nbudget = 20\nreplications = 2\n"
                   "[strategy]\nkind = boggn\n")
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        subprocess.run([sys.executable, "-m", "boggn.cli", "run", str(cfg), "--output-dir", str(out)],
                       check=True)
        outs.append(out)
    names = ["run_0000.jsonl", "run_0001.jsonl", "summary.csv"]
    same = all((outs[0] / n).read_bytes() == (outs[1] / n).read_bytes() for n in names)
    dt = time.perf_counter() - t0
    ok = same and dt < 60
    report_line(acceptance_report, 7, ok,
                "two CLI invocations, 2 boggn seeds x 20 evaluations: traces "
                + ("identical" if same else "DIFFER"), dt, 60)
    assert ok


@pytest.mark.slow
def test_8_bounds_hold_every_iteration(acceptance_report, regret_runs):
    t0 = time.perf_counter()
    checked = max_acq = 0
    violations = []
    for (name, kind), (runs, _) in regret_runs.items():
        domain = get_benchmark(name).domain
        for seed, records in enumerate(runs):
            ys = []
            for r in records:
                if r.tau is not None:
                    n = len(ys)
                    distinct = len(set(ys)) == n
                    expected = math.ceil(GAMMA * n - 1e-9)
                    if (r.n_positive != expected) if distinct else (r.n_positive < expected):
                        violations.append(f"{name}/{kind}/{seed}@{r.iteration}: count")
                if r.acquisition is not None:
                    max_acq = max(max_acq, r.acquisition)
                    if r.acquisition > 1 / GAMMA + 1e-12:
                        violations.append(f"{name}/{kind}/{seed}@{r.iteration}: acquisition")
                if not domain.contains(np.array(r.x)):
                    violations.append(f"{name}/{kind}/{seed}@{r.iteration}: domain")
                ys.append(r.y)
                checked += 1
    dt = time.perf_counter() - t0
    ok = not violations
    report_line(acceptance_report, 8, ok,
                f"{checked} iterations audited, max acquisition {max_acq:.6f} (bound {1 / GAMMA:.6f}), "
                f"{len(violations)} violations {violations[:3]}", dt, None)
    assert ok
