"""Two-Gaussian density-ratio construction used to compare CPE and KDE estimates.

Class ``z = 1`` points (proportion ``gamma``) come from ``N(-1, 1)`` and class
``z = 0`` points from ``N(+1, 1)``. The Bayes class posterior is then known in
closed form, and so is the relative ratio ``r_gamma = pi* / gamma``.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit
from scipy.stats import norm

from .dataset import labeled_from_arrays
from .laplace import TrainConfig, train_map
from .mlp import MlpSpec, probabilities
from .tpe_kde import kde_fit, relative_ratio

LOWER_MEAN, UPPER_MEAN = -1.0, 1.0

DEMO_SPEC = MlpSpec(1, (32, 32, 32), "elu")


def sample_two_gaussians(n: int, gamma: float, rng: np.random.Generator) -> tuple:
    """``n`` points with exactly ``round(gamma * n)`` positives; returns ``(x, z)``."""
    n_pos = int(round(gamma * n))
    x = np.concatenate([rng.normal(LOWER_MEAN, 1.0, n_pos), rng.normal(UPPER_MEAN, 1.0, n - n_pos)])
    z = np.concatenate([np.ones(n_pos, dtype=np.int64), np.zeros(n - n_pos, dtype=np.int64)])
    return x, z


def bayes_posterior(x, gamma: float) -> np.ndarray:
    """``gamma l(x) / (gamma l(x) + (1 - gamma) g(x))``."""
    x = np.asarray(x, dtype=float)
    log_odds = (np.log(gamma) - np.log1p(-gamma)
                + norm.logpdf(x, LOWER_MEAN) - norm.logpdf(x, UPPER_MEAN))
    return expit(log_odds)


def true_relative_ratio(x, gamma: float) -> np.ndarray:
    return bayes_posterior(x, gamma) / gamma


def mixture_quantiles(gamma: float, probs) -> np.ndarray:
    """Quantiles of ``gamma N(-1, 1) + (1 - gamma) N(1, 1)``."""
    def cdf(t):
        return gamma * norm.cdf(t, LOWER_MEAN) + (1 - gamma) * norm.cdf(t, UPPER_MEAN)
    return np.array([brentq(lambda t: cdf(t) - p, -20, 20, xtol=1e-12) for p in probs])


def fit_cpe(x, z, gamma: float, seed: int = 0, spec: MlpSpec = DEMO_SPEC,
            prior_precision: float = 1.0, cfg: TrainConfig | None = None):
    """Train the MAP classifier on 1-d samples; returns its parameters."""
    cfg = cfg or TrainConfig(max_epochs=40, seed=seed)
    labeled = labeled_from_arrays(np.asarray(x, dtype=float)[:, None], z, gamma)
    return train_map(spec, labeled, prior_precision, cfg, rng=np.random.default_rng(seed))


def ratio_demo_table(gamma: float = 1.0 / 3.0, n_samples: int = 5000, seed: int = 0,
                     grid=None) -> dict:
    """True, CPE and KDE relative ratios on a 1-d grid.

    Returns a dict of equal-length arrays keyed by ``x``, ``true_r_gamma``,
    ``cpe_r_gamma`` and ``kde_r_gamma``.
    """
    rng = np.random.default_rng(seed)
    if grid is None:
        grid = np.linspace(-4.0, 4.0, 161)
    grid = np.asarray(grid, dtype=float)
    x, z = sample_two_gaussians(n_samples, gamma, rng)
    params = fit_cpe(x, z, gamma, seed)
    cpe = probabilities(params, grid[:, None]) / gamma
    ell = kde_fit(x[z == 1][:, None])
    g = kde_fit(x[z == 0][:, None])
    kde = relative_ratio(ell, g, grid[:, None], gamma)
    return {"x": grid, "true_r_gamma": true_relative_ratio(grid, gamma),
            "cpe_r_gamma": cpe, "kde_r_gamma": kde}
