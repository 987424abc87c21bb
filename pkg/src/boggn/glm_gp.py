"""Function-space view of the linearized network.

With the network linearized at ``theta_map`` and prior ``N(m0, I/delta)`` on
the weights, the logit is a Gaussian process with kernel
``K(x, x') = J(x) J(x')^T / delta``. Conditioning on the training points with
Bernoulli-logit curvature ``Lambda = pi (1 - pi)`` gives the same predictive
variance as the weight-space Laplace-GGN posterior. This module computes the
function-space side so the two can be checked against each other.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import expit

from .mlp import MlpParams, jacobian, logits_and_jacobian

__all__ = ["LinearizedGp", "fit_linearized_gp", "gp_mc_predictive", "gp_predictive", "kernel",
           "gram"]

log = logging.getLogger(__name__)

JITTER = 1e-8


@dataclass(frozen=True)
class LinearizedGp:
    anchor: MlpParams
    prior_precision: float
    train_points: np.ndarray
    train_logits: np.ndarray
    lambda_diag: np.ndarray
    train_jacobian: np.ndarray = field(repr=False)
    _factor: tuple = field(repr=False, default=None)

    @property
    def prior_cov_scale(self) -> float:
        """Scalar ``s`` with ``S0 = s * I``."""
        return 1.0 / self.prior_precision

    @property
    def n_train(self) -> int:
        return self.train_points.shape[0]


def _factor(K, lam):
    A = K + np.diag(1.0 / lam)
    try:
        return cho_factor(A, lower=True)
    except np.linalg.LinAlgError:
        log.warning("GP system ill-conditioned; adding jitter %.1e to the diagonal", JITTER)
        A[np.diag_indices_from(A)] += JITTER
        return cho_factor(A, lower=True)


def fit_linearized_gp(params: MlpParams, points, prior_precision: float) -> LinearizedGp:
    """Build the GP around ``params`` conditioned on ``points``."""
    if prior_precision <= 0:
        raise ValueError("prior_precision must be positive")
    X = np.asarray(points, dtype=float).reshape(-1, params.spec.input_dim)
    if X.shape[0] == 0:
        empty = np.zeros(0)
        return LinearizedGp(params, prior_precision, X, empty, empty,
                            np.zeros((0, params.spec.n_params)), None)
    f, J = logits_and_jacobian(params, X)
    p = expit(f)
    lam = p * (1.0 - p)
    K = J @ J.T / prior_precision
    return LinearizedGp(params, prior_precision, X, f, lam, J, _factor(K, lam))


def kernel(gp: LinearizedGp, x, x2) -> float:
    """``J(x) S0 J(x2)^T`` with Jacobians taken at the anchor parameters."""
    J = jacobian(gp.anchor, np.vstack([np.asarray(x, float).reshape(1, -1),
                                       np.asarray(x2, float).reshape(1, -1)]))
    return float(J[0] @ J[1] / gp.prior_precision)


def gram(gp: LinearizedGp, X, X2=None) -> np.ndarray:
    J1 = jacobian(gp.anchor, X)
    J2 = J1 if X2 is None else jacobian(gp.anchor, X2)
    return J1 @ J2.T / gp.prior_precision


def gp_predictive(gp: LinearizedGp, x_star) -> tuple:
    """Posterior mean and variance of the logit at one point or a batch of points.

    ``var = K** - K*N (K_NN + Lambda^-1)^-1 K_N*``; the mean is the anchor
    network's logit.
    """
    x_star = np.asarray(x_star, dtype=float)
    batch = x_star.ndim == 2
    X = x_star if batch else x_star.reshape(1, -1)
    f, Js = logits_and_jacobian(gp.anchor, X)
    prior_var = np.einsum("ij,ij->i", Js, Js) / gp.prior_precision
    if gp.n_train == 0:
        var = prior_var
    else:
        Ksn = Js @ gp.train_jacobian.T / gp.prior_precision
        var = prior_var - np.einsum("ij,ji->i", Ksn, cho_solve(gp._factor, Ksn.T))
    var = np.maximum(var, 0.0)
    if batch:
        return f, var
    return float(f[0]), float(var[0])


def gp_mc_predictive(gp: LinearizedGp, x_star, n_samples: int,
                     rng: np.random.Generator) -> tuple:
    """Monte-Carlo ``E[sigmoid(f)]`` under the GP posterior at ``x_star``.

    Returns the estimate and its standard error.
    """
    mean, var = gp_predictive(gp, x_star)
    draws = expit(mean + np.sqrt(var) * rng.standard_normal(n_samples))
    return float(draws.mean()), float(draws.std(ddof=1) / np.sqrt(n_samples))
