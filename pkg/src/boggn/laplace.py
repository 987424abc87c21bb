"""MAP training, Laplace-GGN weight posterior, evidence and predictive."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.special import expit

from .mlp import (
    MlpParams,
    MlpSpec,
    _as_batch,
    batch_loss_and_grad,
    bernoulli_nll,
    init_params,
    logits,
    logits_and_jacobian,
)

__all__ = [
    "Adam",
    "LaplacePosterior",
    "TrainConfig",
    "TrainingError",
    "acquisition_value",
    "ggn_posterior",
    "laplace_log_evidence",
    "linearized_predictive",
    "log_marginal_likelihood",
    "mc_predictive",
    "mc_predictive_batch",
    "sample_offsets",
    "train_map",
]

log = logging.getLogger(__name__)

DIAGONAL_THRESHOLD = 5000


class TrainingError(RuntimeError):
    """Raised when MAP training produces a non-finite loss."""


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-2
    batch_size: int = 32
    max_epochs: int = 200
    seed: int = 0
    adam_betas: tuple = (0.9, 0.999)
    adam_eps: float = 1e-8
    warm_start: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be nonnegative")


class Adam:
    """Adam on a flat parameter vector."""

    def __init__(self, n_params, learning_rate=1e-2, betas=(0.9, 0.999), eps=1e-8):
        self.lr = learning_rate
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)
        self.t = 0

    def step(self, theta, grad):
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return theta - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def train_map(spec: MlpSpec, labeled, prior_precision: float, cfg: TrainConfig | None = None,
              init: MlpParams | None = None, rng: np.random.Generator | None = None) -> MlpParams:
    """Minimize the regularized cross-entropy with minibatch Adam.

    Returns the iterate with the lowest full-batch loss seen at epoch
    boundaries, the starting point included, so the result never scores
    worse than ``init``.
    """
    cfg = cfg or TrainConfig()
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    if init is None:
        init = init_params(spec, rng)
    elif init.spec != spec:
        raise ValueError("init parameters do not match spec")
    X = _as_batch(spec, labeled.points)
    z = np.asarray(labeled.labels, dtype=float)
    n = X.shape[0]
    theta = init.flat.copy()
    if n == 0:
        return MlpParams(theta, spec)

    best_loss, _ = batch_loss_and_grad(theta, spec, X, z, prior_precision, n)
    best = theta.copy()
    opt = Adam(theta.size, cfg.learning_rate, cfg.adam_betas, cfg.adam_eps)
    bs = min(cfg.batch_size, n)
    # divergence is detected explicitly below
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(cfg.max_epochs):
            order = rng.permutation(n)
            for start in range(0, n, bs):
                idx = order[start:start + bs]
                _, grad = batch_loss_and_grad(theta, spec, X[idx], z[idx], prior_precision, n)
                theta = opt.step(theta, grad)
            loss, _ = batch_loss_and_grad(theta, spec, X, z, prior_precision, n)
            if not (math.isfinite(loss) and np.all(np.isfinite(theta))):
                raise TrainingError(f"non-finite loss at epoch {epoch} (loss={loss})")
            if loss <= best_loss:
                best_loss, best = loss, theta.copy()
    return MlpParams(best, spec)


@dataclass(frozen=True)
class LaplacePosterior:
    """Gaussian ``N(theta_map, precision^-1)`` over the network weights.

    ``cholesky`` is the lower factor ``L`` with ``precision = L @ L.T`` for the
    dense form. In the diagonal form ``precision`` and ``cholesky`` are vectors.
    """

    theta_map: np.ndarray
    precision: np.ndarray
    cholesky: np.ndarray = field(repr=False)
    prior_precision: float
    spec: MlpSpec
    diagonal: bool = False

    @property
    def params(self) -> MlpParams:
        return MlpParams(self.theta_map, self.spec)

    @property
    def n_params(self) -> int:
        return self.theta_map.size

    @property
    def covariance(self) -> np.ndarray:
        if self.diagonal:
            return np.diag(1.0 / self.precision)
        return cho_solve((self.cholesky, True), np.eye(self.n_params))

    def logdet_precision(self) -> float:
        if self.diagonal:
            return float(np.sum(np.log(self.precision)))
        return float(2.0 * np.sum(np.log(np.diag(self.cholesky))))

    def to_json(self) -> str:
        return json.dumps({
            "spec": self.spec.to_dict(),
            "theta_map": self.theta_map.tolist(),
            "cholesky": self.cholesky.reshape(-1).tolist(),
            "prior_precision": self.prior_precision,
            "diagonal": self.diagonal,
        })

    @classmethod
    def from_json(cls, text: str) -> "LaplacePosterior":
        d = json.loads(text)
        spec = MlpSpec.from_dict(d["spec"])
        theta = np.array(d["theta_map"], dtype=float)
        chol = np.array(d["cholesky"], dtype=float)
        if d["diagonal"]:
            precision = chol**2
        else:
            chol = chol.reshape(theta.size, theta.size)
            precision = chol @ chol.T
        return cls(theta, precision, chol, float(d["prior_precision"]), spec, bool(d["diagonal"]))


def _build_posterior(theta, spec, J, lam, prior_precision, diagonal):
    P = theta.size
    if diagonal:
        precision = prior_precision + (lam[:, None] * J * J).sum(axis=0)
        return LaplacePosterior(theta, precision, np.sqrt(precision), prior_precision, spec, True)
    precision = (J.T * lam) @ J
    precision[np.diag_indices(P)] += prior_precision
    precision = 0.5 * (precision + precision.T)
    try:
        L = np.linalg.cholesky(precision)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("GGN precision is not positive definite") from exc
    return LaplacePosterior(theta, precision, L, prior_precision, spec, False)


def ggn_posterior(params: MlpParams, labeled, prior_precision: float,
                  diagonal: bool | None = None) -> LaplacePosterior:
    """Laplace posterior whose precision is ``delta*I + sum_n pi_n(1-pi_n) J_n J_n^T``.

    ``diagonal=None`` picks the diagonal form only when the network has more
    than ``DIAGONAL_THRESHOLD`` parameters.
    """
    if prior_precision <= 0:
        raise ValueError("prior_precision must be positive")
    spec = params.spec
    if diagonal is None:
        diagonal = spec.n_params > DIAGONAL_THRESHOLD
    theta = np.array(params.flat)
    if len(labeled) == 0:
        J = np.zeros((0, theta.size))
        lam = np.zeros(0)
    else:
        f, J = logits_and_jacobian(params, labeled.points)
        p = expit(f)
        lam = p * (1.0 - p)
    return _build_posterior(theta, spec, J, lam, prior_precision, diagonal)


def laplace_log_evidence(log_joint_at_mode: float, logdet_precision: float, n_params: int) -> float:
    """``log p(D, theta*) - 0.5 * log det(H / (2 pi))``."""
    return float(log_joint_at_mode - 0.5 * (logdet_precision - n_params * math.log(2 * math.pi)))


def log_joint(params: MlpParams, labeled, prior_precision: float) -> float:
    """Bernoulli log-likelihood plus the ``N(0, I/delta)`` log prior."""
    theta = params.flat
    P = theta.size
    log_prior = 0.5 * P * math.log(prior_precision / (2 * math.pi)) - 0.5 * prior_precision * theta @ theta
    if len(labeled) == 0:
        return float(log_prior)
    f = logits(params, labeled.points)
    nll, _ = bernoulli_nll(f, np.asarray(labeled.labels, dtype=float))
    return float(log_prior - nll.sum())


def log_marginal_likelihood(post: LaplacePosterior, labeled) -> float:
    """Laplace approximation to ``log p(D | M)`` at the posterior mode."""
    lj = log_joint(post.params, labeled, post.prior_precision)
    return laplace_log_evidence(lj, post.logdet_precision(), post.n_params)


def sample_offsets(post: LaplacePosterior, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Draws of ``theta - theta_map`` from the posterior, shape ``(n_samples, P)``."""
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    g = rng.standard_normal((n_samples, post.n_params))
    if post.diagonal:
        return g / post.cholesky
    # L^-T g has covariance (L L^T)^-1
    return solve_triangular(post.cholesky, g.T, lower=True, trans="T").T


def linearized_predictive(post: LaplacePosterior, X) -> tuple:
    """Mean and variance of the linearized logit at the rows of ``X``."""
    f, J = logits_and_jacobian(post.params, X)
    if post.diagonal:
        var = (J * J / post.precision).sum(axis=1)
    else:
        V = solve_triangular(post.cholesky, J.T, lower=True)
        var = (V * V).sum(axis=0)
    return f, var


def mc_predictive_batch(post: LaplacePosterior, X, n_samples: int = 64,
                        rng: np.random.Generator | None = None,
                        offsets: np.ndarray | None = None) -> np.ndarray:
    """Monte-Carlo GLM predictive ``E_q[sigmoid(f_lin(x; theta))]`` for each row of ``X``.

    The same weight draws are shared by every row. Pass ``offsets`` to reuse
    draws from :func:`sample_offsets`.
    """
    if offsets is None:
        if rng is None:
            raise ValueError("either rng or offsets is required")
        offsets = sample_offsets(post, n_samples, rng)
    f, J = logits_and_jacobian(post.params, X)
    return expit(f[:, None] + J @ offsets.T).mean(axis=1)


def mc_predictive(post: LaplacePosterior, spec: MlpSpec, x, n_samples: int = 64,
                  rng: np.random.Generator | None = None) -> float:
    if spec != post.spec:
        raise ValueError("spec does not match the posterior")
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.input_dim,):
        raise ValueError(f"expected a point of length {spec.input_dim}")
    return float(mc_predictive_batch(post, x[None, :], n_samples, rng)[0])


def acquisition_value(post: LaplacePosterior, spec: MlpSpec, x, gamma: float,
                      n_samples: int = 64, rng: np.random.Generator | None = None) -> float:
    """Estimated relative density ratio ``E_q[pi(x)] / gamma``."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    return mc_predictive(post, spec, x, n_samples, rng) / gamma
