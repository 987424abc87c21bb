"""Bayesian optimization by density-ratio estimation with a Laplace-GGN classifier.

Observations are split at the empirical ``gamma``-quantile of their values;
an MLP classifier is trained to separate the two classes, its weights get a
Laplace posterior with a generalized Gauss-Newton precision, and the next
point maximizes the Monte-Carlo class probability ``E_q[pi(x)] / gamma``.
TPE (kernel density) and random-search baselines share the same driver.
"""

from .blackbox import BENCHMARKS, Benchmark, Domain, DomainError, evaluate, get_benchmark, sample_uniform
from .dataset import LabeledSet, ObservationSet, assign_labels, compute_threshold, label
from .glm_gp import LinearizedGp, fit_linearized_gp, gp_predictive, kernel
from .laplace import (
    LaplacePosterior,
    TrainConfig,
    acquisition_value,
    ggn_posterior,
    log_marginal_likelihood,
    mc_predictive,
    train_map,
)
from .mlp import MlpParams, MlpSpec, forward, init_params, loss_and_grad, param_jacobian
from .optimizer import RunRecord, SuggestStrategy, immediate_regret, run, suggest
from .tpe_kde import KdeModel, kde_fit, relative_ratio, tpe_suggest

__version__ = "0.1.0"
