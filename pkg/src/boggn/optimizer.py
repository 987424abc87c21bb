"""Bayesian-optimization driver: BOGGN, TPE and random search."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .blackbox import Benchmark, Domain, evaluate, sample_uniform
from .dataset import LabeledSet, ObservationSet, label
from .laplace import (
    TrainConfig,
    ggn_posterior,
    log_marginal_likelihood,
    mc_predictive_batch,
    sample_offsets,
    train_map,
)
from .mlp import ACTIVATIONS, MlpParams, MlpSpec
from .tpe_kde import fit_class_densities, relative_ratio_from_log_densities

__all__ = [
    "CpeSurrogate",
    "KdeSurrogate",
    "RunAborted",
    "RunRecord",
    "STRATEGY_KINDS",
    "SuggestStrategy",
    "default_n_init",
    "fit_surrogate",
    "immediate_regret",
    "maximize_acquisition",
    "run",
    "suggest",
    "suggest_with_info",
]

log = logging.getLogger(__name__)

STRATEGY_KINDS = ("boggn", "tpe", "random")


@dataclass(frozen=True)
class SuggestStrategy:
    kind: str = "boggn"
    gamma: float = 1.0 / 3.0
    epsilon: float = 0.1
    pool_size: int = 2000
    refine_steps: int = 20
    mc_samples: int = 64
    prior_precision: float = 0.01
    hidden_widths: tuple = (32, 32)
    activation: str = "relu"
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"kind must be one of {STRATEGY_KINDS}, got {self.kind!r}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.pool_size < 1:
            raise ValueError("pool_size must be at least 1")
        if self.refine_steps < 0:
            raise ValueError("refine_steps must be nonnegative")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be at least 1")
        if self.prior_precision <= 0:
            raise ValueError("prior_precision must be positive")
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        if any(w < 1 for w in self.hidden_widths):
            raise ValueError("hidden_widths must be positive")

    def mlp_spec(self, dim: int) -> MlpSpec:
        return MlpSpec(dim, self.hidden_widths, self.activation)


@dataclass
class RunRecord:
    iteration: int
    x: list
    y: float
    tau: float | None
    best_so_far: float
    regret: float
    evidence: float | None
    wall_time: float
    seed: int
    source: str
    n_positive: int | None = None
    acquisition: float | None = None

    def to_dict(self, include_time: bool = False) -> dict:
        d = asdict(self)
        if not include_time:
            del d["wall_time"]
        return d


class RunAborted(RuntimeError):
    """A run stopped early; ``records`` holds everything completed so far."""

    def __init__(self, message, records):
        super().__init__(message)
        self.records = records


def immediate_regret(values, f_star: float) -> float:
    """``|min(values) - f_star|``."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("values must be nonempty")
    return float(abs(values.min() - f_star))


def default_n_init(dim: int) -> int:
    return max(5, dim + 1)


# --- surrogates -------------------------------------------------------------

def _to_unit(domain: Domain, X):
    return (np.asarray(X, dtype=float) - domain.lower) / domain.width


class CpeSurrogate:
    """Acquisition ``E_q[pi(x)] / gamma`` from a Laplace-GGN classifier.

    The weight draws are fixed at construction so every candidate is scored
    against the same posterior sample.
    """

    def __init__(self, posterior, gamma, offsets, domain, evidence=None):
        self.posterior = posterior
        self.gamma = gamma
        self.offsets = offsets
        self.domain = domain
        self.evidence = evidence

    def acquisition(self, X) -> np.ndarray:
        U = _to_unit(self.domain, np.atleast_2d(X))
        return mc_predictive_batch(self.posterior, U, offsets=self.offsets) / self.gamma


class KdeSurrogate:
    def __init__(self, ell, g, gamma, domain):
        self.ell = ell
        self.g = g
        self.gamma = gamma
        self.domain = domain
        self.evidence = None

    def acquisition(self, X) -> np.ndarray:
        U = _to_unit(self.domain, np.atleast_2d(X))
        return relative_ratio_from_log_densities(self.ell.logpdf(U), self.g.logpdf(U), self.gamma)


def fit_surrogate(strategy: SuggestStrategy, labeled: LabeledSet, domain: Domain,
                  train_rng: np.random.Generator, mc_rng: np.random.Generator,
                  init: MlpParams | None = None):
    """Fit the strategy's surrogate on ``labeled`` (points in domain coordinates).

    Returns ``None`` for random search or when one class is empty.
    """
    if strategy.kind == "random" or not labeled.both_classes:
        return None
    unit = LabeledSet(ObservationSet(_to_unit(domain, labeled.points), labeled.values),
                      labeled.tau, labeled.gamma, labeled.labels)
    if strategy.kind == "tpe":
        ell, g = fit_class_densities(unit, np.ones(domain.dim))
        return KdeSurrogate(ell, g, strategy.gamma, domain)
    spec = strategy.mlp_spec(domain.dim)
    params = train_map(spec, unit, strategy.prior_precision, strategy.train, init=init, rng=train_rng)
    post = ggn_posterior(params, unit, strategy.prior_precision)
    evidence = log_marginal_likelihood(post, unit)
    offsets = sample_offsets(post, strategy.mc_samples, mc_rng)
    return CpeSurrogate(post, strategy.gamma, offsets, domain, evidence)


# --- acquisition maximization ----------------------------------------------

def maximize_acquisition(acquisition, domain: Domain, rng: np.random.Generator,
                         pool_size: int = 2000, refine_steps: int = 20) -> tuple:
    """Best point of a uniform pool, then coordinate-wise local refinement.

    ``acquisition`` maps an ``(n, d)`` array to ``(n,)`` scores. Ties go to
    the lowest pool index; refinement only moves on strict improvement and
    halves its step after every failed sweep. Returns ``(x, score)``.
    """
    pool = sample_uniform(domain, pool_size, rng)
    scores = np.asarray(acquisition(pool), dtype=float)
    i = int(np.argmax(scores))
    x, best = pool[i].copy(), float(scores[i])
    step = 0.05 * domain.width
    d = domain.dim
    for _ in range(refine_steps):
        moves = np.concatenate([np.diag(step), -np.diag(step)])
        cand = domain.clip(x + moves)
        s = np.asarray(acquisition(cand), dtype=float)
        j = int(np.argmax(s))
        if s[j] > best:
            x, best = cand[j].copy(), float(s[j])
        else:
            step = 0.5 * step
    assert x.shape == (d,)
    return x, best


def suggest_with_info(strategy: SuggestStrategy, labeled, surrogate, domain: Domain,
                      rng: np.random.Generator) -> tuple:
    """Like :func:`suggest` but also returns ``(source, acquisition_score)``."""
    explore = rng.random() < strategy.epsilon
    if explore or surrogate is None or strategy.kind == "random":
        return sample_uniform(domain, 1, rng)[0], "random", None
    acq = surrogate if callable(surrogate) else surrogate.acquisition
    x, score = maximize_acquisition(acq, domain, rng, strategy.pool_size, strategy.refine_steps)
    return x, "model", score


def suggest(strategy: SuggestStrategy, labeled, surrogate, domain: Domain,
            rng: np.random.Generator) -> np.ndarray:
    """Next point to evaluate.

    With probability ``epsilon`` (or when no surrogate is available) a uniform
    random point; otherwise the acquisition maximizer. ``surrogate`` may be a
    fitted surrogate object or any vectorized callable.
    """
    return suggest_with_info(strategy, labeled, surrogate, domain, rng)[0]


# --- main loop --------------------------------------------------------------

def run(bench: Benchmark, strategy: SuggestStrategy, budget: int, n_init: int | None = None,
        seed: int = 0, callback=None) -> list:
    """Run one optimization and return ``budget`` :class:`RunRecord` objects.

    The initial design and the noise draws come from streams that do not
    depend on the strategy, so runs sharing a seed are paired.
    """
    domain = bench.domain
    if n_init is None:
        n_init = default_n_init(domain.dim)
    if n_init < 2:
        raise ValueError("n_init must be at least 2")
    if budget <= n_init:
        raise ValueError(f"budget ({budget}) must exceed n_init ({n_init})")

    init_rng, noise_rng, suggest_rng, train_rng, mc_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(5))
    f_star = bench.known_minimum_value
    obs = ObservationSet.empty(domain.dim)
    records = []
    best = np.inf
    params = None
    init_design = sample_uniform(domain, n_init, init_rng)

    for it in range(budget):
        t0 = time.perf_counter()
        tau = evidence = score = n_pos = None
        if it < n_init:
            x, source = init_design[it], "init"
        else:
            labeled = label(obs, strategy.gamma)
            tau, n_pos = labeled.tau, labeled.n_positive
            init = params if strategy.train.warm_start else None
            surrogate = fit_surrogate(strategy, labeled, domain, train_rng, mc_rng, init)
            if surrogate is None and strategy.kind != "random":
                log.info("iteration %d: one class is empty, suggesting at random", it)
            if isinstance(surrogate, CpeSurrogate):
                params = surrogate.posterior.params
                evidence = surrogate.evidence
            x, source, score = suggest_with_info(strategy, labeled, surrogate, domain, suggest_rng)
        try:
            y = evaluate(bench, x, noise_rng)
        except Exception as exc:
            raise RunAborted(f"evaluation failed at iteration {it}: {exc}", records) from exc
        obs = obs.append(x, y)
        best = min(best, y)
        records.append(RunRecord(
            iteration=it,
            x=[float(v) for v in x],
            y=float(y),
            tau=tau,
            best_so_far=float(best),
            regret=float(abs(best - f_star)),
            evidence=None if evidence is None else float(evidence),
            wall_time=time.perf_counter() - t0,
            seed=seed,
            source=source,
            n_positive=n_pos,
            acquisition=score,
        ))
        if callback is not None:
            callback(records[-1])
    return records
