"""Gaussian KDE surrogate and the gamma-relative density ratio (TPE baseline)."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "KdeModel",
    "RatioSingularityError",
    "kde_fit",
    "relative_ratio",
    "relative_ratio_from_densities",
    "relative_ratio_from_log_densities",
    "tpe_suggest",
]

log = logging.getLogger(__name__)

BANDWIDTH_FLOOR = 1e-3


class RatioSingularityError(ZeroDivisionError):
    """The plain density ratio (gamma = 0) is undefined where ``g(x) = 0``."""


@dataclass(frozen=True)
class KdeModel:
    """Equal-weight product-Gaussian kernel density estimate."""

    centers: np.ndarray
    bandwidths: np.ndarray

    def __post_init__(self):
        centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        bw = np.asarray(self.bandwidths, dtype=float).reshape(-1)
        if bw.shape != (centers.shape[1],):
            raise ValueError("need one bandwidth per dimension")
        if not np.all(bw > 0):
            raise ValueError("bandwidths must be strictly positive")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "bandwidths", bw)

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def logpdf(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, self.dim) if self.dim == 1 else X[None, :]
        u = (X[:, None, :] - self.centers[None, :, :]) / self.bandwidths
        log_k = -0.5 * np.sum(u * u, axis=2)
        norm = -0.5 * self.dim * np.log(2 * np.pi) - np.sum(np.log(self.bandwidths))
        return logsumexp(log_k, axis=1) - np.log(self.centers.shape[0]) + norm

    def pdf(self, X) -> np.ndarray:
        return np.exp(self.logpdf(X))


def kde_fit(points, domain_width=None) -> KdeModel:
    """Fit a KDE with Scott's-rule bandwidths ``sigma_j * n^(-1/(d+4))``.

    Bandwidths are floored at ``1e-3 * domain_width`` (``domain_width``
    defaults to 1 in every dimension).
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    n, d = points.shape
    if n == 0:
        raise ValueError("cannot fit a KDE to zero points")
    sigma = points.std(axis=0, ddof=1) if n > 1 else np.zeros(d)
    bw = sigma * n ** (-1.0 / (d + 4))
    width = np.ones(d) if domain_width is None else np.broadcast_to(
        np.asarray(domain_width, dtype=float), (d,))
    return KdeModel(points, np.maximum(bw, BANDWIDTH_FLOOR * width))


def relative_ratio_from_densities(ell, g, gamma: float):
    """``ell / (gamma * ell + (1 - gamma) * g)`` evaluated elementwise."""
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    ell = np.asarray(ell, dtype=float)
    g = np.asarray(g, dtype=float)
    denom = gamma * ell + (1.0 - gamma) * g
    if np.any(denom == 0):
        raise RatioSingularityError("mixture density vanishes")
    return ell / denom


def relative_ratio_from_log_densities(log_ell, log_g, gamma: float):
    """Same ratio computed from log densities, stable when both underflow."""
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    diff = np.asarray(log_g, dtype=float) - np.asarray(log_ell, dtype=float)
    if gamma == 0.0:
        if np.any(np.isneginf(log_g)):
            raise RatioSingularityError("g(x) = 0: plain density ratio is singular")
        return np.exp(-diff)
    with np.errstate(over="ignore"):
        return 1.0 / (gamma + (1.0 - gamma) * np.exp(diff))


def relative_ratio(ell: KdeModel, g: KdeModel, x, gamma: float):
    """gamma-relative density ratio of two KDEs.

    ``x`` is a single point (returns a float) or an ``(n, d)`` batch (returns
    an array).
    """
    x = np.asarray(x, dtype=float)
    batch = x.ndim == 2
    X = x if batch else x.reshape(1, -1)
    if X.shape[1] != ell.dim:
        raise ValueError(f"expected points of dimension {ell.dim}")
    if gamma == 0.0:
        l_val, g_val = ell.pdf(X), g.pdf(X)
        if np.any(g_val == 0):
            raise RatioSingularityError("g(x) = 0: plain density ratio is singular")
        r = l_val / g_val
    else:
        r = relative_ratio_from_log_densities(ell.logpdf(X), g.logpdf(X), gamma)
    return r if batch else float(r[0])


def fit_class_densities(labeled, domain_width=None) -> tuple:
    """KDEs of the ``z = 1`` and ``z = 0`` points."""
    pos = labeled.points[labeled.labels == 1]
    neg = labeled.points[labeled.labels == 0]
    return kde_fit(pos, domain_width), kde_fit(neg, domain_width)


def tpe_suggest(labeled, gamma: float, candidate_pool, domain=None,
                rng: np.random.Generator | None = None) -> np.ndarray:
    """Pool point maximizing the KDE relative ratio; ties go to the lowest index.

    Falls back to a uniform draw from ``domain`` when one class is empty.
    """
    pool = np.atleast_2d(np.asarray(candidate_pool, dtype=float))
    if not labeled.both_classes:
        if domain is None or rng is None:
            raise ValueError("a class is empty and no domain/rng was given for the fallback")
        log.info("tpe_suggest: one class is empty, suggesting a uniform random point")
        return domain.lower + rng.random(domain.dim) * domain.width
    width = None if domain is None else domain.width
    ell, g = fit_class_densities(labeled, width)
    r = relative_ratio_from_log_densities(ell.logpdf(pool), g.logpdf(pool), gamma)
    return pool[int(np.argmax(r))].copy()
