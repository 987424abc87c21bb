"""Bounded domains and synthetic benchmark functions (minimization)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "Benchmark",
    "Domain",
    "DomainError",
    "BENCHMARKS",
    "branin",
    "camel6",
    "evaluate",
    "get_benchmark",
    "hartmann3",
    "hartmann6",
    "sample_uniform",
]


class DomainError(ValueError):
    """Raised when a point falls outside a benchmark's domain."""


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box ``[lower, upper]`` in ``R^d``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).reshape(-1)
        upper = np.asarray(self.upper, dtype=float).reshape(-1)
        if lower.shape != upper.shape or lower.size == 0:
            raise ValueError("lower and upper must be nonempty and of equal length")
        if not np.all(lower < upper):
            raise ValueError("every lower bound must be strictly below its upper bound")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            return False
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def clip(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)


@dataclass(frozen=True)
class Benchmark:
    """A noiseless test function together with its known global minimum.

    ``function`` is vectorized: it maps an ``(n, d)`` array to ``(n,)`` values.
    Observations add Gaussian noise with standard deviation ``noise_sigma``.
    """

    name: str
    domain: Domain
    function: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    known_minimum_value: float
    known_minimizers: tuple
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")

    @property
    def dim(self) -> int:
        return self.domain.dim

    def value(self, X) -> np.ndarray:
        """Noiseless values at the rows of ``X`` (no domain check)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.function(X)

    def with_noise(self, noise_sigma: float) -> "Benchmark":
        return Benchmark(self.name, self.domain, self.function,
                         self.known_minimum_value, self.known_minimizers, noise_sigma)


def evaluate(bench: Benchmark, x, rng: np.random.Generator | None = None) -> float:
    """Observe ``bench`` at ``x``: ``f(x) + noise_sigma * N(0, 1)``.

    No random draw is made when ``noise_sigma == 0``.
    """
    x = np.asarray(x, dtype=float)
    if not bench.domain.contains(x):
        raise DomainError(f"point {x.tolist()} is outside the domain of {bench.name}")
    y = float(bench.function(x[None, :])[0])
    if bench.noise_sigma > 0:
        if rng is None:
            raise ValueError("a random generator is required for noisy evaluation")
        y += bench.noise_sigma * float(rng.standard_normal())
    return y


def sample_uniform(domain: Domain, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` points uniformly from ``domain`` as an ``(n, d)`` array."""
    if n < 1:
        raise ValueError("n must be at least 1")
    u = rng.random((n, domain.dim))
    return domain.lower + u * domain.width


# --- test functions ---------------------------------------------------------

def _branin(X):
    x1, x2 = X[:, 0], X[:, 1]
    b = 5.1 / (4 * np.pi**2)
    c = 5 / np.pi
    t = 1 / (8 * np.pi)
    return (x2 - b * x1**2 + c * x1 - 6) ** 2 + 10 * (1 - t) * np.cos(x1) + 10


def _camel6(X):
    x1, x2 = X[:, 0], X[:, 1]
    return (4 - 2.1 * x1**2 + x1**4 / 3) * x1**2 + x1 * x2 + (-4 + 4 * x2**2) * x2**2


_HART_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
_HART3_A = np.array([[3.0, 10, 30], [0.1, 10, 35], [3.0, 10, 30], [0.1, 10, 35]])
_HART3_P = 1e-4 * np.array([[3689, 1170, 2673],
                            [4699, 4387, 7470],
                            [1091, 8732, 5547],
                            [381, 5743, 8828]])
_HART6_A = np.array([[10, 3, 17, 3.5, 1.7, 8],
                     [0.05, 10, 17, 0.1, 8, 14],
                     [3, 3.5, 1.7, 10, 17, 8],
                     [17, 8, 0.05, 10, 0.1, 14]])
_HART6_P = 1e-4 * np.array([[1312, 1696, 5569, 124, 8283, 5886],
                            [2329, 4135, 8307, 3736, 1004, 9991],
                            [2348, 1451, 3522, 2883, 3047, 6650],
                            [4047, 8828, 8732, 5743, 1091, 381]])


def _hartmann(A, P):
    def f(X):
        sq = np.sum(A[None] * (X[:, None, :] - P[None]) ** 2, axis=2)
        return -np.exp(-sq) @ _HART_ALPHA
    return f


def branin(noise_sigma: float = 0.0) -> Benchmark:
    return Benchmark(
        name="branin",
        domain=Domain([-5.0, 0.0], [10.0, 15.0]),
        function=_branin,
        known_minimum_value=10 / (8 * math.pi),
        known_minimizers=((-math.pi, 12.275), (math.pi, 2.275), (3 * math.pi, 2.475)),
        noise_sigma=noise_sigma,
    )


def camel6(noise_sigma: float = 0.0) -> Benchmark:
    """Six-Hump Camel on ``[-3, 3] x [-2, 2]``."""
    return Benchmark(
        name="camel6",
        domain=Domain([-3.0, -2.0], [3.0, 2.0]),
        function=_camel6,
        known_minimum_value=-1.0316284534898774,
        known_minimizers=((0.0898420089352723, -0.712656403019058),
                          (-0.0898420100052809, 0.7126564016433328)),
        noise_sigma=noise_sigma,
    )


def hartmann3(noise_sigma: float = 0.0) -> Benchmark:
    return Benchmark(
        name="hartmann3",
        domain=Domain(np.zeros(3), np.ones(3)),
        function=_hartmann(_HART3_A, _HART3_P),
        known_minimum_value=-3.862779787332663,
        known_minimizers=((0.11458888122541287, 0.5556488954739371, 0.8525469842172746),),
        noise_sigma=noise_sigma,
    )


def hartmann6(noise_sigma: float = 0.0) -> Benchmark:
    return Benchmark(
        name="hartmann6",
        domain=Domain(np.zeros(6), np.ones(6)),
        function=_hartmann(_HART6_A, _HART6_P),
        known_minimum_value=-3.3223680114155147,
        known_minimizers=((0.20168950909365746, 0.15001069354111374, 0.4768739729250998,
                           0.2753324275220782, 0.3116516172395686, 0.6573005345536702),),
        noise_sigma=noise_sigma,
    )


BENCHMARKS = {
    "branin": branin,
    "camel6": camel6,
    "hartmann3": hartmann3,
    "hartmann6": hartmann6,
}


def get_benchmark(name: str, noise_sigma: float = 0.0) -> Benchmark:
    try:
        factory = BENCHMARKS[name]
    except KeyError:
        raise KeyError(
            f"unknown benchmark {name!r}; available: {', '.join(sorted(BENCHMARKS))}"
        ) from None
    return factory(noise_sigma)
