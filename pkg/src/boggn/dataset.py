"""Observation sets, quantile thresholds and binary labels."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LabeledSet",
    "ObservationSet",
    "assign_labels",
    "compute_threshold",
    "label",
]


@dataclass(frozen=True)
class ObservationSet:
    """Immutable running dataset of evaluated points and their values."""

    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        points = np.array(self.points, dtype=float)
        values = np.array(self.values, dtype=float).reshape(-1)
        if points.ndim != 2:
            raise ValueError("points must be a 2-d array of shape (n, dim)")
        if points.shape[0] != values.shape[0]:
            raise ValueError("points and values must have the same length")
        points.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "values", values)

    @classmethod
    def empty(cls, dim: int) -> "ObservationSet":
        if dim < 1:
            raise ValueError("dim must be positive")
        return cls(np.empty((0, dim)), np.empty(0))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.values.shape[0]

    def append(self, x, y: float) -> "ObservationSet":
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.dim:
            raise ValueError(f"expected a point of length {self.dim}, got {x.shape[0]}")
        return ObservationSet(np.vstack([self.points, x[None]]),
                              np.append(self.values, float(y)))

    def to_jsonl(self) -> str:
        lines = [json.dumps({"x": [float(v) for v in p], "y": float(y)})
                 for p, y in zip(self.points, self.values)]
        return "".join(line + "\n" for line in lines)

    @classmethod
    def from_jsonl(cls, text: str, dim: int | None = None) -> "ObservationSet":
        records = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not records:
            if dim is None:
                raise ValueError("cannot infer dim from an empty stream")
            return cls.empty(dim)
        points = [r["x"] for r in records]
        values = [r["y"] for r in records]
        return cls(np.array(points, dtype=float), np.array(values, dtype=float))


def append(dataset: ObservationSet, x, y: float) -> ObservationSet:
    return dataset.append(x, y)


def compute_threshold(values, gamma: float) -> float:
    """Return the ``ceil(gamma * N)``-th smallest value."""
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.size == 0:
        raise ValueError("cannot take a quantile of an empty list")
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    n = values.size
    # guard against gamma * n landing a hair above an integer
    k = max(1, math.ceil(gamma * n - 1e-9))
    return float(np.partition(values, k - 1)[k - 1])


def assign_labels(values, tau: float) -> np.ndarray:
    """``1`` where a value is at or below ``tau``, else ``0``."""
    return (np.asarray(values, dtype=float) <= tau).astype(np.int64)


@dataclass(frozen=True)
class LabeledSet:
    base: ObservationSet
    tau: float
    gamma: float
    labels: np.ndarray

    @property
    def points(self) -> np.ndarray:
        return self.base.points

    @property
    def values(self) -> np.ndarray:
        return self.base.values

    def __len__(self) -> int:
        return len(self.base)

    @property
    def n_positive(self) -> int:
        return int(self.labels.sum())

    @property
    def both_classes(self) -> bool:
        return 0 < self.n_positive < len(self)


def label(observations: ObservationSet, gamma: float) -> LabeledSet:
    """Threshold at the empirical ``gamma``-quantile and label every observation."""
    tau = compute_threshold(observations.values, gamma)
    return LabeledSet(observations, tau, gamma, assign_labels(observations.values, tau))


def labeled_from_arrays(points, labels, gamma: float = 0.5) -> LabeledSet:
    """Wrap raw ``(points, labels)`` as a :class:`LabeledSet`.

    Values are synthesized so that thresholding at ``tau = 0`` reproduces
    ``labels``; handy for classifier experiments that never had objective values.
    """
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be 0 or 1")
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    values = np.where(labels == 1, -1.0, 1.0)
    base = ObservationSet(points, values)
    return LabeledSet(base, 0.0, gamma, labels)
