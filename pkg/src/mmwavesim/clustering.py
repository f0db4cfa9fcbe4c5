"""Seeded Lloyd-style clustering for exact and uncertain positions.

Both variants run the same four-step loop: pick initial centers, assign
every point to the nearest center, recompute each center as the mean of
its members, repeat until the centers stop moving. The uncertain
variant scores assignments by the expected squared distance under each
point's PDF and updates centers with the mean of the expected
positions.

Because E||x - c||^2 = ||mu - c||^2 + spread with a spread term that
does not depend on the candidate center, the uncertain assignment is
the nearest-center rule applied to the PDF means; the spread only
shifts the objective. In particular, points whose PDFs are symmetric
disks centered on the reported location produce exactly the same label
sequence as exact clustering of those centers.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError
from .geometry import Point2D, UncertainPoint, expected_position, expected_sq_distance
from .seeding import make_rng

__all__ = [
    "InitStrategy",
    "ClusteringConfig",
    "ClusteringResult",
    "kmeans_assign",
    "kmeans_update",
    "ukmeans_assign",
    "ukmeans_update",
    "run_clustering",
]


class InitStrategy(Enum):
    RANDOM_POINTS = "random_points"
    FARTHEST_FIRST = "farthest_first"


@dataclass(frozen=True)
class ClusteringConfig:
    k: int
    max_iterations: int = 100
    convergence_epsilon: float = 1e-6  # squared meters of center movement
    init_strategy: InitStrategy = InitStrategy.FARTHEST_FIRST
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.max_iterations < 1:
            raise ConfigError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.convergence_epsilon < 0:
            raise ConfigError("convergence_epsilon must be >= 0")


@dataclass(frozen=True)
class ClusteringResult:
    labels: tuple
    centers: tuple
    objective: float
    iterations: int
    converged: bool
    label_history: tuple  # labels after every assign step
    objective_history: tuple  # objective after every (assign, update) pair


def _as_array(points: Sequence[Point2D]) -> np.ndarray:
    return np.array([(p.x, p.y) for p in points], dtype=float)


def _assign(mus: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # argmin of squared distance; np.argmin keeps the lowest index on ties
    d2 = ((mus[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return d2.argmin(axis=1)


def _update(mus: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    """Mean of members per cluster; empty clusters reseed at the worst point.

    An empty cluster takes the position of the point farthest from its
    own (freshly computed) center, lowest point index on ties. Labels
    are left untouched; the next assign pass claims the point.
    """
    centers = np.empty((k, 2), dtype=float)
    empty = []
    for j in range(k):
        member = labels == j
        if member.any():
            centers[j] = mus[member].mean(axis=0)
        else:
            empty.append(j)
    if empty:
        own = ((mus - centers[labels]) ** 2).sum(axis=1)
        for j in empty:
            idx = int(own.argmax())
            centers[j] = mus[idx]
            own[idx] = -1.0  # a point reseeds at most one empty cluster
    return centers


def kmeans_assign(points: Sequence[Point2D], centers: Sequence[Point2D]):
    """Nearest-center labels; ties break to the lowest cluster index."""
    if not len(points) or not len(centers):
        raise ConfigError("points and centers must be non-empty")
    return [int(l) for l in _assign(_as_array(points), _as_array(centers))]


def kmeans_update(points: Sequence[Point2D], labels, k: int):
    """Per-cluster arithmetic means, with the empty-cluster reseed rule."""
    centers = _update(_as_array(points), np.asarray(labels, dtype=int), k)
    return [Point2D(float(x), float(y)) for x, y in centers]


def ukmeans_assign(upoints: Sequence[UncertainPoint], centers: Sequence[Point2D]):
    """Labels minimizing the expected squared distance to each center.

    Uses the mean decomposition: the argmin over centers of
    ||mu - c||^2 + spread equals the argmin of ||mu - c||^2, so the
    assignment is the nearest-center rule on the PDF means (with the
    same lowest-index tie rule as the exact variant).
    """
    mus = [expected_position(p) for p in upoints]
    return kmeans_assign(mus, centers)


def ukmeans_update(upoints: Sequence[UncertainPoint], labels, k: int):
    """Per-cluster means of the expected positions."""
    mus = [expected_position(p) for p in upoints]
    return kmeans_update(mus, labels, k)


def _init_centers(
    mus: np.ndarray, cfg: ClusteringConfig, rng: np.random.Generator
) -> np.ndarray:
    n = mus.shape[0]
    if cfg.init_strategy is InitStrategy.RANDOM_POINTS:
        idx = rng.choice(n, size=cfg.k, replace=False)
        return mus[np.sort(idx)].copy()
    # farthest-first: seed one point at random, then greedily take the point
    # farthest from the chosen set (lowest index on ties)
    chosen = [int(rng.integers(n))]
    dmin = ((mus - mus[chosen[0]]) ** 2).sum(axis=1)
    dmin[chosen[0]] = -1.0
    while len(chosen) < cfg.k:
        nxt = int(dmin.argmax())
        chosen.append(nxt)
        d_new = ((mus - mus[nxt]) ** 2).sum(axis=1)
        dmin = np.minimum(dmin, d_new)
        dmin[nxt] = -1.0
    return mus[chosen].copy()


def run_clustering(
    data,
    cfg: ClusteringConfig,
    initial_centers: Optional[Sequence[Point2D]] = None,
) -> ClusteringResult:
    """Alternate assign/update until centers move less than epsilon.

    `data` is either a sequence of Point2D (exact variant) or a sequence
    of UncertainPoint (expected-distance variant). The result is fully
    determined by (data, cfg, initial_centers). The reported objective
    is the sum over points of the (expected) squared distance to the
    assigned center and is non-increasing across iterations.
    """
    n = len(data)
    if n == 0:
        raise ConfigError("cannot cluster zero points")
    if cfg.k > n:
        raise ConfigError(f"k={cfg.k} exceeds the number of data points ({n})")

    uncertain = isinstance(data[0], UncertainPoint)
    if uncertain:
        mu_points = [expected_position(p) for p in data]
        mus = _as_array(mu_points)
        spread_total = sum(
            expected_sq_distance(p, mu) for p, mu in zip(data, mu_points)
        )
    else:
        mus = _as_array(data)
        spread_total = 0.0

    if initial_centers is not None:
        if len(initial_centers) != cfg.k:
            raise ConfigError("initial_centers length must equal k")
        centers = _as_array(initial_centers)
    else:
        centers = _init_centers(mus, cfg, make_rng(cfg.seed))

    labels = np.zeros(n, dtype=int)
    label_history = []
    objective_history = []
    converged = False
    iterations = 0
    objective = float("inf")

    for _ in range(cfg.max_iterations):
        labels = _assign(mus, centers)
        new_centers = _update(mus, labels, cfg.k)
        movement = float(((new_centers - centers) ** 2).sum(axis=1).max())
        centers = new_centers
        objective = float(((mus - centers[labels]) ** 2).sum()) + spread_total
        iterations += 1
        label_history.append(tuple(int(l) for l in labels))
        objective_history.append(objective)
        if movement < cfg.convergence_epsilon:
            converged = True
            break

    return ClusteringResult(
        labels=tuple(int(l) for l in labels),
        centers=tuple(Point2D(float(x), float(y)) for x, y in centers),
        objective=objective,
        iterations=iterations,
        converged=converged,
        label_history=tuple(label_history),
        objective_history=tuple(objective_history),
    )
