"""k-means and the per-subspace choice of the number of clusters."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Clustering:
    labels: np.ndarray
    k: int
    inertia: float
    inertia_trace: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1:
            raise ValueError("labels must be a vector")
        if np.unique(labels).size != self.k or labels.min() != 0 or labels.max() != self.k - 1:
            raise ValueError(f"every cluster id in 0..{self.k - 1} must appear")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self):
        return self.labels.size


def _sq_dists(points, centers):
    # (n, k) squared Euclidean distances, computed from explicit differences
    diff = points[:, None, :] - centers[None, :, :]
    return np.einsum("nkm,nkm->nk", diff, diff)


def _kmeans_pp(points, k, rng):
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    closest = _sq_dists(points, points[chosen])[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0:
            # every remaining point coincides with a centre; pick an unused index
            free = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(free))
        else:
            idx = int(rng.choice(n, p=closest / total))
        chosen.append(idx)
        closest = np.minimum(closest, _sq_dists(points, points[[idx]])[:, 0])
    return points[chosen].copy()


def _repair_empty(points, labels, centers, dists):
    k = centers.shape[0]
    counts = np.bincount(labels, minlength=k)
    for c in np.flatnonzero(counts == 0):
        own = dists[np.arange(len(labels)), labels]
        movable = counts[labels] > 1
        own = np.where(movable, own, -1.0)
        far = int(np.argmax(own))
        counts[labels[far]] -= 1
        labels[far] = c
        counts[c] = 1
        centers[c] = points[far]
    return labels, centers


def _lloyd(points, k, rng, max_iter):
    centers = _kmeans_pp(points, k, rng)
    dists = _sq_dists(points, centers)
    labels = np.argmin(dists, axis=1)
    labels, centers = _repair_empty(points, labels, centers, dists)
    trace = []
    for _ in range(max_iter):
        for c in range(k):
            centers[c] = points[labels == c].mean(axis=0)
        dists = _sq_dists(points, centers)
        new_labels = np.argmin(dists, axis=1)
        new_labels, centers = _repair_empty(points, new_labels, centers, dists)
        for c in range(k):
            centers[c] = points[new_labels == c].mean(axis=0)
        trace.append(float(_sq_dists(points, centers)[np.arange(len(points)), new_labels].sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels, trace


def kmeans(X, k, seed=0, restarts=10, max_iter=300) -> Clustering:
    """Best-of-``restarts`` Lloyd's algorithm with k-means++ seeding.

    ``X`` is features-by-samples (m x n).  Labels are renumbered in order of
    first appearance so that equal partitions give equal label vectors.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    points = X.T
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        labels, trace = _lloyd(points, k, rng, max_iter)
        if best is None or trace[-1] < best[1][-1]:
            best = (labels, trace)
    labels, trace = best
    _, first = np.unique(labels, return_index=True)
    relabel = np.empty(k, dtype=np.int64)
    relabel[labels[np.sort(first)]] = np.arange(k)
    return Clustering(relabel[labels], k, trace[-1], tuple(trace))


VARIANCE_FLOOR = 1e-6  # relative to the per-feature variance of the whole sample


def bic_score(X, clustering: Clustering) -> float:
    """BIC of a hard Gaussian mixture with one diagonal covariance per cluster.

    -2 log-likelihood (constants dropped) is
    ``sum_c n_c sum_j ln var_cj - 2 sum_c n_c ln(n_c / n)``; the parameter
    count is ``k`` means, ``k`` variance vectors and ``k - 1`` weights.
    Per-cluster variances are floored so singleton clusters stay finite.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    m, n = X.shape
    k = clustering.k
    labels = clustering.labels
    floor = VARIANCE_FLOOR * np.maximum(X.var(axis=1), 1e-300)
    sizes = np.bincount(labels, minlength=k)
    fit = 0.0
    for c in range(k):
        members = X[:, labels == c]
        fit += sizes[c] * np.log(np.maximum(members.var(axis=1), floor)).sum()
    fit -= 2.0 * (sizes * np.log(sizes / n)).sum()
    return float(fit + (2 * k * m + k - 1) * np.log(n))


def select_k(X, k_min=2, k_max=None, seed=0, restarts=10, return_scores=False):
    """Number of clusters minimising ``bic_score`` over ``k_min..k_max``.

    Ties go to the smaller k.  ``k_max`` defaults to ``min(10, n // 10)``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[1]
    if k_max is None:
        k_max = max(k_min, min(10, n // 10))
    if not 1 <= k_min <= k_max <= n:
        raise ValueError(f"invalid k range [{k_min}, {k_max}] for n={n}")
    scores = {}
    for k in range(k_min, k_max + 1):
        scores[k] = bic_score(X, kmeans(X, k, seed=seed, restarts=restarts))
    best = min(scores, key=lambda k: (scores[k], k))
    return (best, scores) if return_scores else best
