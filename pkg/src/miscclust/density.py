"""Product-Gaussian kernel density estimation and KDE-based coding costs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

BANDWIDTH_FLOOR = 1e-6
_LOG2E = 1.0 / np.log(2.0)


@dataclass(frozen=True)
class DensityModel:
    support: np.ndarray  # m x n
    bandwidths: np.ndarray  # m

    @property
    def dim(self) -> int:
        return self.support.shape[0]


def silverman_bandwidths(S_sub):
    S_sub = np.atleast_2d(np.asarray(S_sub, dtype=float))
    m, n = S_sub.shape
    h = 1.06 * S_sub.std(axis=1) * n ** (-1.0 / (4 + m))
    return np.maximum(h, BANDWIDTH_FLOOR)


def fit_kde(S_sub) -> DensityModel:
    """Fit a product-Gaussian KDE with per-dimension Silverman bandwidths.

    ``h_i = 1.06 * std_i * n**(-1/(4+m))`` using the population standard
    deviation, floored at 1e-6 for constant rows.
    """
    S_sub = np.atleast_2d(np.asarray(S_sub, dtype=float))
    if S_sub.shape[1] < 2:
        raise ValueError("KDE needs at least two samples")
    return DensityModel(S_sub.copy(), silverman_bandwidths(S_sub))


_BLOCK = 128  # query rows per block; keeps the (block, n) temporaries cache-sized


def _log_kernel_matrix(model, points):
    h = model.bandwidths
    # scaled squared distances, (q, n); explicit differences keep full precision
    sq = np.zeros((points.shape[1], model.support.shape[1]))
    diff = np.empty_like(sq)
    for i in range(model.dim):
        np.subtract(points[i][:, None], model.support[i][None, :], out=diff)
        diff /= h[i]
        diff *= diff
        sq += diff
    log_norm = -np.log(h).sum() - 0.5 * model.dim * np.log(2 * np.pi)
    sq *= -0.5
    sq += log_norm
    return sq


def log2_density(model: DensityModel, points=None, leave_one_out=False):
    """log2 of the KDE density at each column of ``points``.

    With ``leave_one_out=True`` the points must be the support itself and
    sample j is scored without its own kernel.
    """
    if points is None:
        points = model.support
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] != model.dim:
        raise ValueError(f"points have {points.shape[0]} dims, model has {model.dim}")
    if leave_one_out and points.shape != model.support.shape:
        raise ValueError("leave-one-out evaluation requires points == support")
    n = model.support.shape[1]
    q = points.shape[1]
    log_f = np.empty(q)
    for start in range(0, q, _BLOCK):
        stop = min(start + _BLOCK, q)
        logk = _log_kernel_matrix(model, points[:, start:stop])
        if leave_one_out:
            rows = np.arange(stop - start)
            logk[rows, start + rows] = -np.inf
        log_f[start:stop] = logsumexp(logk, axis=1)
    log_f -= np.log(n - 1) if leave_one_out else np.log(n)
    return log_f * _LOG2E


def negative_log2_likelihood(S_sub) -> float:
    """Sum over samples of log2(1/f(x_j)) under the leave-one-out KDE."""
    model = fit_kde(S_sub)
    return float(-log2_density(model, leave_one_out=True).sum())


def entropy_cost(S_sub) -> float:
    """Bits to encode the samples of one subspace.

    ``m/2 * log2(n)`` for the subspace's m components plus the leave-one-out
    KDE code length of the n samples.
    """
    S_sub = np.atleast_2d(np.asarray(S_sub, dtype=float))
    m, n = S_sub.shape
    return 0.5 * m * np.log2(n) + negative_log2_likelihood(S_sub)
