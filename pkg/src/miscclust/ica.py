"""Whitening and symmetric FastICA (log-cosh contrast)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DataMatrix
from .errors import DegenerateInputError

RIDGE = 1e-12
MIN_EIGENVALUE = 1e-10


@dataclass(frozen=True)
class SourceDecomposition:
    """Result of ICA on whitened data ``Xw``.

    ``mixing @ sources`` reconstructs ``Xw``; ``sources = unmixing @ Xw``.
    The whitening fields map raw (standardized) data into ``Xw`` as
    ``whitening_transform @ (X - whitening_mean[:, None])``.
    """

    mixing: np.ndarray
    sources: np.ndarray
    unmixing: np.ndarray
    whitening_mean: np.ndarray
    whitening_transform: np.ndarray
    converged: bool
    iterations: int


def whiten(X: DataMatrix):
    """Symmetric (ZCA) whitening.

    Returns ``(whitened, transform, mean)`` with ``whitened`` a DataMatrix
    whose population covariance is the identity.
    """
    values = X.values
    mean = values.mean(axis=1)
    centered = values - mean[:, None]
    cov = centered @ centered.T / X.n
    evals, evecs = np.linalg.eigh(cov + RIDGE * np.eye(X.d))
    if evals.min() < MIN_EIGENVALUE:
        raise DegenerateInputError(
            f"covariance is rank deficient (smallest eigenvalue {evals.min():.3g}); "
            "reduce dimensionality, e.g. with PCA, before ICA"
        )
    transform = (evecs / np.sqrt(evals)) @ evecs.T
    return DataMatrix(transform @ centered, X.feature_names), transform, mean


def _sym_decorrelate(W):
    # W <- (W W^T)^(-1/2) W
    evals, evecs = np.linalg.eigh(W @ W.T)
    return (evecs / np.sqrt(evals)) @ evecs.T @ W


def fast_ica(Xw: DataMatrix, max_iter=500, tol=1e-6, seed=0, whitening_mean=None,
             whitening_transform=None) -> SourceDecomposition:
    """Symmetric fixed-point ICA with the tanh nonlinearity.

    Iteration stops once ``max |(|diag(W_new W_old^T)| - 1)| < tol``.
    Non-convergence is reported through ``converged`` rather than raised.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if not 0 < tol < 1:
        raise ValueError("tol must lie in (0, 1)")
    Z = Xw.values
    d, n = Z.shape
    rng = np.random.default_rng(seed)
    W = _sym_decorrelate(rng.standard_normal((d, d)))

    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        Y = W @ Z
        G = np.tanh(Y)
        g_prime = 1.0 - G**2
        W_new = _sym_decorrelate(G @ Z.T / n - g_prime.mean(axis=1)[:, None] * W)
        change = np.max(np.abs(np.abs(np.einsum("ij,ij->i", W_new, W)) - 1.0))
        W = W_new
        if change < tol:
            converged = True
            break

    W = _fix_signs(W)
    sources = W @ Z
    if whitening_mean is None:
        whitening_mean = np.zeros(d)
    if whitening_transform is None:
        whitening_transform = np.eye(d)
    return SourceDecomposition(
        mixing=W.T.copy(),
        sources=sources,
        unmixing=W,
        whitening_mean=np.asarray(whitening_mean),
        whitening_transform=np.asarray(whitening_transform),
        converged=converged,
        iterations=it,
    )


def _fix_signs(W):
    # deterministic sign convention: largest-magnitude entry of each row positive
    idx = np.argmax(np.abs(W), axis=1)
    signs = np.sign(W[np.arange(W.shape[0]), idx])
    signs[signs == 0] = 1.0
    return W * signs[:, None]


def amari_error(M) -> float:
    """Amari index of ``M`` normalised to [0, 1]; 0 iff ``M`` is a scaled permutation."""
    P = np.abs(np.asarray(M, dtype=float))
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError("amari_error needs a square matrix")
    d = P.shape[0]
    if np.any(P.max(axis=1) == 0) or np.any(P.max(axis=0) == 0):
        raise ValueError("matrix has an all-zero row or column")
    if d == 1:
        return 0.0
    rows = (P.sum(axis=1) / P.max(axis=1) - 1.0).sum()
    cols = (P.sum(axis=0) / P.max(axis=0) - 1.0).sum()
    return float((rows + cols) / (2 * d * (d - 1)))
