"""Kernel graph-regularised semi-NMF and its ablations.

The kernel solver factorises ``phi(X) ~ phi(X) W H`` with ``W, H >= 0`` and a
graph-Laplacian smoothness penalty ``lam * tr(H L H^T)``.  Only the Gram
matrix ``K = phi(X)^T phi(X)`` is needed.

Both factors follow multiplicative rules obtained by splitting each gradient
into nonnegative parts::

    W <- W * sqrt((K+ H^T + K- W H H^T) / (K- H^T + K+ W H H^T))
    H <- H * sqrt(((W^T K)+ + (W^T K W)- H + lam H P)
                  / ((W^T K)- + (W^T K W)+ H + lam H D))
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

VARIANTS = ("snmf", "gsnmf", "ksnmf", "kgsnmf")


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "gaussian"
    width: object = "auto"

    def __post_init__(self):
        if self.kind not in ("gaussian", "linear"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.width != "auto":
            if float(self.width) <= 0:
                raise ValueError("kernel width must be positive")
            object.__setattr__(self, "width", float(self.width))


@dataclass(frozen=True)
class NeighborhoodGraph:
    adjacency: np.ndarray
    degree: np.ndarray  # diagonal entries of D
    laplacian: np.ndarray
    neighbors_per_node: int


@dataclass
class SolverConfig:
    lam: float = 10.0
    max_iter: int = 500
    rel_tol: float = 1e-6
    seed: int = 0
    epsilon_guard: float = 1e-12
    printed_h_update: bool = False  # debug: uncorrected H rule, kept for comparison

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.rel_tol <= 0 or self.epsilon_guard <= 0:
            raise ValueError("rel_tol and epsilon_guard must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class FactorizationState:
    W: np.ndarray  # n x k for kernel variants, d x k basis Z for input-space variants
    H: np.ndarray  # k x n
    objective_trace: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    warnings: list = field(default_factory=list)

    @property
    def objective(self):
        return self.objective_trace[-1] if self.objective_trace else float("nan")


# --------------------------------------------------------------------------- #
# kernels and graphs
# --------------------------------------------------------------------------- #

def _pairwise_sq(X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    sq = np.zeros((X.shape[1], X.shape[1]))
    for row in X:
        diff = row[:, None] - row[None, :]
        sq += diff * diff
    return sq


def auto_width(X) -> float:
    """sqrt(sum_i ||x_i - mean||^2 / n)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    centered = X - X.mean(axis=1, keepdims=True)
    return float(np.sqrt((centered**2).sum() / X.shape[1]))


def gram(X, spec: KernelSpec = KernelSpec()) -> np.ndarray:
    """n x n kernel matrix over the columns of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if spec.kind == "linear":
        return X.T @ X
    sigma = auto_width(X) if spec.width == "auto" else spec.width
    if sigma <= 0:
        raise ValueError("kernel width is zero: all samples are identical")
    K = np.exp(-_pairwise_sq(X) / (2 * sigma**2))
    return K


def knn_graph(X, eps=5) -> NeighborhoodGraph:
    """Symmetrised 0-1 eps-nearest-neighbour graph and its Laplacian."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[1]
    if not 1 <= eps < n:
        raise ValueError(f"need 1 <= eps < n, got eps={eps}, n={n}")
    sq = _pairwise_sq(X)
    np.fill_diagonal(sq, np.inf)
    # stable sort keeps lower indices first among equal distances
    nearest = np.argsort(sq, axis=1, kind="stable")[:, :eps]
    P = np.zeros((n, n))
    P[np.repeat(np.arange(n), eps), nearest.ravel()] = 1.0
    P = np.maximum(P, P.T)
    degree = P.sum(axis=1)
    L = np.diag(degree) - P
    return NeighborhoodGraph(P, degree, L, eps)


def split_pos_neg(M):
    """(|M| + M)/2 and (|M| - M)/2."""
    M = np.asarray(M, dtype=float)
    plus = np.where(M > 0, M, 0.0)
    minus = np.where(M < 0, -M, 0.0)
    return plus, minus


def graph_penalty(H, graph: NeighborhoodGraph) -> float:
    return float(np.einsum("ij,ij->", H @ graph.laplacian, H))


# --------------------------------------------------------------------------- #
# update rules
# --------------------------------------------------------------------------- #

def update_W(W, H, K_plus, K_minus, guard=1e-12):
    """Multiplicative W step; ``K_minus=None`` stands for an all-zero part."""
    HHt = H @ H.T
    WHHt = W @ HHt
    if K_minus is None:
        # one pass over K for both products
        both = K_plus @ np.hstack([H.T, WHHt])
        numer, denom = both[:, : H.shape[0]], both[:, H.shape[0] :]
    else:
        numer = K_plus @ H.T + K_minus @ WHHt
        denom = K_minus @ H.T + K_plus @ WHHt
    return W * np.sqrt(numer / (denom + guard))


def update_H(W, H, K_plus, K_minus, P, D, lam, guard=1e-12, KW=None):
    """Multiplicative H step.

    ``D`` may be the degree vector or the diagonal matrix; ``P`` may be
    dense or scipy-sparse.  ``KW`` is ``K @ W`` when the caller already has it.
    """
    if KW is None:
        KW = K_plus @ W if K_minus is None else K_plus @ W - K_minus @ W
    WtK = KW.T
    WtKW = WtK @ W
    WtK_p, WtK_m = split_pos_neg(WtK)
    WtKW_p, WtKW_m = split_pos_neg(WtKW)
    numer = WtK_p + WtKW_m @ H
    denom = WtK_m + WtKW_p @ H
    if lam:
        D = np.asarray(D)
        HD = H * D[None, :] if D.ndim == 1 else H @ D
        numer += lam * np.asarray(P.T @ H.T).T
        denom += lam * HD
    return H * np.sqrt(numer / (denom + guard))


def _update_H_printed(W, H, K_plus, K_minus, L, lam, guard=1e-12):
    # identical K+ terms above and below the fraction bar; kept only for comparison
    base = W.T @ K_plus + (W.T @ K_plus @ W) @ H
    HL_p, HL_m = split_pos_neg(H @ L)
    return H * np.sqrt((base + lam * HL_m) / (base + lam * HL_p + guard))


def kernel_objective(K, W, H, lam=0.0, graph=None, KW=None) -> float:
    """||phi - phi W H||^2 + lam tr(H L H^T), evaluated through K."""
    if KW is None:
        KW = K @ W
    fit = np.trace(K) - 2.0 * np.einsum("ij,ji->", KW, H) + np.einsum("ij,ji->", H.T @ (W.T @ KW), H)
    value = float(fit)
    if lam and graph is not None:
        value += lam * graph_penalty(H, graph)
    return value


def _init(rng, *shape):
    # uniform on (0, 1]
    return 1.0 - rng.random(shape)


def _relative_decrease(prev, cur):
    return (prev - cur) / max(abs(prev), 1e-300)


def kgsnmf(K, graph: NeighborhoodGraph, k, cfg: SolverConfig = SolverConfig()) -> FactorizationState:
    """Kernel graph-regularised semi-NMF by alternating W and H updates.

    W and H start uniform on (0, 1].  The objective is recorded before the
    first sweep and after every W+H sweep; iteration stops once its relative
    decrease falls below ``cfg.rel_tol``.
    """
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    if K.ndim != 2 or K.shape[1] != n:
        raise ValueError("kernel matrix must be square")
    if not np.allclose(K, K.T, rtol=1e-10, atol=1e-12):
        raise ValueError("kernel matrix must be symmetric")
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    lam = cfg.lam
    if graph is None and lam:
        raise ValueError("a neighbourhood graph is required when lambda > 0")
    use_graph = graph is not None and lam > 0
    if use_graph:
        P = sparse.csr_matrix(graph.adjacency)
        L = sparse.csr_matrix(graph.laplacian)
        degree = graph.degree
    else:
        P = L = degree = None

    def objective(W, H, KW=None):
        value = kernel_objective(K, W, H, KW=KW)
        if use_graph:
            value += lam * float(np.einsum("ij,ij->", np.asarray((L @ H.T).T), H))
        return value

    rng = np.random.default_rng(cfg.seed)
    W = _init(rng, n, k)
    H = _init(rng, k, n)
    K_plus, K_minus = split_pos_neg(K)
    if not K_minus.any():
        K_minus = None
    prev = objective(W, H)
    state = FactorizationState(W, H, [prev])
    for it in range(1, cfg.max_iter + 1):
        W = update_W(W, H, K_plus, K_minus, cfg.epsilon_guard)
        if cfg.printed_h_update:
            Ld = graph.laplacian if graph is not None else np.zeros((n, n))
            H = _update_H_printed(W, H, K_plus, K_minus, Ld, lam, cfg.epsilon_guard)
            cur = objective(W, H)
        else:
            KW = K @ W
            H = update_H(W, H, K_plus, K_minus, P, degree, lam if use_graph else 0.0, cfg.epsilon_guard, KW=KW)
            cur = objective(W, H, KW)
        state.objective_trace.append(cur)
        state.iterations = it
        if _relative_decrease(prev, cur) < cfg.rel_tol:
            state.converged = True
            break
        prev = cur
    state.W, state.H = W, H
    return state


# --------------------------------------------------------------------------- #
# input-space ablations
# --------------------------------------------------------------------------- #

def _least_squares_basis(X, H, ridge=1e-10):
    HHt = H @ H.T
    k = HHt.shape[0]
    flagged = np.linalg.cond(HHt) > 1e12
    Z = np.linalg.solve(HHt + ridge * np.eye(k), H @ X.T).T
    return Z, flagged


def _input_objective(X, Z, H, lam, graph):
    R = X - Z @ H
    value = float(np.einsum("ij,ij->", R, R))
    if lam > 0 and graph is not None:
        value += lam * graph_penalty(H, graph)
    return value


def gsnmf(X, graph, k, cfg: SolverConfig = SolverConfig()) -> FactorizationState:
    """Graph-regularised semi-NMF in input space; ``W`` holds the basis Z.

    Z is refit by ridge least squares each sweep, H follows the same
    split-gradient rule as the kernel solver with ``Z^T X`` and ``Z^T Z`` in
    place of ``W^T K`` and ``W^T K W``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    d, n = X.shape
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    lam = cfg.lam
    if graph is None and lam:
        raise ValueError("a neighbourhood graph is required when lambda > 0")
    use_graph = graph is not None and lam > 0
    if use_graph:
        P = sparse.csr_matrix(graph.adjacency)
        degree = graph.degree

    rng = np.random.default_rng(cfg.seed)
    # same draw order as the kernel solver: W first (unused here), then H
    _init(rng, n, k)
    H = _init(rng, k, n)
    Z, _ = _least_squares_basis(X, H)
    prev = _input_objective(X, Z, H, lam, graph)
    state = FactorizationState(None, H, [prev])
    for it in range(1, cfg.max_iter + 1):
        Z, flagged = _least_squares_basis(X, H)
        if flagged and "ridge" not in state.warnings:
            state.warnings.append("ridge")
            warnings.warn("H H^T is near singular; ridge applied", RuntimeWarning, stacklevel=2)
        ZtX_p, ZtX_m = split_pos_neg(Z.T @ X)
        ZtZ_p, ZtZ_m = split_pos_neg(Z.T @ Z)
        numer = ZtX_p + ZtZ_m @ H
        denom = ZtX_m + ZtZ_p @ H
        if use_graph:
            numer += lam * np.asarray(P.T @ H.T).T
            denom += lam * (H * degree[None, :])
        H = H * np.sqrt(numer / (denom + cfg.epsilon_guard))
        cur = _input_objective(X, Z, H, lam, graph)
        state.objective_trace.append(cur)
        state.iterations = it
        if _relative_decrease(prev, cur) < cfg.rel_tol:
            state.converged = True
            break
        prev = cur
    state.W, state.H = Z, H
    return state


def ablation_solvers(X, k, variant="kgsnmf", cfg: SolverConfig = SolverConfig(), kernel=KernelSpec(), eps=5):
    """Run one of the four solver variants on features-by-samples data ``X``.

    snmf and ksnmf ignore ``cfg.lam`` (it is forced to zero).
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; choose from {VARIANTS}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    use_graph = variant in ("gsnmf", "kgsnmf")
    run_cfg = cfg if use_graph else SolverConfig(**{**cfg.__dict__, "lam": 0.0})
    graph = knn_graph(X, eps) if use_graph else None
    if variant in ("snmf", "gsnmf"):
        return gsnmf(X, graph, k, run_cfg)
    return kgsnmf(gram(X, kernel), graph, k, run_cfg)
