"""Partition agreement metrics and the clustering-by-view report."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


def _as_labels(a):
    a = np.asarray(a)
    if a.ndim != 1:
        raise ValueError("label vectors must be one-dimensional")
    return a


def contingency(a, b):
    a, b = _as_labels(a), _as_labels(b)
    if a.size != b.size:
        raise ValueError(f"label vectors differ in length: {a.size} vs {b.size}")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    return table


def _entropy(counts, n):
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(a, b) -> float:
    """Mutual information normalised by sqrt(H(a) H(b)), natural logs.

    Two single-cluster partitions score 1; exactly one single-cluster
    partition scores 0.
    """
    a, b = _as_labels(a), _as_labels(b)
    if a.size == 0:
        raise ValueError("empty label vectors")
    table = contingency(a, b)
    n = a.size
    ha = _entropy(table.sum(axis=1), n)
    hb = _entropy(table.sum(axis=0), n)
    if table.shape[0] == 1 and table.shape[1] == 1:
        return 1.0
    if table.shape[0] == 1 or table.shape[1] == 1:
        return 0.0
    nz = table > 0
    pij = table[nz] / n
    outer = np.outer(table.sum(axis=1), table.sum(axis=0))[nz] / (n * n)
    mi = float((pij * np.log(pij / outer)).sum())
    value = mi / np.sqrt(ha * hb)
    return float(min(max(value, 0.0), 1.0))


def _pairs(counts):
    return float((counts * (counts - 1) // 2).sum())


def f1_pairs(a, b) -> float:
    """Pair-counting F1 of partition ``a`` against reference ``b``."""
    a, b = _as_labels(a), _as_labels(b)
    if a.size < 2:
        raise ValueError("pair counting needs at least two samples")
    table = contingency(a, b)
    together_both = _pairs(table)
    together_a = _pairs(table.sum(axis=1))
    together_b = _pairs(table.sum(axis=0))
    if together_a == 0 or together_b == 0:
        return 0.0
    precision = together_both / together_a
    recall = together_both / together_b
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def adjusted_rand(a, b) -> float:
    """Adjusted Rand index (bonus metric, not used by the pipeline)."""
    table = contingency(a, b)
    n = table.sum()
    both = _pairs(table)
    ra, rb = _pairs(table.sum(axis=1)), _pairs(table.sum(axis=0))
    total = n * (n - 1) / 2
    expected = ra * rb / total
    max_index = (ra + rb) / 2
    if max_index == expected:
        return 1.0
    return (both - expected) / (max_index - expected)


@dataclass(frozen=True)
class ViewReport:
    clustering_names: tuple
    view_names: tuple
    f1: np.ndarray  # (n_clusterings, n_views)
    nmi: np.ndarray

    def to_dict(self):
        return {
            "clusterings": list(self.clustering_names),
            "views": list(self.view_names),
            "f1": self.f1.tolist(),
            "nmi": self.nmi.tolist(),
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    def diagonal_nmi(self):
        k = min(self.nmi.shape)
        return np.array([self.nmi[i, i] for i in range(k)])

    def matched_diagonal_nmi(self):
        """Diagonal after pairing clusterings with views one-to-one for maximal total NMI."""
        rows, cols = linear_sum_assignment(self.nmi, maximize=True)
        order = np.argsort(cols)
        return self.nmi[rows[order], cols[order]]

    def best_match_nmi(self):
        """Best NMI achieved by any clustering for each view."""
        return self.nmi.max(axis=0)

    def to_text(self):
        width = max([len(c) for c in self.clustering_names] + [4])
        head = " " * width + "".join(f" | {v:^15}" for v in self.view_names)
        sub = " " * width + "".join(" | {:>6}  {:>6}".format("F1", "NMI") for _ in self.view_names)
        lines = [head, sub, "-" * len(head)]
        for i, name in enumerate(self.clustering_names):
            cells = "".join(f" | {self.f1[i, j]:6.3f}  {self.nmi[i, j]:6.3f}" for j in range(len(self.view_names)))
            lines.append(f"{name:<{width}}{cells}")
        return "\n".join(lines)


def evaluate_views(clusterings, views, clustering_names=None) -> ViewReport:
    """Score every clustering against every ground-truth view.

    ``clusterings`` holds label vectors or objects with a ``labels``
    attribute; ``views`` holds label vectors or ``(name, labels)`` pairs.
    """
    labels = [np.asarray(getattr(c, "labels", c)) for c in clusterings]
    if views and isinstance(views[0], tuple):
        view_names = tuple(name for name, _ in views)
        view_labels = [np.asarray(v) for _, v in views]
    else:
        view_names = tuple(f"view_{j + 1}" for j in range(len(views)))
        view_labels = [np.asarray(v) for v in views]
    if clustering_names is None:
        clustering_names = tuple(f"C{i + 1}" for i in range(len(labels)))
    f1 = np.zeros((len(labels), len(view_labels)))
    scores = np.zeros_like(f1)
    for i, lab in enumerate(labels):
        for j, ref in enumerate(view_labels):
            f1[i, j] = f1_pairs(lab, ref)
            scores[i, j] = nmi(lab, ref)
    return ViewReport(tuple(clustering_names), view_names, f1, scores)
