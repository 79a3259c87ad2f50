"""Agglomerative merging of ICA components into independent subspaces.

Groups of source rows are merged greedily by the independence cost

    C_I(a, b) = C_H(a | b) - C_H(a) - C_H(b)

until one group is left or every pairwise cost is positive.  Every visited
partition is scored by its description length L(M) + L(D|M), and the
cheapest one is selected.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .density import negative_log2_likelihood


@dataclass(frozen=True)
class SubspacePartition:
    groups: tuple

    def __post_init__(self):
        groups = tuple(tuple(sorted(int(i) for i in g)) for g in self.groups)
        groups = tuple(sorted(groups, key=lambda g: g[0] if g else -1))
        if not groups or any(len(g) == 0 for g in groups):
            raise ValueError("partition groups must be nonempty")
        flat = [i for g in groups for i in g]
        if sorted(flat) != list(range(len(flat))):
            raise ValueError(f"groups {groups} do not cover 0..d-1 disjointly")
        object.__setattr__(self, "groups", groups)

    @property
    def v(self) -> int:
        return len(self.groups)

    @property
    def d(self) -> int:
        return sum(len(g) for g in self.groups)

    @classmethod
    def singletons(cls, d):
        return cls(tuple((i,) for i in range(d)))

    def as_lists(self):
        return [list(g) for g in self.groups]


@dataclass(frozen=True)
class MergeStep:
    partition: SubspacePartition
    mdl: float
    merged_pair: Optional[tuple] = None
    pair_cost: Optional[float] = None


@dataclass(frozen=True)
class MergeTrace:
    steps: tuple = field(default_factory=tuple)

    def __len__(self):
        return len(self.steps)

    def to_json(self):
        return [
            {
                "step": t,
                "groups": s.partition.as_lists(),
                "merged_pair": list(s.merged_pair) if s.merged_pair is not None else None,
                "pair_cost": s.pair_cost,
                "mdl": s.mdl,
            }
            for t, s in enumerate(self.steps)
        ]


class _GroupCoder:
    """Memoises the KDE code length of each group of source rows."""

    def __init__(self, S):
        self.S = np.atleast_2d(np.asarray(S, dtype=float))
        self.log2n = math.log2(self.S.shape[1])
        self._nll = {}

    def nll(self, group):
        key = tuple(sorted(group))
        if key not in self._nll:
            self._nll[key] = negative_log2_likelihood(self.S[list(key)])
        return self._nll[key]

    def entropy_cost(self, group):
        return 0.5 * len(group) * self.log2n + self.nll(group)

    def independence_cost(self, g_i, g_j):
        union = tuple(sorted(g_i + g_j))
        return self.entropy_cost(union) - (self.entropy_cost(g_i) + self.entropy_cost(g_j))

    def data_cost(self, partition):
        d = partition.d
        return 0.5 * d * self.log2n + sum(self.nll(g) for g in partition.groups)


def _check_disjoint(g_i, g_j):
    g_i, g_j = tuple(int(i) for i in g_i), tuple(int(j) for j in g_j)
    if not g_i or not g_j:
        raise ValueError("groups must be nonempty")
    if set(g_i) & set(g_j):
        raise ValueError(f"groups {g_i} and {g_j} overlap")
    return g_i, g_j


def independence_cost(S, g_i, g_j) -> float:
    """C_I between two disjoint groups of source rows, in bits.

    Negative values mean the two groups are cheaper to code jointly, i.e.
    they are dependent.  Symmetric in its two group arguments.
    """
    g_i, g_j = _check_disjoint(g_i, g_j)
    return _GroupCoder(S).independence_cost(tuple(sorted(g_i)), tuple(sorted(g_j)))


def mdl_model_cost(d, n, v) -> float:
    """L(M) = d^2/2 log2(n) + (v+1) log2(d)."""
    if d < 1 or n < 2 or not 1 <= v <= d:
        raise ValueError(f"invalid arguments d={d}, n={n}, v={v}")
    return d * d / 2 * math.log2(n) + (v + 1) * math.log2(d)


def mdl_data_cost(S, partition: SubspacePartition) -> float:
    """L(D|M) = d/2 log2(n) + per-group KDE code lengths of all samples."""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if partition.d != S.shape[0]:
        raise ValueError(f"partition covers {partition.d} rows, S has {S.shape[0]}")
    return _GroupCoder(S).data_cost(partition)


def merge_subspaces(S, parallel=False, stop_when_independent=True) -> MergeTrace:
    """Greedy agglomerative merging starting from singleton components.

    Each step merges the pair with the smallest independence cost (ties go
    to the lexicographically smallest pair of group indices, groups ordered
    by their smallest member).  Merging stops when a single group remains
    or, unless ``stop_when_independent`` is False, when every pairwise cost
    is positive.
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    d, n = S.shape
    coder = _GroupCoder(S)

    def score(partition):
        return mdl_model_cost(d, n, partition.v) + coder.data_cost(partition)

    partition = SubspacePartition.singletons(d)
    steps = [MergeStep(partition, score(partition))]
    while partition.v >= 2:
        groups = partition.groups
        pairs = [(i, j) for i in range(len(groups)) for j in range(i + 1, len(groups))]
        if parallel:
            # fill the memo for the unions concurrently; the reduction below stays ordered
            with ThreadPoolExecutor() as pool:
                list(pool.map(lambda p: coder.nll(groups[p[0]] + groups[p[1]]), pairs))
        costs = [coder.independence_cost(groups[i], groups[j]) for i, j in pairs]
        if stop_when_independent and all(c > 0 for c in costs):
            break
        best = min(range(len(pairs)), key=lambda t: (costs[t], pairs[t]))
        i, j = pairs[best]
        merged = [g for t, g in enumerate(groups) if t not in (i, j)] + [groups[i] + groups[j]]
        partition = SubspacePartition(tuple(merged))
        steps.append(MergeStep(partition, score(partition), (i, j), costs[best]))
    return MergeTrace(tuple(steps))


def select_partition(trace: MergeTrace) -> SubspacePartition:
    """Partition with the smallest description length; ties go to fewer groups."""
    if not trace.steps:
        raise ValueError("empty merge trace")
    best = min(trace.steps, key=lambda s: (s.mdl, s.partition.v))
    return best.partition


def partition_with_v(trace: MergeTrace, v) -> SubspacePartition:
    """The visited partition with exactly ``v`` groups."""
    for step in trace.steps:
        if step.partition.v == v:
            return step.partition
    visited = [s.partition.v for s in trace.steps]
    raise ValueError(f"no partition with v={v} was visited (visited: {visited})")
