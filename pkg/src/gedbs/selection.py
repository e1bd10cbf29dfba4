"""Budgeted distance-greedy selection of training cases from clusters.

Per cluster, all pairwise input distances are ranked in descending
order and the walk appends each pair's endpoints (smaller case index
first) until ``ceil(budget * cluster_size / 100)`` distinct cases are
collected.  Duplicate selections are skipped, so for a fixed cluster
structure a smaller budget always selects a subset of a larger one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .datasets import Dataset

METRIC_EUCLIDEAN = "euclidean"
METRIC_HAMMING = "hamming"


class DimensionMismatch(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


class InvalidBudget(ValueError):
    pass


def distance_euclidean(p, q) -> float:
    """Euclidean distance between two real vectors."""
    p = tuple(p)
    q = tuple(q)
    if len(p) != len(q):
        raise DimensionMismatch(f"vectors of dimension {len(p)} and {len(q)}")
    return math.sqrt(sum((b - a) ** 2 for a, b in zip(p, q)))


def _as_bits(p) -> tuple[int, ...]:
    bits = tuple(int(b) for b in p)
    if any(b not in (0, 1) for b in bits):
        raise ValueError(f"not a bit-string: {p!r}")
    return bits


def distance_hamming(p, q) -> int:
    """Number of 1s in p XOR q for two equal-length bit-strings."""
    p = _as_bits(p)
    q = _as_bits(q)
    if len(p) != len(q):
        raise LengthMismatch(f"bit-strings of length {len(p)} and {len(q)}")
    return sum(a ^ b for a, b in zip(p, q))


@dataclass(frozen=True)
class DistanceMatrix:
    """Lower-triangular pairwise distances: entry (j, k) with k < j.

    Entries are stored flat in (j, k) lexicographic order, i.e. index
    ``j * (j - 1) // 2 + k``; the upper half is discarded.
    """

    n: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        if len(self.entries) != self.n * (self.n - 1) // 2:
            raise ValueError("entry count does not match n")

    def distance(self, j: int, k: int) -> float:
        if j == k:
            return 0.0
        j, k = (j, k) if j > k else (k, j)
        return float(self.entries[j * (j - 1) // 2 + k])

    def pair_indices(self) -> tuple[np.ndarray, np.ndarray]:
        """Arrays (js, ks) aligned with ``entries``."""
        js = np.concatenate([np.full(j, j, dtype=int) for j in range(1, self.n)]) \
            if self.n > 1 else np.empty(0, dtype=int)
        ks = np.concatenate([np.arange(j) for j in range(1, self.n)]) \
            if self.n > 1 else np.empty(0, dtype=int)
        return js, ks


def build_distance_matrix(cluster_inputs, metric: str) -> DistanceMatrix:
    """All pairwise distances among input vectors under the given metric."""
    if metric not in (METRIC_EUCLIDEAN, METRIC_HAMMING):
        raise ValueError(f"unknown metric {metric!r}")
    X = np.asarray(cluster_inputs, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = len(X)
    if n < 1:
        raise ValueError("at least one case required")
    if metric == METRIC_HAMMING and not np.isin(X, (0.0, 1.0)).all():
        raise ValueError("hamming metric requires bit vectors")
    chunks = []
    for j in range(1, n):
        diff = X[:j] - X[j]
        if metric == METRIC_EUCLIDEAN:
            chunks.append(np.sqrt((diff**2).sum(axis=1)))
        else:
            chunks.append((diff != 0).sum(axis=1).astype(float))
    entries = np.concatenate(chunks) if chunks else np.empty(0, dtype=float)
    return DistanceMatrix(n=n, entries=entries)


@dataclass(frozen=True)
class SelectionPlan:
    """Outcome of one budgeted selection over a cluster assignment."""

    budget_percent: float
    per_cluster_counts: tuple[int, ...]
    per_cluster_indices: tuple[tuple[int, ...], ...]

    @property
    def selected_indices(self) -> tuple[int, ...]:
        return tuple(i for cluster in self.per_cluster_indices for i in cluster)

    def to_csv(self) -> str:
        lines = ["cluster,rank,case_index"]
        for c, indices in enumerate(self.per_cluster_indices):
            for rank, idx in enumerate(indices):
                lines.append(f"{c},{rank},{idx}")
        return "\n".join(lines) + "\n"


def budget_count(budget_percent: float, cluster_size: int) -> int:
    """Cases to select from a cluster: ceil(B * N / 100), capped at N."""
    raw = budget_percent * cluster_size / 100.0
    return min(cluster_size, math.ceil(round(raw, 9)))


def _select_from_cluster(inputs, metric: str, count: int) -> list[int]:
    n = len(inputs)
    if n == 1:
        return [0] if count >= 1 else []
    matrix = build_distance_matrix(inputs, metric)
    js, ks = matrix.pair_indices()
    # descending distance, ties by ascending (j, k)
    order = np.lexsort((ks, js, -matrix.entries))
    chosen: list[int] = []
    seen = set()
    for pair in order:
        for idx in (int(ks[pair]), int(js[pair])):
            if idx not in seen:
                seen.add(idx)
                chosen.append(idx)
                if len(chosen) == count:
                    return chosen
    return chosen


def dbs_select(dataset: "Dataset", assignment, budget_percent: float) -> SelectionPlan:
    """Select training cases cluster by cluster under a percentage budget.

    ``assignment`` provides ``labels`` (one cluster index per case) and
    ``k``.  Only input vectors are read; full test cases are recovered
    from the returned indices.  The metric follows the dataset domain:
    Euclidean for real-valued data, Hamming for bit vectors.
    """
    if not 0.0 < budget_percent <= 100.0:
        raise InvalidBudget(f"budget must be in (0, 100], got {budget_percent}")
    labels = np.asarray(assignment.labels)
    if len(labels) != len(dataset):
        raise ValueError("assignment does not cover the dataset")
    from .datasets import DOMAIN_CIRCUIT

    metric = METRIC_HAMMING if dataset.domain == DOMAIN_CIRCUIT else METRIC_EUCLIDEAN
    inputs = dataset.inputs_matrix
    counts: list[int] = []
    per_cluster: list[tuple[int, ...]] = []
    for cluster in range(assignment.k):
        members = np.flatnonzero(labels == cluster)
        count = budget_count(budget_percent, len(members))
        counts.append(count)
        local = _select_from_cluster(inputs[members], metric, count)
        per_cluster.append(tuple(int(members[i]) for i in local))
    return SelectionPlan(
        budget_percent=budget_percent,
        per_cluster_counts=tuple(counts),
        per_cluster_indices=tuple(per_cluster),
    )


def budget_schedule() -> list[int]:
    """The selection budgets swept by the experiment protocol."""
    return [70, 65, 60, 55, 50, 45]
