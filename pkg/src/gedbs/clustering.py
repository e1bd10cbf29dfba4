"""Cluster the input test cases before budgeted selection.

Real-valued data goes through k-means++ seeding and Lloyd iterations,
with the cluster count picked automatically by a knee search over the
SSE curve.  Bit-vector data goes through agglomerative hierarchical
clustering under complete linkage and Hamming distance, cut at the
largest jump between consecutive merge heights.

Clustering reads only the input vectors, never the outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .selection import LengthMismatch

METHOD_KMEANS = "kmeans"
METHOD_AHC = "ahc"


class KTooLarge(ValueError):
    """Requested more clusters than there are distinct points."""


@dataclass(frozen=True)
class ClusterAssignment:
    """Per-case cluster labels; every cluster in [0, k) is non-empty."""

    labels: tuple[int, ...]
    k: int
    method: str

    def __post_init__(self) -> None:
        seen = set(self.labels)
        if any(not 0 <= c < self.k for c in seen):
            raise ValueError("labels outside [0, k)")
        if seen != set(range(self.k)):
            raise ValueError("every cluster index must have at least one member")

    def members(self, cluster: int) -> list[int]:
        return [i for i, c in enumerate(self.labels) if c == cluster]

    def to_csv(self) -> str:
        lines = ["case_index,cluster_label"]
        lines.extend(f"{i},{c}" for i, c in enumerate(self.labels))
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# k-means++


@dataclass(frozen=True)
class KMeansResult:
    assignment: ClusterAssignment
    centroids: np.ndarray
    sse: float
    iterations: int
    sse_history: tuple[float, ...]


def _as_points(points) -> np.ndarray:
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("points must be a non-empty 2-D array")
    return X


def _distinct_count(X: np.ndarray) -> int:
    return len(np.unique(X, axis=0))


def _repair_empty(labels, X, centroids, k):
    """Give each empty cluster the farthest point of the largest cluster."""
    labels = labels.copy()
    for cluster in range(k):
        if (labels == cluster).any():
            continue
        counts = np.bincount(labels, minlength=k)
        largest = int(counts.argmax())
        members = np.flatnonzero(labels == largest)
        dist2 = ((X[members] - centroids[largest]) ** 2).sum(axis=1)
        labels[int(members[dist2.argmax()])] = cluster
    return labels


def kmeans_pp(points, k: int, max_iters: int = 100, rng_seed: int = 0) -> KMeansResult:
    """k-means++ seeding followed by Lloyd iterations to a fixpoint.

    The first centroid is uniform over the points; each further centroid
    is sampled proportionally to the squared distance to the nearest
    chosen one.  SSE is non-increasing across iterations (asserted).
    """
    X = _as_points(points)
    n, _ = X.shape
    if k < 1:
        raise ValueError("k must be >= 1")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if k > _distinct_count(X):
        raise KTooLarge(f"k={k} exceeds the {_distinct_count(X)} distinct points")
    rng = np.random.default_rng(rng_seed)
    centroids = np.empty((k, X.shape[1]), dtype=float)
    centroids[0] = X[int(rng.integers(n))]
    d2 = ((X - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        centroids[j] = X[int(rng.choice(n, p=d2 / d2.sum()))]
        d2 = np.minimum(d2, ((X - centroids[j]) ** 2).sum(axis=1))

    labels = None
    history: list[float] = []
    iterations = 0
    for _ in range(max_iters):
        dist2 = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = dist2.argmin(axis=1)
        new_labels = _repair_empty(new_labels, X, centroids, k)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        iterations += 1
        for c in range(k):
            centroids[c] = X[labels == c].mean(axis=0)
        sse = float(((X - centroids[labels]) ** 2).sum())
        assert not history or sse <= history[-1] + 1e-9 * max(1.0, history[-1])
        history.append(sse)
    assignment = ClusterAssignment(tuple(int(c) for c in labels), k, METHOD_KMEANS)
    return KMeansResult(assignment, centroids, history[-1], iterations, tuple(history))


def knee_point(ks, sses) -> int | None:
    """Knee of a decreasing curve by maximum distance to the normalized chord.

    Returns None when the curve is degenerate or near-linear (all chord
    distances within 1e-9 after normalization).
    """
    ks = np.asarray(ks, dtype=float)
    ys = np.asarray(sses, dtype=float)
    if len(ks) < 3 or ks[-1] == ks[0] or ys.max() == ys.min():
        return None
    x = (ks - ks[0]) / (ks[-1] - ks[0])
    y = (ys - ys.min()) / (ys.max() - ys.min())
    chord = y[0] + (y[-1] - y[0]) * x
    gaps = chord - y
    best = int(gaps.argmax())
    if gaps[best] <= 1e-9:
        return None
    return int(ks[best])


def default_k_range(points) -> range:
    """Elbow search range: 1 to min(10, ceil(sqrt(N)), distinct points)."""
    X = _as_points(points)
    hi = max(1, min(10, math.isqrt(len(X) - 1) + 1, _distinct_count(X)))
    return range(1, hi + 1)


def choose_k_elbow(points, k_range, rng_seed: int = 0) -> int:
    """Cluster count at the knee of the SSE(k) curve; min(k_range) if none."""
    ks = sorted(set(int(k) for k in k_range))
    if not ks:
        raise ValueError("k_range is empty")
    sses = [kmeans_pp(points, k, rng_seed=rng_seed).sse for k in ks]
    knee = knee_point(ks, sses)
    return knee if knee is not None else ks[0]


# ---------------------------------------------------------------------------
# agglomerative hierarchical clustering, complete linkage, Hamming distance


def _as_bit_matrix(points) -> np.ndarray:
    rows = []
    width = None
    for p in points:
        bits = [int(ch) for ch in p] if isinstance(p, str) else [int(b) for b in p]
        if any(b not in (0, 1) for b in bits):
            raise ValueError(f"not a bit-string: {p!r}")
        if width is None:
            width = len(bits)
        elif len(bits) != width:
            raise LengthMismatch(f"bit-strings of length {width} and {len(bits)}")
        rows.append(bits)
    if not rows:
        raise ValueError("no points")
    return np.array(rows, dtype=np.uint8)


def _hamming_matrix(X: np.ndarray) -> np.ndarray:
    packed = np.packbits(X, axis=1)
    n = len(X)
    D = np.zeros((n, n), dtype=np.int64)
    for col in range(packed.shape[1]):
        byte = packed[:, col]
        D += np.bitwise_count(byte[:, None] ^ byte[None, :]).astype(np.int64)
    return D


def ahc_merge_sequence(points) -> list[tuple[int, int, int]]:
    """Full complete-linkage merge sequence under Hamming distance.

    Each record is ``(i, j, height)`` where i < j are the smallest member
    indices of the two merged clusters and height is their complete-link
    distance.  The minimum-height pair is merged at every step; ties are
    broken by the lexicographically smallest (i, j).
    """
    X = _as_bit_matrix(points)
    n = len(X)
    D = _hamming_matrix(X).astype(float)
    INF = math.inf
    active = np.ones(n, dtype=bool)
    # row cache over the upper triangle: best[i] = (min dist, smallest arg j > i)
    row_min = np.full(n, INF)
    row_arg = np.full(n, -1, dtype=int)

    def recompute_row(i: int) -> None:
        js = np.flatnonzero(active[i + 1 :]) + i + 1
        if len(js) == 0:
            row_min[i] = INF
            row_arg[i] = -1
        else:
            values = D[i, js]
            best = int(values.argmin())
            row_min[i] = values[best]
            row_arg[i] = int(js[best])

    for i in range(n):
        recompute_row(i)

    merges: list[tuple[int, int, int]] = []
    for _ in range(n - 1):
        candidates = np.where(active, row_min, INF)
        i = int(candidates.argmin())
        j = int(row_arg[i])
        height = D[i, j]
        merges.append((i, j, int(height)))
        active[j] = False
        others = np.flatnonzero(active)
        others = others[others != i]
        D[i, others] = np.maximum(D[i, others], D[j, others])
        D[others, i] = D[i, others]
        recompute_row(i)
        for l in np.flatnonzero(active[:j]):
            if row_arg[l] == i or row_arg[l] == j:
                recompute_row(int(l))
    return merges


def _cut_index(heights: list[int]) -> int:
    """Number of merges to keep: cut below the largest height jump.

    Ties go to the deepest jump, preferring the coarsest clustering that
    is still separated by the largest gap.
    """
    if len(heights) < 2:
        return len(heights)
    gaps = np.diff(np.asarray(heights, dtype=float))
    if gaps.max() <= 0:
        return len(heights)
    deepest = len(gaps) - 1 - int(np.argmax(gaps[::-1]))
    return deepest + 1


def ahc_complete(points) -> ClusterAssignment:
    """Complete-linkage Hamming clustering with an automatic dendrogram cut."""
    X = _as_bit_matrix(points)
    n = len(X)
    merges = ahc_merge_sequence(points)
    keep = _cut_index([h for _, _, h in merges])
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j, _ in merges[:keep]:
        ri, rj = find(i), find(j)
        lo, hi = (ri, rj) if ri < rj else (rj, ri)
        parent[hi] = lo

    roots: dict[int, int] = {}
    labels = []
    for case in range(n):
        root = find(case)
        if root not in roots:
            roots[root] = len(roots)
        labels.append(roots[root])
    return ClusterAssignment(tuple(labels), len(roots), METHOD_AHC)
