"""Lloyd K-means with k-means++ seeding, plus the Adjusted Rand Index.

Two metrics are supported. Euclidean is the classical algorithm. Cosine
assigns by largest cosine similarity and renormalizes centroids (mean of
raw member rows, then unit-scaled). The reported cosine objective is
sum_i (|x_i| - x_i . c_hat), the norm-weighted cosine dissimilarity; the
normalized-mean update is exactly its minimizer for a fixed assignment,
which keeps the objective provably non-increasing per iteration.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels


class Metric(str, Enum):
    EUCLIDEAN = "Euclidean"
    COSINE = "Cosine"


@dataclass(eq=False)
class Clustering:
    k: int
    assignments: np.ndarray  # (m,) cluster ids
    centroids: np.ndarray  # (k, d); unit rows for the cosine metric
    inertia: float
    metric: Metric
    inertia_history: list  # objective after each Lloyd iteration

    def members(self, cluster_id):
        return np.flatnonzero(self.assignments == cluster_id)


def _cost_matrix(features, centroids, metric):
    """Per-point per-centroid cost; argmin is the metric's assignment rule."""
    if metric == Metric.EUCLIDEAN:
        return kernels.pairwise_sqdist(features, centroids)
    norms = np.linalg.norm(features, axis=1)
    return norms[:, None] - kernels.pairwise_dot(features, centroids)


def _normalize_rows(mat):
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return mat / norms


def _as_centroids(rows, metric):
    return _normalize_rows(rows) if metric == Metric.COSINE else rows


def _plusplus_init(features, k, metric, rng):
    """k-means++ seeding; returns k distinct point indices."""
    m = features.shape[0]
    chosen = [int(rng.integers(m))]
    cost = _cost_matrix(features, _as_centroids(features[chosen], metric), metric)[:, 0]
    cost = np.maximum(cost, 0.0)
    while len(chosen) < k:
        total = cost.sum()
        if total <= 0:
            # all remaining mass is on already-chosen points: fall back to
            # the lowest unchosen index so seeding stays deterministic
            taken = set(chosen)
            nxt = next(i for i in range(m) if i not in taken)
        else:
            nxt = int(rng.choice(m, p=cost / total))
        chosen.append(nxt)
        new_cost = _cost_matrix(features, _as_centroids(features[[nxt]], metric), metric)[:, 0]
        cost = np.minimum(cost, np.maximum(new_cost, 0.0))
    return np.array(chosen, dtype=np.int64)


def kmeans(features, k, metric=Metric.EUCLIDEAN, seed=0, max_iter=100, tol=1e-6) -> Clustering:
    """Single k-means++ init followed by Lloyd iterations.

    Deterministic for fixed inputs. Empty clusters are repaired by moving
    the point currently farthest from its centroid (ties: lowest index,
    singleton clusters protected), so all k clusters stay occupied.
    """
    features = np.ascontiguousarray(features, dtype=np.float64)
    m = features.shape[0]
    metric = Metric(metric)
    if not 1 <= k <= m:
        raise ValueError(f"need 1 <= k <= {m}, got k={k}")
    if max_iter < 1 or tol < 0:
        raise ValueError("max_iter >= 1 and tol >= 0 required")

    rng = np.random.default_rng(seed)
    centroids = _as_centroids(features[_plusplus_init(features, k, metric, rng)].copy(), metric)

    assign = None
    history = []
    for _ in range(max_iter):
        cost = _cost_matrix(features, centroids, metric)
        assign = np.argmin(cost, axis=1)
        point_cost = cost[np.arange(m), assign]

        counts = np.bincount(assign, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            movable = counts[assign] > 1
            if not movable.any():
                break
            cand = np.flatnonzero(movable)
            worst = cand[np.argmax(point_cost[cand])]
            counts[assign[worst]] -= 1
            counts[empty] += 1
            assign[worst] = empty
            point_cost[worst] = -np.inf  # singleton-to-be; cost drops to 0

        sums, counts = kernels.sum_by_label(features, assign, k)
        new_centroids = _as_centroids(sums / np.maximum(counts, 1)[:, None], metric)

        new_cost = _cost_matrix(features, new_centroids, metric)
        inertia = float(np.maximum(new_cost[np.arange(m), assign], 0.0).sum())
        history.append(inertia)

        shift = float(np.linalg.norm(new_centroids - centroids, axis=1).max())
        centroids = new_centroids
        if shift < tol:
            break

    if len(history) > 1:
        worst_rise = max(b - a for a, b in zip(history, history[1:]))
        if worst_rise > 1e-8 * max(1.0, history[0]):
            raise RuntimeError(f"objective increased by {worst_rise} during Lloyd iteration")

    return Clustering(
        k=k,
        assignments=assign,
        centroids=centroids,
        inertia=history[-1],
        metric=metric,
        inertia_history=history,
    )


def cluster_centroid(features, members, metric=Metric.EUCLIDEAN) -> np.ndarray:
    """Mean of member rows; unit-scaled for the cosine metric."""
    members = np.asarray(members, dtype=np.int64)
    if members.size == 0:
        raise ValueError("empty member set")
    mean = np.asarray(features, dtype=np.float64)[members].mean(axis=0)
    if Metric(metric) == Metric.COSINE:
        norm = np.linalg.norm(mean)
        if norm > 0:
            mean = mean / norm
    return mean


def closest_to_centroid(features, members, centroid, excluded=(), metric=Metric.EUCLIDEAN):
    """Member index nearest the centroid, skipping ``excluded``.

    Ties break to the lowest index; returns None when every member is
    excluded. Cosine closeness ranks by 1 - cos(x, centroid), so point
    scale does not matter.
    """
    members = np.asarray(members, dtype=np.int64)
    keep = members[~np.isin(members, np.fromiter(excluded, dtype=np.int64, count=len(excluded)))]
    if keep.size == 0:
        return None
    rows = np.asarray(features, dtype=np.float64)[keep]
    centroid = np.asarray(centroid, dtype=np.float64)
    if Metric(metric) == Metric.COSINE:
        sims = _normalize_rows(rows) @ centroid / max(np.linalg.norm(centroid), 1e-300)
        dist = 1.0 - sims
    else:
        dist = kernels.pairwise_sqdist(rows, centroid[None, :])[:, 0]
    order = np.lexsort((keep, dist))  # primary: distance, secondary: index
    return int(keep[order[0]])


def adjusted_rand_index(a, b) -> float:
    """Chance-corrected pair-counting agreement between two partitions.

    Returns 1.0 when the expected-index correction is degenerate (both
    partitions all-singletons or single-cluster), matching convention.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("partitions must be 1-d and the same length")
    n = a.size
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)

    def comb2(x):
        x = int(x)
        return x * (x - 1) // 2

    sum_ij = sum(comb2(v) for v in table.ravel())
    sum_a = sum(comb2(v) for v in table.sum(axis=1))
    sum_b = sum(comb2(v) for v in table.sum(axis=0))
    total = comb2(n)
    if total == 0:
        return 1.0
    # exact rational arithmetic until the final division
    expected_num = sum_a * sum_b  # over denominator `total`
    max_num = (sum_a + sum_b) * total  # over denominator 2 * total
    numer = sum_ij * total - expected_num  # over denominator `total`
    denom = max_num - 2 * expected_num  # over denominator 2 * total
    if denom == 0:
        return 1.0
    return float(2 * numer / denom)
