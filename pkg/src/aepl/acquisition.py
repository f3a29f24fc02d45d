"""Per-round candidate selection: cluster-balanced plus five baselines.

Every selector returns exactly b dataset indices, sorted ascending,
unique, and disjoint from the already-labeled set.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .clustering import Metric, closest_to_centroid, kmeans
from .data import EmbeddingDataset
from .promptmodel import PromptHead, batch_probs


class KSchedule(str, Enum):
    FIXED_B = "FixedB"
    FIXED_8B = "Fixed8B"
    LINEAR_BR = "LinearBr"  # K = B * r, the default


@dataclass
class RoundContext:
    """State a selector sees: round number, budget, labeled set, pool."""

    r: int
    b: int
    labeled: np.ndarray  # dataset indices already in the pool
    pool: np.ndarray  # all train-split dataset indices, ascending

    def __post_init__(self):
        self.labeled = np.asarray(self.labeled, dtype=np.int64)
        self.pool = np.asarray(self.pool, dtype=np.int64)
        if self.r < 1 or self.b < 1:
            raise ValueError("round and budget must be >= 1")
        if not np.isin(self.labeled, self.pool).all():
            raise ValueError("labeled indices must be inside the pool")

    def unlabeled(self):
        return self.pool[~np.isin(self.pool, self.labeled)]


def k_for_round(ctx: RoundContext, sched: KSchedule) -> int:
    """Cluster count for the round, clamped to the pool size."""
    sched = KSchedule(sched)
    if sched == KSchedule.LINEAR_BR:
        k = ctx.b * ctx.r
    elif sched == KSchedule.FIXED_B:
        k = ctx.b
    else:
        k = 8 * ctx.b
    return min(k, len(ctx.pool))


def _check_budget(ctx):
    free = ctx.unlabeled()
    if free.size < ctx.b:
        raise ValueError(f"pool exhausted: {free.size} unlabeled < budget {ctx.b}")
    return free


def _finalize(ctx, picks):
    out = np.sort(np.asarray(picks, dtype=np.int64))
    assert out.size == ctx.b and np.unique(out).size == ctx.b
    assert not np.isin(out, ctx.labeled).any()
    return [int(i) for i in out]


def select_cb(
    features,
    ctx: RoundContext,
    sched=KSchedule.LINEAR_BR,
    metric=Metric.EUCLIDEAN,
    seed=0,
    clustering=None,
):
    """Cluster-balanced selection over the supplied feature rows.

    ``features`` has one row per pool entry, aligned with ctx.pool. The
    pool is clustered with the round's K; unlabeled clusters (those with
    no labeled member) are ranked by size, and the point closest to each
    centroid is taken. If fewer than b clusters are unlabeled, the
    remaining picks sweep all clusters by size rank, taking the nearest
    not-yet-chosen unlabeled point from each until the budget is filled.

    A precomputed ``clustering`` (from the same features, K and metric)
    may be passed to avoid clustering twice.
    """
    _check_budget(ctx)
    features = np.asarray(features, dtype=np.float64)
    if features.shape[0] != len(ctx.pool):
        raise ValueError("features must align with ctx.pool")
    metric = Metric(metric)

    clus = clustering
    if clus is None:
        clus = kmeans(features, k_for_round(ctx, sched), metric=metric, seed=seed)
    labeled_rows = np.flatnonzero(np.isin(ctx.pool, ctx.labeled))
    excluded = set(labeled_rows.tolist())

    sizes = np.bincount(clus.assignments, minlength=clus.k)
    has_label = np.zeros(clus.k, dtype=bool)
    has_label[np.unique(clus.assignments[labeled_rows])] = True
    by_size = sorted(range(clus.k), key=lambda cid: (-sizes[cid], cid))
    unlabeled_rank = [cid for cid in by_size if not has_label[cid]]

    chosen = []
    for cid in unlabeled_rank[: ctx.b]:
        row = closest_to_centroid(
            features, clus.members(cid), clus.centroids[cid], excluded=excluded, metric=metric
        )
        chosen.append(row)
        excluded.add(row)

    while len(chosen) < ctx.b:  # deficit: sweep clusters for 2nd/3rd-nearest
        progress = False
        for cid in by_size:
            if len(chosen) >= ctx.b:
                break
            row = closest_to_centroid(
                features, clus.members(cid), clus.centroids[cid], excluded=excluded, metric=metric
            )
            if row is not None:
                chosen.append(row)
                excluded.add(row)
                progress = True
        if not progress:
            raise ValueError("pool exhausted during deficit fill")

    return _finalize(ctx, ctx.pool[np.array(chosen, dtype=np.int64)])


def select_random(ctx: RoundContext, seed=0):
    """Uniform without replacement from the unlabeled pool."""
    free = _check_budget(ctx)
    rng = np.random.default_rng(seed)
    return _finalize(ctx, rng.choice(free, size=ctx.b, replace=False))


def select_entropy(head: PromptHead, ds: EmbeddingDataset, ctx: RoundContext):
    """Top-b unlabeled by Shannon entropy (natural log), ties by index."""
    free = _check_budget(ctx)
    probs = batch_probs(head, ds.images64[free])
    ent = -np.sum(np.where(probs > 0, probs * np.log(probs), 0.0), axis=1)
    order = np.lexsort((free, -ent))
    return _finalize(ctx, free[order[: ctx.b]])


def select_coreset(features, ctx: RoundContext):
    """Greedy k-center on Euclidean distance over the supplied features.

    Picks the unlabeled point farthest from the labeled-or-picked set,
    repeatedly. With nothing labeled, the first pick is the lowest index.
    """
    free = _check_budget(ctx)
    features = np.asarray(features, dtype=np.float64)
    if features.shape[0] != len(ctx.pool):
        raise ValueError("features must align with ctx.pool")

    pos = {int(i): p for p, i in enumerate(ctx.pool)}
    free_rows = np.array([pos[int(i)] for i in free], dtype=np.int64)
    lab_rows = np.array([pos[int(i)] for i in ctx.labeled], dtype=np.int64)

    if lab_rows.size:
        min_d = kernels.pairwise_sqdist(features[free_rows], features[lab_rows]).min(axis=1)
    else:
        min_d = np.full(free_rows.size, np.inf)

    picks = []
    for _ in range(ctx.b):
        if np.isinf(min_d).all():
            j = 0  # nothing labeled yet: documented lowest-index seed rule
        else:
            j = int(np.argmax(min_d))  # ties resolve to the lowest index
        picks.append(free[j])
        d_new = kernels.pairwise_sqdist(features[free_rows], features[free_rows[j]][None, :])[:, 0]
        min_d = np.minimum(min_d, d_new)
        min_d[j] = -np.inf  # never repick
    return _finalize(ctx, picks)


def _gradient_embeddings(head, ds, indices):
    """Last-layer CE gradients (p - onehot(argmax p)) outer x, flattened."""
    x = ds.images64[indices]
    probs = batch_probs(head, x)
    g = probs.copy()
    g[np.arange(len(indices)), np.argmax(probs, axis=1)] -= 1.0
    return (g[:, :, None] * x[:, None, :]).reshape(len(indices), -1)


def _badge_plusplus(emb, b, rng):
    """k-means++ style pick sequence over gradient embeddings.

    First pick is uniform. Later picks sample proportional to the squared
    distance to the nearest picked point, except that exactly-zero
    gradient embeddings are excluded once a first pick exists (a fully
    confident point carries no update signal). Returns picks in order.
    """
    m = emb.shape[0]
    norms_zero = np.einsum("ij,ij->i", emb, emb) == 0.0
    picks = [int(rng.integers(m))]
    min_d = kernels.pairwise_sqdist(emb, emb[picks[-1]][None, :])[:, 0]
    while len(picks) < b:
        w = min_d.copy()
        w[norms_zero] = 0.0
        w[picks] = 0.0
        total = w.sum()
        if total <= 0:
            taken = set(picks)
            nxt = next(i for i in range(m) if i not in taken)
        else:
            nxt = int(rng.choice(m, p=w / total))
        picks.append(nxt)
        min_d = np.minimum(min_d, kernels.pairwise_sqdist(emb, emb[nxt][None, :])[:, 0])
    return picks


def select_badge(head: PromptHead, ds: EmbeddingDataset, ctx: RoundContext, seed=0):
    free = _check_budget(ctx)
    emb = _gradient_embeddings(head, ds, free)
    picks = _badge_plusplus(emb, ctx.b, np.random.default_rng(seed))
    return _finalize(ctx, free[np.array(picks, dtype=np.int64)])


def select_pcb(head: PromptHead, ds: EmbeddingDataset, ctx: RoundContext, seed=0):
    """Pseudo-class-balanced selection on top of BADGE.

    BADGE over-samples 3b ranked candidates; a greedy pass then keeps, at
    each step, the best-ranked candidate whose pseudo-class currently has
    the fewest kept picks, until b are kept. When balance is infeasible
    (e.g. one pseudo-class dominates) the fallback keeps BADGE rank order.
    """
    free = _check_budget(ctx)
    oversample = min(3 * ctx.b, free.size)
    emb = _gradient_embeddings(head, ds, free)
    ranked_rows = _badge_plusplus(emb, oversample, np.random.default_rng(seed))
    ranked = free[np.array(ranked_rows, dtype=np.int64)]

    pseudo = np.argmax(batch_probs(head, ds.images64[ranked]), axis=1)
    kept_count = np.zeros(ds.c, dtype=np.int64)
    kept, remaining = [], list(range(len(ranked)))
    while len(kept) < ctx.b and remaining:
        live = kept_count[pseudo[remaining]]
        floor = live.min()
        pick_pos = next(i for i in remaining if kept_count[pseudo[i]] == floor)
        remaining.remove(pick_pos)
        kept.append(ranked[pick_pos])
        kept_count[pseudo[pick_pos]] += 1
    return _finalize(ctx, kept)
