"""Selective querying: class-wise thresholds, query-vs-pseudo decisions,
round-dataset construction and the budget ledger."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .data import EmbeddingDataset
from .promptmodel import LabeledPool, PoolRecord, PromptHead, batch_probs


class Action(str, Enum):
    QUERY = "Query"
    PSEUDO_LABEL = "PseudoLabel"


@dataclass
class Thresholds:
    """Per-class confidence thresholds; +inf marks classes with no
    labeled support (those candidates are always queried)."""

    eps: np.ndarray

    def __post_init__(self):
        self.eps = np.asarray(self.eps, dtype=np.float64)
        finite = self.eps[np.isfinite(self.eps)]
        if finite.size and (finite.min() < 0 or finite.max() > 1):
            raise ValueError("finite thresholds must lie in [0, 1]")

    @classmethod
    def always_query(cls, c):
        return cls(np.full(c, np.inf))


@dataclass(frozen=True)
class QueryDecision:
    index: int
    action: Action
    assigned_label: int
    confidence: float


@dataclass
class BudgetLedger:
    """Per-round oracle-vs-pseudo counts plus cumulative budget."""

    b: int
    rounds: list = field(default_factory=list)  # (queried, pseudo) per round

    @property
    def consumed(self):
        return sum(q for q, _ in self.rounds)

    @property
    def nominal(self):
        return self.b * len(self.rounds)

    def record_round(self, queried, pseudo):
        if queried + pseudo != self.b:
            raise ValueError(f"round must decide exactly b={self.b} candidates")
        if not self.rounds and pseudo > 0:
            raise ValueError("round 1 cannot pseudo-label")
        self.rounds.append((queried, pseudo))
        assert self.consumed <= self.nominal


def class_thresholds(
    head: PromptHead, ds: EmbeddingDataset, prev_pool: LabeledPool, include_pseudo=True
) -> Thresholds:
    """Mean confidence of the previous pool per class, under the
    previous round's head.

    By default pseudo-labeled records count toward the mean (the round
    dataset contains them); pass include_pseudo=False to exclude them.
    Classes with no support get the always-query sentinel.
    """
    if not len(prev_pool):
        raise ValueError("previous pool is empty")
    keep = [r for r in prev_pool.records if include_pseudo or not r.is_pseudo]
    eps = np.full(ds.c, np.inf)
    if keep:
        idx = np.array([r.index for r in keep], dtype=np.int64)
        labels = np.array([r.label for r in keep], dtype=np.int64)
        conf = batch_probs(head, ds.images64[idx])[np.arange(len(keep)), labels]
        for cls in range(ds.c):
            mask = labels == cls
            if mask.any():
                eps[cls] = conf[mask].mean()
    return Thresholds(eps)


def decide(candidates, head: PromptHead, ds: EmbeddingDataset, thresholds: Thresholds, oracle):
    """Split candidates into pseudo-labels and oracle queries.

    A candidate whose argmax confidence is >= the threshold of its own
    pseudo-class keeps the pseudo-label; otherwise the oracle is asked.
    The boundary case (equality) pseudo-labels.
    """
    candidates = [int(i) for i in candidates]
    decisions = []
    probs = batch_probs(head, ds.images64[np.array(candidates, dtype=np.int64)])
    for row, index in enumerate(candidates):
        klass = int(np.argmax(probs[row]))
        conf = float(probs[row, klass])
        if conf >= thresholds.eps[klass]:
            decisions.append(QueryDecision(index, Action.PSEUDO_LABEL, klass, conf))
        else:
            decisions.append(QueryDecision(index, Action.QUERY, int(oracle(index)), conf))
    return decisions


def build_round_pool(prev: LabeledPool, decisions, ledger: BudgetLedger):
    """Union the previous pool with this round's decisions; update ledger."""
    records = list(prev.records)
    seen = {r.index for r in records}
    queried = pseudo = 0
    for d in decisions:
        if d.index in seen:
            raise ValueError(f"index {d.index} already in the pool")
        seen.add(d.index)
        is_pseudo = d.action == Action.PSEUDO_LABEL
        queried += not is_pseudo
        pseudo += is_pseudo
        records.append(PoolRecord(d.index, d.assigned_label, is_pseudo))
    ledger.record_round(queried, pseudo)
    return LabeledPool(records), ledger


def pseudo_label_correctness(pool: LabeledPool, ds: EmbeddingDataset) -> float:
    """Fraction of pseudo records matching ground truth; 1.0 when the
    pool has no pseudo records (convention)."""
    pseudo = [r for r in pool.records if r.is_pseudo]
    if not pseudo:
        return 1.0
    hits = sum(int(ds.labels[r.index]) == r.label for r in pseudo)
    return hits / len(pseudo)


def dataset_label_accuracy(pool: LabeledPool, ds: EmbeddingDataset) -> float:
    """Fraction of ALL pool records matching ground truth (oracle answers
    are correct by construction, so this folds pseudo noise into the
    whole-dataset quality number)."""
    if not len(pool):
        raise ValueError("empty pool")
    hits = sum(int(ds.labels[r.index]) == r.label for r in pool.records)
    return hits / len(pool)
