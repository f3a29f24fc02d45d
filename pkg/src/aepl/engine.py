"""Round loop driver: runs experiments across methods, ablation cells and
seeds, archives per-round snapshots, and emits machine-readable reports.
"""

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from functools import partial

import numpy as np

from .acquisition import (
    KSchedule,
    RoundContext,
    k_for_round,
    select_badge,
    select_cb,
    select_coreset,
    select_entropy,
    select_pcb,
    select_random,
)
from .clustering import Metric, adjusted_rand_index, kmeans
from .data import EmbeddingDataset, oracle_label
from .guidance import GuidanceMode, class_guided_features
from .promptmodel import (
    LabeledPool,
    PromptHead,
    TrainConfig,
    derive_train_cfg,
    evaluate,
    init_head,
    train,
)
from .querying import (
    BudgetLedger,
    Thresholds,
    build_round_pool,
    class_thresholds,
    decide,
    pseudo_label_correctness,
)


class Method(str, Enum):
    CB_SQ = "CB_SQ"
    CB = "CB"
    RANDOM = "Random"
    ENTROPY = "Entropy"
    CORESET = "CoreSet"
    BADGE = "BADGE"
    PCB = "PCB"


_CLUSTER_METHODS = {Method.CB_SQ, Method.CB}


@dataclass
class ExperimentConfig:
    method: Method = Method.CB_SQ
    guidance: GuidanceMode = None  # None: class-guided for CB*, image-only otherwise
    kschedule: KSchedule = KSchedule.LINEAR_BR
    metric: Metric = Metric.EUCLIDEAN
    rounds: int = 8
    budget: int = None  # None: the class count
    tau: float = 0.01
    train: TrainConfig = field(default_factory=TrainConfig)
    seeds: list = field(default_factory=lambda: [0, 1, 2])
    selective: bool = None  # None: on exactly for CB_SQ
    allow_label_guidance: bool = False
    include_pseudo_in_thresholds: bool = True

    def resolved(self, ds: EmbeddingDataset):
        """Fill dataset-dependent defaults and check the invariants."""
        method = Method(self.method)
        guidance = self.guidance
        if guidance is None:
            guidance = (
                GuidanceMode.CLASS_GUIDED_SOFT
                if method in _CLUSTER_METHODS
                else GuidanceMode.IMAGE_ONLY
            )
        guidance = GuidanceMode(guidance)
        if guidance == GuidanceMode.CLASS_GUIDED_LABEL and not self.allow_label_guidance:
            raise ValueError("label-guided features need allow_label_guidance=True")
        selective = self.selective
        if selective is None:
            selective = method == Method.CB_SQ
        if method == Method.CB_SQ and not selective:
            raise ValueError("CB_SQ requires selective querying")
        if method != Method.CB_SQ and selective:
            raise ValueError(f"{method.value} never pseudo-labels")
        budget = self.budget if self.budget is not None else ds.c
        if self.rounds < 1 or budget < 1:
            raise ValueError("rounds and budget must be >= 1")
        if len(ds.split_indices("train")) < budget * self.rounds:
            raise ValueError("train pool too small for budget * rounds labels")
        return replace(
            self,
            method=method,
            guidance=guidance,
            kschedule=KSchedule(self.kschedule),
            metric=Metric(self.metric),
            budget=budget,
            selective=selective,
        )


@dataclass
class RoundReport:
    round: int
    accuracy: float
    consumed: int
    cum_budget_ratio: float
    pseudo_count: int
    pseudo_correct: float
    ari: float
    wall_time: float  # diagnostic only; never serialized into reports

    def check_finite(self):
        for name, value in asdict(self).items():
            if not math.isfinite(float(value)):
                raise ValueError(f"non-finite report field {name}")
        return self


@dataclass
class RoundSnapshot:
    """Everything needed to recompute a round's invariants post hoc."""

    round: int
    head_weights: np.ndarray
    tau: float
    thresholds: Thresholds
    decisions: list
    pool: LabeledPool

    def to_json_doc(self):
        return {
            "round": self.round,
            "tau": self.tau,
            "head_weights": self.head_weights.tolist(),
            "thresholds": [None if math.isinf(e) else float(e) for e in self.thresholds.eps],
            "decisions": [
                {
                    "index": d.index,
                    "action": d.action.value,
                    "assigned_label": d.assigned_label,
                    "confidence": d.confidence,
                }
                for d in self.decisions
            ],
            "pool": [
                {"index": r.index, "label": r.label, "is_pseudo": r.is_pseudo}
                for r in self.pool.records
            ],
        }


def _derive_seed(*parts):
    return int(np.random.SeedSequence(tuple(int(p) for p in parts)).generate_state(1)[0])


def run_experiment(ds: EmbeddingDataset, cfg: ExperimentConfig, seed, snapshot_dir=None, archive=None):
    """One full run; returns the list of R round reports.

    Deterministic per (ds, cfg, seed). Any round failure propagates with
    the round number attached. Per-round snapshots are appended to
    ``archive`` when a list is supplied, and written as one JSON document
    per round when ``snapshot_dir`` is set.
    """
    cfg = cfg.resolved(ds)
    train_idx = ds.split_indices("train")
    train_cfg = derive_train_cfg(cfg.train, seed)

    pool = LabeledPool([])
    ledger = BudgetLedger(b=cfg.budget)
    head = PromptHead(ds.text64.copy(), tau=cfg.tau)  # zero-shot head for round 1
    reports, snapshots = [], []

    for r in range(1, cfg.rounds + 1):
        try:
            t0 = time.perf_counter()
            ctx = RoundContext(r=r, b=cfg.budget, labeled=pool.indices(), pool=train_idx)

            labels_arg = ds.labels if cfg.guidance == GuidanceMode.CLASS_GUIDED_LABEL else None
            features = class_guided_features(ds, head, cfg.guidance, labels_arg)
            clus = kmeans(
                features,
                k_for_round(ctx, cfg.kschedule),
                metric=cfg.metric,
                seed=_derive_seed(seed, r, 0),
            )

            if cfg.method in _CLUSTER_METHODS:
                candidates = select_cb(
                    features, ctx, cfg.kschedule, cfg.metric, clustering=clus
                )
            elif cfg.method == Method.RANDOM:
                candidates = select_random(ctx, seed=_derive_seed(seed, r, 1))
            elif cfg.method == Method.ENTROPY:
                candidates = select_entropy(head, ds, ctx)
            elif cfg.method == Method.CORESET:
                candidates = select_coreset(features, ctx)
            elif cfg.method == Method.BADGE:
                candidates = select_badge(head, ds, ctx, seed=_derive_seed(seed, r, 1))
            else:
                candidates = select_pcb(head, ds, ctx, seed=_derive_seed(seed, r, 1))

            if cfg.selective and r >= 2:
                thresholds = class_thresholds(
                    head, ds, pool, include_pseudo=cfg.include_pseudo_in_thresholds
                )
            else:
                thresholds = Thresholds.always_query(ds.c)
            decisions = decide(candidates, head, ds, thresholds, partial(oracle_label, ds))
            pool, ledger = build_round_pool(pool, decisions, ledger)
            assert len(pool) == cfg.budget * r

            head = train(init_head(ds.text64, train_cfg, r, tau=cfg.tau), ds, pool, train_cfg)

            queried, pseudo = ledger.rounds[-1]
            reports.append(
                RoundReport(
                    round=r,
                    accuracy=evaluate(head, ds, "test"),
                    consumed=queried,
                    cum_budget_ratio=ledger.consumed / (cfg.budget * cfg.rounds),
                    pseudo_count=pseudo,
                    pseudo_correct=pseudo_label_correctness(pool, ds),
                    ari=adjusted_rand_index(clus.assignments, ds.labels[train_idx]),
                    wall_time=time.perf_counter() - t0,
                ).check_finite()
            )
            snapshots.append(
                RoundSnapshot(r, head.weights.copy(), cfg.tau, thresholds, decisions, pool)
            )
        except Exception as exc:
            raise RuntimeError(f"round {r} failed: {exc}") from exc

    if snapshot_dir is not None:
        os.makedirs(snapshot_dir, exist_ok=True)
        for snap in snapshots:
            path = os.path.join(snapshot_dir, f"round_{snap.round:03d}.json")
            _atomic_write_text(path, json.dumps(snap.to_json_doc(), indent=2) + "\n")
    if archive is not None:
        archive.extend(snapshots)
    return reports


REPORT_COLUMNS = [
    "method",
    "guidance",
    "kschedule",
    "metric",
    "seed",
    "round",
    "accuracy",
    "consumed",
    "cum_budget_ratio",
    "pseudo_count",
    "pseudo_correct",
    "ari",
]

_STAT_FIELDS = ["accuracy", "consumed", "cum_budget_ratio", "pseudo_count", "pseudo_correct", "ari"]


def report_rows(cfg: ExperimentConfig, seed, reports):
    """Flatten one run into report-table rows (wall time excluded so that
    identical runs serialize to identical bytes)."""
    rows = []
    for rep in reports:
        rows.append(
            {
                "method": Method(cfg.method).value,
                "guidance": GuidanceMode(cfg.guidance).value if cfg.guidance else "",
                "kschedule": KSchedule(cfg.kschedule).value,
                "metric": Metric(cfg.metric).value,
                "seed": seed,
                "round": rep.round,
                "accuracy": rep.accuracy,
                "consumed": rep.consumed,
                "cum_budget_ratio": rep.cum_budget_ratio,
                "pseudo_count": rep.pseudo_count,
                "pseudo_correct": rep.pseudo_correct,
                "ari": rep.ari,
            }
        )
    return rows


def _run_cell(args):
    ds, cfg, seed = args
    cfg = cfg.resolved(ds)
    return report_rows(cfg, seed, run_experiment(ds, cfg, seed))


def run_suite(ds: EmbeddingDataset, cfg_matrix, seeds, jobs=1):
    """Cartesian product of configs and shared seeds.

    Returns per-seed rows followed, per cell and round, by aggregate rows
    whose seed column is "mean" / "std" (population std over seeds).
    """
    if not seeds:
        raise ValueError("empty seed list")
    if not cfg_matrix:
        raise ValueError("empty config matrix")
    cells = [(ds, cfg, seed) for cfg in cfg_matrix for seed in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            cell_rows = list(pool.map(_run_cell, cells))
    else:
        cell_rows = [_run_cell(cell) for cell in cells]

    table = [row for rows in cell_rows for row in rows]
    aggregates = []
    per_cfg = len(seeds)
    for ci in range(len(cfg_matrix)):
        rows = [row for rows in cell_rows[ci * per_cfg : (ci + 1) * per_cfg] for row in rows]
        rounds = sorted({row["round"] for row in rows})
        for rnd in rounds:
            group = [row for row in rows if row["round"] == rnd]
            for stat, fn in (("mean", np.mean), ("std", lambda v: np.std(v, ddof=0))):
                agg = dict(group[0])
                agg["seed"] = stat
                for col in _STAT_FIELDS:
                    agg[col] = float(fn([row[col] for row in group]))
                aggregates.append(agg)
    return table + aggregates


def _atomic_write_text(path, text):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    os.replace(tmp, path)


def emit_report(table, path, format="csv"):
    """Write the report table; identical tables produce identical bytes."""
    if format == "csv":
        out = []
        out.append(",".join(REPORT_COLUMNS))
        for row in table:
            out.append(",".join(str(row[col]) for col in REPORT_COLUMNS))
        _atomic_write_text(path, "\n".join(out) + "\n")
    elif format == "json":
        docs = [{col: row[col] for col in REPORT_COLUMNS} for row in table]
        _atomic_write_text(path, json.dumps(docs, indent=2, ensure_ascii=False) + "\n")
    else:
        raise ValueError(f"unknown report format {format!r}")


def read_report(path):
    """Read back an emitted report (csv or json) as a list of dicts."""
    if str(path).endswith(".json"):
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    with open(path, encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))
