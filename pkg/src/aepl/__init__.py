"""Budget-efficient active prompt learning over precomputed embeddings.

Pool-based active learning with class-guided clustering acquisition,
selective querying against adaptive class-wise thresholds, a softmax-
cosine classifier head, five baselines, and full budget accounting.
"""

from .acquisition import KSchedule, RoundContext, k_for_round
from .clustering import Metric, adjusted_rand_index, kmeans
from .data import (
    DatasetFormatError,
    EmbeddingDataset,
    SyntheticSpec,
    generate_synthetic,
    load_dataset,
    oracle_label,
    save_dataset,
)
from .engine import ExperimentConfig, Method, RoundReport, emit_report, run_experiment, run_suite
from .guidance import GuidanceMode, class_guided_features, weighted_text_features
from .kernels import BACKEND
from .promptmodel import (
    LabeledPool,
    PoolRecord,
    PromptHead,
    TrainConfig,
    class_probs,
    evaluate,
    init_head,
    loss_and_grad,
    pseudo_label,
    train,
)
from .querying import (
    BudgetLedger,
    QueryDecision,
    Thresholds,
    build_round_pool,
    class_thresholds,
    decide,
    pseudo_label_correctness,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BudgetLedger",
    "DatasetFormatError",
    "EmbeddingDataset",
    "ExperimentConfig",
    "GuidanceMode",
    "KSchedule",
    "LabeledPool",
    "Method",
    "Metric",
    "PoolRecord",
    "PromptHead",
    "QueryDecision",
    "RoundContext",
    "RoundReport",
    "SyntheticSpec",
    "Thresholds",
    "TrainConfig",
    "adjusted_rand_index",
    "build_round_pool",
    "class_guided_features",
    "class_probs",
    "class_thresholds",
    "decide",
    "emit_report",
    "evaluate",
    "generate_synthetic",
    "init_head",
    "k_for_round",
    "kmeans",
    "load_dataset",
    "loss_and_grad",
    "oracle_label",
    "pseudo_label",
    "pseudo_label_correctness",
    "run_experiment",
    "run_suite",
    "save_dataset",
    "train",
    "weighted_text_features",
]
