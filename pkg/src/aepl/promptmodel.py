"""Trainable classifier head standing in for learned prompts.

Per-class weight vectors are scored by temperature-scaled cosine
similarity and trained with cross-entropy via hand-derived gradients.
Heads are reinitialized from the zero-shot text embeddings each round.
"""

from dataclasses import dataclass, replace

import numpy as np

from .data import TRAIN, EmbeddingDataset


class DegenerateModelError(ValueError):
    """A weight row has zero norm, so cosine scoring is undefined."""


class TrainingDivergedError(RuntimeError):
    def __init__(self, step):
        super().__init__(f"non-finite loss at step {step}")
        self.step = step


@dataclass(eq=False)
class PromptHead:
    """Weights (c, d) float64 plus softmax temperature.

    Rows are not unit-norm constrained; scoring normalizes on the fly, so
    predictions are invariant to positive per-row rescaling.
    """

    weights: np.ndarray
    tau: float = 0.01

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite")
        if self.tau <= 0:
            raise ValueError("tau must be positive")

    @property
    def c(self):
        return self.weights.shape[0]

    def unit_weights(self):
        """Rows scaled to unit norm; the directions cosine scoring sees."""
        norms = np.linalg.norm(self.weights, axis=1, keepdims=True)
        if np.any(norms == 0):
            raise DegenerateModelError("zero-norm weight row")
        return self.weights / norms


@dataclass
class TrainConfig:
    epochs: int = 200
    lr0: float = 0.002
    init_std: float = 0.02
    seed: int = 0
    batch: int = 0  # 0 = full batch

    def validate(self):
        if self.epochs < 1 or self.lr0 <= 0 or self.init_std < 0:
            raise ValueError("epochs >= 1, lr0 > 0, init_std >= 0 required")
        if self.batch < 0:
            raise ValueError("batch must be >= 0")
        return self


@dataclass(frozen=True)
class PoolRecord:
    index: int
    label: int
    is_pseudo: bool


@dataclass
class LabeledPool:
    """Accumulated labeled records with unique indices."""

    records: list

    def __post_init__(self):
        idx = [r.index for r in self.records]
        if len(set(idx)) != len(idx):
            raise ValueError("duplicate index in labeled pool")

    def __len__(self):
        return len(self.records)

    def indices(self):
        return np.array([r.index for r in self.records], dtype=np.int64)

    def labels(self):
        return np.array([r.label for r in self.records], dtype=np.int64)

    def pseudo_mask(self):
        return np.array([r.is_pseudo for r in self.records], dtype=bool)

    def validate_against(self, ds: EmbeddingDataset):
        for r in self.records:
            if not 0 <= r.index < ds.n or ds.split[r.index] != TRAIN:
                raise ValueError(f"pool index {r.index} not in the train split")
            if not 0 <= r.label < ds.c:
                raise ValueError(f"pool label {r.label} out of range")
        return self


def batch_probs(head: PromptHead, x: np.ndarray) -> np.ndarray:
    """Softmax over temperature-scaled cosine similarities, row-wise.

    ``x`` is (m, d); returns (m, c). Logits get max-subtraction before
    exponentiation so saturated temperatures stay finite.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    xn = np.linalg.norm(x, axis=1, keepdims=True)
    if np.any(xn == 0):
        raise ValueError("zero-norm input vector")
    logits = (x / xn) @ head.unit_weights().T / head.tau
    logits -= logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    return e / e.sum(axis=1, keepdims=True)


def class_probs(head: PromptHead, x: np.ndarray) -> np.ndarray:
    """Class probabilities for one embedding; sums to 1 within 1e-12."""
    return batch_probs(head, x)[0]


def pseudo_label(head: PromptHead, x: np.ndarray):
    """(argmax class, its probability); ties go to the lowest class index."""
    p = class_probs(head, x)
    k = int(np.argmax(p))
    return k, float(p[k])


def init_head(
    zeroshot_text_embeds: np.ndarray, cfg: TrainConfig, round: int, tau: float = 0.01
) -> PromptHead:
    """Per-round reinit: zero-shot embeddings plus Gaussian perturbation.

    The RNG is seeded with ``cfg.seed XOR round`` so every (seed, round)
    pair gives one fixed head.
    """
    if round < 1:
        raise ValueError("round must be >= 1")
    cfg.validate()
    base = np.asarray(zeroshot_text_embeds, dtype=np.float64)
    rng = np.random.default_rng(cfg.seed ^ round)
    return PromptHead(base + cfg.init_std * rng.standard_normal(base.shape), tau=tau)


def _pool_arrays(ds: EmbeddingDataset, pool: LabeledPool):
    if not len(pool):
        raise ValueError("labeled pool is empty")
    idx = pool.indices()
    return ds.images64[idx], pool.labels()


def loss_and_grad(head: PromptHead, ds: EmbeddingDataset, pool: LabeledPool):
    """Mean cross-entropy over the pool and its exact weight gradient.

    The gradient includes the cosine-normalization Jacobian
    d cos(x, w)/d w = (x/|x| - cos * w_hat) / |w|.
    """
    x, y = _pool_arrays(ds, pool)
    return _loss_and_grad_arrays(head.weights, head.tau, x, y)


def _loss_and_grad_arrays(weights, tau, x, y):
    m = x.shape[0]
    wnorm = np.linalg.norm(weights, axis=1, keepdims=True)
    if np.any(wnorm == 0):
        raise DegenerateModelError("zero-norm weight row")
    what = weights / wnorm
    xhat = x / np.linalg.norm(x, axis=1, keepdims=True)

    cos = xhat @ what.T  # (m, c)
    logits = cos / tau
    shifted = logits - logits.max(axis=1, keepdims=True)
    loge = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = float(-loge[np.arange(m), y].mean())

    g = np.exp(loge)  # probabilities
    g[np.arange(m), y] -= 1.0  # dL/dlogits per sample, before the 1/m
    # Row k of the gradient: sum_i g_ik * (xhat_i - cos_ik * what_k) / (m tau |w_k|)
    gx = g.T @ xhat  # (c, d)
    gc = (g * cos).sum(axis=0)  # (c,)
    grad = (gx - gc[:, None] * what) / (m * tau * wnorm)
    return loss, grad


def train(
    head: PromptHead, ds: EmbeddingDataset, pool: LabeledPool, cfg: TrainConfig
) -> PromptHead:
    """Gradient descent with cosine-annealed learning rate.

    lr at step t of T total steps is lr0 * 0.5 * (1 + cos(pi * t / T)).
    Full-batch when cfg.batch == 0, otherwise seeded mini-batch shuffling.
    Pure function of its inputs: reruns produce bit-identical heads.
    """
    cfg.validate()
    x, y = _pool_arrays(ds, pool)
    m = x.shape[0]
    rng = np.random.default_rng(cfg.seed)

    if cfg.batch == 0 or cfg.batch >= m:
        batches_per_epoch = 1
    else:
        batches_per_epoch = (m + cfg.batch - 1) // cfg.batch
    total_steps = cfg.epochs * batches_per_epoch

    weights = head.weights.copy()
    step = 0
    for _ in range(cfg.epochs):
        if batches_per_epoch == 1:
            order = np.arange(m)
        else:
            order = rng.permutation(m)
        for b in range(batches_per_epoch):
            sel = order[b * cfg.batch : (b + 1) * cfg.batch] if batches_per_epoch > 1 else order
            loss, grad = _loss_and_grad_arrays(weights, head.tau, x[sel], y[sel])
            if not np.isfinite(loss):
                raise TrainingDivergedError(step)
            lr = cfg.lr0 * 0.5 * (1.0 + np.cos(np.pi * step / total_steps))
            weights = weights - lr * grad
            step += 1
    return PromptHead(weights, tau=head.tau)


def predict_classes(head: PromptHead, x: np.ndarray) -> np.ndarray:
    """Argmax classes for a batch; softmax is monotone in the logits, so
    this matches pseudo_label including the lowest-index tie rule."""
    x = np.asarray(x, dtype=np.float64)
    cos = (x / np.linalg.norm(x, axis=1, keepdims=True)) @ head.unit_weights().T
    return np.argmax(cos, axis=1)


def evaluate(head: PromptHead, ds: EmbeddingDataset, split: str) -> float:
    """Fraction of the split predicted to its ground-truth class."""
    idx = ds.split_indices(split)
    if idx.size == 0:
        raise ValueError(f"{split} split is empty")
    pred = predict_classes(head, ds.images64[idx])
    return float((pred == ds.labels[idx].astype(np.int64)).mean())


def derive_train_cfg(cfg: TrainConfig, seed: int) -> TrainConfig:
    """Thread an experiment seed into the training seed deterministically."""
    mixed = int(np.random.SeedSequence((seed, cfg.seed)).generate_state(1)[0])
    return replace(cfg, seed=mixed)
