"""Feature spaces for clustering: image, weighted-text, and class-guided.

Weight rows are unit-normalized before mixing (cosine scoring already
treats them as directions) and class-guided rows are a plain mean of the
image and text features, not renormalized.
"""

from enum import Enum

import numpy as np

from .data import EmbeddingDataset
from .promptmodel import PromptHead, batch_probs


class GuidanceMode(str, Enum):
    IMAGE_ONLY = "ImageOnly"
    TEXT_ONLY = "TextOnly"
    CLASS_GUIDED_SOFT = "ClassGuidedSoft"
    CLASS_GUIDED_HARD = "ClassGuidedHard"
    CLASS_GUIDED_LABEL = "ClassGuidedLabel"


_TEXT_MODES = {
    GuidanceMode.TEXT_ONLY,
    GuidanceMode.CLASS_GUIDED_SOFT,
    GuidanceMode.CLASS_GUIDED_HARD,
    GuidanceMode.CLASS_GUIDED_LABEL,
}


def _text_rows(head: PromptHead, x: np.ndarray, mode: GuidanceMode, labels=None):
    """Per-row text features for a batch; x is (m, d)."""
    what = head.unit_weights()
    if mode == GuidanceMode.CLASS_GUIDED_LABEL:
        if labels is None:
            raise ValueError("label-guided mode needs ground-truth labels")
        return what[np.asarray(labels, dtype=np.int64)]
    probs = batch_probs(head, x)
    if mode == GuidanceMode.CLASS_GUIDED_HARD:
        return what[np.argmax(probs, axis=1)]
    # soft weights (TextOnly clusters on the same soft mixture)
    return probs @ what


def weighted_text_features(
    head: PromptHead, x: np.ndarray, mode: GuidanceMode, true_label=None
) -> np.ndarray:
    """Probability-weighted mixture of unit weight rows for one embedding.

    Soft: sum_c p_c(x) * w_hat_c. Hard: the argmax row. Label: the row of
    the supplied ground-truth class. The output is not renormalized.
    """
    if mode == GuidanceMode.IMAGE_ONLY:
        raise ValueError("image-only mode has no text features")
    if mode == GuidanceMode.CLASS_GUIDED_LABEL:
        if true_label is None:
            raise ValueError("label-guided mode needs true_label")
        labels = [true_label]
    else:
        if true_label is not None:
            raise ValueError("true_label is only legal in label-guided mode")
        labels = None
    x = np.asarray(x, dtype=np.float64)
    return _text_rows(head, x[None, :], mode, labels)[0]


def class_guided_features(
    ds: EmbeddingDataset, head: PromptHead, mode: GuidanceMode, labels_if_allowed=None
) -> np.ndarray:
    """Clustering features for the train split, one row per train image.

    ClassGuided modes average image and text features; ImageOnly and
    TextOnly pass one of them through. Rows follow ascending train index.
    """
    train_idx = ds.split_indices("train")
    images = ds.images64[train_idx]
    if mode == GuidanceMode.IMAGE_ONLY:
        return images.copy()

    if mode == GuidanceMode.CLASS_GUIDED_LABEL:
        if labels_if_allowed is None:
            raise ValueError("label-guided mode needs explicit label access")
        labels = np.asarray(labels_if_allowed, dtype=np.int64)[train_idx]
    else:
        labels = None
    text = _text_rows(head, images, mode, labels)
    if mode == GuidanceMode.TEXT_ONLY:
        return text
    return (images + text) / 2.0
