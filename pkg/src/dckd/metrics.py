"""Evaluation and analysis: top-k accuracy, correlation number, class accumulation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dckd import losses
from dckd.data import Dataset
from dckd.errors import InvalidArgument, InvalidInput
from dckd.models import Model, predict_logits


def softmax_np(logits: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    if not temperature > 0:
        raise InvalidArgument(f"temperature must be positive, got {temperature}")
    z = np.asarray(logits, dtype=np.float64) / temperature
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def topk_accuracy(logits, labels, k: int) -> float:
    """Fraction of rows whose label ranks within the top k; ties go to the lower class index."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n, c = logits.shape
    if not 1 <= k <= c:
        raise InvalidArgument(f"k must lie in [1, {c}], got {k}")
    if n == 0:
        raise InvalidArgument("topk_accuracy on an empty batch")
    true = logits[np.arange(n), labels][:, None]
    lower_index = np.arange(c)[None, :] < labels[:, None]
    rank = (logits > true).sum(axis=1) + ((logits == true) & lower_index).sum(axis=1)
    return float(np.mean(rank < k))


def correlation_number(p, threshold: float = 0.1) -> int:
    """Number of classes whose probability strictly exceeds ``threshold``."""
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    if not 0 < threshold < 1:
        raise InvalidArgument(f"threshold must lie in (0, 1), got {threshold}")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-6:
        raise InvalidInput("correlation_number needs a probability distribution")
    return int(np.count_nonzero(p > threshold))


def mean_correlation_number(model: Model, dataset: Dataset, temperature: float = 4.0,
                            threshold: float = 0.1) -> float:
    if len(dataset) == 0:
        raise InvalidArgument("mean_correlation_number on an empty dataset")
    probs = softmax_np(predict_logits(model, dataset.features), temperature)
    return float(np.mean(np.count_nonzero(probs > threshold, axis=1)))


def mean_entropy(model: Model, dataset: Dataset, temperature: float = 1.0) -> float:
    probs = softmax_np(predict_logits(model, dataset.features), temperature)
    return losses.entropy(probs).item()


@dataclass
class AccumulationProfile:
    class_index: int
    temperature: float
    profile: np.ndarray


def class_accumulation(model: Model, dataset: Dataset, class_index: int,
                       temperature: float = 4.0) -> AccumulationProfile:
    """Per output class, the largest softened probability over all samples of ``class_index``."""
    mask = dataset.labels == class_index
    if not mask.any():
        raise InvalidArgument(f"class {class_index} has no samples")
    probs = softmax_np(predict_logits(model, dataset.features[mask]), temperature)
    return AccumulationProfile(class_index, temperature, probs.max(axis=0))


def evaluate(model: Model, dataset: Dataset) -> dict[str, float]:
    logits = predict_logits(model, dataset.features)
    c = logits.shape[1]
    return {"top1": topk_accuracy(logits, dataset.labels, 1),
            "top5": topk_accuracy(logits, dataset.labels, min(5, c))}
