"""Distillation losses: soft cross-entropy, entropy, KL divergence, KD loss,
peer collections and the per-student and total objectives.

Every loss is reduced with the mean over the batch. KL divergence is fixed as
``kld(u, v) = sum_c u_c * log(u_c / v_c)``; the reverse collection loss puts
the student's softened distribution in the first slot.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from dckd import autodiff as ad
from dckd.autodiff import Tensor
from dckd.errors import InvalidArgument, InvalidInput, ShapeError

LOG_FLOOR = 1e-12


class CollectionMethod(str, enum.Enum):
    LOGIT_MAX = "logit_max"
    PROB_MAX = "prob_max"
    AVERAGE = "average"


class KLDirection(str, enum.Enum):
    FORWARD = "forward"
    REVERSE = "reverse"
    BIDIRECTIONAL = "bidirectional"


@dataclass(frozen=True)
class LossWeights:
    beta_ce: float = 1.0
    beta_kd: float = 1.0
    beta_col: float = 0.5
    t_kd: float = 4.0
    t_kld: float = 2.0

    def __post_init__(self):
        for name in ("beta_ce", "beta_kd", "beta_col"):
            if getattr(self, name) < 0:
                raise InvalidArgument(f"{name} must be >= 0")
        for name in ("t_kd", "t_kld"):
            if not getattr(self, name) > 0:
                raise InvalidArgument(f"{name} must be > 0")

    @classmethod
    def large_scale(cls) -> LossWeights:
        """Weights used for the large-dataset setting (smaller collection weight)."""
        return cls(beta_col=0.2)


def _check_distribution(p: np.ndarray, what: str, tol: float = 1e-4) -> None:
    if np.any(p < 0):
        raise InvalidInput(f"{what} has negative entries")
    if not np.allclose(p.sum(axis=1), 1.0, atol=tol, rtol=0):
        raise InvalidInput(f"{what} rows do not sum to 1 within {tol}")


def one_hot(labels, num_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.size, num_classes))
    out[np.arange(labels.size), labels] = 1.0
    return out


def _batch_mean_of_row_sums(t: Tensor) -> Tensor:
    return ad.scale(ad.sum_all(t), 1.0 / t.shape[0])


def cross_entropy_soft(target, pred_logits: Tensor, temperature: float = 1.0) -> Tensor:
    """Mean over rows of ``-sum_c target_c * log_softmax(pred / T)_c``.

    ``target`` may be an array (treated as data) or a live tensor, in which
    case gradient reaches it too.
    """
    target = ad.as_tensor(target)
    pred_logits = ad.as_tensor(pred_logits)
    if target.shape != pred_logits.shape:
        raise ShapeError(f"target {target.shape} vs logits {pred_logits.shape}")
    _check_distribution(target.value, "target")
    logp = ad.log_softmax_rows(pred_logits, temperature)
    return ad.scale(_batch_mean_of_row_sums(ad.mul(target, logp)), -1.0)


def entropy(p) -> Tensor:
    """Mean row entropy with 0 log 0 = 0."""
    p = ad.as_tensor(p)
    if np.any(p.value < 0):
        raise InvalidInput("entropy: negative probabilities")
    return ad.scale(_batch_mean_of_row_sums(ad.mul(p, ad.log_floor(p, LOG_FLOOR))), -1.0)


def _cross_entropy_probs(u: Tensor, v: Tensor) -> Tensor:
    return ad.scale(_batch_mean_of_row_sums(ad.mul(u, ad.log_floor(v, LOG_FLOOR))), -1.0)


def kld(u, v) -> Tensor:
    """KL(u || v) as cross-entropy minus entropy, with a 1e-12 floor inside each log."""
    u, v = ad.as_tensor(u), ad.as_tensor(v)
    if u.shape != v.shape:
        raise ShapeError(f"kld: {u.shape} vs {v.shape}")
    return ad.sub(_cross_entropy_probs(u, v), entropy(u))


def kld_logits(u_logits: Tensor, v_logits: Tensor, temperature: float = 1.0) -> Tensor:
    """KL(softmax(u/T) || softmax(v/T)) computed from log-softmax, never from log(p)."""
    u_logits, v_logits = ad.as_tensor(u_logits), ad.as_tensor(v_logits)
    if u_logits.shape != v_logits.shape:
        raise ShapeError(f"kld_logits: {u_logits.shape} vs {v_logits.shape}")
    u = ad.softmax_rows(u_logits, temperature)
    diff = ad.sub(ad.log_softmax_rows(u_logits, temperature),
                  ad.log_softmax_rows(v_logits, temperature))
    return _batch_mean_of_row_sums(ad.mul(u, diff))


def kd_loss(teacher_logits, student_logits: Tensor, t_kd: float) -> Tensor:
    """Cross-entropy from the softened teacher to the softened student. No T^2 factor."""
    teacher = ad.detach(ad.as_tensor(teacher_logits))
    target = ad.softmax_rows(teacher, t_kd)
    return cross_entropy_soft(target, student_logits, t_kd)


def pseudo_logits(p: Tensor) -> Tensor:
    """Map a probability matrix back to logit space as log(p + 1e-12)."""
    return ad.shifted_log(p, LOG_FLOOR)


def collect(method: CollectionMethod, logit_set: Sequence[Tensor],
            exclude_index: int | None = None, stop_gradient: bool = False) -> Tensor:
    """Combine peer outputs into one collective target.

    LOGIT_MAX returns logits; PROB_MAX and AVERAGE return probabilities.
    ``exclude_index`` drops that student from the set.
    """
    method = CollectionMethod(method)
    members = [ad.as_tensor(y) for i, y in enumerate(logit_set) if i != exclude_index]
    if not members:
        raise InvalidArgument("collection set is empty after exclusion")
    if method is CollectionMethod.LOGIT_MAX:
        return ad.elementwise_max_set(members, stop_gradient=stop_gradient)
    probs = [ad.softmax_rows(y, 1.0) for y in members]
    if method is CollectionMethod.PROB_MAX:
        out = ad.normalize_rows(ad.elementwise_max_set(probs))
    else:
        out = ad.mean_set(probs)
    return ad.detach(out) if stop_gradient else out


def collection_logits(collection: Tensor, method: CollectionMethod) -> Tensor:
    if CollectionMethod(method) is CollectionMethod.LOGIT_MAX:
        return collection
    return pseudo_logits(collection)


def collection_loss(student_logits: Tensor, collection: Tensor, method: CollectionMethod,
                    t_kld: float, direction: KLDirection = KLDirection.REVERSE,
                    simultaneous: bool = True) -> Tensor:
    """Divergence between a student and its peer collection, both softened by ``t_kld``."""
    if not simultaneous:
        collection = ad.detach(collection)
    col = collection_logits(collection, method)
    direction = KLDirection(direction)
    if direction is KLDirection.REVERSE:
        return kld_logits(student_logits, col, t_kld)
    if direction is KLDirection.FORWARD:
        return kld_logits(col, student_logits, t_kld)
    both = ad.add(kld_logits(student_logits, col, t_kld), kld_logits(col, student_logits, t_kld))
    return ad.scale(both, 0.5)


def student_loss_terms(hard_labels, teacher_logits, all_student_logits: Sequence[Tensor], k: int,
                       weights: LossWeights, method: CollectionMethod = CollectionMethod.LOGIT_MAX,
                       direction: KLDirection = KLDirection.REVERSE,
                       simultaneous: bool = True) -> dict[str, Tensor]:
    """Per-student loss and its components ``ce``, ``kd``, ``col``, ``total``.

    A component is only built when it has a non-zero weight. ``teacher_logits``
    may be None when ``beta_kd`` is zero.
    """
    n = len(all_student_logits)
    if not 0 <= k < n:
        raise InvalidArgument(f"student index {k} out of range for {n} students")
    if weights.beta_col > 0 and n < 2:
        raise InvalidArgument("collection loss needs at least two students")
    y_k = all_student_logits[k]
    terms: dict[str, Tensor] = {}
    parts = []
    if weights.beta_ce > 0:
        terms["ce"] = cross_entropy_soft(one_hot(hard_labels, y_k.shape[1]), y_k, 1.0)
        parts.append(ad.scale(terms["ce"], weights.beta_ce))
    if weights.beta_kd > 0:
        if teacher_logits is None:
            raise InvalidArgument("beta_kd > 0 requires teacher logits")
        terms["kd"] = kd_loss(teacher_logits, y_k, weights.t_kd)
        parts.append(ad.scale(terms["kd"], weights.beta_kd))
    if weights.beta_col > 0:
        col = collect(method, all_student_logits, exclude_index=k)
        terms["col"] = collection_loss(y_k, col, method, weights.t_kld, direction, simultaneous)
        parts.append(ad.scale(terms["col"], weights.beta_col))
    if not parts:
        raise InvalidArgument("all loss weights are zero")
    terms["total"] = ad.add_n(parts)
    return terms


def student_loss(hard_labels, teacher_logits, all_student_logits: Sequence[Tensor], k: int,
                 weights: LossWeights, method: CollectionMethod = CollectionMethod.LOGIT_MAX,
                 direction: KLDirection = KLDirection.REVERSE, simultaneous: bool = True) -> Tensor:
    return student_loss_terms(hard_labels, teacher_logits, all_student_logits, k, weights,
                              method, direction, simultaneous)["total"]


def total_loss(per_student_losses: Sequence[Tensor]) -> Tensor:
    """Sum of the students' losses; one backward pass from it trains them all."""
    if not per_student_losses:
        raise InvalidArgument("total_loss needs at least one student loss")
    return ad.add_n(list(per_student_losses))
