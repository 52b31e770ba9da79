"""Training protocols: teacher pretraining, simultaneous multi-student distillation,
second-generation distillation from a student ensemble, and the warm-restart schedule."""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from dckd import autodiff as ad
from dckd import losses
from dckd.autodiff import Tensor
from dckd.data import Dataset, batches
from dckd.errors import InvalidArgument, ShapeError
from dckd.losses import CollectionMethod, KLDirection, LossWeights
from dckd.metrics import evaluate, mean_correlation_number, softmax_np
from dckd.models import Model, build_mlp, forward_mlp, predict_logits

CORR_TEMPERATURE = 4.0
CORR_THRESHOLD = 0.1


def cosine_warm_restart_lr(epoch: int, lr0: float, lr_min: float = 0.0, t0: int = 30, tmult: int = 2) -> float:
    """Cosine annealing with warm restarts; cycles last t0, t0*tmult, t0*tmult^2, ... epochs."""
    if epoch < 0:
        raise InvalidArgument(f"epoch must be >= 0, got {epoch}")
    if t0 < 1 or tmult < 1:
        raise InvalidArgument("t0 and tmult must be >= 1")
    t_cur, t_i = epoch, t0
    while t_cur >= t_i:
        t_cur -= t_i
        t_i *= tmult
    if t_cur == 0:
        return lr0
    return lr_min + 0.5 * (lr0 - lr_min) * (1 + math.cos(math.pi * t_cur / t_i))


def restart_epochs(t0: int = 30, tmult: int = 2, count: int = 5) -> list[int]:
    """Cumulative epochs at which each of the first ``count`` cycles ends."""
    out, total, length = [], 0, t0
    for _ in range(count):
        total += length
        out.append(total)
        length *= tmult
    return out


@dataclass
class DistillConfig:
    weights: LossWeights = field(default_factory=LossWeights)
    method: CollectionMethod = CollectionMethod.LOGIT_MAX
    direction: KLDirection = KLDirection.REVERSE
    simultaneous: bool = True
    num_students: int = 3
    epochs: int = 90
    batch_size: int = 64
    lr0: float = 0.05
    lr_min: float = 0.0
    momentum: float = 0.9
    weight_decay: float = 5e-4
    t0: int = 30
    tmult: int = 2
    seed: int = 7

    def __post_init__(self):
        self.method = CollectionMethod(self.method)
        self.direction = KLDirection(self.direction)
        if self.num_students < 1:
            raise InvalidArgument("num_students must be >= 1")
        if self.t0 < 1 or self.tmult < 1:
            raise InvalidArgument("t0 and tmult must be >= 1")
        if self.epochs < 0 or self.batch_size < 1:
            raise InvalidArgument("epochs must be >= 0 and batch_size >= 1")

    def lr(self, epoch: int) -> float:
        return cosine_warm_restart_lr(epoch, self.lr0, self.lr_min, self.t0, self.tmult)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["method"] = self.method.value
        d["direction"] = self.direction.value
        return d


@dataclass
class RunRecord:
    rows: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def columns(self) -> list[str]:
        return list(self.rows[0]) if self.rows else []

    def final(self) -> dict:
        return self.rows[-1]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(self.columns)
            for row in self.rows:
                w.writerow([repr(v) if isinstance(v, float) else v for v in row.values()])

    def to_json(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.summary, f, indent=2, sort_keys=True)
            f.write("\n")


TargetFn = Callable[[np.ndarray], np.ndarray]


def train_students(student_sizes: Sequence[int], student_seeds: Sequence[int], weights: LossWeights,
                   config: DistillConfig, train: Dataset, val: Dataset,
                   target_fn: TargetFn | None = None) -> tuple[list[Model], RunRecord]:
    """Train len(student_seeds) students jointly on the summed per-student loss.

    ``target_fn`` maps a feature block to frozen target logits for the KD term.
    Students come back in seed order; nothing is sorted here.
    """
    if len(train) == 0 or len(val) == 0:
        raise InvalidArgument("train and validation splits must be non-empty")
    if train.dim != student_sizes[0]:
        raise ShapeError(f"data has {train.dim} features, students expect {student_sizes[0]}")
    students = [build_mlp(student_sizes, s) for s in student_seeds]
    params = [p for m in students for p in m.parameters()]
    n = len(students)
    record = RunRecord()
    for epoch in range(config.epochs):
        lr = config.lr(epoch)
        sums: dict[str, float] = defaultdict(float)
        seen = 0
        for xb, yb in batches(train, config.batch_size, config.seed, epoch):
            logits = [forward_mlp(m, xb) for m in students]
            target = target_fn(xb) if target_fn is not None and weights.beta_kd > 0 else None
            terms = [losses.student_loss_terms(yb, target, logits, k, weights, config.method,
                                               config.direction, config.simultaneous)
                     for k in range(n)]
            total = losses.total_loss([t["total"] for t in terms])
            ad.zero_grad(params)
            ad.backward(total)
            ad.sgd_step(params, lr, config.momentum, config.weight_decay)
            for k, t in enumerate(terms):
                for name, value in t.items():
                    sums[f"s{k}_{name}"] += value.item() * len(yb)
            seen += len(yb)
        row = {"epoch": epoch, "lr": lr}
        row.update({key: value / seen for key, value in sums.items()})
        corr = []
        for k, m in enumerate(students):
            ev = evaluate(m, val)
            row[f"s{k}_top1"] = ev["top1"]
            row[f"s{k}_top5"] = ev["top5"]
            corr.append(mean_correlation_number(m, val, CORR_TEMPERATURE, CORR_THRESHOLD))
        row["mean_corr"] = float(np.mean(corr))
        record.rows.append(row)
    record.summary = _summary(students, val, config, weights)
    return students, record


def _summary(students: list[Model], val: Dataset, config: DistillConfig, weights: LossWeights) -> dict:
    evals = [evaluate(m, val) for m in students]
    corr = [mean_correlation_number(m, val, CORR_TEMPERATURE, CORR_THRESHOLD) for m in students]
    order = rank_students(evals)
    return {
        "config": config.to_dict() | {"weights": asdict(weights)},
        "students": [{"seed": m.seed, **ev, "mean_corr": c} for m, ev, c in zip(students, evals, corr)],
        "ranking": order,
        "net_top1": [evals[i]["top1"] for i in order],
        "mean_top1": float(np.mean([e["top1"] for e in evals])),
        "mean_corr": float(np.mean(corr)),
    }


def rank_students(evals: list[dict]) -> list[int]:
    """Indices by descending top-1; equal accuracies keep seed order."""
    return sorted(range(len(evals)), key=lambda i: -evals[i]["top1"])


def _sorted(students: list[Model], record: RunRecord) -> list[Model]:
    return [students[i] for i in record.summary["ranking"]]


def train_teacher(train: Dataset, val: Dataset, sizes: Sequence[int],
                  config: DistillConfig) -> tuple[Model, RunRecord]:
    """Plain cross-entropy training; returns the best-validation-top-1 epoch's model."""
    if len(train) == 0 or len(val) == 0:
        raise InvalidArgument("train and validation splits must be non-empty")
    model = build_mlp(sizes, config.seed)
    params = model.parameters()
    weights = LossWeights(beta_ce=1.0, beta_kd=0.0, beta_col=0.0)
    record = RunRecord()
    best, best_acc, best_epoch = model.copy(), -1.0, -1
    for epoch in range(config.epochs):
        lr = config.lr(epoch)
        loss_sum, seen = 0.0, 0
        for xb, yb in batches(train, config.batch_size, config.seed, epoch):
            loss = losses.student_loss(yb, None, [forward_mlp(model, xb)], 0, weights)
            ad.zero_grad(params)
            ad.backward(loss)
            ad.sgd_step(params, lr, config.momentum, config.weight_decay)
            loss_sum += loss.item() * len(yb)
            seen += len(yb)
        ev = evaluate(model, val)
        record.rows.append({"epoch": epoch, "lr": lr, "s0_ce": loss_sum / seen, "s0_total": loss_sum / seen,
                            "s0_top1": ev["top1"], "s0_top5": ev["top5"],
                            "mean_corr": mean_correlation_number(model, val, CORR_TEMPERATURE, CORR_THRESHOLD)})
        if ev["top1"] > best_acc:
            best, best_acc, best_epoch = model.copy(), ev["top1"], epoch
    if config.epochs == 0:
        best_acc = evaluate(model, val)["top1"]
    record.summary = {"config": config.to_dict(), "best_epoch": best_epoch, "best_top1": best_acc,
                      **evaluate(best, val),
                      "mean_corr": mean_correlation_number(best, val, CORR_TEMPERATURE, CORR_THRESHOLD)}
    return best, record


def teacher_target(teacher: Model) -> TargetFn:
    return lambda x: predict_logits(teacher, x)


def _check_teacher(teacher_in: int, teacher_out: int, student_sizes: Sequence[int], train: Dataset) -> None:
    if teacher_in != student_sizes[0] or teacher_out != student_sizes[-1]:
        raise ShapeError(f"teacher maps {teacher_in}->{teacher_out}, students map "
                         f"{student_sizes[0]}->{student_sizes[-1]}")
    if teacher_in != train.dim:
        raise ShapeError(f"teacher expects {teacher_in} features, data has {train.dim}")


def student_seeds(config: DistillConfig, n: int | None = None) -> list[int]:
    return [config.seed + i for i in range(config.num_students if n is None else n)]


def train_dckd(teacher: Model, student_sizes: Sequence[int], config: DistillConfig,
               train: Dataset, val: Dataset) -> tuple[list[Model], RunRecord]:
    """Simultaneous training of N students against the teacher and their peer collections.

    Returns the students sorted by final validation top-1 (Net1 first).
    """
    if config.num_students < 2:
        raise InvalidArgument("DCKD needs at least two students")
    _check_teacher(teacher.input_dim, teacher.num_classes, student_sizes, train)
    students, record = train_students(student_sizes, student_seeds(config), config.weights, config,
                                      train, val, teacher_target(teacher))
    return _sorted(students, record), record


def ensemble_prob(students: Sequence[Model], batch) -> Tensor:
    """Mean of the students' softmax outputs at T=1, as a constant tensor."""
    if not students:
        raise InvalidArgument("ensemble_prob needs at least one student")
    x = batch.value if isinstance(batch, Tensor) else np.asarray(batch, dtype=np.float64)
    probs = [softmax_np(predict_logits(m, x)) for m in students]
    return Tensor(np.mean(probs, axis=0))


def _ensemble_target(students: Sequence[Model]) -> TargetFn:
    frozen = list(students)
    return lambda x: np.log(ensemble_prob(frozen, x).value + losses.LOG_FLOOR)


def _check_ensemble(dckd_students: Sequence[Model], student_sizes: Sequence[int], train: Dataset) -> None:
    if not dckd_students:
        raise InvalidArgument("need at least one frozen DCKD student")
    for m in dckd_students:
        _check_teacher(m.input_dim, m.num_classes, student_sizes, train)


def train_edckd(dckd_students: Sequence[Model], student_sizes: Sequence[int], config: DistillConfig,
                train: Dataset, val: Dataset) -> tuple[list[Model], RunRecord]:
    """DCKD with the teacher replaced by the ensemble of frozen DCKD students."""
    if config.num_students < 2:
        raise InvalidArgument("eDCKD needs at least two students")
    _check_ensemble(dckd_students, student_sizes, train)
    students, record = train_students(student_sizes, student_seeds(config), config.weights, config,
                                      train, val, _ensemble_target(dckd_students))
    return _sorted(students, record), record


def train_ensembled_student(dckd_students: Sequence[Model], student_sizes: Sequence[int],
                            config: DistillConfig, train: Dataset, val: Dataset) -> tuple[Model, RunRecord]:
    """One student distilled from the frozen DCKD ensemble, without a collection term."""
    _check_ensemble(dckd_students, student_sizes, train)
    weights = replace(config.weights, beta_col=0.0)
    single = replace(config, num_students=1, weights=weights)
    students, record = train_students(student_sizes, student_seeds(single), weights, single,
                                      train, val, _ensemble_target(dckd_students))
    return students[0], record
