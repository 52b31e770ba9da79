"""Randomized finite-difference checks of the full multi-student objective."""

from __future__ import annotations

import numpy as np

from dckd import autodiff as ad
from dckd import losses
from dckd.losses import CollectionMethod, KLDirection, LossWeights
from dckd.models import build_mlp, forward_mlp


def random_objective(rng: np.random.Generator):
    """A random total-loss instance: (loss_fn, params, description).

    Always in simultaneous mode: the separate mode detaches the collections,
    so its gradient is not the derivative of the summed objective.
    """
    n = int(rng.integers(2, 4))
    c = int(rng.integers(3, 11))
    b = int(rng.integers(1, 9))
    d = 3
    students = [build_mlp([d, 4, c], int(rng.integers(2**31))) for _ in range(n)]
    for m in students:
        for layer in m.layers:
            layer.bias.value[...] = rng.normal(0, 0.5, layer.bias.shape)
    x = rng.normal(size=(b, d))
    labels = rng.integers(0, c, size=b)
    teacher = rng.normal(0, 2.0, size=(b, c))
    weights = LossWeights(beta_ce=float(rng.uniform(0.1, 1.5)), beta_kd=float(rng.uniform(0.1, 1.5)),
                          beta_col=float(rng.uniform(0.1, 1.5)), t_kd=float(rng.choice([1.0, 2.0, 4.0])),
                          t_kld=float(rng.choice([1.0, 2.0, 3.0])))
    method = list(CollectionMethod)[int(rng.integers(3))]
    direction = list(KLDirection)[int(rng.integers(3))]

    def loss_fn():
        logits = [forward_mlp(m, x) for m in students]
        return losses.total_loss([
            losses.student_loss(labels, teacher, logits, k, weights, method, direction, True)
            for k in range(n)])

    params = [p for m in students for p in m.parameters()]
    desc = dict(students=n, classes=c, batch=b, method=method.value, direction=direction.value,
                t_kd=weights.t_kd, t_kld=weights.t_kld)
    return loss_fn, params, desc


def objective_gradcheck(num_cases: int = 50, seed: int = 0, eps: float = 1e-5) -> tuple[float, list[dict]]:
    """Worst relative gradient error over ``num_cases`` random objectives, plus per-case details."""
    rng = np.random.default_rng(seed)
    details = []
    for _ in range(num_cases):
        loss_fn, params, desc = random_objective(rng)
        desc["max_rel_error"] = ad.grad_check(loss_fn, params, eps)
        details.append(desc)
    return max(d["max_rel_error"] for d in details), details
