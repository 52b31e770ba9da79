"""Dense-matrix reverse-mode automatic differentiation.

Every value is a 2-D float64 matrix. Scalars are 1x1. The only broadcast
supported is adding a (1, cols) row vector to a (rows, cols) matrix.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from dckd.errors import CheckFailed, InvalidArgument, InvalidInput, ShapeError, StateError


class Tensor:
    """A matrix node in a computation graph.

    ``op`` names the producing operation and ``parents`` holds the input
    tensors; leaves have ``op == "leaf"``. ``grad`` stays ``None`` until a
    backward pass reaches the tensor.
    """

    __slots__ = ("value", "grad", "requires_grad", "op", "parents", "_backward", "velocity")

    def __init__(self, value, requires_grad: bool = False, op: str = "leaf",
                 parents: tuple = (), backward_fn=None):
        arr = np.array(value, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        elif arr.ndim != 2:
            raise ShapeError(f"tensors are 2-D matrices, got ndim={arr.ndim}")
        self.value = arr
        self.grad = None
        self.requires_grad = requires_grad
        self.op = op
        self.parents = parents
        self._backward = backward_fn
        self.velocity = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    def item(self) -> float:
        if self.value.size != 1:
            raise InvalidArgument(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.value[0, 0])

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        backward(self)

    def detach(self) -> Tensor:
        return detach(self)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self.op!r}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(as_tensor(other), self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(as_tensor(other), self)

    def __mul__(self, other):
        if np.isscalar(other):
            return scale(self, float(other))
        return mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(value: np.ndarray, op: str, parents: tuple, backward_fn) -> Tensor:
    needs = any(p.requires_grad for p in parents)
    return Tensor(value, requires_grad=needs, op=op,
                  parents=parents if needs else (), backward_fn=backward_fn if needs else None)


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def _check_finite(a: Tensor, op: str) -> None:
    if not np.all(np.isfinite(a.value)):
        raise InvalidInput(f"{op}: input contains NaN or Inf")


def _check_temperature(temperature: float) -> None:
    if not temperature > 0:
        raise InvalidArgument(f"temperature must be positive, got {temperature}")


# ---------------------------------------------------------------- elementwise

def add(a, b) -> Tensor:
    """Sum of equal-shape matrices, or a matrix plus a (1, cols) row vector."""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape == b.shape:
        return _node(a.value + b.value, "add", (a, b), lambda g: (g, g))
    if b.shape[0] == 1 and b.shape[1] == a.shape[1]:
        return _node(a.value + b.value, "add_row", (a, b),
                     lambda g: (g, g.sum(axis=0, keepdims=True)))
    raise ShapeError(f"add: cannot combine {a.shape} and {b.shape}")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "sub")
    return _node(a.value - b.value, "sub", (a, b), lambda g: (g, -g))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "mul")
    av, bv = a.value, b.value
    return _node(av * bv, "mul", (a, b), lambda g: (g * bv, g * av))


def scale(a: Tensor, factor: float) -> Tensor:
    return _node(a.value * factor, "scale", (a,), lambda g: (g * factor,))


def relu(a: Tensor) -> Tensor:
    mask = a.value > 0
    return _node(np.where(mask, a.value, 0.0), "relu", (a,), lambda g: (g * mask,))


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.value)
    return _node(out, "exp", (a,), lambda g: (g * out,))


def log_floor(a: Tensor, floor: float = 1e-12) -> Tensor:
    """log(max(a, floor)); no gradient where the floor is active."""
    clipped = np.maximum(a.value, floor)
    active = a.value > floor
    return _node(np.log(clipped), "log_floor", (a,), lambda g: (np.where(active, g / clipped, 0.0),))


def shifted_log(a: Tensor, shift: float = 1e-12) -> Tensor:
    """log(a + shift)."""
    shifted = a.value + shift
    return _node(np.log(shifted), "shifted_log", (a,), lambda g: (g / shifted,))


def normalize_rows(a: Tensor) -> Tensor:
    """Divide each row by its sum."""
    s = a.value.sum(axis=1, keepdims=True)
    out = a.value / s

    def back(g):
        return ((g - (g * out).sum(axis=1, keepdims=True)) / s,)

    return _node(out, "normalize_rows", (a,), back)


# ---------------------------------------------------------------- reductions

def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dimensions differ {a.shape} @ {b.shape}")
    av, bv = a.value, b.value
    return _node(av @ bv, "matmul", (a, b), lambda g: (g @ bv.T, av.T @ g))


def sum_all(a: Tensor) -> Tensor:
    shape = a.shape
    return _node(np.array([[a.value.sum()]]), "sum", (a,),
                 lambda g: (np.full(shape, g[0, 0]),))


def mean_all(a: Tensor) -> Tensor:
    n = a.value.size
    shape = a.shape
    return _node(np.array([[a.value.mean()]]), "mean", (a,),
                 lambda g: (np.full(shape, g[0, 0] / n),))


def add_n(tensors: Sequence[Tensor]) -> Tensor:
    if not tensors:
        raise InvalidArgument("add_n needs at least one tensor")
    for t in tensors[1:]:
        _same_shape(tensors[0], t, "add_n")
    out = tensors[0].value.copy()
    for t in tensors[1:]:
        out = out + t.value
    k = len(tensors)
    return _node(out, "add_n", tuple(tensors), lambda g: (g,) * k)


def mean_set(tensors: Sequence[Tensor]) -> Tensor:
    """Elementwise mean over equal-shape tensors."""
    return scale(add_n(list(tensors)), 1.0 / len(tensors))


def elementwise_max_set(tensors: Sequence[Tensor], stop_gradient: bool = False) -> Tensor:
    """Per-cell maximum over a set of equal-shape tensors.

    The gradient of each output cell goes to exactly one member, the lowest
    index among ties. With ``stop_gradient`` the result is a constant.
    """
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise InvalidArgument("elementwise_max_set needs a non-empty set")
    for t in tensors[1:]:
        _same_shape(tensors[0], t, "elementwise_max_set")
    stack = np.stack([t.value for t in tensors])
    winner = np.argmax(stack, axis=0)
    out = np.take_along_axis(stack, winner[None], axis=0)[0]
    if stop_gradient:
        return Tensor(out)

    def back(g):
        return tuple(np.where(winner == i, g, 0.0) for i in range(len(tensors)))

    return _node(out, "max_set", tuple(tensors), back)


# ---------------------------------------------------------------- softmax family

def softmax_rows(logits: Tensor, temperature: float = 1.0) -> Tensor:
    """Row-wise softmax of ``logits / temperature``."""
    _check_temperature(temperature)
    logits = as_tensor(logits)
    _check_finite(logits, "softmax_rows")
    z = logits.value / temperature
    e = np.exp(z - z.max(axis=1, keepdims=True))
    out = e / e.sum(axis=1, keepdims=True)

    def back(g):
        return ((out * (g - (g * out).sum(axis=1, keepdims=True))) / temperature,)

    return _node(out, "softmax", (logits,), back)


def log_softmax_rows(logits: Tensor, temperature: float = 1.0) -> Tensor:
    """Row-wise log-softmax via the log-sum-exp identity."""
    _check_temperature(temperature)
    logits = as_tensor(logits)
    _check_finite(logits, "log_softmax_rows")
    z = logits.value / temperature
    shifted = z - z.max(axis=1, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    probs = np.exp(out)

    def back(g):
        return ((g - probs * g.sum(axis=1, keepdims=True)) / temperature,)

    return _node(out, "log_softmax", (logits,), back)


def detach(a: Tensor) -> Tensor:
    return Tensor(a.value.copy())


# ---------------------------------------------------------------- backward

def topological_order(root: Tensor) -> list[Tensor]:
    """Nodes reachable from ``root``, parents before children.

    Raises StateError if the graph contains a cycle.
    """
    order: list[Tensor] = []
    state: dict[int, int] = {}  # 1 = on stack, 2 = done
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        key = id(node)
        if expanded:
            state[key] = 2
            order.append(node)
            continue
        mark = state.get(key)
        if mark == 2:
            continue
        if mark == 1:
            raise StateError("computation graph contains a cycle")
        state[key] = 1
        stack.append((node, True))
        for p in node.parents:
            pm = state.get(id(p))
            if pm == 1:
                raise StateError("computation graph contains a cycle")
            if pm is None:
                stack.append((p, False))
    return order


def backward(root: Tensor) -> None:
    """Accumulate d(root)/d(t) into ``t.grad`` for every reachable tensor that requires grad."""
    if root.shape != (1, 1):
        raise InvalidArgument(f"backward needs a scalar (1x1) root, got {root.shape}")
    if not root.requires_grad:
        return
    order = topological_order(root)
    upstream: dict[int, np.ndarray] = {id(root): np.ones((1, 1))}
    for node in reversed(order):
        g = upstream.pop(id(node), None)
        if g is None:
            continue
        if node.requires_grad:
            node.grad = g.copy() if node.grad is None else node.grad + g
        if node._backward is None:
            continue
        for parent, pg in zip(node.parents, node._backward(g)):
            if not parent.requires_grad:
                continue
            key = id(parent)
            upstream[key] = pg if key not in upstream else upstream[key] + pg


def zero_grad(params: Iterable[Tensor]) -> None:
    for p in params:
        p.grad = None


# ---------------------------------------------------------------- checks and updates

def grad_check(loss_fn: Callable[[], Tensor], params: Sequence[Tensor], eps: float = 1e-5) -> float:
    """Worst relative error between analytic and central-difference gradients.

    ``loss_fn`` rebuilds the graph from the current parameter values and
    returns a scalar tensor. Relative error is |a-n| / max(1e-8, |a|+|n|).
    """
    if not (0 < eps <= 1e-2):
        raise InvalidArgument(f"eps must lie in (0, 1e-2], got {eps}")
    first = loss_fn().value.copy()
    second = loss_fn().value.copy()
    if not np.array_equal(first, second):
        raise CheckFailed("loss_fn is not deterministic")

    saved = [p.grad for p in params]
    zero_grad(params)
    backward(loss_fn())
    analytic = [np.zeros(p.shape) if p.grad is None else p.grad.copy() for p in params]
    for p, g in zip(params, saved):
        p.grad = g

    worst = 0.0
    for p, a in zip(params, analytic):
        flat = p.value.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = loss_fn().item()
            flat[i] = orig - eps
            down = loss_fn().item()
            flat[i] = orig
            numeric = (up - down) / (2 * eps)
            ai = a.reshape(-1)[i]
            err = abs(ai - numeric) / max(1e-8, abs(ai) + abs(numeric))
            worst = max(worst, err)
    return worst


def sgd_step(params: Sequence[Tensor], lr: float, momentum: float = 0.0,
             weight_decay: float = 0.0) -> None:
    """SGD with heavy-ball momentum and L2 weight decay, in place.

    v <- momentum * v + (grad + weight_decay * theta); theta <- theta - lr * v.
    The velocity lives on each tensor. Gradients are left for the caller to zero.
    """
    if lr < 0:
        raise InvalidArgument(f"lr must be non-negative, got {lr}")
    for p in params:
        if p.grad is None:
            raise StateError(f"parameter {p!r} has no gradient")
    for p in params:
        d = p.grad + weight_decay * p.value if weight_decay else p.grad
        p.velocity = d.copy() if p.velocity is None else momentum * p.velocity + d
        p.value -= lr * p.velocity
