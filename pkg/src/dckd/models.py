"""Seeded multilayer perceptrons and their binary checkpoint format.

Checkpoint layout (all integers and floats little-endian):

    b"DCKD1"
    u32 n_sizes, then n_sizes x i64 layer sizes
    i64 seed, i64 epoch
    u32 hash_len, then hash_len bytes of UTF-8 config hash
    u64 n_params, then n_params x f64 (per layer: weight row-major, then bias)
    32-byte SHA-256 digest of every preceding byte
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from dckd import autodiff as ad
from dckd.autodiff import Tensor
from dckd.errors import FormatError, InvalidArgument, ShapeError

MAGIC = b"DCKD1"


@dataclass
class Layer:
    weight: Tensor  # (fan_in, fan_out)
    bias: Tensor  # (1, fan_out)
    activation: str | None  # "relu" or None


@dataclass
class Model:
    layers: list[Layer]
    input_dim: int
    num_classes: int
    seed: int

    @property
    def sizes(self) -> list[int]:
        return [self.input_dim] + [layer.weight.shape[1] for layer in self.layers]

    def parameters(self) -> list[Tensor]:
        out = []
        for layer in self.layers:
            out += [layer.weight, layer.bias]
        return out

    def num_parameters(self) -> int:
        return sum(p.value.size for p in self.parameters())

    def flat_parameters(self) -> np.ndarray:
        return np.concatenate([p.value.reshape(-1) for p in self.parameters()])

    def copy(self) -> Model:
        layers = [Layer(Tensor(l.weight.value, requires_grad=True),
                        Tensor(l.bias.value, requires_grad=True), l.activation)
                  for l in self.layers]
        return Model(layers, self.input_dim, self.num_classes, self.seed)


def build_mlp(layer_sizes, seed: int) -> Model:
    """Affine+ReLU stack with a linear output layer.

    Weights ~ U(-sqrt(6/fan_in), +sqrt(6/fan_in)) from ``np.random.default_rng(seed)``;
    biases start at zero.
    """
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2:
        raise InvalidArgument("an MLP needs at least input and output sizes")
    if any(s < 1 for s in sizes):
        raise InvalidArgument(f"layer sizes must be >= 1, got {sizes}")
    rng = np.random.default_rng(seed)
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        bound = np.sqrt(6.0 / fan_in)
        w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        act = None if i == len(sizes) - 2 else "relu"
        layers.append(Layer(Tensor(w, requires_grad=True),
                            Tensor(np.zeros((1, fan_out)), requires_grad=True), act))
    return Model(layers, sizes[0], sizes[-1], seed)


def forward_mlp(model: Model, batch) -> Tensor:
    """Differentiable logits for a (batch, input_dim) matrix."""
    h = ad.as_tensor(batch)
    if h.shape[1] != model.input_dim:
        raise ShapeError(f"batch has {h.shape[1]} features, model expects {model.input_dim}")
    for layer in model.layers:
        h = ad.add(ad.matmul(h, layer.weight), layer.bias)
        if layer.activation == "relu":
            h = ad.relu(h)
    return h


def predict_logits(model: Model, x: np.ndarray) -> np.ndarray:
    """Graph-free forward pass; same arithmetic as forward_mlp."""
    h = np.asarray(x, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] != model.input_dim:
        raise ShapeError(f"input shape {h.shape} does not match input_dim {model.input_dim}")
    for layer in model.layers:
        h = h @ layer.weight.value + layer.bias.value
        if layer.activation == "relu":
            h = np.where(h > 0, h, 0.0)
    return h


def save_checkpoint(model: Model, path, epoch: int = 0, config_hash: str = "") -> None:
    sizes = model.sizes
    h = config_hash.encode("utf-8")
    flat = model.flat_parameters()
    body = b"".join([
        MAGIC,
        struct.pack("<I", len(sizes)),
        struct.pack(f"<{len(sizes)}q", *sizes),
        struct.pack("<qq", model.seed, epoch),
        struct.pack("<I", len(h)), h,
        struct.pack("<Q", flat.size),
        flat.astype("<f8").tobytes(),
    ])
    Path(path).write_bytes(body + hashlib.sha256(body).digest())


@dataclass
class Checkpoint:
    model: Model
    epoch: int
    config_hash: str


def read_checkpoint(path, expected_sizes=None, expected_config_hash: str | None = None) -> Checkpoint:
    """Parse and verify a checkpoint file; FormatError on any inconsistency."""
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) + 32 or not data.startswith(MAGIC):
        raise FormatError(f"{path}: not a DCKD1 checkpoint")
    body, digest = data[:-32], data[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise FormatError(f"{path}: checksum mismatch (corrupt or truncated)")
    try:
        pos = len(MAGIC)
        (n,) = struct.unpack_from("<I", body, pos)
        pos += 4
        sizes = list(struct.unpack_from(f"<{n}q", body, pos))
        pos += 8 * n
        seed, epoch = struct.unpack_from("<qq", body, pos)
        pos += 16
        (hlen,) = struct.unpack_from("<I", body, pos)
        pos += 4
        config_hash = body[pos:pos + hlen].decode("utf-8")
        pos += hlen
        (count,) = struct.unpack_from("<Q", body, pos)
        pos += 8
        if len(body) - pos != 8 * count:
            raise FormatError(f"{path}: parameter block has {len(body) - pos} bytes, expected {8 * count}")
        flat = np.frombuffer(body, dtype="<f8", count=count, offset=pos).astype(np.float64)
    except struct.error as exc:
        raise FormatError(f"{path}: malformed header ({exc})") from exc
    if expected_sizes is not None and list(expected_sizes) != sizes:
        raise FormatError(f"{path}: checkpoint topology {sizes} does not match expected {list(expected_sizes)}")
    if expected_config_hash is not None and config_hash != expected_config_hash:
        raise FormatError(f"{path}: config hash {config_hash!r} does not match {expected_config_hash!r}")
    try:
        model = build_mlp(sizes, seed)
    except InvalidArgument as exc:
        raise FormatError(f"{path}: invalid topology {sizes} ({exc})") from exc
    if model.num_parameters() != count:
        raise FormatError(f"{path}: topology {sizes} needs {model.num_parameters()} parameters, file has {count}")
    offset = 0
    for p in model.parameters():
        p.value[...] = flat[offset:offset + p.value.size].reshape(p.shape)
        offset += p.value.size
    return Checkpoint(model, epoch, config_hash)


def load_checkpoint(path, expected_sizes=None, expected_config_hash: str | None = None) -> Model:
    return read_checkpoint(path, expected_sizes, expected_config_hash).model
