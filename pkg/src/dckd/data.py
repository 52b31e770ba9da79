"""Datasets: synthetic Gaussian blobs, IDX files, splits and seeded batching."""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from dckd.errors import FormatError, InvalidArgument

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

_IDX_DTYPES = {
    0x08: np.dtype(">u1"),
    0x09: np.dtype(">i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}
_IDX_CODES = {np.dtype(v).newbyteorder("="): k for k, v in _IDX_DTYPES.items()}

CENTER_RADIUS = 3.0


@dataclass
class Dataset:
    features: np.ndarray  # (n, d) float64
    labels: np.ndarray  # (n,) int64
    num_classes: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise InvalidArgument("features must be a 2-D matrix")
        if len(self.labels) != len(self.features):
            raise InvalidArgument(f"{len(self.features)} samples but {len(self.labels)} labels")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise InvalidArgument(f"labels must lie in [0, {self.num_classes})")
        if not np.all(np.isfinite(self.features)):
            raise InvalidArgument("features must be finite")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, index) -> Dataset:
        return Dataset(self.features[index], self.labels[index], self.num_classes)


def overlap_pairs(num_classes: int) -> list[tuple[int, int]]:
    """Class pairs whose centers gen_blobs places next to each other."""
    return [(a, a + 1) for a in (0, 2) if a + 1 < num_classes]


def blob_centers(num_classes: int, dim: int, spread: float, seed: int) -> np.ndarray:
    """Class centers used by gen_blobs for the same arguments."""
    return _centers(np.random.default_rng(seed), num_classes, dim, spread)


def _centers(rng: np.random.Generator, num_classes: int, dim: int, spread: float) -> np.ndarray:
    centers = rng.standard_normal((num_classes, dim))
    centers *= CENTER_RADIUS / np.linalg.norm(centers, axis=1, keepdims=True)
    for a, b in overlap_pairs(num_classes):
        direction = rng.standard_normal(dim)
        centers[b] = centers[a] + 0.5 * spread * direction / np.linalg.norm(direction)
    return centers


def gen_blobs(num_classes: int, per_class: int, dim: int, spread: float, seed: int) -> Dataset:
    """Isotropic Gaussian classes around random centers on a radius-3 sphere.

    For each pair in ``overlap_pairs`` the second center sits at distance
    ``0.5 * spread`` from the first, so the two classes overlap.
    """
    if num_classes < 1 or per_class < 1 or dim < 1:
        raise InvalidArgument("num_classes, per_class and dim must all be >= 1")
    if not spread > 0:
        raise InvalidArgument(f"spread must be positive, got {spread}")
    rng = np.random.default_rng(seed)
    centers = _centers(rng, num_classes, dim, spread)
    noise = rng.standard_normal((num_classes, per_class, dim))
    features = (centers[:, None, :] + spread * noise).reshape(-1, dim)
    labels = np.repeat(np.arange(num_classes), per_class)
    return Dataset(features, labels, num_classes)


def blobs_preset(seed: int = 7) -> Dataset:
    return gen_blobs(num_classes=10, per_class=200, dim=2, spread=0.4, seed=seed)


def train_val_split(dataset: Dataset, val_fraction: float = 0.2, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Seeded split that keeps each class's share: the first ``val_fraction`` of a
    class's shuffled samples go to validation."""
    if not 0 < val_fraction < 1:
        raise InvalidArgument("val_fraction must lie in (0, 1)")
    rng = np.random.default_rng([seed, 0x5E17])
    train_idx, val_idx = [], []
    for c in range(dataset.num_classes):
        idx = np.flatnonzero(dataset.labels == c)
        idx = idx[rng.permutation(len(idx))]
        n_val = int(round(val_fraction * len(idx)))
        val_idx.append(idx[:n_val])
        train_idx.append(idx[n_val:])
    return dataset.subset(np.sort(np.concatenate(train_idx))), dataset.subset(np.sort(np.concatenate(val_idx)))


def batches(dataset: Dataset, batch_size: int, epoch_seed: int, epoch: int = 0):
    """Shuffled (features, labels) blocks; the order depends only on (epoch_seed, epoch)."""
    if batch_size < 1:
        raise InvalidArgument("batch_size must be >= 1")
    n = len(dataset)
    if n == 0:
        raise InvalidArgument("cannot batch an empty dataset")
    perm = np.random.default_rng([epoch_seed, epoch]).permutation(n)
    return [(dataset.features[perm[i:i + batch_size]], dataset.labels[perm[i:i + batch_size]])
            for i in range(0, n, batch_size)]


# ---------------------------------------------------------------- IDX

def read_idx(path) -> np.ndarray:
    """Parse any IDX file into an array with its stored shape."""
    data = Path(path).read_bytes()
    if len(data) < 4 or data[0] != 0 or data[1] != 0:
        raise FormatError(f"{path}: not an IDX file")
    code, ndim = data[2], data[3]
    if code not in _IDX_DTYPES:
        raise FormatError(f"{path}: unknown IDX type code 0x{code:02x}")
    header = 4 + 4 * ndim
    if len(data) < header:
        raise FormatError(f"{path}: truncated IDX header")
    dims = struct.unpack(f">{ndim}I", data[4:header])
    dtype = _IDX_DTYPES[code]
    count = int(np.prod(dims)) if dims else 1
    if len(data) - header != count * dtype.itemsize:
        raise FormatError(f"{path}: expected {count * dtype.itemsize} payload bytes, found {len(data) - header}")
    return np.frombuffer(data, dtype=dtype, offset=header).reshape(dims).astype(dtype.newbyteorder("="))


def write_idx(path, array) -> None:
    array = np.asarray(array)
    code = _IDX_CODES.get(array.dtype)
    if code is None:
        raise FormatError(f"dtype {array.dtype} has no IDX encoding")
    header = struct.pack(">BBBB", 0, 0, code, array.ndim) + struct.pack(f">{array.ndim}I", *array.shape)
    Path(path).write_bytes(header + array.astype(_IDX_DTYPES[code]).tobytes())


def _magic(path) -> int:
    with open(path, "rb") as f:
        head = f.read(4)
    if len(head) < 4:
        raise FormatError(f"{path}: file too short for an IDX magic number")
    return struct.unpack(">I", head)[0]


def load_idx(images_path, labels_path, limit: int | None = None, num_classes: int | None = None) -> Dataset:
    """Load IDX images and labels, flatten images, scale to [0, 1] and standardize.

    Mean and standard deviation are single scalars over the loaded subset.
    ``limit`` keeps the first ``limit`` samples.
    """
    magic = _magic(images_path)
    if magic != IDX_IMAGES_MAGIC:
        raise FormatError(f"{images_path}: image magic 0x{magic:08x}, expected 0x{IDX_IMAGES_MAGIC:08x}")
    magic = _magic(labels_path)
    if magic != IDX_LABELS_MAGIC:
        raise FormatError(f"{labels_path}: label magic 0x{magic:08x}, expected 0x{IDX_LABELS_MAGIC:08x}")
    images = read_idx(images_path)
    labels = read_idx(labels_path)
    if len(images) != len(labels):
        raise FormatError(f"{len(images)} images but {len(labels)} labels")
    if limit is not None:
        if limit < 0:
            raise InvalidArgument("limit must be >= 0")
        images, labels = images[:limit], labels[:limit]
    x = images.reshape(len(images), int(np.prod(images.shape[1:]))).astype(np.float64) / 255.0
    if x.size:
        std = x.std()
        x = (x - x.mean()) / (std if std > 0 else 1.0)
    if num_classes is None:
        num_classes = int(labels.max()) + 1 if labels.size else 10
    return Dataset(x, labels.astype(np.int64), num_classes)


# ---------------------------------------------------------------- CSV

def to_csv(dataset: Dataset, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow([f"f{i}" for i in range(dataset.dim)] + ["label"])
        for row, label in zip(dataset.features, dataset.labels):
            w.writerow([repr(float(v)) for v in row] + [int(label)])


def from_csv(path, num_classes: int | None = None) -> Dataset:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    header, body = rows[0], rows[1:]
    if not header or header[-1] != "label":
        raise FormatError(f"{path}: last column must be 'label'")
    feats = np.array([[float(v) for v in r[:-1]] for r in body]).reshape(len(body), len(header) - 1)
    labels = np.array([int(r[-1]) for r in body], dtype=np.int64)
    if num_classes is None:
        num_classes = int(labels.max()) + 1 if labels.size else 1
    return Dataset(feats, labels, num_classes)
