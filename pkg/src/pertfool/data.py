"""Datasets: synthetic generators, IDX ingestion, and npz persistence.

Synthetic data is deterministic given the seed.  Blob classes sit at mutually
orthogonal offsets from the box center so every pair of classes is equally
separated; ring classes are concentric noisy circles, a nonlinear benchmark.
The IDX reader follows the standard big-endian layout (magic 0x00000803 for
images, 0x00000801 for labels) and scales pixel bytes to [0, 1].
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Dataset",
    "IdxFormatError",
    "gen_blobs",
    "gen_rings",
    "gen_dataset",
    "load_idx_images",
    "load_idx_labels",
    "load_mnist",
    "save_dataset",
    "load_dataset",
]

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    """IDX file violates the format; message carries the byte offset."""


@dataclass(eq=False)
class Dataset:
    """Sample matrix (n, dim) with integer labels and a name."""

    samples: np.ndarray
    labels: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.samples.ndim != 2:
            raise ValueError("samples must be a (n, dim) matrix")
        if self.labels.shape != (self.samples.shape[0],):
            raise ValueError(
                f"{self.labels.shape[0]} labels for {self.samples.shape[0]} samples")
        if len(self.labels) and self.labels.min() < 0:
            raise ValueError("labels must be non-negative")

    def __len__(self):
        return self.samples.shape[0]

    @property
    def dim(self):
        return self.samples.shape[1]

    @property
    def n_classes(self):
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    def split(self, n_train):
        """Head/tail split into (train, test)."""
        if not 0 < n_train < len(self):
            raise ValueError(f"cannot split {len(self)} samples at {n_train}")
        return (
            Dataset(self.samples[:n_train], self.labels[:n_train], self.name),
            Dataset(self.samples[n_train:], self.labels[n_train:], self.name),
        )


def gen_blobs(n_samples, n_classes, dim, seed, separation=0.6, noise=0.08,
              center=0.5):
    """Gaussian clusters at orthogonal offsets of l2 length ``separation/2``.

    Requires ``dim >= n_classes`` so the offsets can be orthogonal; pairwise
    center distance is then ``separation / sqrt(2)`` in every direction and
    the within-class spread is ``noise`` per coordinate.  Values land roughly
    in [0, 1] for the defaults.
    """
    if dim < n_classes:
        raise ValueError(f"need dim >= n_classes for orthogonal centers, "
                         f"got dim={dim}, n_classes={n_classes}")
    if n_samples < n_classes:
        raise ValueError("need at least one sample per class")
    rng = np.random.default_rng(seed)
    basis, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    centers = center + (separation / 2.0) * basis[:, :n_classes].T
    labels = np.arange(n_samples) % n_classes
    samples = centers[labels] + noise * rng.normal(size=(n_samples, dim))
    order = rng.permutation(n_samples)
    return Dataset(samples[order], labels[order], name="blobs")


def gen_rings(n_samples, n_classes=2, seed=0, spacing=0.15, noise=0.02,
              center=0.5):
    """Concentric noisy circles in the plane, one radius per class."""
    if n_classes < 1:
        raise ValueError("need at least one ring")
    if n_samples < n_classes:
        raise ValueError("need at least one sample per class")
    rng = np.random.default_rng(seed)
    labels = np.arange(n_samples) % n_classes
    radii = spacing * (labels + 1)
    theta = rng.uniform(0.0, 2.0 * np.pi, n_samples)
    pts = np.column_stack((radii * np.cos(theta), radii * np.sin(theta)))
    samples = center + pts + noise * rng.normal(size=(n_samples, 2))
    order = rng.permutation(n_samples)
    return Dataset(samples[order], labels[order], name="rings")


def gen_dataset(kind, params, seed):
    """Build a dataset by kind name with keyword parameters."""
    params = dict(params)
    if kind == "blobs":
        return gen_blobs(seed=seed, **params)
    if kind == "rings":
        return gen_rings(seed=seed, **params)
    if kind == "mnist-idx":
        return load_mnist(**params)
    raise ValueError(f"unknown dataset kind {kind!r}; "
                     "choose from blobs, rings, mnist-idx")


def _read_be32(blob, offset, what, path):
    if offset + 4 > len(blob):
        raise IdxFormatError(
            f"{path}: truncated while reading {what} at offset {offset}")
    return struct.unpack_from(">i", blob, offset)[0]


def load_idx_images(path):
    """Read an IDX image file into a (count, rows*cols) float matrix in [0, 1]."""
    with open(path, "rb") as fh:
        blob = fh.read()
    magic = _read_be32(blob, 0, "magic", path)
    if magic != IDX_IMAGE_MAGIC:
        raise IdxFormatError(
            f"{path}: bad image magic 0x{magic:08x} at offset 0, "
            f"expected 0x{IDX_IMAGE_MAGIC:08x}")
    count = _read_be32(blob, 4, "image count", path)
    rows = _read_be32(blob, 8, "row count", path)
    cols = _read_be32(blob, 12, "column count", path)
    if count < 0 or rows <= 0 or cols <= 0:
        raise IdxFormatError(f"{path}: non-positive dimensions in header")
    need = 16 + count * rows * cols
    if len(blob) < need:
        raise IdxFormatError(
            f"{path}: truncated pixel data at offset {len(blob)}, "
            f"expected {need} bytes")
    pixels = np.frombuffer(blob, dtype=np.uint8, count=count * rows * cols,
                           offset=16)
    return pixels.reshape(count, rows * cols).astype(float) / 255.0


def load_idx_labels(path):
    """Read an IDX label file into an int vector."""
    with open(path, "rb") as fh:
        blob = fh.read()
    magic = _read_be32(blob, 0, "magic", path)
    if magic != IDX_LABEL_MAGIC:
        raise IdxFormatError(
            f"{path}: bad label magic 0x{magic:08x} at offset 0, "
            f"expected 0x{IDX_LABEL_MAGIC:08x}")
    count = _read_be32(blob, 4, "label count", path)
    if count < 0:
        raise IdxFormatError(f"{path}: negative label count in header")
    if len(blob) < 8 + count:
        raise IdxFormatError(
            f"{path}: truncated label data at offset {len(blob)}, "
            f"expected {8 + count} bytes")
    return np.frombuffer(blob, dtype=np.uint8, count=count, offset=8).astype(int)


def load_mnist(images, labels, name="mnist"):
    """Pair an IDX image file with an IDX label file."""
    x = load_idx_images(images)
    y = load_idx_labels(labels)
    if x.shape[0] != y.shape[0]:
        raise IdxFormatError(
            f"{images} has {x.shape[0]} images but {labels} has {y.shape[0]} labels")
    return Dataset(x, y, name=name)


def save_dataset(data, path):
    """Persist to npz (samples, labels, name)."""
    np.savez(path, samples=data.samples, labels=data.labels,
             name=np.asarray(data.name))


def load_dataset(path):
    with np.load(path, allow_pickle=False) as npz:
        try:
            return Dataset(npz["samples"], npz["labels"], str(npz["name"]))
        except KeyError as exc:
            raise ValueError(f"{path} is not a dataset archive: missing {exc}") from None
