"""Corpus generation and loading.

Two sources, both byte-exactly reproducible with zero image-codec
dependencies: procedurally generated sinusoidal-grating corpora whose class
identity is carried by the grating frequency/orientation, and the classic
3073-byte-record binary layout (1 label byte + 3x32x32 channel-planar pixel
bytes) used by the CIFAR-10 distribution.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from .errors import ConfigurationError, FormatError

RECORD_BYTES = 3073  # 1 label byte + 3*32*32 pixels
MAX_LABEL = 10


@dataclass
class ImageBatch:
    """A batch of images in [0,1], shaped [B, C, H, W], plus optional labels."""

    pixels: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.pixels.ndim != 4:
            raise ConfigurationError(
                f"pixels must be [B, C, H, W], got shape {self.pixels.shape}")
        if self.pixels.shape[0] < 1:
            raise ConfigurationError("batch must contain at least one image")
        if not np.isfinite(self.pixels).all():
            raise ConfigurationError("pixels contain non-finite values")
        lo, hi = self.pixels.min(), self.pixels.max()
        if lo < 0.0 or hi > 1.0:
            raise ConfigurationError(
                f"pixels outside [0,1]: min={lo}, max={hi}")
        if self.labels is not None and len(self.labels) != self.pixels.shape[0]:
            raise ConfigurationError("labels length does not match batch size")

    @property
    def count(self) -> int:
        return self.pixels.shape[0]

    @property
    def channels(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[2]

    @property
    def width(self) -> int:
        return self.pixels.shape[3]

    def subset(self, indices: np.ndarray) -> "ImageBatch":
        labels = None if self.labels is None else self.labels[indices]
        return ImageBatch(self.pixels[indices], labels)


@dataclass
class CorpusSpec:
    """Everything needed to materialize a corpus deterministically."""

    source: str = "synthetic"  # "synthetic" | "cifar-binary"
    path: Optional[str] = None
    num_classes: int = 10
    images_per_class: int = 64
    image_size: int = 32
    channels: int = 3
    seed: int = 0

    def validate(self) -> None:
        if self.source not in ("synthetic", "cifar-binary"):
            raise ConfigurationError(f"unknown corpus source {self.source!r}")
        if self.source == "cifar-binary" and not self.path:
            raise ConfigurationError(
                "data.path: a cifar-binary corpus requires a file path")
        if self.source == "synthetic":
            if self.num_classes < 1:
                raise ConfigurationError("num_classes must be >= 1")
            if self.images_per_class < 1:
                raise ConfigurationError("images_per_class must be >= 1")


def generate_synthetic(spec: CorpusSpec) -> ImageBatch:
    """Render a grating corpus: class k owns a frequency/orientation pair,
    each image jitters phase and amplitude.

    Phase is drawn over the full circle so that raw pixels are a weak (but
    above-chance) class signal, while frequency/orientation features remain
    perfectly separable.
    """
    spec.validate()
    if spec.source != "synthetic":
        raise ConfigurationError("generate_synthetic needs source='synthetic'")
    k, m, s, c = spec.num_classes, spec.images_per_class, spec.image_size, spec.channels
    rng = np.random.default_rng(spec.seed)

    yy, xx = np.meshgrid(np.arange(s), np.arange(s), indexing="ij")
    pixels = np.empty((k * m, c, s, s), dtype=np.float32)
    labels = np.repeat(np.arange(k), m)
    for cls in range(k):
        theta = np.pi * cls / k
        freq = 1.5 if k == 1 else 1.5 + 6.3 * cls / (k - 1)
        proj = (xx * np.cos(theta) + yy * np.sin(theta)) / s  # [S, S]
        phase = rng.uniform(0.0, 2.0 * np.pi, size=m)
        amp = rng.uniform(0.5, 1.0, size=m)
        arg = 2.0 * np.pi * freq * proj[None] + phase[:, None, None]
        for ch in range(c):
            wave = np.sin(arg + 0.9 * ch)
            pixels[cls * m:(cls + 1) * m, ch] = 0.5 + 0.5 * amp[:, None, None] * wave
    np.clip(pixels, 0.0, 1.0, out=pixels)
    return ImageBatch(pixels, labels)


def load_cifar_binary(path) -> ImageBatch:
    """Load a file of 3073-byte records into pixels scaled by 1/255."""
    raw = Path(path).read_bytes()
    if len(raw) == 0:
        raise FormatError(f"{path}: empty file")
    if len(raw) % RECORD_BYTES != 0:
        raise FormatError(
            f"{path}: size {len(raw)} is not a multiple of {RECORD_BYTES}")
    records = np.frombuffer(raw, dtype=np.uint8).reshape(-1, RECORD_BYTES)
    labels = records[:, 0].astype(np.int64)
    bad = labels >= MAX_LABEL
    if bad.any():
        idx = int(np.argmax(bad))
        raise FormatError(
            f"{path}: record {idx} has label byte {labels[idx]} >= {MAX_LABEL}")
    pixels = records[:, 1:].reshape(-1, 3, 32, 32).astype(np.float32) / 255.0
    return ImageBatch(pixels, labels)


def save_cifar_binary(corpus: ImageBatch, path) -> None:
    """Write a corpus in the 3073-byte record layout (for round trips)."""
    if corpus.labels is None:
        raise FormatError("corpus has no labels; the record layout needs one")
    if corpus.channels != 3 or corpus.height != 32 or corpus.width != 32:
        raise FormatError("the record layout is fixed to 3x32x32 images")
    labels = np.asarray(corpus.labels)
    if labels.min() < 0 or labels.max() >= MAX_LABEL:
        raise FormatError(f"labels must lie in [0, {MAX_LABEL})")
    quantized = np.round(corpus.pixels * 255.0).astype(np.uint8)
    records = np.empty((corpus.count, RECORD_BYTES), dtype=np.uint8)
    records[:, 0] = labels.astype(np.uint8)
    records[:, 1:] = quantized.reshape(corpus.count, -1)
    Path(path).write_bytes(records.tobytes())


def load_corpus(spec: CorpusSpec) -> ImageBatch:
    spec.validate()
    if spec.source == "synthetic":
        return generate_synthetic(spec)
    return load_cifar_binary(spec.path)


def epoch_permutation(count: int, shuffle_seed: int, epoch: int) -> np.ndarray:
    """Stateless per-epoch shuffle: the order depends only on (seed, epoch)."""
    rng = np.random.default_rng(np.random.SeedSequence([shuffle_seed, epoch]))
    return rng.permutation(count)


def batches_per_epoch(count: int, batch_size: int, drop_last: bool = True) -> int:
    if drop_last:
        return count // batch_size
    return (count + batch_size - 1) // batch_size


def batch_indices(count: int, batch_size: int, shuffle_seed: int,
                  step: int) -> np.ndarray:
    """Index set for a global training step (drop_last semantics), letting a
    resumed run rebuild the exact batch sequence from the step alone."""
    per_epoch = count // batch_size
    epoch, offset = divmod(step, per_epoch)
    perm = epoch_permutation(count, shuffle_seed, epoch)
    return perm[offset * batch_size:(offset + 1) * batch_size]


def batch_iterator(corpus: ImageBatch, batch_size: int, shuffle_seed: int,
                   drop_last: bool = True, epochs: int = 1,
                   start_epoch: int = 0) -> Iterator[ImageBatch]:
    """Yield shuffled batches for ``epochs`` epochs.

    Each epoch draws a fresh permutation from a generator seeded by
    (shuffle_seed, epoch); with drop_last the ragged tail is discarded so
    every batch holds exactly ``batch_size`` images.
    """
    if batch_size < 2:
        raise ConfigurationError(
            f"batch_size must be >= 2 (the loss needs a negative), got {batch_size}")
    for epoch in range(start_epoch, start_epoch + epochs):
        perm = epoch_permutation(corpus.count, shuffle_seed, epoch)
        limit = (corpus.count // batch_size) * batch_size if drop_last else corpus.count
        for lo in range(0, limit, batch_size):
            yield corpus.subset(perm[lo:lo + batch_size])


def class_split(corpus: ImageBatch, eval_fraction: float,
                ) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic per-class train/eval index split (last fraction of each
    class block goes to eval)."""
    if corpus.labels is None:
        raise ConfigurationError("split requires labels")
    train_idx, eval_idx = [], []
    for cls in np.unique(corpus.labels):
        members = np.flatnonzero(corpus.labels == cls)
        cut = int(round(len(members) * (1.0 - eval_fraction)))
        if cut == 0 or cut == len(members):
            raise ConfigurationError(
                f"eval_fraction={eval_fraction} leaves an empty split for class {cls}")
        train_idx.append(members[:cut])
        eval_idx.append(members[cut:])
    return np.concatenate(train_idx), np.concatenate(eval_idx)
