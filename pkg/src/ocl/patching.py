"""Image-to-token front end: patch extraction, the frozen patch projection,
and the fixed sinusoidal position table.

The projection is sampled once (Xavier uniform) and never updated; position
rows are attached later, after masking, so every surviving token keeps its
original position row (row 0 is reserved for the group token).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

DEFAULT_DTYPE = np.float32


def patchify(pixels: np.ndarray, patch_size: int) -> np.ndarray:
    """[B, C, H, W] -> [B, N, P*P*C] in row-major patch order (top-left to
    bottom-right); within a patch, pixel-major with channels last."""
    b, c, h, w = pixels.shape
    p = patch_size
    if h % p != 0 or w % p != 0:
        raise ConfigurationError(
            f"image {h}x{w} is not divisible by patch size {p}")
    x = pixels.reshape(b, c, h // p, p, w // p, p)
    x = x.transpose(0, 2, 4, 3, 5, 1)  # [B, H/P, W/P, P, P, C]
    return np.ascontiguousarray(x.reshape(b, (h // p) * (w // p), p * p * c))


def unpatchify(patches: np.ndarray, patch_size: int, height: int, width: int,
               channels: int) -> np.ndarray:
    """Exact inverse of patchify."""
    b, n, d = patches.shape
    p = patch_size
    if n * p * p != height * width or d != p * p * channels:
        raise ConfigurationError("patch array inconsistent with geometry")
    x = patches.reshape(b, height // p, width // p, p, p, channels)
    x = x.transpose(0, 5, 1, 3, 2, 4)
    return np.ascontiguousarray(x.reshape(b, channels, height, width))


def init_frozen_projection(seed: int, in_dim: int, out_dim: int,
                           dtype=DEFAULT_DTYPE) -> np.ndarray:
    """Xavier-uniform [in_dim, out_dim] map, entries in [-a, a] with
    a = sqrt(6 / (in_dim + out_dim)). Callers must never update it."""
    if out_dim < 1:
        raise ConfigurationError("projection output dim must be >= 1")
    bound = np.sqrt(6.0 / (in_dim + out_dim))
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xF0]))
    return rng.uniform(-bound, bound, size=(in_dim, out_dim)).astype(dtype)


def sinusoidal_table(rows: int, dim: int, dtype=DEFAULT_DTYPE) -> np.ndarray:
    """Interleaved sin/cos position table: row k holds
    sin(k / 10000^(2j/D)) at even columns and cos at odd columns.
    Row 0 is the group-token position."""
    if dim % 2 != 0:
        raise ConfigurationError(f"position dim must be even, got {dim}")
    k = np.arange(rows, dtype=np.float64)[:, None]
    j = np.arange(dim // 2, dtype=np.float64)[None, :]
    angle = k / np.power(10000.0, 2.0 * j / dim)
    table = np.empty((rows, dim), dtype=np.float64)
    table[:, 0::2] = np.sin(angle)
    table[:, 1::2] = np.cos(angle)
    return table.astype(dtype)


@dataclass
class PatchEmbedConfig:
    """Frozen front-end state for a fixed geometry."""

    patch_size: int
    dim: int
    image_size: int
    channels: int
    projection: np.ndarray = field(repr=False)
    pos_table: np.ndarray = field(repr=False)

    @property
    def num_patches(self) -> int:
        return (self.image_size // self.patch_size) ** 2

    @property
    def patch_dim(self) -> int:
        return self.patch_size * self.patch_size * self.channels

    @classmethod
    def create(cls, patch_size: int, dim: int, image_size: int, channels: int,
               seed: int, dtype=DEFAULT_DTYPE) -> "PatchEmbedConfig":
        if image_size % patch_size != 0:
            raise ConfigurationError(
                f"image size {image_size} not divisible by patch {patch_size}")
        n = (image_size // patch_size) ** 2
        patch_dim = patch_size * patch_size * channels
        return cls(
            patch_size=patch_size,
            dim=dim,
            image_size=image_size,
            channels=channels,
            projection=init_frozen_projection(seed, patch_dim, dim, dtype),
            pos_table=sinusoidal_table(n + 1, dim, dtype),
        )


def embed(patches: np.ndarray, config: PatchEmbedConfig) -> np.ndarray:
    """Project patches to [B, N, D]. Positions are NOT added here; the
    masking stage attaches each token's original position row after the
    visible-set gather."""
    if patches.shape[-1] != config.projection.shape[0]:
        raise ConfigurationError(
            f"patch dim {patches.shape[-1]} != projection rows "
            f"{config.projection.shape[0]}")
    return patches @ config.projection
