"""Random occlusion and the two-branch split.

Per image we draw a uniform permutation of all patch positions, keep the
first 2n as visible, hand the first n to branch U and the next n to branch
L, and discard the rest. Masked patches are never reconstructed. When
(1-r)*N is odd or fractional the leftover visible patch is dropped so both
branches stay the same size.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ConfigurationError

BRANCH_U = "U"
BRANCH_L = "L"


def group_size(num_patches: int, overall_ratio: float) -> int:
    """Visible patches per branch: floor((1 - r) * N / 2)."""
    return int(np.floor((1.0 - overall_ratio) * num_patches / 2.0))


@dataclass
class MaskPlan:
    """Visible-patch assignment for one batch."""

    overall_ratio: float
    num_patches: int
    indices_u: np.ndarray  # [B, n] positions in [0, N)
    indices_l: np.ndarray  # [B, n]

    @property
    def per_branch(self) -> int:
        return self.indices_u.shape[1]

    @property
    def visible_fraction(self) -> float:
        """Per-branch visible ratio n/N (the ablation tables' derived column)."""
        return self.per_branch / self.num_patches

    def to_json(self) -> str:
        """Debug/repro dump of the per-image index sets."""
        return json.dumps({
            "overall_ratio": self.overall_ratio,
            "num_patches": self.num_patches,
            "indices_u": self.indices_u.tolist(),
            "indices_l": self.indices_l.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "MaskPlan":
        raw = json.loads(text)
        return cls(
            overall_ratio=raw["overall_ratio"],
            num_patches=raw["num_patches"],
            indices_u=np.asarray(raw["indices_u"], dtype=np.int64),
            indices_l=np.asarray(raw["indices_l"], dtype=np.int64),
        )


@dataclass
class TokenGroup:
    """One contrastive branch: group token at slot 0, then n visible tokens
    (each already carrying its original position row)."""

    tokens: ad.Tensor  # [B, n+1, D]
    source_indices: np.ndarray  # [B, n]
    branch: str


def sample_mask_plan(rng: np.random.Generator, batch: int, num_patches: int,
                     overall_ratio: float) -> MaskPlan:
    """Uniform masking without replacement, then a uniform non-overlapping
    split of the visible set into the two branches."""
    if not 0.0 <= overall_ratio < 1.0:
        raise ConfigurationError(
            f"overall mask ratio must be in [0, 1), got {overall_ratio}")
    n = group_size(num_patches, overall_ratio)
    if n < 1:
        raise ConfigurationError(
            f"ratio {overall_ratio} with {num_patches} patches leaves "
            f"group size n={n}; need at least 1 visible patch per branch")
    perm = rng.permuted(
        np.tile(np.arange(num_patches), (batch, 1)), axis=1)
    return MaskPlan(
        overall_ratio=overall_ratio,
        num_patches=num_patches,
        indices_u=np.ascontiguousarray(perm[:, :n]),
        indices_l=np.ascontiguousarray(perm[:, n:2 * n]),
    )


def gather_group(x: ad.Tensor, plan: MaskPlan, branch: str,
                 cls_param: ad.Tensor, pos_table: np.ndarray) -> TokenGroup:
    """Assemble one branch's token sequence.

    Slot 0 gets cls_param + pos_table[0]; slot j+1 gets
    x[:, idx_j] + pos_table[idx_j + 1].
    """
    if branch == BRANCH_U:
        idx = plan.indices_u
    elif branch == BRANCH_L:
        idx = plan.indices_l
    else:
        raise ConfigurationError(f"unknown branch {branch!r}")
    b = x.shape[0]
    dim = x.shape[2]
    if idx.max(initial=0) >= x.shape[1]:
        raise IndexError("mask plan indexes beyond the patch count")

    gathered = ad.gather_rows(x, idx)  # [B, n, D]
    pos = ad.Tensor(np.ascontiguousarray(pos_table[idx + 1]))  # [B, n, D]
    visible = ad.add(gathered, pos)

    cls_row = ad.add(ad.reshape(cls_param, (1, 1, dim)),
                     pos_table[0].reshape(1, 1, dim))
    cls_tok = ad.broadcast_to(cls_row, (b, 1, dim))
    tokens = ad.concat([cls_tok, visible], axis=1)
    return TokenGroup(tokens=tokens, source_indices=idx, branch=branch)


def full_visibility_plan(batch: int, num_patches: int) -> MaskPlan:
    """r=0 evaluation path: a single branch seeing every patch in order.

    Branch L mirrors U so downstream code never special-cases it; feature
    extraction only reads U.
    """
    idx = np.tile(np.arange(num_patches), (batch, 1))
    return MaskPlan(overall_ratio=0.0, num_patches=num_patches,
                    indices_u=idx, indices_l=idx.copy())
