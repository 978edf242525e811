"""Kernel-based patch embedding and patch merging.

Embedding gathers the valid pixels inside a 2D kernel around each stride
anchor (rows clipped at the image border, columns wrapped across the azimuth
seam), filters neighbors farther than `max_range` in 3D from the anchor
point, lifts each neighbor's relative+absolute coordinates through a shared
MLP and max-pools. Anchors sit at the top-left pixel of each stride block, so
the embedding mask coincides with stride-based mask downsampling.
"""

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ShapeError
from .layers import Linear, Mlp
from .projection import MASK_VALID, downsample_mask

NEG_LARGE = -1e30  # sentinel under max-pooling; never wins against a real feature


@dataclass(frozen=True)
class EmbedConfig:
    kernel_h: int = 9
    kernel_w: int = 17
    stride_h: int = 4
    stride_w: int = 8
    out_channels: int = 16
    max_range: float = 3.0

    def __post_init__(self):
        if self.kernel_h % 2 == 0 or self.kernel_w % 2 == 0:
            raise ShapeError("kernel extents must be odd")
        if self.stride_h <= 0 or self.stride_w <= 0:
            raise ShapeError("strides must be positive")
        if self.out_channels < 1:
            raise ShapeError("out_channels must be >= 1")


def neighbor_table(img, cfg):
    """Neighbor bookkeeping for every anchor.

    Returns (anchor_points (nc,3), anchor_valid (nc,), nbr_points (nc,K,3),
    nbr_valid (nc,K)) with nc = (H/sh)*(W/sw) anchors in row-major order and
    K = kernel_h*kernel_w slots. nbr_valid folds in border clipping, pixel
    validity, the max_range filter, and anchor validity.
    """
    h, w = img.mask.shape[:2]
    if h % cfg.stride_h or w % cfg.stride_w:
        raise ShapeError(f"image {h}x{w} not divisible by strides ({cfg.stride_h},{cfg.stride_w})")
    ch, cw = h // cfg.stride_h, w // cfg.stride_w
    anchor_r = np.arange(ch) * cfg.stride_h
    anchor_c = np.arange(cw) * cfg.stride_w
    dr = np.arange(cfg.kernel_h) - cfg.kernel_h // 2
    dc = np.arange(cfg.kernel_w) - cfg.kernel_w // 2

    rows = anchor_r[:, None, None, None] + dr[None, None, :, None]  # (ch,1,kh,1)
    cols = (anchor_c[None, :, None, None] + dc[None, None, None, :]) % w
    in_bounds = (rows >= 0) & (rows < h)
    rows_c = np.clip(rows, 0, h - 1)
    rows_b, cols_b, in_b = np.broadcast_arrays(rows_c, cols, in_bounds)

    valid_px = img.valid
    nbr_points = img.coords[rows_b, cols_b].reshape(ch * cw, -1, 3)
    nbr_valid = (valid_px[rows_b, cols_b] & in_b).reshape(ch * cw, -1)

    anchor_points = img.coords[anchor_r[:, None], anchor_c[None, :]].reshape(-1, 3)
    anchor_valid = valid_px[anchor_r[:, None], anchor_c[None, :]].reshape(-1)

    dist = np.linalg.norm(nbr_points - anchor_points[:, None, :], axis=-1)
    nbr_valid &= dist <= cfg.max_range
    nbr_valid &= anchor_valid[:, None]
    return anchor_points, anchor_valid, nbr_points, nbr_valid


class PatchEmbed:
    """Shared-MLP neighbor embedding producing the stage-0 token grid."""

    def __init__(self, store, name, cfg):
        self.cfg = cfg
        self.mlp = Mlp(store, f"{name}.mlp", 6, [cfg.out_channels, cfg.out_channels])

    def __call__(self, img):
        cfg = self.cfg
        h, w = img.mask.shape[:2]
        ch, cw = h // cfg.stride_h, w // cfg.stride_w
        anchor_points, anchor_valid, nbr_points, nbr_valid = neighbor_table(img, cfg)

        rel = nbr_points - anchor_points[:, None, :]
        feats_in = np.concatenate([rel, nbr_points], axis=-1)  # (nc, K, 6)
        lifted = self.mlp(T.Tensor(feats_in))  # (nc, K, C)
        slot = nbr_valid[:, :, None].astype(np.float64)
        masked = T.where_mask(slot, lifted) + T.Tensor(NEG_LARGE * (1.0 - slot))
        pooled = masked.max(axis=1)  # (nc, C)
        pooled = T.where_mask(anchor_valid[:, None].astype(np.float64), pooled)

        feat = pooled.reshape((ch, cw, cfg.out_channels))
        mask = downsample_mask(img.mask, cfg.stride_h, cfg.stride_w)
        return feat, mask


class PatchMerge:
    """Concatenate 2x2 neighbor patches and reduce 4c -> 2c channels."""

    def __init__(self, store, name, in_channels):
        self.in_channels = in_channels
        self.reduce = Linear(store, f"{name}.reduce", 4 * in_channels, 2 * in_channels)

    def __call__(self, feat, mask):
        h, w, c = feat.shape
        if h % 2 or w % 2:
            raise ShapeError(f"feature grid {h}x{w} must have even extents to merge")
        if c != self.in_channels:
            raise ShapeError(f"expected {self.in_channels} channels, got {c}")
        blocks = feat.reshape((h // 2, 2, w // 2, 2, c)).transpose((0, 2, 1, 3, 4))
        grouped = blocks.reshape((h // 2, w // 2, 4 * c))
        merged = self.reduce(grouped)
        out_mask = downsample_mask(mask, 2, 2)
        valid01 = (out_mask[..., 0] == MASK_VALID).astype(np.float64)[..., None]
        return T.where_mask(valid01, merged), out_mask
