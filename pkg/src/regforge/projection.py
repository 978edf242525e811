"""Cylindrical projection between raw point clouds and pseudo images.

A pseudo image stores the raw (x, y, z) of the point that won each pixel and
a validity mask: 0 where a point landed, -1e9 (the finite stand-in for -inf)
where the pixel is empty. Empty is encoded as coords exactly (0, 0, 0), so
true origin points are discarded before projection.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, ShapeError

MASK_INVALID = -1e9
MASK_VALID = 0.0


def check_cloud(points, name="points"):
    """Validate an (N, 3) float cloud and return it as float64."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ShapeError(f"{name} must be (N, 3), got {pts.shape}")
    if pts.shape[0] < 1:
        raise ContractError(f"{name} must contain at least one point")
    if not np.isfinite(pts).all():
        raise ContractError(f"{name} contains non-finite coordinates")
    return pts


@dataclass(frozen=True)
class SensorModel:
    """Cylindrical grid geometry. delta_theta is pinned to 2*pi/width."""

    height: int
    width: int
    delta_phi: float
    vertical_offset: float

    def __post_init__(self):
        if self.height <= 0 or self.width <= 0:
            raise ShapeError("sensor extents must be positive")
        if self.height % 16 or self.width % 32:
            raise ShapeError(
                f"sensor grid {self.height}x{self.width} must be divisible by 16x32 "
                "(three-stage downsampling)"
            )
        if self.delta_phi <= 0:
            raise ShapeError("delta_phi must be positive")

    @property
    def delta_theta(self):
        return 2.0 * np.pi / self.width

    @classmethod
    def from_fov(cls, height, width, elev_min_deg, elev_max_deg):
        """Grid covering elevations [elev_min_deg, elev_max_deg)."""
        span = np.deg2rad(elev_max_deg - elev_min_deg)
        delta_phi = span / height
        vertical_offset = -np.deg2rad(elev_min_deg) / delta_phi
        return cls(height, width, delta_phi, vertical_offset)

    @classmethod
    def kitti(cls):
        """64 x 1792 grid, HDL-64E-like vertical field of view (-24.8 to +2 deg)."""
        return cls.from_fov(64, 1792, -24.8, 2.0)

    @classmethod
    def desk(cls):
        """Small default grid keeping the test suites fast."""
        return cls.from_fov(16, 128, -25.0, 5.0)


@dataclass
class PseudoImage:
    coords: np.ndarray  # (H, W, 3), zeros where empty
    mask: np.ndarray    # (H, W, 1), 0 valid / -1e9 invalid
    sensor: SensorModel = field(compare=False, default=None)

    @property
    def valid(self):
        """(H, W) boolean validity."""
        return self.mask[..., 0] == MASK_VALID

    def check(self):
        h, w = self.mask.shape[:2]
        if self.coords.shape != (h, w, 3) or self.mask.shape != (h, w, 1):
            raise ShapeError("pseudo image coords/mask shapes disagree")
        empty = np.all(self.coords == 0.0, axis=-1)
        if not np.array_equal(empty, ~self.valid):
            raise ContractError("mask law violated: mask invalid <=> coords (0,0,0)")
        return self


def pixel_of(points, sensor):
    """Map points to (row, col) grid indices.

    Columns: floor(azimuth / dtheta) wrapped cyclically. Rows: floor of the
    offset elevation index; returns row -1 where the point falls outside the
    vertical field of view.
    """
    pts = np.asarray(points, dtype=np.float64)
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    r = np.sqrt(x * x + y * y + z * z)
    u = np.arctan2(y, x) / sensor.delta_theta
    col = np.floor(u).astype(np.int64) % sensor.width
    v = np.arcsin(np.clip(z / np.where(r > 0, r, 1.0), -1.0, 1.0)) / sensor.delta_phi
    row = np.floor(v + sensor.vertical_offset).astype(np.int64)
    row = np.where((row >= 0) & (row < sensor.height), row, -1)
    return row, col


def project(points, sensor):
    """Scatter a cloud into a pseudo image; nearest range wins collisions
    (ties keep the earliest point), matching the sequential definition."""
    pts = check_cloud(points)
    pts = pts[~np.all(pts == 0.0, axis=1)]  # origin points are indistinguishable from empty
    if pts.shape[0] == 0:
        raise ContractError("cloud has no projectable points")

    row, col = pixel_of(pts, sensor)
    keep = row >= 0
    pts, row, col = pts[keep], row[keep], col[keep]

    coords = np.zeros((sensor.height, sensor.width, 3))
    mask = np.full((sensor.height, sensor.width, 1), MASK_INVALID)
    if pts.shape[0]:
        rng = np.linalg.norm(pts, axis=1)
        # scatter farthest-first so the nearest (earliest on ties) lands last
        order = np.lexsort((np.arange(pts.shape[0]), rng))[::-1]
        coords[row[order], col[order]] = pts[order]
        mask[row[order], col[order], 0] = MASK_VALID
    return PseudoImage(coords, mask, sensor)


def unproject(img):
    """Coordinates of the valid pixels, row-major order."""
    valid = img.valid
    if not valid.any():
        raise ContractError("pseudo image has no valid pixel")
    return img.coords[valid]


def downsample_mask(mask, stride_h, stride_w):
    """Stride-based mask downsampling: a block is valid iff its top-left pixel is."""
    h, w = mask.shape[:2]
    if h % stride_h or w % stride_w:
        raise ShapeError(f"strides ({stride_h},{stride_w}) do not divide mask {h}x{w}")
    return mask[::stride_h, ::stride_w]
