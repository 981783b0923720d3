"""Depth maps and forward depth warping between calibrated views."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import CameraView, project, unproject

SENTINEL = 0.0


@dataclass
class DepthMap:
    """H x W depth grid in meters; 0 marks pixels with no geometry."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("depth map must be 2-D")
        covered = self.values != SENTINEL
        v = self.values[covered]
        if v.size and (not np.isfinite(v).all() or (v <= 0).any()):
            raise ValueError("non-sentinel depth values must be finite and > 0")

    @property
    def mask(self) -> np.ndarray:
        return self.values != SENTINEL

    @property
    def shape(self):
        return self.values.shape

    def copy(self) -> "DepthMap":
        return DepthMap(self.values.copy())


def depth_to_points(depth: DepthMap, cam: CameraView):
    """Unproject all covered pixels to world points.

    Returns (points (K,3), pixel indices (K,2) as (row, col)).
    """
    rows, cols = np.nonzero(depth.mask)
    z = depth.values[rows, cols]
    pix = np.stack([cols.astype(np.float64), rows.astype(np.float64)], axis=1)
    pts = unproject(pix, z, cam)
    return pts, np.stack([rows, cols], axis=1)


def warp_depth(src: DepthMap, src_cam: CameraView, dst_cam: CameraView) -> DepthMap:
    """Forward-splat a source depth map into a destination camera.

    Every covered source pixel is unprojected, reprojected into dst_cam and
    splatted onto its nearest pixel; per destination pixel the smallest depth
    wins.  Uncovered destination pixels hold the sentinel.
    """
    H, W = src.shape
    if (W, H) != tuple(src_cam.resolution):
        raise ValueError("source depth resolution does not match camera")
    dW, dH = dst_cam.resolution
    out = np.full((dH, dW), np.inf)

    pts, _ = depth_to_points(src, src_cam)
    if len(pts) == 0:
        return DepthMap(np.zeros((dH, dW)))
    pix, z, valid = project(pts, dst_cam)
    u = np.round(pix[:, 0]).astype(np.int64)
    v = np.round(pix[:, 1]).astype(np.int64)
    ok = valid & (u >= 0) & (u < dW) & (v >= 0) & (v < dH)
    np.minimum.at(out, (v[ok], u[ok]), z[ok])
    out[~np.isfinite(out)] = SENTINEL
    return DepthMap(out)
