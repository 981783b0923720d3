"""Geometry inputs for two-source view blending.

For a novel camera with human-layer depth D_n and two source views:
  - occlusion maps: O_i = D_n - D_i^n, with D_i^n the source depth
    forward-splatted into the novel view,
  - warped colors: backward warping through D_n (each novel-view surface
    point projected into the source, bilinear color sample),
  - angle maps: cosine between the rays from each camera center to the
    surface point.
Pixels without novel geometry, without splatted source depth, or whose
backward projection leaves the source image are flagged invalid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry.camera import CameraView, in_image, project
from ..geometry.warp import DepthMap, depth_to_points, warp_depth
from ..utils import bilinear_sample


def select_sources(novel_cam: CameraView, rig: list[CameraView]):
    """The two rig cameras whose optical axes are closest in direction to
    the novel camera's axis; ties break toward smaller camera id."""
    if len(rig) < 2:
        raise ValueError("need at least two rig cameras")
    axis = novel_cam.optical_axis
    scored = sorted(
        ((float(np.arccos(np.clip(cam.optical_axis @ axis, -1.0, 1.0))), cam.id, i)
         for i, cam in enumerate(rig)))
    return rig[scored[0][2]], rig[scored[1][2]]


@dataclass
class BlendInputs:
    """Warped source images, occlusion maps (meters), angle maps (cosines)."""

    images: np.ndarray        # (2, H, W, 3)
    occlusion: np.ndarray     # (2, H, W) meters, 0 where depths agree
    angles: np.ndarray        # (2, H, W) in [-1, 1]
    valid: np.ndarray         # (2, H, W) bool
    novel_depth: DepthMap
    novel_cam: CameraView
    source_ids: tuple

    def validate(self):
        for i in range(2):
            v = self.valid[i]
            a = self.angles[i][v]
            if len(a) and (np.abs(a) > 1.0 + 1e-9).any():
                raise ValueError("angle cosines out of range")


def _warp_source(novel_cam, novel_depth, src_cam, src_depth, src_image):
    H, W = novel_depth.shape
    occ = np.zeros((H, W))
    ang = np.zeros((H, W))
    img = np.zeros((H, W, 3))
    valid = np.zeros((H, W), dtype=bool)

    warped = warp_depth(src_depth, src_cam, novel_cam)
    pts, idx = depth_to_points(novel_depth, novel_cam)
    if len(pts) == 0:
        return img, occ, ang, valid
    rows, cols = idx[:, 0], idx[:, 1]

    # occlusion: novel depth minus splatted source depth, where both exist
    both = warped.values[rows, cols] != 0.0
    occ[rows[both], cols[both]] = (
        novel_depth.values[rows[both], cols[both]]
        - warped.values[rows[both], cols[both]])

    # colors by backward warping through the novel surface
    pix, z, front = project(pts, src_cam)
    inside = front & in_image(pix, src_cam.resolution)
    colors, ok = bilinear_sample(src_image, pix)
    good = inside & ok & both
    img[rows[good], cols[good]] = colors[good]
    valid[rows[good], cols[good]] = True

    # angle map: cos between rays from the two camera centers to the point
    to_src = pts - src_cam.center
    to_novel = pts - novel_cam.center
    cosang = np.einsum("nk,nk->n", to_src, to_novel) / (
        np.linalg.norm(to_src, axis=1) * np.linalg.norm(to_novel, axis=1))
    ang[rows, cols] = np.clip(cosang, -1.0, 1.0)
    return img, occ, ang, valid


def build_blend_inputs(novel_cam: CameraView, novel_depth: DepthMap,
                       source_cams, source_depths, source_images) -> BlendInputs:
    """Assemble warped colors, occlusion maps and angle maps for 2 sources."""
    images, occs, angs, valids = [], [], [], []
    for cam, depth, image in zip(source_cams, source_depths, source_images):
        img, occ, ang, valid = _warp_source(novel_cam, novel_depth, cam, depth,
                                            image)
        images.append(img)
        occs.append(occ)
        angs.append(ang)
        valids.append(valid)
    out = BlendInputs(np.stack(images), np.stack(occs), np.stack(angs),
                      np.stack(valids), novel_depth, novel_cam,
                      tuple(c.id for c in source_cams))
    out.validate()
    return out


def swap_inputs(inputs: BlendInputs) -> BlendInputs:
    return BlendInputs(inputs.images[::-1].copy(), inputs.occlusion[::-1].copy(),
                       inputs.angles[::-1].copy(), inputs.valid[::-1].copy(),
                       inputs.novel_depth, inputs.novel_cam,
                       tuple(reversed(inputs.source_ids)))
