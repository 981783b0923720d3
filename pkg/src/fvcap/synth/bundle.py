"""Per-frame multi-view observations: images, instance masks, keypoints.

render_bundle plays the role that instance segmentation and a keypoint
detector play on real footage; its masks are exact and instance-exclusive
(each covered pixel belongs to the entity nearest along that pixel ray).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry.camera import CameraView, in_image, project
from ..geometry.mesh import merge_meshes
from ..geometry.rasterize import rasterize
from ..geometry.warp import DepthMap
from .scene import SyntheticScene


@dataclass
class FrameBundle:
    """One time step: per-view images in [0,1], exclusive masks, keypoints.

    keypoints: (V, J, 3) rows of (u, v, confidence).
    object_masks: (V, K, H, W) with K the object count (possibly 0).
    """

    frame: int
    images: np.ndarray
    human_masks: np.ndarray
    object_masks: np.ndarray
    keypoints: np.ndarray
    cameras: list[CameraView]
    depths: np.ndarray | None = None

    @property
    def num_views(self) -> int:
        return len(self.cameras)

    @property
    def num_objects(self) -> int:
        return self.object_masks.shape[1]

    def validate(self):
        V = self.num_views
        H, W = self.images.shape[1:3]
        for cam in self.cameras:
            if tuple(cam.resolution) != (W, H):
                raise ValueError("mask/image dimensions must match camera resolution")
        overlap = self.human_masks[:, None] & self.object_masks
        if overlap.any():
            raise ValueError("instance masks must be exclusive")
        conf = self.keypoints[..., 2]
        if ((conf < 0) | (conf > 1)).any():
            raise ValueError("keypoint confidences must lie in [0, 1]")


def _shaded_colors(mesh, shading: str, light_dir=(0.3, -0.5, 0.8), ambient=0.35):
    if shading == "albedo":
        return mesh.colors
    n = mesh.vertex_normals()
    l = np.asarray(light_dir, dtype=np.float64)
    l = l / np.linalg.norm(l)
    shade = ambient + (1.0 - ambient) * np.clip(n @ l, 0.0, None)
    return np.clip(mesh.colors * shade[:, None], 0.0, 1.0)


def render_bundle(scene: SyntheticScene, frame: int, rng=None,
                  background: float = 1.0) -> FrameBundle:
    """Rasterize color images, exact entity masks and GT keypoints."""
    body = scene.body_mesh(frame)
    entity_meshes = [body] + scene.object_meshes(frame)
    face_entity = np.concatenate([
        np.full(len(m.faces), i, dtype=np.int64) for i, m in enumerate(entity_meshes)
    ])
    merged = merge_meshes(entity_meshes)
    colors = np.concatenate(
        [_shaded_colors(m, scene.config.shading) for m in entity_meshes], axis=0)

    V = len(scene.cameras)
    K = len(scene.objects)
    H = W = scene.config.image_size
    images = np.full((V, H, W, 3), background)
    human_masks = np.zeros((V, H, W), dtype=bool)
    object_masks = np.zeros((V, K, H, W), dtype=bool)
    depths = np.zeros((V, H, W))
    joints = scene.body_joints(frame)
    keypoints = np.zeros((V, len(joints), 3))

    for i, cam in enumerate(scene.cameras):
        depth, face_id, img = rasterize(merged, cam, colors)
        covered = face_id >= 0
        images[i][covered] = np.clip(img[covered], 0.0, 1.0)
        owner = np.where(covered, face_entity[np.maximum(face_id, 0)], -1)
        human_masks[i] = owner == 0
        for k in range(K):
            object_masks[i, k] = owner == k + 1
        depths[i] = depth

        pix, z, valid = project(joints, cam)
        conf = (valid & in_image(pix, cam.resolution)).astype(np.float64)
        if rng is not None and scene.config.keypoint_noise_px > 0:
            pix = pix + rng.normal(scale=scene.config.keypoint_noise_px,
                                   size=pix.shape)
        if rng is not None and scene.config.keypoint_dropout > 0:
            drop = rng.random(len(joints)) < scene.config.keypoint_dropout
            conf[drop] = 0.0
        keypoints[i] = np.concatenate([pix, conf[:, None]], axis=1)

    bundle = FrameBundle(frame, images, human_masks, object_masks, keypoints,
                         list(scene.cameras), depths)
    bundle.validate()
    return bundle


def bundle_depth(bundle: FrameBundle, view: int) -> DepthMap:
    if bundle.depths is None:
        raise ValueError("bundle carries no depth")
    return DepthMap(bundle.depths[view])
