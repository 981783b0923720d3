"""Synthetic human-object scenes: the training corpus and ground-truth oracle.

A scene holds a ground-truth body (model + per-frame parameters), rigid
objects on smooth trajectories, and a ring of calibrated cameras.  All
randomness flows from the seed through one Generator, so a given
(seed, config) is bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .. import RIG_HEIGHT, RIG_RADIUS
from ..body.builtin import build_body
from ..body.model import BodyModel, BodyParams, pose_body, pose_joints
from ..errors import ConfigError, PlacementError
from ..geometry.camera import CameraView, look_at_camera
from ..geometry.mesh import TriangleMesh, merge_meshes
from ..geometry.voxel import points_inside_mesh
from ..tracking.pose import RigidPose
from .primitives import PRIMITIVES

LOOK_TARGET = np.array([0.0, 0.0, 0.9])


@dataclass
class SceneConfig:
    frames: int = 1
    objects: int = 0
    cameras: int = 6
    image_size: int = 128
    focal_scale: float = 1.0
    body_resolution: str = "default"
    motion_amplitude: float = 0.25
    static_body: bool = False
    shading: str = "lambert"
    body_color: tuple | None = None     # None: smooth gradient palette
    keypoint_noise_px: float = 0.0
    keypoint_dropout: float = 0.0
    object_kinds: tuple = ("box", "sphere", "cylinder", "chair")

    def validate(self):
        if self.frames <= 0:
            raise ConfigError("frames must be positive")
        if self.cameras <= 0:
            raise ConfigError("cameras must be positive")
        if self.objects < 0:
            raise ConfigError("objects must be non-negative")
        if self.image_size <= 0:
            raise ConfigError("image_size must be positive")


@dataclass
class SceneObject:
    template: TriangleMesh          # canonical frame, carries vertex colors
    poses: list                     # RigidPose per frame
    kind: str

    def mesh_at(self, frame: int) -> TriangleMesh:
        pose = self.poses[frame]
        return self.template.transformed(pose.rotation, pose.translation)


@dataclass
class SyntheticScene:
    body_model: BodyModel
    body_params: BodyParams
    body_colors: np.ndarray
    objects: list[SceneObject]
    cameras: list[CameraView]
    frames: int
    config: SceneConfig = field(default_factory=SceneConfig)
    seed: int = 0

    def body_mesh(self, frame: int) -> TriangleMesh:
        mesh = pose_body(self.body_model, self.body_params, frame)
        mesh.colors = self.body_colors.copy()
        return mesh

    def body_joints(self, frame: int) -> np.ndarray:
        return pose_joints(self.body_model, self.body_params, frame)

    def object_meshes(self, frame: int) -> list[TriangleMesh]:
        return [obj.mesh_at(frame) for obj in self.objects]

    def merged_objects(self, frame: int) -> TriangleMesh:
        meshes = self.object_meshes(frame)
        if not meshes:
            return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
        return merge_meshes(meshes)

    def bounds(self, margin: float = 0.25):
        los, his = [], []
        for t in range(self.frames):
            lo, hi = self.body_mesh(t).bounds()
            los.append(lo)
            his.append(hi)
            for m in self.object_meshes(t):
                lo, hi = m.bounds()
                los.append(lo)
                his.append(hi)
        return np.min(los, axis=0) - margin, np.max(his, axis=0) + margin


def camera_ring(count: int, image_size: int, focal_scale: float = 1.0,
                radius: float = RIG_RADIUS, height: float = RIG_HEIGHT,
                target=LOOK_TARGET, start_azimuth: float = 0.0,
                id_offset: int = 0) -> list[CameraView]:
    """Cameras spaced uniformly on a circle, all looking at the rig target."""
    cams = []
    for i in range(count):
        a = start_azimuth + 2 * np.pi * i / count
        center = np.array([radius * np.cos(a), radius * np.sin(a), height])
        cams.append(look_at_camera(id_offset + i, center, target,
                                   focal=focal_scale * image_size,
                                   resolution=(image_size, image_size)))
    return cams


def _gradient_colors(vertices: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    freq = rng.uniform(2.0, 5.0, size=3)
    phase = rng.uniform(0, 2 * np.pi, size=3)
    axis = rng.normal(size=(3, 3))
    axis /= np.linalg.norm(axis, axis=1, keepdims=True)
    c = 0.5 + 0.32 * np.sin(vertices @ axis.T * freq + phase)
    return np.clip(c, 0.0, 1.0)


def _smooth_series(rng, frames, amplitude, components=2):
    """Sum of low-frequency sinusoids, one smooth scalar track."""
    t = np.arange(frames) / max(frames, 1)
    out = np.zeros(frames)
    for k in range(1, components + 1):
        out += rng.uniform(-1, 1) / k * np.sin(2 * np.pi * k * t + rng.uniform(0, 2 * np.pi))
    return amplitude * out


def _body_motion(model: BodyModel, rng, config: SceneConfig) -> BodyParams:
    T = config.frames
    J = model.num_joints
    theta = np.zeros((T, J, 3))
    scale = np.full(J, 0.35)
    scale[[0, 1, 2, 3]] = 0.12          # keep the torso mostly upright
    for j in range(J):
        for a in range(3):
            theta[:, j, a] = _smooth_series(rng, T, config.motion_amplitude * scale[j])
    beta = rng.uniform(-0.5, 0.5, size=model.num_shapes)
    trans = np.stack([
        _smooth_series(rng, T, 0.08),
        _smooth_series(rng, T, 0.08),
        _smooth_series(rng, T, 0.02),
    ], axis=1)
    if config.static_body:
        theta[:] = theta[0]
        trans[:] = trans[0]
    return BodyParams(theta, beta, trans)


def _object_trajectory(rng, frames: int) -> list[RigidPose]:
    azimuth = rng.uniform(0, 2 * np.pi)
    radius = rng.uniform(0.55, 0.85)
    base = np.array([radius * np.cos(azimuth), radius * np.sin(azimuth),
                     rng.uniform(0.35, 1.1)])
    amp = rng.uniform(0.05, 0.15, size=3)
    phase = rng.uniform(0, 2 * np.pi, size=3)
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle0 = rng.uniform(0, 2 * np.pi)
    rate = rng.uniform(-0.12, 0.12)
    poses = []
    for t in range(frames):
        s = t / max(frames, 1)
        pos = base + amp * np.sin(2 * np.pi * s + phase)
        poses.append(RigidPose.from_axis_angle(axis, angle0 + rate * t, pos))
    return poses


def _colored_template(mesh: TriangleMesh, rng) -> TriangleMesh:
    out = mesh.copy()
    base = rng.uniform(0.15, 0.9, size=3)
    jitter = 0.08 * np.sin(out.vertices @ rng.normal(size=(3, 3)).T).clip(-1, 1)
    out.colors = np.clip(base + jitter, 0.0, 1.0)
    return out


def generate_scene(seed: int, config: SceneConfig | None = None) -> SyntheticScene:
    """Deterministic scene synthesis; see SceneConfig for the knobs."""
    config = config or SceneConfig()
    config.validate()
    rng = np.random.default_rng(seed)
    model = build_body(config.body_resolution)
    params = _body_motion(model, rng, config)
    if config.body_color is not None:
        colors = np.tile(np.asarray(config.body_color, dtype=np.float64),
                         (model.num_vertices, 1))
    else:
        colors = _gradient_colors(model.template, rng)

    objects = []
    kinds = list(config.object_kinds)
    for k in range(config.objects):
        kind = kinds[rng.integers(len(kinds))]
        template = _colored_template(PRIMITIVES[kind](), rng)
        objects.append(SceneObject(template, _object_trajectory(rng, config.frames), kind))

    cams = camera_ring(config.cameras, config.image_size, config.focal_scale)
    return SyntheticScene(model, params, colors, objects, cams,
                          config.frames, config, seed)


def augment_occluders(scene: SyntheticScene, seed: int, count: int,
                      max_rejections: int = 1000) -> SyntheticScene:
    """Add `count` randomly rotated static occluders around the body.

    Placement samples a torus around the body axis and rejects poses whose
    object vertices land inside the frame-0 body mesh.
    """
    if count == 0:
        return scene
    rng = np.random.default_rng(seed)
    body0 = scene.body_mesh(0)
    kinds = list(scene.config.object_kinds)
    new_objects = list(scene.objects)
    rejections = 0
    for _ in range(count):
        while True:
            if rejections > max_rejections:
                raise PlacementError(
                    f"gave up after {max_rejections} rejected occluder placements")
            kind = kinds[rng.integers(len(kinds))]
            template = _colored_template(PRIMITIVES[kind](), rng)
            q = rng.normal(size=4)
            q /= np.linalg.norm(q)
            azimuth = rng.uniform(0, 2 * np.pi)
            radius = rng.uniform(0.45, 0.9)
            pos = np.array([radius * np.cos(azimuth), radius * np.sin(azimuth),
                            rng.uniform(0.3, 1.3)])
            pose = RigidPose(q, pos)
            verts = pose.apply(template.vertices)
            if points_inside_mesh(verts, body0).any():
                rejections += 1
                continue
            new_objects.append(SceneObject(template, [pose] * scene.frames, kind))
            break
    return replace(scene, objects=new_objects)
