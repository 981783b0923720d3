"""The bundled body: a 16-joint capsule-union figure.

The template surface is extracted by marching cubes from a capsule-union
distance field, which guarantees a single closed manifold (the parity
inside-tests elsewhere depend on that).  Skinning weights fall off with
distance to each bone capsule; two blendshapes modify girth (normal-direction
inflation) and height (vertical scaling about the feet).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..geometry.mesh import TriangleMesh
from ..geometry.voxel import VoxelGrid, extract_surface
from .model import BodyModel

JOINT_NAMES = [
    "pelvis", "spine", "chest", "head",
    "l_shoulder", "l_elbow", "l_wrist",
    "r_shoulder", "r_elbow", "r_wrist",
    "l_hip", "l_knee", "l_ankle",
    "r_hip", "r_knee", "r_ankle",
]

PARENTS = np.array([-1, 0, 1, 2, 2, 4, 5, 2, 7, 8, 0, 10, 11, 0, 13, 14])

JOINT_REST = np.array([
    [0.00, 0.0, 0.95],   # pelvis
    [0.00, 0.0, 1.14],   # spine
    [0.00, 0.0, 1.32],   # chest
    [0.00, 0.0, 1.50],   # head
    [0.18, 0.0, 1.42],   # l_shoulder
    [0.46, 0.0, 1.42],   # l_elbow
    [0.70, 0.0, 1.42],   # l_wrist
    [-0.18, 0.0, 1.42],  # r_shoulder
    [-0.46, 0.0, 1.42],  # r_elbow
    [-0.70, 0.0, 1.42],  # r_wrist
    [0.09, 0.0, 0.88],   # l_hip
    [0.09, 0.0, 0.48],   # l_knee
    [0.09, 0.0, 0.08],   # l_ankle
    [-0.09, 0.0, 0.88],  # r_hip
    [-0.09, 0.0, 0.48],  # r_knee
    [-0.09, 0.0, 0.08],  # r_ankle
])

# capsules: (start point, end point, radius, driving joint index)
_J = {n: JOINT_REST[i] for i, n in enumerate(JOINT_NAMES)}
_CAPSULES = [
    (_J["pelvis"] + [0, 0, -0.04], _J["spine"], 0.130, 0),
    (_J["spine"], _J["chest"], 0.120, 1),
    (_J["chest"], _J["chest"] + [0, 0, 0.12], 0.105, 2),
    (_J["head"] + [0, 0, 0.02], _J["head"] + [0, 0, 0.14], 0.090, 3),
    (_J["chest"] + [0.05, 0, 0.09], _J["l_shoulder"], 0.055, 2),
    (_J["l_shoulder"], _J["l_elbow"], 0.046, 4),
    (_J["l_elbow"], _J["l_wrist"], 0.038, 5),
    (_J["l_wrist"], _J["l_wrist"] + [0.09, 0, 0], 0.035, 6),
    (_J["chest"] + [-0.05, 0, 0.09], _J["r_shoulder"], 0.055, 2),
    (_J["r_shoulder"], _J["r_elbow"], 0.046, 7),
    (_J["r_elbow"], _J["r_wrist"], 0.038, 8),
    (_J["r_wrist"], _J["r_wrist"] + [-0.09, 0, 0], 0.035, 9),
    (_J["l_hip"], _J["l_knee"], 0.068, 10),
    (_J["l_knee"], _J["l_ankle"], 0.052, 11),
    (_J["l_ankle"], _J["l_ankle"] + [0, 0.14, -0.035], 0.040, 12),
    (_J["r_hip"], _J["r_knee"], 0.068, 13),
    (_J["r_knee"], _J["r_ankle"], 0.052, 14),
    (_J["r_ankle"], _J["r_ankle"] + [0, 0.14, -0.035], 0.040, 15),
]

_HEIGHT = 1.7


def _segment_distances(points: np.ndarray, a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ab = b - a
    denom = float(ab @ ab)
    t = ((points - a) @ ab) / denom if denom > 0 else np.zeros(len(points))
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[:, None] * ab
    return np.linalg.norm(points - closest, axis=1)


def _union_sdf(points: np.ndarray) -> np.ndarray:
    d = np.full(len(points), np.inf)
    for a, b, r, _ in _CAPSULES:
        d = np.minimum(d, _segment_distances(points, a, b) - r)
    return d


def _skinning_weights(vertices: np.ndarray, sigma: float = 0.035,
                      keep: int = 4) -> np.ndarray:
    V = len(vertices)
    J = len(JOINT_REST)
    raw = np.zeros((V, J))
    for a, b, r, joint in _CAPSULES:
        d = np.maximum(_segment_distances(vertices, a, b) - r, 0.0)
        raw[:, joint] = np.maximum(raw[:, joint], np.exp(-((d / sigma) ** 2)))
    # keep the top-k joints per vertex, renormalize
    idx = np.argsort(raw, axis=1)[:, :-keep]
    np.put_along_axis(raw, idx, 0.0, axis=1)
    total = raw.sum(axis=1, keepdims=True)
    total[total == 0] = 1.0
    return raw / total


@lru_cache(maxsize=4)
def _cached_build(spacing: float):
    margin = 0.16
    los = JOINT_REST.min(axis=0)
    his = JOINT_REST.max(axis=0)
    lo = los - margin - np.array([0, 0.0, 0.08])
    hi = his + margin + np.array([0, 0.16, 0.18])
    dims = np.ceil((hi - lo) / spacing).astype(int) + 1
    grid = VoxelGrid(lo, spacing, np.zeros(tuple(dims)))
    sdf = _union_sdf(grid.lattice_points()).reshape(grid.dims)
    # occupancy in [0, 1]: inside where sdf < 0
    occ = VoxelGrid(lo, spacing, 1.0 / (1.0 + np.exp(sdf / (0.25 * spacing))))
    mesh = extract_surface(occ, iso=0.5)

    weights = _skinning_weights(mesh.vertices)

    # blendshape 0: girth (inflate along the local SDF gradient)
    eps = 1e-4
    grad = np.stack([
        _union_sdf(mesh.vertices + [eps, 0, 0]) - _union_sdf(mesh.vertices - [eps, 0, 0]),
        _union_sdf(mesh.vertices + [0, eps, 0]) - _union_sdf(mesh.vertices - [0, eps, 0]),
        _union_sdf(mesh.vertices + [0, 0, eps]) - _union_sdf(mesh.vertices - [0, 0, eps]),
    ], axis=1) / (2 * eps)
    norm = np.linalg.norm(grad, axis=1, keepdims=True)
    norm[norm == 0] = 1.0
    girth = 0.05 * grad / norm

    # blendshape 1: height (scale z about the ground plane)
    height = np.zeros_like(mesh.vertices)
    height[:, 2] = 0.08 * mesh.vertices[:, 2] / _HEIGHT

    shape_dirs = np.stack([girth, height])
    joint_dirs = np.zeros((2, len(JOINT_REST), 3))
    joint_dirs[1, :, 2] = 0.08 * JOINT_REST[:, 2] / _HEIGHT

    return BodyModel(
        template=mesh.vertices, faces=mesh.faces, parents=PARENTS,
        joint_rest=JOINT_REST, weights=weights, shape_dirs=shape_dirs,
        joint_dirs=joint_dirs, joint_names=list(JOINT_NAMES))


def build_body(resolution: str | float = "default") -> BodyModel:
    """Construct the bundled body.

    resolution: "default" (~6k vertices), "low" (~1.5k, for fast tests),
    or an explicit grid spacing in meters.
    """
    spacing = {"default": 0.021, "low": 0.042}.get(resolution, resolution)
    model = _cached_build(float(spacing))
    # hand back copies so callers can't mutate the cache
    return BodyModel(
        model.template.copy(), model.faces.copy(), model.parents.copy(),
        model.joint_rest.copy(), model.weights.copy(), model.shape_dirs.copy(),
        model.joint_dirs.copy(), list(model.joint_names))


def template_mesh(model: BodyModel) -> TriangleMesh:
    return TriangleMesh(model.template.copy(), model.faces.copy())
