"""Training-point sampling and the occlusion tag for the occupancy loss.

Surface samples are body-surface points plus isotropic Gaussian offsets at
the active stage's sigmas; uniform samples cover the scene bounding box.
The surface:uniform count ratio is 16:1.  A point is tagged occluded when
no camera sees it: in every view its projection is off-image, behind the
camera, or blocked by object geometry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry.camera import in_image, project
from ..geometry.mesh import sample_surface
from ..geometry.raycast import segment_blocked
from ..geometry.voxel import points_inside_mesh
from .scene import SyntheticScene

SURFACE_TO_UNIFORM = 16


@dataclass
class SampleBatch:
    points: np.ndarray          # (N, 3) world meters
    occupancy_gt: np.ndarray    # (N,) in {0, 1}
    occluded: np.ndarray | None = None   # (N,) bool once tagged

    def __len__(self):
        return len(self.points)


def split_counts(total: int) -> tuple[int, int]:
    """(surface, uniform) counts at the 16:1 ratio."""
    uniform = max(total // (SURFACE_TO_UNIFORM + 1), 1)
    return total - uniform, uniform


def sample_points(scene: SyntheticScene, frame: int, total: int,
                  sigmas=(0.03, 0.06), rng=None) -> SampleBatch:
    """Draw `total` labeled occupancy samples for one frame."""
    rng = rng or np.random.default_rng(0)
    body = scene.body_mesh(frame)
    n_surface, n_uniform = split_counts(total)

    per_sigma = np.full(len(sigmas), n_surface // len(sigmas))
    per_sigma[0] += n_surface - per_sigma.sum()
    chunks = []
    for sigma, n in zip(sigmas, per_sigma):
        base, _, _ = sample_surface(body, int(n), rng)
        chunks.append(base + rng.normal(scale=sigma, size=(int(n), 3)))
    lo, hi = scene.bounds()
    chunks.append(rng.uniform(lo, hi, size=(n_uniform, 3)))
    points = np.concatenate(chunks, axis=0)

    occ = points_inside_mesh(points, body).astype(np.float64)
    return SampleBatch(points, occ)


def tag_visibility(batch: SampleBatch, scene: SyntheticScene,
                   frame: int) -> SampleBatch:
    """Tag each sample occluded/visible against the frame's object geometry."""
    obstacles = scene.merged_objects(frame)
    seen = np.zeros(len(batch), dtype=bool)
    for cam in scene.cameras:
        pix, z, valid = project(batch.points, cam)
        candidate = valid & in_image(pix, cam.resolution)
        if not candidate.any():
            continue
        if obstacles.is_empty:
            seen |= candidate
            continue
        idx = np.nonzero(candidate)[0]
        blocked = segment_blocked(cam.center, batch.points[idx], obstacles)
        seen[idx[~blocked]] = True
    batch.occluded = ~seen
    return batch
