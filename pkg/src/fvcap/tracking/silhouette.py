"""Differentiable soft silhouette rendering under perspective projection.

Per-pixel coverage probability: 1 - prod_f (1 - sigmoid(d_f / sharpness)),
where d_f is the signed 2D distance (in normalized image units, positive
inside) from the pixel center to face f's projection.  Gradients flow to
the pose through the projected vertex positions.
"""

from __future__ import annotations

import numpy as np
import torch

from ..geometry.camera import CameraView
from ..geometry.mesh import TriangleMesh
from .pose import RigidPose


def quat_to_matrix_torch(q: torch.Tensor) -> torch.Tensor:
    w, x, y, z = q[0], q[1], q[2], q[3]
    row0 = torch.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)])
    row1 = torch.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)])
    row2 = torch.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)])
    return torch.stack([row0, row1, row2])


def transform_vertices(vertices: torch.Tensor, quaternion: torch.Tensor,
                       translation: torch.Tensor) -> torch.Tensor:
    q = quaternion / quaternion.norm()
    return vertices @ quat_to_matrix_torch(q).T + translation


def _project_normalized(points: torch.Tensor, cam: CameraView):
    """Project to image coordinates scaled into [0, 1] on the long side."""
    R = torch.as_tensor(cam.rotation, dtype=points.dtype)
    t = torch.as_tensor(cam.translation, dtype=points.dtype)
    pc = points @ R.T + t
    z = pc[:, 2]
    safe = z.clamp_min(1e-6)
    fx, fy = cam.focal
    cx, cy = cam.principal
    u = fx * pc[:, 0] / safe + cx
    v = fy * pc[:, 1] / safe + cy
    scale = float(max(cam.resolution))
    return torch.stack([u / scale, v / scale], dim=-1), z


def _point_segment_distance(p, a, b):
    """p: (P, 1, 2), a/b: (1, F, 2) -> (P, F)."""
    ab = b - a
    denom = (ab * ab).sum(-1).clamp_min(1e-12)
    t = (((p - a) * ab).sum(-1) / denom).clamp(0.0, 1.0)
    closest = a + t[..., None] * ab
    return (p - closest).norm(dim=-1)


def signed_face_distances(pixels: torch.Tensor, tri: torch.Tensor) -> torch.Tensor:
    """pixels (P, 2), tri (F, 3, 2) -> signed distance (P, F), + inside."""
    p = pixels[:, None, :]
    a = tri[None, :, 0]
    b = tri[None, :, 1]
    c = tri[None, :, 2]
    d = torch.minimum(_point_segment_distance(p, a, b),
                      torch.minimum(_point_segment_distance(p, b, c),
                                    _point_segment_distance(p, c, a)))
    e0 = (b[..., 0] - a[..., 0]) * (p[..., 1] - a[..., 1]) \
        - (b[..., 1] - a[..., 1]) * (p[..., 0] - a[..., 0])
    e1 = (c[..., 0] - b[..., 0]) * (p[..., 1] - b[..., 1]) \
        - (c[..., 1] - b[..., 1]) * (p[..., 0] - b[..., 0])
    e2 = (a[..., 0] - c[..., 0]) * (p[..., 1] - c[..., 1]) \
        - (a[..., 1] - c[..., 1]) * (p[..., 0] - c[..., 0])
    inside = ((e0 >= 0) & (e1 >= 0) & (e2 >= 0)) | ((e0 <= 0) & (e1 <= 0) & (e2 <= 0))
    sign = torch.where(inside, 1.0, -1.0).to(pixels.dtype)
    return sign * d


# default sharpness in normalized image units; roughly a pixel of blur at
# typical desk resolutions (a much sharper setting starves the optimizer of
# gradients between pixel centers)
DEFAULT_SHARPNESS = 1e-2


def _coverage(pixels: torch.Tensor, pix_verts: torch.Tensor,
              faces: torch.Tensor, sharpness: float,
              face_chunk: int = 512) -> torch.Tensor:
    """Coverage probability per pixel (P,) from projected vertices."""
    if len(faces) == 0:
        return torch.zeros(len(pixels), dtype=pixels.dtype)
    log_miss = torch.zeros(len(pixels), dtype=pixels.dtype)
    for i in range(0, len(faces), face_chunk):
        tri = pix_verts[faces[i:i + face_chunk]]
        d = signed_face_distances(pixels, tri)
        cover = torch.sigmoid(d / sharpness)
        log_miss = log_miss + torch.log1p(-cover.clamp(max=1 - 1e-12)).sum(dim=1)
    return 1.0 - torch.exp(log_miss)


def _front_faces(template: TriangleMesh, z: torch.Tensor,
                 world: torch.Tensor, cam: CameraView) -> torch.Tensor:
    """Faces fully in front of the camera and not back-facing.

    Back faces project onto the same silhouette edges as their front
    neighbors; keeping them would double the union coverage exactly at the
    silhouette boundary and bias the optimum.
    """
    faces = torch.as_tensor(template.faces, dtype=torch.long)
    front = (z[faces] > 1e-6).all(dim=1)
    with torch.no_grad():
        tri = world[faces]
        n = torch.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0], dim=1)
        center = torch.as_tensor(cam.center, dtype=world.dtype)
        toward = (tri.mean(dim=1) - center)
        visible = (n * toward).sum(dim=1) < 0
    return faces[front & visible]


def soft_silhouette(template: TriangleMesh, quaternion: torch.Tensor,
                    translation: torch.Tensor, cam: CameraView,
                    sharpness: float = DEFAULT_SHARPNESS) -> torch.Tensor:
    """(H, W) coverage probabilities, differentiable w.r.t. the pose tensors."""
    if sharpness <= 0:
        raise ValueError("sharpness must be > 0")
    dtype = quaternion.dtype
    verts = torch.as_tensor(template.vertices, dtype=dtype)
    world = transform_vertices(verts, quaternion, translation)
    pix, z = _project_normalized(world, cam)
    faces = _front_faces(template, z, world, cam)

    W, H = cam.resolution
    scale = float(max(W, H))
    ys, xs = torch.meshgrid(torch.arange(H, dtype=dtype),
                            torch.arange(W, dtype=dtype), indexing="ij")
    pixels = torch.stack([xs.reshape(-1), ys.reshape(-1)], dim=-1) / scale
    return _coverage(pixels, pix, faces, sharpness).reshape(H, W)


def hard_silhouette(template: TriangleMesh, pose: RigidPose,
                    cam: CameraView) -> np.ndarray:
    """Z-buffer coverage mask, the sharp reference for the soft version."""
    from ..geometry.rasterize import render_depth

    mesh = template.transformed(pose.rotation, pose.translation)
    return render_depth(mesh, cam).mask
