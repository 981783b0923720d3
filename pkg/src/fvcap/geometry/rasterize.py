"""Software z-buffer rasterization of triangle meshes.

Pixels are sampled at their centers (integer coordinates).  Depth is
interpolated perspective-correctly (linear in 1/z), so a rasterized depth at
a pixel center equals the exact ray-triangle intersection depth for that
pixel's viewing ray.  Background pixels hold the depth sentinel 0.
"""

from __future__ import annotations

import numpy as np

from .camera import CameraView, project
from .mesh import TriangleMesh

DEPTH_SENTINEL = 0.0
_Z_NEAR = 1e-6


def rasterize(mesh: TriangleMesh, cam: CameraView,
              attributes: np.ndarray | None = None):
    """Rasterize a mesh into (depth, face_id[, attrs]).

    attributes: optional (N, C) per-vertex values, interpolated
    perspective-correctly.  face_id is -1 on background pixels.
    """
    W, H = cam.resolution
    depth = np.zeros((H, W), dtype=np.float64)
    zbuf = np.full((H, W), np.inf)
    face_id = np.full((H, W), -1, dtype=np.int64)
    attrs = None
    if attributes is not None:
        attributes = np.asarray(attributes, dtype=np.float64)
        attrs = np.zeros((H, W, attributes.shape[1]), dtype=np.float64)

    if mesh.is_empty:
        return (depth, face_id) if attrs is None else (depth, face_id, attrs)

    pix, z, _ = project(mesh.vertices, cam)
    inv_z = np.where(z > _Z_NEAR, 1.0 / np.maximum(z, _Z_NEAR), 0.0)

    tri_pix = pix[mesh.faces]          # (M, 3, 2)
    tri_z = z[mesh.faces]              # (M, 3)
    front = (tri_z > _Z_NEAR).all(axis=1)

    for fi in np.nonzero(front)[0]:
        p0, p1, p2 = tri_pix[fi]
        umin = max(int(np.ceil(min(p0[0], p1[0], p2[0]))), 0)
        umax = min(int(np.floor(max(p0[0], p1[0], p2[0]))), W - 1)
        vmin = max(int(np.ceil(min(p0[1], p1[1], p2[1]))), 0)
        vmax = min(int(np.floor(max(p0[1], p1[1], p2[1]))), H - 1)
        if umin > umax or vmin > vmax:
            continue
        area = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])
        if area == 0.0:
            continue
        us = np.arange(umin, umax + 1)
        vs = np.arange(vmin, vmax + 1)
        uu, vv = np.meshgrid(us, vs)
        w0 = ((p1[0] - uu) * (p2[1] - vv) - (p1[1] - vv) * (p2[0] - uu)) / area
        w1 = ((p2[0] - uu) * (p0[1] - vv) - (p2[1] - vv) * (p0[0] - uu)) / area
        w2 = 1.0 - w0 - w1
        inside = (w0 >= -1e-12) & (w1 >= -1e-12) & (w2 >= -1e-12)
        if not inside.any():
            continue
        iz = (
            w0 * inv_z[mesh.faces[fi, 0]]
            + w1 * inv_z[mesh.faces[fi, 1]]
            + w2 * inv_z[mesh.faces[fi, 2]]
        )
        zval = np.where(iz > 0, 1.0 / np.maximum(iz, 1e-300), np.inf)
        win = inside & (zval < zbuf[vmin:vmax + 1, umin:umax + 1])
        if not win.any():
            continue
        sub = (slice(vmin, vmax + 1), slice(umin, umax + 1))
        zbuf[sub][win] = zval[win]
        depth[sub][win] = zval[win]
        face_id[sub][win] = fi
        if attrs is not None:
            va = attributes[mesh.faces[fi]]           # (3, C)
            # perspective-correct: interpolate a/z then multiply by z
            num = (
                w0[..., None] * (va[0] * inv_z[mesh.faces[fi, 0]])
                + w1[..., None] * (va[1] * inv_z[mesh.faces[fi, 1]])
                + w2[..., None] * (va[2] * inv_z[mesh.faces[fi, 2]])
            )
            attrs[sub][win] = num[win] * zval[win][:, None]

    if attrs is None:
        return depth, face_id
    return depth, face_id, attrs


def render_depth(mesh: TriangleMesh, cam: CameraView) -> "DepthMap":
    """Z-buffer depth of a mesh; background pixels hold the sentinel 0."""
    from .warp import DepthMap

    depth, _ = rasterize(mesh, cam)
    return DepthMap(depth)


def render_color(mesh: TriangleMesh, cam: CameraView,
                 shading: str = "albedo",
                 light_dir: np.ndarray = (0.3, -0.5, 0.8),
                 ambient: float = 0.35) -> tuple[np.ndarray, "DepthMap"]:
    """Render per-vertex colors; `shading` is "albedo" (unlit) or "lambert".

    Lambert shading uses a fixed directional light and depends only on the
    surface normal, so the shaded color of a surface point is the same from
    every viewpoint.
    """
    from .warp import DepthMap

    if mesh.colors is None:
        raise ValueError("mesh has no vertex colors")
    shade = np.ones(len(mesh.vertices))
    if shading == "lambert":
        n = mesh.vertex_normals()
        l = np.asarray(light_dir, dtype=np.float64)
        l = l / np.linalg.norm(l)
        shade = ambient + (1.0 - ambient) * np.clip(n @ l, 0.0, None)
    elif shading != "albedo":
        raise ValueError(f"unknown shading mode {shading!r}")
    attrs = np.clip(mesh.colors * shade[:, None], 0.0, 1.0)
    depth, _, img = rasterize(mesh, cam, attrs)
    return np.clip(img, 0.0, 1.0), DepthMap(depth)
