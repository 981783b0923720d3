"""Independent brute-force oracles used by the tests.

These deliberately re-derive results through different algorithms than the
package (homogeneous matrix pipelines, generalized winding numbers, per-ray
Moller-Trumbore loops, per-point splatting) so that agreement is meaningful.
"""

from __future__ import annotations

import numpy as np


def project_matrix_oracle(point, cam):
    """Projection via an explicit 4x4 homogeneous pipeline."""
    E = np.eye(4)
    E[:3, :3] = cam.rotation
    E[:3, 3] = cam.translation
    fx, fy = cam.focal
    cx, cy = cam.principal
    K = np.array([
        [fx, 0, cx, 0],
        [0, fy, cy, 0],
        [0, 0, 1, 0],
        [0, 0, 0, 1],
    ])
    ph = np.array([point[0], point[1], point[2], 1.0])
    q = K @ (E @ ph)
    depth = q[2]
    return np.array([q[0] / depth, q[1] / depth]), depth


def winding_number(points, mesh, chunk=256):
    """Generalized winding number (sum of signed solid angles / 4 pi)."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    tri = mesh.vertices[mesh.faces]  # (M, 3, 3)
    out = np.empty(len(pts))
    for i in range(0, len(pts), chunk):
        p = pts[i:i + chunk]
        a = tri[None, :, 0] - p[:, None]
        b = tri[None, :, 1] - p[:, None]
        c = tri[None, :, 2] - p[:, None]
        la = np.linalg.norm(a, axis=-1)
        lb = np.linalg.norm(b, axis=-1)
        lc = np.linalg.norm(c, axis=-1)
        det = np.einsum("pmk,pmk->pm", a, np.cross(b, c))
        denom = (
            la * lb * lc
            + np.einsum("pmk,pmk->pm", a, b) * lc
            + np.einsum("pmk,pmk->pm", b, c) * la
            + np.einsum("pmk,pmk->pm", c, a) * lb
        )
        omega = 2.0 * np.arctan2(det, denom)
        out[i:i + chunk] = omega.sum(axis=1) / (4.0 * np.pi)
    return out


def inside_by_winding(points, mesh):
    return winding_number(points, mesh) > 0.5


def _ray_tri_scalar(orig, d, v0, v1, v2):
    """Scalar Moller-Trumbore; returns t or None."""
    e1 = v1 - v0
    e2 = v2 - v0
    p = np.cross(d, e2)
    det = e1 @ p
    if abs(det) < 1e-13:
        return None
    inv = 1.0 / det
    s = orig - v0
    u = (s @ p) * inv
    if u < 0 or u > 1:
        return None
    q = np.cross(s, e1)
    v = (d @ q) * inv
    if v < 0 or u + v > 1:
        return None
    t = (e2 @ q) * inv
    return t if t > 1e-9 else None


def raycast_depth_oracle(mesh, cam):
    """Render a depth map by casting one ray per pixel through every triangle."""
    W, H = cam.resolution
    fx, fy = cam.focal
    cx, cy = cam.principal
    Rt = cam.rotation.T
    center = cam.center
    tri = mesh.vertices[mesh.faces]
    depth = np.zeros((H, W))
    for v in range(H):
        for u in range(W):
            d_cam = np.array([(u - cx) / fx, (v - cy) / fy, 1.0])
            d_world = Rt @ d_cam
            best = np.inf
            for m in range(len(tri)):
                t = _ray_tri_scalar(center, d_world, tri[m, 0], tri[m, 1], tri[m, 2])
                if t is not None and t < best:
                    best = t
            if np.isfinite(best):
                depth[v, u] = best  # t parametrizes z because d_cam.z == 1
    return depth


def segment_hits_mesh_oracle(start, end, mesh, margin=1e-6):
    """Loop-based occlusion test for the open segment start->end."""
    d = end - start
    tri = mesh.vertices[mesh.faces]
    for m in range(len(tri)):
        t = _ray_tri_scalar(start, d, tri[m, 0], tri[m, 1], tri[m, 2])
        if t is not None and margin < t < 1 - margin:
            return True
    return False


def warp_depth_oracle(src, src_cam, dst_cam):
    """Per-pixel loop version of forward depth splatting."""
    from fvcap.geometry import project, unproject

    H, W = src.values.shape
    dW, dH = dst_cam.resolution
    out = np.full((dH, dW), np.inf)
    for v in range(H):
        for u in range(W):
            z = src.values[v, u]
            if z == 0.0:
                continue
            world = unproject(np.array([u, v], dtype=float), z, src_cam)
            pix, depth, valid = project(world, dst_cam)
            if not valid:
                continue
            du, dv = int(round(pix[0])), int(round(pix[1]))
            if 0 <= du < dW and 0 <= dv < dH and depth < out[dv, du]:
                out[dv, du] = depth
    out[~np.isfinite(out)] = 0.0
    return out
