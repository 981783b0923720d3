"""Vectorized ray/segment vs triangle-mesh intersection (Moller-Trumbore)."""

from __future__ import annotations

import numpy as np

from .mesh import TriangleMesh

_EPS = 1e-12


def _first_hit_chunk(origins, dirs, v0, e1, e2, t_min, t_max):
    """First-hit parameter t per ray against all triangles; inf if none."""
    # origins/dirs: (R, 3); v0/e1/e2: (M, 3)
    p = np.cross(dirs[:, None, :], e2[None, :, :])          # (R, M, 3)
    det = np.einsum("mk,rmk->rm", e1, p)
    ok = np.abs(det) > _EPS
    inv_det = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    s = origins[:, None, :] - v0[None, :, :]
    u = np.einsum("rmk,rmk->rm", s, p) * inv_det
    q = np.cross(s, e1[None, :, :])
    v = np.einsum("rk,rmk->rm", dirs, q) * inv_det
    t = np.einsum("mk,rmk->rm", e2, q) * inv_det
    hit = ok & (u >= 0) & (v >= 0) & (u + v <= 1) & (t > t_min) & (t < t_max)
    t = np.where(hit, t, np.inf)
    return t.min(axis=1)


def first_hit(origins: np.ndarray, dirs: np.ndarray, mesh: TriangleMesh,
              t_min: float = 1e-9, t_max: float = np.inf,
              chunk: int = 512) -> np.ndarray:
    """Smallest intersection parameter t per ray (inf where no hit)."""
    origins = np.atleast_2d(np.asarray(origins, dtype=np.float64))
    dirs = np.atleast_2d(np.asarray(dirs, dtype=np.float64))
    if mesh.is_empty:
        return np.full(len(origins), np.inf)
    a, b, c = mesh.face_corners()
    e1, e2 = b - a, c - a
    out = np.empty(len(origins))
    for i in range(0, len(origins), chunk):
        sl = slice(i, i + chunk)
        out[sl] = _first_hit_chunk(origins[sl], dirs[sl], a, e1, e2, t_min, t_max)
    return out


def segment_blocked(start: np.ndarray, ends: np.ndarray, mesh: TriangleMesh,
                    margin: float = 1e-6) -> np.ndarray:
    """True per end point when the open segment start->end hits the mesh.

    `margin` excludes hits within a relative distance of either endpoint so
    that querying points lying exactly on the mesh does not self-block.
    """
    ends = np.atleast_2d(np.asarray(ends, dtype=np.float64))
    starts = np.broadcast_to(np.asarray(start, dtype=np.float64), ends.shape)
    dirs = ends - starts
    t = first_hit(starts, dirs, mesh, t_min=margin, t_max=1.0 - margin)
    return np.isfinite(t)
