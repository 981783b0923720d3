"""Voxel grids, mesh voxelization and iso-surface extraction.

Grid values sample the field at lattice points ``origin + index * spacing``.
Inside/outside tests use ray-crossing parity along three axis-aligned
directions with a majority vote; the rays are offset by a fixed sub-spacing
jitter so they never pass exactly through mesh vertices or edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonWatertight
from .mesh import TriangleMesh

# transverse ray offsets, as a fraction of grid spacing
_JITTER = (4.9813e-4, 7.3105e-4)


@dataclass
class VoxelGrid:
    """Scalar field on a regular lattice: origin (3,), spacing, values (X,Y,Z)."""

    origin: np.ndarray
    spacing: float
    values: np.ndarray

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.spacing <= 0:
            raise ValueError("spacing must be > 0")
        if self.values.ndim != 3:
            raise ValueError("values must be (X, Y, Z)")

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(self.values.shape)

    def axis_coords(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.spacing * np.arange(self.values.shape[axis])

    def lattice_points(self) -> np.ndarray:
        """All sample positions, shape (X*Y*Z, 3), C-order of values."""
        xs, ys, zs = (self.axis_coords(a) for a in range(3))
        gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
        return np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        hi = self.origin + self.spacing * (np.array(self.values.shape) - 1)
        return self.origin.copy(), hi

    @classmethod
    def from_bounds(cls, lo, hi, max_dim: int) -> "VoxelGrid":
        """Empty grid covering [lo, hi] with `max_dim` samples on the longest axis."""
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        extent = hi - lo
        spacing = float(extent.max()) / (max_dim - 1)
        dims = np.maximum(np.floor(extent / spacing + 1e-9).astype(int) + 1, 2)
        return cls(lo, spacing, np.zeros(tuple(dims)))


def _crossings_along_axis(mesh: TriangleMesh, coords_a, coords_b, axis: int,
                          jitter: tuple[float, float]):
    """Ray-crossing heights for vertical-in-`axis` rays on an (A, B) lattice.

    Returns (col_index, height) arrays where col = ia * len(coords_b) + ib.
    The two transverse axes are the other two in ascending order.
    """
    ax_a, ax_b = [a for a in range(3) if a != axis]
    V = mesh.vertices
    tri = V[mesh.faces]                      # (M, 3, 3)
    n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    keep = np.abs(n[:, axis]) > 1e-14
    tri = tri[keep]
    n = n[keep]
    d = np.einsum("mk,mk->m", n, tri[:, 0])

    a_pos = np.asarray(coords_a) + jitter[0]
    b_pos = np.asarray(coords_b) + jitter[1]
    cols, heights = [], []
    for m in range(len(tri)):
        ta = tri[m, :, ax_a]
        tb = tri[m, :, ax_b]
        ia = np.nonzero((a_pos >= ta.min()) & (a_pos <= ta.max()))[0]
        ib = np.nonzero((b_pos >= tb.min()) & (b_pos <= tb.max()))[0]
        if len(ia) == 0 or len(ib) == 0:
            continue
        pa, pb = np.meshgrid(a_pos[ia], b_pos[ib], indexing="ij")
        # 2-D point-in-triangle via signed edge functions
        x0, y0 = ta[0], tb[0]
        x1, y1 = ta[1], tb[1]
        x2, y2 = ta[2], tb[2]
        e0 = (x1 - x0) * (pb - y0) - (y1 - y0) * (pa - x0)
        e1 = (x2 - x1) * (pb - y1) - (y2 - y1) * (pa - x1)
        e2 = (x0 - x2) * (pb - y2) - (y0 - y2) * (pa - x2)
        inside = ((e0 >= 0) & (e1 >= 0) & (e2 >= 0)) | ((e0 <= 0) & (e1 <= 0) & (e2 <= 0))
        if not inside.any():
            continue
        sa, sb = np.nonzero(inside)
        aa = pa[sa, sb]
        bb = pb[sa, sb]
        h = (d[m] - n[m, ax_a] * aa - n[m, ax_b] * bb) / n[m, axis]
        cols.append(ia[sa] * len(b_pos) + ib[sb])
        heights.append(h)
    if not cols:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    return np.concatenate(cols), np.concatenate(heights)


def _parity_grid(mesh: TriangleMesh, grid: VoxelGrid, axis: int) -> np.ndarray:
    """Inside mask (X, Y, Z) by crossing parity along one axis."""
    ax_a, ax_b = [a for a in range(3) if a != axis]
    coords_a = grid.axis_coords(ax_a)
    coords_b = grid.axis_coords(ax_b)
    coords_r = grid.axis_coords(axis)
    jit = (grid.spacing * _JITTER[0], grid.spacing * _JITTER[1])
    cols, heights = _crossings_along_axis(mesh, coords_a, coords_b, axis, jit)

    inside_cols = np.zeros((len(coords_a) * len(coords_b), len(coords_r)), dtype=bool)
    if len(cols):
        order = np.lexsort((heights, cols))
        cols = cols[order]
        heights = heights[order]
        starts = np.searchsorted(cols, np.unique(cols))
        uniq = np.unique(cols)
        bounds = np.append(starts, len(cols))
        for i, col in enumerate(uniq):
            h = heights[bounds[i]:bounds[i + 1]]
            # parity of crossings strictly below each sample
            below = np.searchsorted(h, coords_r, side="left")
            inside_cols[col] = (below % 2) == 1
    shape = [0, 0, 0]
    shape[ax_a] = len(coords_a)
    shape[ax_b] = len(coords_b)
    shape[axis] = len(coords_r)
    out = inside_cols.reshape(len(coords_a), len(coords_b), len(coords_r))
    # reorder (a, b, r) -> (x, y, z)
    perm = np.argsort([ax_a, ax_b, axis])
    return np.transpose(out, perm)


def voxelize_mesh(mesh: TriangleMesh, grid: VoxelGrid,
                  max_disagreement: float = 1e-3) -> VoxelGrid:
    """Occupancy of `mesh` sampled on `grid` (1 inside, 0 outside).

    Raises NonWatertight when the three directional parity votes disagree on
    more than `max_disagreement` of the cells.
    """
    votes = np.stack([_parity_grid(mesh, grid, axis) for axis in range(3)])
    agree = (votes[0] == votes[1]) & (votes[1] == votes[2])
    frac_bad = 1.0 - agree.mean()
    if frac_bad > max_disagreement:
        raise NonWatertight(
            f"parity votes disagree on {frac_bad:.2%} of cells (> {max_disagreement:.2%})"
        )
    inside = votes.sum(axis=0) >= 2
    return VoxelGrid(grid.origin, grid.spacing, inside.astype(np.float64))


def points_inside_mesh(points: np.ndarray, mesh: TriangleMesh,
                       chunk_bytes: float = 2e8) -> np.ndarray:
    """Inside test for arbitrary points: 3-direction crossing parity, majority vote."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    a, b, c = mesh.face_corners()
    n = np.cross(b - a, c - a)
    d = np.einsum("mk,mk->m", n, a)
    M = len(mesh.faces)
    votes = np.zeros((3, len(pts)), dtype=np.int64)
    scale = float(np.linalg.norm(mesh.vertices.max(0) - mesh.vertices.min(0)))
    for axis in range(3):
        ax_a, ax_b = [k for k in range(3) if k != axis]
        good = np.abs(n[:, axis]) > 1e-14
        ta = mesh.vertices[mesh.faces[good]][:, :, ax_a]
        tb = mesh.vertices[mesh.faces[good]][:, :, ax_b]
        nn, dd = n[good], d[good]
        # micro-jitter: avoids rays through vertices/edges without moving the
        # query by more than a few microns at scene scale
        jit_a = scale * _JITTER[0] * 2e-3
        jit_b = scale * _JITTER[1] * 2e-3
        step = max(1, int(chunk_bytes / (max(M, 1) * 8 * 6)))
        for i in range(0, len(pts), step):
            p = pts[i:i + step]
            pa = p[:, ax_a][:, None] + jit_a
            pb = p[:, ax_b][:, None] + jit_b
            x0, y0 = ta[None, :, 0], tb[None, :, 0]
            x1, y1 = ta[None, :, 1], tb[None, :, 1]
            x2, y2 = ta[None, :, 2], tb[None, :, 2]
            e0 = (x1 - x0) * (pb - y0) - (y1 - y0) * (pa - x0)
            e1 = (x2 - x1) * (pb - y1) - (y2 - y1) * (pa - x1)
            e2 = (x0 - x2) * (pb - y2) - (y0 - y2) * (pa - x2)
            inside2d = ((e0 >= 0) & (e1 >= 0) & (e2 >= 0)) | (
                (e0 <= 0) & (e1 <= 0) & (e2 <= 0))
            h = (dd[None, :] - nn[None, :, ax_a] * pa - nn[None, :, ax_b] * pb) \
                / nn[None, :, axis]
            above = inside2d & (h > p[:, axis][:, None])
            votes[axis, i:i + step] = above.sum(axis=1)
    odd = (votes % 2) == 1
    return odd.sum(axis=0) >= 2


def signed_volume(mesh: TriangleMesh) -> float:
    """Signed enclosed volume; positive for outward-oriented closed meshes."""
    a, b, c = mesh.face_corners()
    return float(np.einsum("mk,mk->m", a, np.cross(b, c)).sum() / 6.0)


def extract_surface(grid: VoxelGrid, iso: float = 0.5) -> TriangleMesh:
    """Marching-cubes triangulation of the iso level set (empty mesh if none).

    Faces are reoriented outward (positive signed volume) so downstream
    normal-based shading and visibility tests are consistent.
    """
    from skimage import measure

    if not (0 < iso < 1):
        raise ValueError("iso level must be in (0, 1)")
    vals = grid.values
    if vals.min() >= iso or vals.max() < iso:
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    verts, faces, _, _ = measure.marching_cubes(
        vals, level=iso, spacing=(grid.spacing,) * 3)
    mesh = TriangleMesh(verts + grid.origin, faces.astype(np.int64))
    if signed_volume(mesh) < 0:
        mesh.faces = mesh.faces[:, [0, 2, 1]]
    return mesh


class OccupancyField:
    """Trilinear interpolation of a voxel occupancy grid, queryable in numpy
    or differentiably in torch (used by the interpenetration term)."""

    def __init__(self, grid: VoxelGrid):
        self.grid = grid
        self._torch_vol = None

    def sample(self, points: np.ndarray) -> np.ndarray:
        from scipy.ndimage import map_coordinates

        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        idx = (pts - self.grid.origin) / self.grid.spacing
        return map_coordinates(self.grid.values, idx.T, order=1, mode="constant",
                               cval=0.0)

    def sample_torch(self, points):
        """points: (N, 3) torch tensor in world meters -> (N,) occupancy."""
        import torch
        import torch.nn.functional as F

        if self._torch_vol is None or self._torch_vol.dtype != points.dtype:
            vol = torch.as_tensor(self.grid.values, dtype=points.dtype)
            self._torch_vol = vol[None, None]  # (1, 1, X, Y, Z)
        dims = torch.as_tensor(self.grid.values.shape, dtype=points.dtype)
        origin = torch.as_tensor(self.grid.origin, dtype=points.dtype)
        idx = (points - origin) / self.grid.spacing
        norm = 2.0 * idx / (dims - 1.0) - 1.0
        # grid_sample's last grid dim orders (W, H, D) = (z, y, x) for our layout
        g = torch.stack([norm[:, 2], norm[:, 1], norm[:, 0]], dim=-1)
        g = g.view(1, -1, 1, 1, 3)
        out = F.grid_sample(self._torch_vol, g, mode="bilinear",
                            padding_mode="zeros", align_corners=True)
        return out.reshape(-1)
