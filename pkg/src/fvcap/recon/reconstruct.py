"""Dense grid evaluation of the occupancy net and surface extraction."""

from __future__ import annotations

import numpy as np

from ..errors import EmptyField
from ..geometry.mesh import TriangleMesh
from ..geometry.voxel import VoxelGrid, extract_surface
from .net import OccupancyNet, query_occupancy


def largest_component(mesh: TriangleMesh) -> TriangleMesh:
    """Keep the connected component with the most faces (drops floaters)."""
    if mesh.is_empty:
        return mesh
    import scipy.sparse as sp
    from scipy.sparse.csgraph import connected_components

    edges = mesh.edges()
    n = len(mesh.vertices)
    adj = sp.coo_matrix(
        (np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    face_labels = labels[mesh.faces[:, 0]]
    best = np.bincount(face_labels).argmax()
    keep_faces = mesh.faces[face_labels == best]
    used = np.unique(keep_faces)
    remap = np.full(n, -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return TriangleMesh(mesh.vertices[used], remap[keep_faces],
                        None if mesh.colors is None else mesh.colors[used])


def reconstruct_mesh(net: OccupancyNet, images: np.ndarray, cams,
                     prior: VoxelGrid, resolution: int = 128,
                     iso: float = 0.5, margin_frac: float = 0.08,
                     keep_largest: bool = True) -> TriangleMesh:
    """Query the net on a dense grid over the prior bbox, extract iso 0.5.

    keep_largest drops disconnected floater blobs, which show up where the
    conditioning features are degenerate (far outside every camera).
    """
    lo, hi = prior.bounds()
    margin = margin_frac * (hi - lo).max()
    grid = VoxelGrid.from_bounds(lo - margin, hi + margin, resolution)
    pts = grid.lattice_points()
    sigma = query_occupancy(net, images, cams, prior, pts)
    if sigma.max() < iso:
        raise EmptyField(f"max occupancy {sigma.max():.3f} below iso {iso}")
    field = VoxelGrid(grid.origin, grid.spacing,
                      sigma.reshape(grid.dims).astype(np.float64))
    mesh = extract_surface(field, iso=iso)
    if keep_largest:
        mesh = largest_component(mesh)
    return mesh
