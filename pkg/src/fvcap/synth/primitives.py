"""Parametric occluder primitives: watertight boxes, spheres, cylinders,
and a chair assembled from boxes.  These stand in for an external shape
corpus; arbitrary OBJ directories can be loaded instead."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..geometry.mesh import TriangleMesh, load_obj, merge_meshes


def box_mesh(size=(1.0, 1.0, 1.0), center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    sx, sy, sz = np.asarray(size, dtype=np.float64) / 2.0
    cx, cy, cz = center
    v = np.array([
        [-sx, -sy, -sz], [sx, -sy, -sz], [sx, sy, -sz], [-sx, sy, -sz],
        [-sx, -sy, sz], [sx, -sy, sz], [sx, sy, sz], [-sx, sy, sz],
    ]) + np.array([cx, cy, cz])
    f = np.array([
        [0, 2, 1], [0, 3, 2],      # bottom (outward -z)
        [4, 5, 6], [4, 6, 7],      # top
        [0, 1, 5], [0, 5, 4],      # -y
        [2, 3, 7], [2, 7, 6],      # +y
        [1, 2, 6], [1, 6, 5],      # +x
        [3, 0, 4], [3, 4, 7],      # -x
    ])
    return TriangleMesh(v, f)


def icosphere(radius=0.5, subdivisions=2, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=np.float64)
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ]
    verts = list(verts)
    for _ in range(subdivisions):
        cache = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                m /= np.linalg.norm(m)
                verts.append(m)
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = new_faces
    v = np.asarray(verts) * radius + np.asarray(center)
    return TriangleMesh(v, np.asarray(faces, dtype=np.int64))


def cylinder_mesh(radius=0.25, height=0.8, segments=24,
                  center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    ang = np.linspace(0, 2 * np.pi, segments, endpoint=False)
    ring = np.stack([radius * np.cos(ang), radius * np.sin(ang)], axis=1)
    bot = np.concatenate([ring, np.full((segments, 1), -height / 2)], axis=1)
    top = np.concatenate([ring, np.full((segments, 1), height / 2)], axis=1)
    verts = np.concatenate([bot, top,
                            [[0, 0, -height / 2]], [[0, 0, height / 2]]], axis=0)
    bc, tc = 2 * segments, 2 * segments + 1
    faces = []
    for i in range(segments):
        j = (i + 1) % segments
        faces += [[i, j, segments + i], [j, segments + j, segments + i]]
        faces += [[bc, j, i], [tc, segments + i, segments + j]]
    return TriangleMesh(verts + np.asarray(center), np.asarray(faces, dtype=np.int64))


def chair_mesh(seat=0.4, seat_height=0.45, back_height=0.5,
               leg=0.04) -> TriangleMesh:
    """A chair assembled from boxes (overlap-free enough for silhouettes;
    never voxelized, so internal overlaps would be harmless anyway)."""
    parts = [box_mesh((seat, seat, 0.05), (0, 0, seat_height))]
    off = seat / 2 - leg / 2
    for sx in (-off, off):
        for sy in (-off, off):
            parts.append(box_mesh((leg, leg, seat_height),
                                  (sx, sy, seat_height / 2 - 0.025)))
    parts.append(box_mesh((seat, 0.05, back_height),
                          (0, seat / 2 - 0.025, seat_height + back_height / 2)))
    return merge_meshes(parts)


PRIMITIVES = {
    "box": lambda: box_mesh((0.35, 0.35, 0.35)),
    "sphere": lambda: icosphere(0.2, 2),
    "cylinder": lambda: cylinder_mesh(0.15, 0.6),
    "chair": lambda: chair_mesh(),
}


def primitive_library(names=None) -> list[TriangleMesh]:
    names = list(PRIMITIVES) if names is None else list(names)
    return [PRIMITIVES[n]() for n in names]


def load_obj_library(directory) -> list[TriangleMesh]:
    """Load every .obj in a directory as an occluder template."""
    paths = sorted(Path(directory).glob("*.obj"))
    return [load_obj(p) for p in paths]
