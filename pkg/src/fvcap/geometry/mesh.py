"""Triangle meshes: container, normals, surface sampling, PLY/OBJ I/O."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class TriangleMesh:
    """Indexed triangle mesh in meters.

    vertices: (N, 3) float64, faces: (M, 3) int indices.  Optional per-vertex
    colors in [0, 1]^3 and unit normals.
    """

    vertices: np.ndarray
    faces: np.ndarray
    colors: np.ndarray | None = None
    normals: np.ndarray | None = None

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        n = len(self.vertices)
        if len(self.faces):
            if self.faces.min() < 0 or self.faces.max() >= n:
                raise ValueError("face index out of range")
            degen = (
                (self.faces[:, 0] == self.faces[:, 1])
                & (self.faces[:, 1] == self.faces[:, 2])
            )
            if degen.any():
                raise ValueError("degenerate face (three identical indices)")
        if self.colors is not None:
            self.colors = np.asarray(self.colors, dtype=np.float64).reshape(-1, 3)

    @property
    def is_empty(self) -> bool:
        return len(self.faces) == 0

    def copy(self) -> "TriangleMesh":
        return TriangleMesh(
            self.vertices.copy(),
            self.faces.copy(),
            None if self.colors is None else self.colors.copy(),
            None if self.normals is None else self.normals.copy(),
        )

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def transformed(self, R: np.ndarray, t: np.ndarray) -> "TriangleMesh":
        """Rigidly transformed copy: v -> R v + t."""
        out = self.copy()
        out.vertices = out.vertices @ np.asarray(R).T + np.asarray(t)
        if out.normals is not None:
            out.normals = out.normals @ np.asarray(R).T
        return out

    def face_corners(self):
        v = self.vertices
        f = self.faces
        return v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]

    def face_normals(self, normalized: bool = True) -> np.ndarray:
        a, b, c = self.face_corners()
        n = np.cross(b - a, c - a)
        if normalized:
            ln = np.linalg.norm(n, axis=1, keepdims=True)
            ln[ln == 0] = 1.0
            n = n / ln
        return n

    def face_areas(self) -> np.ndarray:
        a, b, c = self.face_corners()
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def vertex_normals(self) -> np.ndarray:
        """Area-weighted per-vertex normals."""
        n = np.zeros_like(self.vertices)
        fn = self.face_normals(normalized=False)
        for k in range(3):
            np.add.at(n, self.faces[:, k], fn)
        ln = np.linalg.norm(n, axis=1, keepdims=True)
        ln[ln == 0] = 1.0
        return n / ln

    def edges(self) -> np.ndarray:
        """Unique undirected edges as an (E, 2) sorted-index array."""
        f = self.faces
        e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]], axis=0)
        e = np.sort(e, axis=1)
        return np.unique(e, axis=0)


def sample_surface(mesh: TriangleMesh, count: int, rng: np.random.Generator):
    """Uniform area-weighted surface samples.

    Returns (points (count,3), face_index (count,), normals (count,3)).
    """
    areas = mesh.face_areas()
    total = areas.sum()
    if total <= 0:
        raise ValueError("mesh has zero surface area")
    fidx = rng.choice(len(areas), size=count, p=areas / total)
    a, b, c = mesh.face_corners()
    r1 = np.sqrt(rng.random(count))
    r2 = rng.random(count)
    w0 = 1.0 - r1
    w1 = r1 * (1.0 - r2)
    w2 = r1 * r2
    pts = (
        a[fidx] * w0[:, None] + b[fidx] * w1[:, None] + c[fidx] * w2[:, None]
    )
    normals = mesh.face_normals()[fidx]
    return pts, fidx, normals


def merge_meshes(meshes: list[TriangleMesh]) -> TriangleMesh:
    verts, faces, colors = [], [], []
    offset = 0
    has_colors = all(m.colors is not None for m in meshes)
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + offset)
        if has_colors:
            colors.append(m.colors)
        offset += len(m.vertices)
    return TriangleMesh(
        np.concatenate(verts, axis=0),
        np.concatenate(faces, axis=0),
        np.concatenate(colors, axis=0) if has_colors else None,
    )


def loop_subdivide(mesh: TriangleMesh, attributes: list[np.ndarray] | None = None):
    """One step of Loop subdivision on a closed triangle mesh.

    Optional per-vertex attribute arrays (e.g. skinning weights, blendshape
    offsets) are carried along: new edge vertices average their endpoints,
    original vertices keep their values.  Returns (mesh, attributes).
    """
    V = mesh.vertices
    F = mesh.faces
    edges = mesh.edges()
    edge_key = {tuple(e): i for i, e in enumerate(edges)}

    # adjacency: for each edge, the two opposite vertices of its incident faces
    opposite: dict[int, list[int]] = {i: [] for i in range(len(edges))}
    for f in F:
        for k in range(3):
            a, b = f[k], f[(k + 1) % 3]
            c = f[(k + 2) % 3]
            opposite[edge_key[tuple(sorted((a, b)))]].append(c)

    # new edge points: 3/8 (a+b) + 1/8 (c+d) for interior edges
    ev = np.zeros((len(edges), 3))
    for i, (a, b) in enumerate(edges):
        opp = opposite[i]
        if len(opp) == 2:
            ev[i] = 0.375 * (V[a] + V[b]) + 0.125 * (V[opp[0]] + V[opp[1]])
        else:  # boundary edge (should not occur on closed meshes)
            ev[i] = 0.5 * (V[a] + V[b])

    # smoothed original vertices
    neighbors: dict[int, set] = {i: set() for i in range(len(V))}
    for a, b in edges:
        neighbors[a].add(b)
        neighbors[b].add(a)
    newV = np.zeros_like(V)
    for i in range(len(V)):
        nb = sorted(neighbors[i])
        n = len(nb)
        if n < 3:
            newV[i] = V[i]
            continue
        beta = (0.625 - (0.375 + 0.25 * np.cos(2 * np.pi / n)) ** 2) / n
        newV[i] = (1 - n * beta) * V[i] + beta * V[nb].sum(axis=0)

    verts = np.concatenate([newV, ev], axis=0)
    base = len(V)
    new_faces = []
    for f in F:
        a, b, c = f
        eab = base + edge_key[tuple(sorted((a, b)))]
        ebc = base + edge_key[tuple(sorted((b, c)))]
        eca = base + edge_key[tuple(sorted((c, a)))]
        new_faces.extend(
            [[a, eab, eca], [b, ebc, eab], [c, eca, ebc], [eab, ebc, eca]]
        )
    out_attrs = None
    if attributes is not None:
        out_attrs = []
        for arr in attributes:
            arr = np.asarray(arr)
            edge_vals = 0.5 * (arr[edges[:, 0]] + arr[edges[:, 1]])
            out_attrs.append(np.concatenate([arr, edge_vals], axis=0))
    out = TriangleMesh(verts, np.asarray(new_faces, dtype=np.int64))
    return out, out_attrs


# ---------------------------------------------------------------------------
# File I/O: ASCII PLY (positions + optional colors) and OBJ.

def save_ply(path, mesh: TriangleMesh) -> None:
    lines = ["ply", "format ascii 1.0", f"element vertex {len(mesh.vertices)}",
             "property float x", "property float y", "property float z"]
    if mesh.colors is not None:
        lines += ["property uchar red", "property uchar green", "property uchar blue"]
    lines += [f"element face {len(mesh.faces)}",
              "property list uchar int vertex_indices", "end_header"]
    for i, v in enumerate(mesh.vertices):
        row = f"{v[0]:.8f} {v[1]:.8f} {v[2]:.8f}"
        if mesh.colors is not None:
            c = np.clip(np.round(mesh.colors[i] * 255), 0, 255).astype(int)
            row += f" {c[0]} {c[1]} {c[2]}"
        lines.append(row)
    for f in mesh.faces:
        lines.append(f"3 {f[0]} {f[1]} {f[2]}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_ply(path) -> TriangleMesh:
    text = Path(path).read_text().splitlines()
    n_vert = n_face = 0
    props = []
    i = 0
    element = None
    while i < len(text):
        tok = text[i].split()
        if tok[0] == "element":
            element = tok[1]
            if element == "vertex":
                n_vert = int(tok[2])
            elif element == "face":
                n_face = int(tok[2])
        elif tok[0] == "property" and element == "vertex":
            props.append(tok[-1])
        elif tok[0] == "end_header":
            i += 1
            break
        i += 1
    has_color = "red" in props
    verts = np.zeros((n_vert, 3))
    colors = np.zeros((n_vert, 3)) if has_color else None
    for k in range(n_vert):
        vals = text[i + k].split()
        verts[k] = [float(x) for x in vals[:3]]
        if has_color:
            colors[k] = [float(x) / 255.0 for x in vals[3:6]]
    i += n_vert
    faces = np.zeros((n_face, 3), dtype=np.int64)
    for k in range(n_face):
        vals = text[i + k].split()
        faces[k] = [int(x) for x in vals[1:4]]
    return TriangleMesh(verts, faces, colors)


def save_obj(path, mesh: TriangleMesh) -> None:
    lines = []
    for v in mesh.vertices:
        lines.append(f"v {v[0]:.8f} {v[1]:.8f} {v[2]:.8f}")
    for f in mesh.faces:
        lines.append(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_obj(path) -> TriangleMesh:
    verts, faces = [], []
    for line in Path(path).read_text().splitlines():
        tok = line.split()
        if not tok:
            continue
        if tok[0] == "v":
            verts.append([float(x) for x in tok[1:4]])
        elif tok[0] == "f":
            idx = [int(t.split("/")[0]) - 1 for t in tok[1:]]
            for k in range(1, len(idx) - 1):  # fan-triangulate polygons
                faces.append([idx[0], idx[k], idx[k + 1]])
    return TriangleMesh(np.asarray(verts), np.asarray(faces, dtype=np.int64))
