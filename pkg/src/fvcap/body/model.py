"""Parametric articulated body: linear blendshapes + linear blend skinning.

The model contract is SMPL-like but self-contained: a template mesh, a
joint tree with rest positions, skinning weights whose rows sum to one, and
K additive shape blendshapes (with matching joint-position offsets).  Pose
is per-joint axis-angle; joint j's rotation acts about joint j and affects
its whole subtree.  See :mod:`fvcap.body.builtin` for the bundled body and
:func:`load_smpl_pickle` for mapping the licensed SMPL asset onto the same
contract.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import SizeMismatch
from ..geometry.mesh import TriangleMesh


def rodrigues(axis_angle: np.ndarray) -> np.ndarray:
    """Axis-angle vectors (..., 3) to rotation matrices (..., 3, 3)."""
    aa = np.asarray(axis_angle, dtype=np.float64)
    shape = aa.shape[:-1]
    aa = aa.reshape(-1, 3)
    angle = np.linalg.norm(aa, axis=1)
    out = np.tile(np.eye(3), (len(aa), 1, 1))
    nz = angle > 1e-12
    if nz.any():
        axis = aa[nz] / angle[nz, None]
        x, y, z = axis[:, 0], axis[:, 1], axis[:, 2]
        zeros = np.zeros_like(x)
        K = np.stack([
            zeros, -z, y,
            z, zeros, -x,
            -y, x, zeros,
        ], axis=1).reshape(-1, 3, 3)
        s = np.sin(angle[nz])[:, None, None]
        c = np.cos(angle[nz])[:, None, None]
        out[nz] = np.eye(3) + s * K + (1 - c) * (K @ K)
    return out.reshape(*shape, 3, 3)


@dataclass
class BodyModel:
    """Template geometry plus rigging.

    template: (V, 3) rest vertices; faces (M, 3); parents (J,) with -1 root;
    joint_rest (J, 3); weights (V, J) rows summing to 1; shape_dirs (K, V, 3)
    and joint_dirs (K, J, 3) additive blendshape offsets.
    """

    template: np.ndarray
    faces: np.ndarray
    parents: np.ndarray
    joint_rest: np.ndarray
    weights: np.ndarray
    shape_dirs: np.ndarray
    joint_dirs: np.ndarray
    joint_names: list[str]

    def __post_init__(self):
        self.template = np.asarray(self.template, dtype=np.float64)
        self.faces = np.asarray(self.faces, dtype=np.int64)
        self.parents = np.asarray(self.parents, dtype=np.int64)
        self.joint_rest = np.asarray(self.joint_rest, dtype=np.float64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.shape_dirs = np.asarray(self.shape_dirs, dtype=np.float64)
        self.joint_dirs = np.asarray(self.joint_dirs, dtype=np.float64)
        rows = self.weights.sum(axis=1)
        if not np.allclose(rows, 1.0, atol=1e-6):
            raise ValueError("skinning weight rows must sum to 1")
        roots = np.nonzero(self.parents < 0)[0]
        if len(roots) != 1:
            raise ValueError("joint tree must have exactly one root")
        # acyclicity: walking up from any joint must terminate at the root
        for j in range(self.num_joints):
            seen = set()
            while j >= 0:
                if j in seen:
                    raise ValueError("joint tree contains a cycle")
                seen.add(j)
                j = int(self.parents[j])

    @property
    def num_joints(self) -> int:
        return len(self.parents)

    @property
    def num_vertices(self) -> int:
        return len(self.template)

    @property
    def num_shapes(self) -> int:
        return len(self.shape_dirs)

    def topo_order(self) -> list[int]:
        order, placed = [], set()
        pending = list(range(self.num_joints))
        while pending:
            nxt = []
            for j in pending:
                p = int(self.parents[j])
                if p < 0 or p in placed:
                    order.append(j)
                    placed.add(j)
                else:
                    nxt.append(j)
            pending = nxt
        return order


@dataclass
class BodyParams:
    """Per-frame pose (T, J, 3 axis-angle) and translation (T, 3); shared shape (K,)."""

    theta: np.ndarray
    beta: np.ndarray
    trans: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)
        self.beta = np.asarray(self.beta, dtype=np.float64)
        self.trans = np.asarray(self.trans, dtype=np.float64)
        if self.theta.ndim != 3 or self.trans.ndim != 2:
            raise ValueError("theta must be (T, J, 3) and trans (T, 3)")
        angles = np.linalg.norm(self.theta, axis=-1)
        if (angles >= np.pi + 1e-9).any():
            raise ValueError("axis-angle magnitude must stay below pi")

    @property
    def num_frames(self) -> int:
        return len(self.theta)

    def to_json(self) -> str:
        return json.dumps({
            "theta": self.theta.tolist(),
            "beta": self.beta.tolist(),
            "trans": self.trans.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "BodyParams":
        d = json.loads(text)
        return cls(np.asarray(d["theta"]), np.asarray(d["beta"]),
                   np.asarray(d["trans"]))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "BodyParams":
        return cls.from_json(Path(path).read_text())


def canonicalize_axis_angle(theta: np.ndarray) -> np.ndarray:
    """Wrap axis-angle magnitudes into [0, pi)."""
    theta = np.asarray(theta, dtype=np.float64).copy()
    flat = theta.reshape(-1, 3)
    angle = np.linalg.norm(flat, axis=1)
    big = angle >= np.pi
    if big.any():
        a = angle[big]
        wrapped = np.mod(a + np.pi, 2 * np.pi) - np.pi
        flat[big] *= (wrapped / a)[:, None]
    return flat.reshape(theta.shape)


def _global_transforms(model: BodyModel, theta_frame: np.ndarray,
                       joints: np.ndarray) -> np.ndarray:
    """(J, 4, 4) world transforms of each joint for one frame."""
    R = rodrigues(theta_frame)
    G = np.zeros((model.num_joints, 4, 4))
    for j in model.topo_order():
        A = np.eye(4)
        A[:3, :3] = R[j]
        p = int(model.parents[j])
        A[:3, 3] = joints[j] - (joints[p] if p >= 0 else 0.0)
        G[j] = A if p < 0 else G[p] @ A
    return G


def shaped_rest(model: BodyModel, beta: np.ndarray):
    """Template vertices and rest joints with shape offsets applied."""
    v = model.template.copy()
    j = model.joint_rest.copy()
    for k in range(model.num_shapes):
        v += beta[k] * model.shape_dirs[k]
        j += beta[k] * model.joint_dirs[k]
    return v, j


def pose_body(model: BodyModel, params: BodyParams, frame: int) -> TriangleMesh:
    """Skinned mesh at one frame (shape offsets applied before skinning)."""
    if params.theta.shape[1] != model.num_joints:
        raise SizeMismatch(
            f"pose has {params.theta.shape[1]} joints, model has {model.num_joints}")
    if len(params.beta) != model.num_shapes:
        raise SizeMismatch(
            f"{len(params.beta)} shape coefficients, model has {model.num_shapes}")
    v, joints = shaped_rest(model, params.beta)
    G = _global_transforms(model, params.theta[frame], joints)
    # bind-pose removal: skinning transforms act on rest-space coordinates
    A = G.copy()
    A[:, :3, 3] -= np.einsum("jab,jb->ja", G[:, :3, :3], joints)
    T = np.einsum("vj,jab->vab", model.weights, A)
    posed = np.einsum("vab,vb->va", T[:, :3, :3], v) + T[:, :3, 3]
    posed += params.trans[frame]
    return TriangleMesh(posed, model.faces)


def pose_joints(model: BodyModel, params: BodyParams, frame: int) -> np.ndarray:
    """World positions of the joints at one frame."""
    _, joints = shaped_rest(model, params.beta)
    G = _global_transforms(model, params.theta[frame], joints)
    return G[:, :3, 3] + params.trans[frame]


# ---------------------------------------------------------------------------
# persistence

def save_body_model(path, model: BodyModel) -> None:
    np.savez_compressed(
        path, template=model.template, faces=model.faces, parents=model.parents,
        joint_rest=model.joint_rest, weights=model.weights,
        shape_dirs=model.shape_dirs, joint_dirs=model.joint_dirs,
        joint_names=np.asarray(model.joint_names))


def load_body_model(path) -> BodyModel:
    z = np.load(path, allow_pickle=False)
    return BodyModel(
        template=z["template"], faces=z["faces"], parents=z["parents"],
        joint_rest=z["joint_rest"], weights=z["weights"],
        shape_dirs=z["shape_dirs"], joint_dirs=z["joint_dirs"],
        joint_names=[str(s) for s in z["joint_names"]])


def load_smpl_pickle(path) -> BodyModel:
    """Map an SMPL .pkl asset (if you have the license) onto BodyModel.

    Shape blendshapes beyond the first two are kept; hand/face joints are
    kept as-is (the fitter simply never receives detections for them).
    """
    import pickle

    with open(path, "rb") as f:
        data = pickle.load(f, encoding="latin1")

    def dense(x):
        return np.asarray(x.todense() if hasattr(x, "todense") else x,
                          dtype=np.float64)

    template = dense(data["v_template"])
    weights = dense(data["weights"])
    kintree = np.asarray(data["kintree_table"], dtype=np.int64)
    parents = kintree[0].copy()
    parents[0] = -1
    joint_rest = dense(data["J"]) if "J" in data else dense(data["J_regressor"]) @ template
    shapedirs = dense(data["shapedirs"])          # (V, 3, K)
    shape_dirs = np.moveaxis(shapedirs, 2, 0)     # (K, V, 3)
    Jreg = dense(data["J_regressor"])
    joint_dirs = np.einsum("jv,kvc->kjc", Jreg, shape_dirs)
    names = [f"joint_{i}" for i in range(len(parents))]
    return BodyModel(template, np.asarray(data["f"], dtype=np.int64), parents,
                     joint_rest, weights, shape_dirs, joint_dirs, names)
