"""Multi-view 2D-keypoint fitting of the parametric body.

Energy: confidence-weighted robustified reprojection of the model joints
into every view, plus a temporal smoothness term on pose and translation
(the exact forms of both terms are reconstructions; the original
formulation lives in prior art and is not restated here).  Minimized by
Adam with cosine learning-rate decay and step rejection: a step that
increases the energy is rolled back and the learning rate halved, so the
accepted-loss sequence is non-increasing.

Keypoint confidences are normalized to mean 1 inside the 2D term, which
makes the optimizer trajectory exactly invariant to rescaling all
confidences by a positive constant.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import torch

from ..errors import InsufficientObservations
from ..geometry.camera import CameraView
from ..geometry.voxel import VoxelGrid, voxelize_mesh
from .model import BodyModel, BodyParams, canonicalize_axis_angle, pose_body


@dataclass
class FitConfig:
    lambda_temporal: float = 10.0
    iterations: int = 300
    init_iterations: int = 80
    lr: float = 0.05
    robust_clamp_px: float = 50.0
    grad_tol: float = 100.0
    min_confident_joints: int = 6
    min_views: int = 2


@dataclass
class FitResult:
    params: BodyParams
    residual_rms_px: float
    converged: bool
    losses: list = field(default_factory=list)


def rodrigues_torch(aa: torch.Tensor) -> torch.Tensor:
    """Axis-angle (B, 3) -> rotation matrices (B, 3, 3), differentiable."""
    angle = aa.norm(dim=1, keepdim=True).clamp_min(1e-12)
    axis = aa / angle
    x, y, z = axis[:, 0], axis[:, 1], axis[:, 2]
    zeros = torch.zeros_like(x)
    K = torch.stack([
        zeros, -z, y,
        z, zeros, -x,
        -y, x, zeros,
    ], dim=1).reshape(-1, 3, 3)
    s = torch.sin(angle)[..., None]
    c = torch.cos(angle)[..., None]
    eye = torch.eye(3, dtype=aa.dtype, device=aa.device)[None]
    return eye + s * K + (1 - c) * (K @ K)


class _JointModel:
    """Torch mirror of the model's kinematics (joints only)."""

    def __init__(self, model: BodyModel, dtype=torch.float64):
        self.parents = model.parents
        self.order = model.topo_order()
        self.joint_rest = torch.as_tensor(model.joint_rest, dtype=dtype)
        self.joint_dirs = torch.as_tensor(model.joint_dirs, dtype=dtype)

    def joints_world(self, theta, beta, trans):
        """theta (T, J, 3), beta (K,), trans (T, 3) -> (T, J, 3)."""
        T, J, _ = theta.shape
        rest = self.joint_rest + torch.einsum("k,kjc->jc", beta, self.joint_dirs)
        R = rodrigues_torch(theta.reshape(-1, 3)).reshape(T, J, 3, 3)
        rot = [None] * J
        pos = [None] * J
        for j in self.order:
            p = int(self.parents[j])
            if p < 0:
                rot[j] = R[:, j]
                pos[j] = rest[j].expand(T, 3)
            else:
                rot[j] = rot[p] @ R[:, j]
                offset = rest[j] - rest[p]
                pos[j] = (rot[p] @ offset).reshape(T, 3) + pos[p]
        joints = torch.stack(pos, dim=1)
        return joints + trans[:, None, :]


def _project_torch(points, cam: CameraView, dtype=torch.float64):
    R = torch.as_tensor(cam.rotation, dtype=dtype)
    t = torch.as_tensor(cam.translation, dtype=dtype)
    pc = points @ R.T + t
    z = pc[..., 2].clamp_min(1e-6)
    fx, fy = cam.focal
    cx, cy = cam.principal
    u = fx * pc[..., 0] / z + cx
    v = fy * pc[..., 1] / z + cy
    return torch.stack([u, v], dim=-1)


def _check_observations(keypoints: np.ndarray, cfg: FitConfig):
    # keypoints: (T, V, J, 3)
    conf = keypoints[..., 2]
    good_views = (conf > 0).sum(axis=2) >= cfg.min_confident_joints  # (T, V)
    if not (good_views.sum(axis=1) >= cfg.min_views).any():
        raise InsufficientObservations(
            f"need >= {cfg.min_views} views with >= {cfg.min_confident_joints} "
            "confident joints in at least one frame")


def _triangulate(rays):
    """Least-squares point closest to a set of (origin, direction) rays."""
    A = np.zeros((3, 3))
    b = np.zeros(3)
    for origin, direction in rays:
        d = direction / np.linalg.norm(direction)
        P = np.eye(3) - np.outer(d, d)
        A += P
        b += P @ origin
    if np.linalg.matrix_rank(A) < 3:
        return None
    return np.linalg.solve(A, b)


def _triangulate_joint(keypoints, cams, t, j):
    rays = []
    for i, cam in enumerate(cams):
        u, v, c = keypoints[t, i, j]
        if c <= 0:
            continue
        fx, fy = cam.focal
        cx, cy = cam.principal
        d_cam = np.array([(u - cx) / fx, (v - cy) / fy, 1.0])
        rays.append((cam.center, cam.rotation.T @ d_cam))
    if len(rays) < 2:
        return None
    return _triangulate(rays)


def _initial_params(model: BodyModel, keypoints, cams) -> BodyParams:
    """Seed the root from triangulated torso joints; everything else zero."""
    from scipy.spatial.transform import Rotation

    names = model.joint_names
    idx = {n: i for i, n in enumerate(names)}
    T = keypoints.shape[0]
    J = model.num_joints
    theta = np.zeros((T, J, 3))
    trans = np.zeros((T, 3))
    torso = [idx.get(k) for k in ("l_shoulder", "r_shoulder", "l_hip", "r_hip")]
    if any(v is None for v in torso):
        return BodyParams(theta, np.zeros(model.num_shapes), trans)
    ls, rs, lh, rh = torso
    rest = model.joint_rest
    rest_mid_hip = 0.5 * (rest[lh] + rest[rh])
    rest_frame = _torso_frame(rest[ls] - rest[rs],
                              0.5 * (rest[ls] + rest[rs]) - rest_mid_hip)
    for t in range(T):
        tri = {j: _triangulate_joint(keypoints, cams, t, j) for j in torso}
        if any(v is None for v in tri.values()):
            continue
        mid_hip = 0.5 * (tri[lh] + tri[rh])
        obs_frame = _torso_frame(tri[ls] - tri[rs],
                                 0.5 * (tri[ls] + tri[rs]) - mid_hip)
        if obs_frame is None or rest_frame is None:
            trans[t] = mid_hip - rest_mid_hip
            continue
        R = obs_frame @ rest_frame.T
        theta[t, 0] = Rotation.from_matrix(R).as_rotvec()
        # pelvis = R (rest_pelvis - rest_root) + root_pos; root rotates about itself
        trans[t] = mid_hip - rest_mid_hip - (R - np.eye(3)) @ (rest_mid_hip - rest[0])
    return BodyParams(canonicalize_axis_angle(theta), np.zeros(model.num_shapes),
                      trans)


def _torso_frame(across, up):
    na = np.linalg.norm(across)
    nu = np.linalg.norm(up)
    if na < 1e-9 or nu < 1e-9:
        return None
    x = across / na
    u = up / nu
    z = np.cross(x, u)
    nz = np.linalg.norm(z)
    if nz < 1e-9:
        return None
    z = z / nz
    y = np.cross(z, x)
    return np.stack([x, y, z], axis=1)


def fit_body(keypoints: np.ndarray, cams: list[CameraView], model: BodyModel,
             lambda_temporal: float | None = None,
             config: FitConfig | None = None) -> FitResult:
    """Fit per-frame pose + shared shape to (T, V, J, 3) keypoints.

    Returns the best iterate with `converged=False` (plus a warning) when
    the gradient norm stays above tolerance at the iteration cap.
    """
    cfg = config or FitConfig()
    if lambda_temporal is not None:
        cfg.lambda_temporal = lambda_temporal
    keypoints = np.asarray(keypoints, dtype=np.float64)
    if keypoints.ndim == 3:
        keypoints = keypoints[None]
    _check_observations(keypoints, cfg)

    T, V, J, _ = keypoints.shape
    init = _initial_params(model, keypoints, cams)
    km = _JointModel(model)
    kp = torch.as_tensor(keypoints[..., :2])
    conf = torch.as_tensor(keypoints[..., 2])
    mean_conf = float(conf.mean())
    weights = conf / max(mean_conf, 1e-12)

    theta = torch.as_tensor(init.theta).clone().requires_grad_(True)
    beta = torch.zeros(model.num_shapes, dtype=torch.float64, requires_grad=True)
    trans = torch.as_tensor(init.trans).clone().requires_grad_(True)
    params = [theta, beta, trans]

    c2 = cfg.robust_clamp_px ** 2

    def energy_2d():
        joints = km.joints_world(theta, beta, trans)
        e = 0.0
        for i, cam in enumerate(cams):
            pix = _project_torch(joints, cam)
            sq = ((pix - kp[:, i]) ** 2).sum(dim=-1)
            robust = c2 * sq / (c2 + sq)
            e = e + (weights[:, i] * robust).sum()
        return e

    def energy_temporal():
        if T < 2:
            return torch.zeros((), dtype=torch.float64)
        dth = theta[1:] - theta[:-1]
        dtr = trans[1:] - trans[:-1]
        return (dth ** 2).sum() + (dtr ** 2).sum()

    def total(lam):
        return energy_2d() + lam * energy_temporal()

    losses = []

    def run_stage(lam, iterations, lr0):
        opt = torch.optim.Adam(params, lr=lr0)
        halver = 1.0
        with torch.no_grad():
            best = float(total(lam))
        snapshot = [p.detach().clone() for p in params]
        losses.append(best)
        for it in range(iterations):
            cos = 0.5 * (1 + np.cos(np.pi * it / max(iterations, 1)))
            for g in opt.param_groups:
                g["lr"] = lr0 * cos * halver
            opt.zero_grad()
            loss = total(lam)
            loss.backward()
            opt.step()
            with torch.no_grad():
                new = float(total(lam))
            if new > best:
                with torch.no_grad():
                    for p, s in zip(params, snapshot):
                        p.copy_(s)
                halver = max(halver * 0.5, 1e-12)
            else:
                best = new
                snapshot = [p.detach().clone() for p in params]
                losses.append(best)
                halver = min(halver * 1.5, 1.0)  # recover after rejections
        return best

    run_stage(0.0, cfg.init_iterations, cfg.lr)
    run_stage(cfg.lambda_temporal, cfg.iterations, cfg.lr)

    # convergence check on the final iterate
    for p in params:
        if p.grad is not None:
            p.grad = None
    loss = total(cfg.lambda_temporal)
    loss.backward()
    gnorm = float(sum((p.grad ** 2).sum() for p in params if p.grad is not None)
                  ** 0.5)
    converged = gnorm <= cfg.grad_tol
    if not converged:
        warnings.warn(f"fit_body: gradient norm {gnorm:.3g} above tolerance "
                      f"{cfg.grad_tol} at iteration cap; returning best iterate")

    with torch.no_grad():
        joints = km.joints_world(theta, beta, trans)
        errs = []
        for i, cam in enumerate(cams):
            pix = _project_torch(joints, cam)
            d2 = ((pix - kp[:, i]) ** 2).sum(dim=-1)
            m = conf[:, i] > 0
            if m.any():
                errs.append(d2[m])
        rms = float(torch.cat(errs).mean().sqrt()) if errs else float("nan")

    out = BodyParams(canonicalize_axis_angle(theta.detach().numpy()),
                     beta.detach().numpy(), trans.detach().numpy())
    return FitResult(out, rms, converged, losses)


def reprojection_energy(model: BodyModel, params: BodyParams,
                        keypoints: np.ndarray, cams: list[CameraView],
                        robust_clamp_px: float = 50.0) -> float:
    """The 2D term alone, evaluated in numpy (test/inspection helper)."""
    from .model import pose_joints

    keypoints = np.asarray(keypoints, dtype=np.float64)
    if keypoints.ndim == 3:
        keypoints = keypoints[None]
    conf = keypoints[..., 2]
    weights = conf / max(conf.mean(), 1e-12)
    c2 = robust_clamp_px ** 2
    e = 0.0
    from ..geometry.camera import project

    for t in range(keypoints.shape[0]):
        joints = pose_joints(model, params, t)
        for i, cam in enumerate(cams):
            pix, _, _ = project(joints, cam)
            sq = ((pix - keypoints[t, i, :, :2]) ** 2).sum(axis=-1)
            e += float((weights[t, i] * c2 * sq / (c2 + sq)).sum())
    return e


def voxelize_prior(model: BodyModel, params: BodyParams, frame: int,
                   resolution: int = 48, margin_frac: float = 0.1) -> VoxelGrid:
    """Pose the fitted body and voxelize it on a bbox-aligned grid."""
    mesh = pose_body(model, params, frame)
    lo, hi = mesh.bounds()
    margin = margin_frac * (hi - lo).max()
    spec = VoxelGrid.from_bounds(lo - margin, hi + margin, resolution)
    return voxelize_mesh(mesh, spec)
