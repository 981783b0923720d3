"""Human-aware rigid object tracking by silhouette comparison.

The per-view silhouette term compares the rendered soft silhouette against
the object mask with pixels under the human mask removed from the residual
entirely (weight 0), since instance-exclusive segmentation assigns
human-occluded object pixels to the human.  An interpenetration term
penalizes object vertices whose human-occupancy exceeds the surface
iso-level 0.5.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from ..errors import NotVisible
from ..geometry.camera import CameraView
from ..geometry.mesh import TriangleMesh
from ..geometry.voxel import OccupancyField
from .pose import RigidPose, quat_from_axis_angle
from .silhouette import (DEFAULT_SHARPNESS, _coverage, _front_faces,
                         _project_normalized, soft_silhouette,
                         transform_vertices)

LAMBDA_SILHOUETTE = 1.0
LAMBDA_INTERPENETRATION = 10.0


@dataclass
class TrackConfig:
    iterations: int = 100
    lr: float = 1e-2
    sharpness: float = DEFAULT_SHARPNESS
    anneal_at: tuple = (50, 70, 85)   # iterations where sharpness halves
    anneal_factor: float = 0.5
    lambda_silhouette: float = LAMBDA_SILHOUETTE
    lambda_interpenetration: float = LAMBDA_INTERPENETRATION
    crop: bool = True             # evaluate residuals on a tight crop only


@dataclass
class TrackResult:
    pose: RigidPose
    loss: float
    initial_loss: float
    diverged: bool = False


def silhouette_residual(soft, object_mask, human_mask, dtype=torch.float64):
    """Mean masked squared residual for one view."""
    mo = torch.as_tensor(object_mask, dtype=dtype)
    keep = torch.as_tensor(~np.asarray(human_mask, dtype=bool), dtype=dtype)
    resid = keep * (soft - mo)
    return (resid ** 2).mean()


def _crop_bounds(pix_np, mask, W, H, margin=8):
    """Union of projected-vertex bbox and observed-mask bbox, expanded."""
    us, vs = [], []
    if len(pix_np):
        us += [pix_np[:, 0].min(), pix_np[:, 0].max()]
        vs += [pix_np[:, 1].min(), pix_np[:, 1].max()]
    rows, cols = np.nonzero(mask)
    if len(rows):
        us += [cols.min(), cols.max()]
        vs += [rows.min(), rows.max()]
    if not us:
        return None
    u0 = max(int(np.floor(min(us))) - margin, 0)
    u1 = min(int(np.ceil(max(us))) + margin, W - 1)
    v0 = max(int(np.floor(min(vs))) - margin, 0)
    v1 = min(int(np.ceil(max(vs))) + margin, H - 1)
    if u0 > u1 or v0 > v1:
        return None
    return u0, u1, v0, v1


def _view_residual(template, quaternion, translation, cam, object_mask,
                   human_mask, sharpness, crop, score_sharpness=None):
    """Identical to full-frame soft-silhouette L2, computed on a crop.

    Outside the crop both the coverage and the observed mask vanish, so
    those pixels contribute exactly zero to the mean.  When
    score_sharpness is given, a second (detached) residual at that
    sharpness is returned from the same distance field at almost no cost.
    """
    from .silhouette import signed_face_distances

    dtype = quaternion.dtype
    verts = torch.as_tensor(template.vertices, dtype=dtype)
    world = transform_vertices(verts, quaternion, translation)
    pix, z = _project_normalized(world, cam)
    faces = _front_faces(template, z, world, cam)
    W, H = cam.resolution
    scale = float(max(W, H))
    mask = np.asarray(object_mask, dtype=bool)
    human = np.asarray(human_mask, dtype=bool)
    zero = quaternion.new_zeros(())

    if crop:
        with torch.no_grad():
            pix_np = (pix.detach().numpy() * scale)
            pix_np = pix_np[np.isfinite(pix_np).all(axis=1)]
        box = _crop_bounds(pix_np, mask, W, H)
        if box is None:
            return (zero, zero) if score_sharpness else zero
        u0, u1, v0, v1 = box
    else:
        u0, u1, v0, v1 = 0, W - 1, 0, H - 1

    ys, xs = torch.meshgrid(torch.arange(v0, v1 + 1, dtype=dtype),
                            torch.arange(u0, u1 + 1, dtype=dtype),
                            indexing="ij")
    pixels = torch.stack([xs.reshape(-1), ys.reshape(-1)], dim=-1) / scale
    mo = torch.as_tensor(mask[v0:v1 + 1, u0:u1 + 1].reshape(-1), dtype=dtype)
    keep = torch.as_tensor(~human[v0:v1 + 1, u0:u1 + 1].reshape(-1), dtype=dtype)

    if len(faces) == 0:
        resid = keep * mo
        flat = (resid ** 2).sum() / float(W * H)
        return (flat, flat.detach()) if score_sharpness else flat

    d = signed_face_distances(pixels, pix[faces])

    def residual(dist, sharp):
        cover = torch.sigmoid(dist / sharp)
        soft = 1.0 - torch.exp(
            torch.log1p(-cover.clamp(max=1 - 1e-12)).sum(dim=1))
        resid = keep * (soft - mo)
        return (resid ** 2).sum() / float(W * H)

    main = residual(d, sharpness)
    if score_sharpness is None:
        return main
    with torch.no_grad():
        score = residual(d.detach(), score_sharpness)
    return main, score


def tracking_loss(template: TriangleMesh, quaternion: torch.Tensor,
                  translation: torch.Tensor, cams: list[CameraView],
                  object_masks, human_masks,
                  human_field: OccupancyField | None = None,
                  lambda_silhouette: float = LAMBDA_SILHOUETTE,
                  lambda_interpenetration: float = LAMBDA_INTERPENETRATION,
                  sharpness: float = DEFAULT_SHARPNESS,
                  crop: bool = True) -> torch.Tensor:
    """Summed per-view masked silhouette L2 plus the interpenetration term."""
    total = quaternion.new_zeros(())
    for i, cam in enumerate(cams):
        total = total + _view_residual(template, quaternion, translation, cam,
                                       object_masks[i], human_masks[i],
                                       sharpness, crop)
    total = lambda_silhouette * total
    if human_field is not None and lambda_interpenetration > 0:
        verts = torch.as_tensor(template.vertices, dtype=quaternion.dtype)
        world = transform_vertices(verts, quaternion, translation)
        occ = human_field.sample_torch(world)
        pen = torch.clamp(occ - 0.5, min=0.0)
        total = total + lambda_interpenetration * (pen ** 2).sum()
    return total


def track_frame(template: TriangleMesh, prev_pose: RigidPose, cams,
                object_masks, human_masks,
                human_field: OccupancyField | None = None,
                config: TrackConfig | None = None) -> TrackResult:
    """Adam refinement from the previous frame's pose; quaternion is
    renormalized every step.  If the final loss exceeds the initial one the
    initial pose is returned with the diverged flag set."""
    cfg = config or TrackConfig()
    q = torch.as_tensor(prev_pose.quaternion, dtype=torch.float64).clone()
    t = torch.as_tensor(prev_pose.translation, dtype=torch.float64).clone()
    q.requires_grad_(True)
    t.requires_grad_(True)
    opt = torch.optim.Adam([q, t], lr=cfg.lr)

    anneal_at = ((cfg.anneal_at,) if isinstance(cfg.anneal_at, int)
                 else tuple(cfg.anneal_at))
    sharp_final = cfg.sharpness * cfg.anneal_factor ** len(anneal_at)

    def loss_pair(sharp):
        """(differentiable loss at `sharp`, detached loss at sharp_final)."""
        total = q.new_zeros(())
        score = q.new_zeros(())
        for i, cam in enumerate(cams):
            main, sc = _view_residual(template, q, t, cam, object_masks[i],
                                      human_masks[i], sharp, cfg.crop,
                                      score_sharpness=sharp_final)
            total = total + main
            score = score + sc
        total = cfg.lambda_silhouette * total
        score = cfg.lambda_silhouette * score
        if human_field is not None and cfg.lambda_interpenetration > 0:
            verts = torch.as_tensor(template.vertices, dtype=q.dtype)
            world = transform_vertices(verts, q, t)
            occ = human_field.sample_torch(world)
            pen = torch.clamp(occ - 0.5, min=0.0)
            term = cfg.lambda_interpenetration * (pen ** 2).sum()
            total = total + term
            score = score + term.detach()
        return total, float(score)

    # each gradient pass also scores the current pose at the final sharpness,
    # so tracking the best-so-far pose costs one extra pass total
    initial = None
    best = np.inf
    best_state = (q.detach().clone(), t.detach().clone())
    sharp = cfg.sharpness
    for it in range(cfg.iterations):
        if it in anneal_at:
            sharp = sharp * cfg.anneal_factor
        for g in opt.param_groups:
            g["lr"] = cfg.lr * 0.5 * (1 + np.cos(np.pi * it / cfg.iterations))
        opt.zero_grad()
        loss, s_now = loss_pair(sharp)
        if initial is None:
            initial = s_now
        if s_now < best:
            best = s_now
            best_state = (q.detach().clone(), t.detach().clone())
        loss.backward()
        opt.step()
        with torch.no_grad():
            q /= q.norm()
    with torch.no_grad():
        _, s_final = loss_pair(sharp_final)
    if initial is None:
        initial = s_final
    if s_final < best:
        best = s_final
        best_state = (q.detach().clone(), t.detach().clone())
    qn = best_state[0].numpy()
    qn = qn / np.linalg.norm(qn)
    pose = RigidPose(qn, best_state[1].numpy())
    # raw final iterate worse than the start: flag it; the returned pose is
    # the best-scoring iterate (the initial pose when nothing improved)
    diverged = s_final > initial
    return TrackResult(pose, best, initial, diverged=diverged)


_INIT_ROTATIONS = [
    quat_from_axis_angle((1, 0, 0), 0.0),
    quat_from_axis_angle((1, 0, 0), np.pi / 2),
    quat_from_axis_angle((0, 1, 0), np.pi / 2),
    quat_from_axis_angle((0, 0, 1), np.pi / 2),
    quat_from_axis_angle((1, 0, 0), np.pi),
    quat_from_axis_angle((0, 1, 0), np.pi),
    quat_from_axis_angle((0, 0, 1), np.pi),
    quat_from_axis_angle((1, 1, 1), 2 * np.pi / 3),
]


def _triangulate_centroids(cams, object_masks) -> np.ndarray | None:
    rays = []
    for cam, mask in zip(cams, object_masks):
        mask = np.asarray(mask, dtype=bool)
        if not mask.any():
            continue
        rows, cols = np.nonzero(mask)
        u, v = cols.mean(), rows.mean()
        fx, fy = cam.focal
        cx, cy = cam.principal
        d = cam.rotation.T @ np.array([(u - cx) / fx, (v - cy) / fy, 1.0])
        rays.append((cam.center, d / np.linalg.norm(d)))
    if len(rays) < 2:
        return None
    A = np.zeros((3, 3))
    b = np.zeros(3)
    for origin, d in rays:
        P = np.eye(3) - np.outer(d, d)
        A += P
        b += P @ origin
    return np.linalg.solve(A, b)


def align_first_frame(template: TriangleMesh, cams, object_masks, human_masks,
                      human_field: OccupancyField | None = None,
                      config: TrackConfig | None = None) -> TrackResult:
    """Template alignment: centroid triangulation + 8 rotation hypotheses,
    each refined by the tracker; the best final loss wins."""
    cfg = config or TrackConfig()
    visible_views = sum(bool(np.asarray(m).any()) for m in object_masks)
    if visible_views < 2:
        raise NotVisible("object mask empty in all but at most one view")
    center = _triangulate_centroids(cams, object_masks)
    if center is None:
        raise NotVisible("could not triangulate object centroid")
    offset = template.vertices.mean(axis=0)
    best = None
    for q in _INIT_ROTATIONS:
        R = RigidPose(q, np.zeros(3)).rotation
        start = RigidPose(q, center - R @ offset)
        res = track_frame(template, start, cams, object_masks, human_masks,
                          human_field, cfg)
        if best is None or res.loss < best.loss:
            best = res
    return best
