"""On-disk dataset layout.

    scene/cameras.json
    scene/frame_{t:05d}/view_{i}/image.png
                                 mask_human.png
                                 mask_obj{k}.png
                                 keypoints.json
                                 depth.tiff          (32-bit float)
    scene/gt/body_model.npz, body_params.json, object_{k}.json|ply

The same reader ingests real captures: drop externally produced masks and
keypoints into the per-view directories (ground truth then simply absent).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..body.model import BodyParams, load_body_model, save_body_model
from ..geometry.camera import load_cameras, save_cameras
from ..geometry.mesh import save_ply
from ..utils import (load_depth, load_image, load_mask, save_depth,
                     save_image, save_mask)
from .bundle import FrameBundle, render_bundle
from .scene import SyntheticScene


def frame_dir(root, frame: int) -> Path:
    return Path(root) / f"frame_{frame:05d}"


def write_bundle(root, bundle: FrameBundle) -> None:
    for i in range(bundle.num_views):
        vdir = frame_dir(root, bundle.frame) / f"view_{i}"
        vdir.mkdir(parents=True, exist_ok=True)
        save_image(vdir / "image.png", bundle.images[i])
        save_mask(vdir / "mask_human.png", bundle.human_masks[i])
        for k in range(bundle.num_objects):
            save_mask(vdir / f"mask_obj{k}.png", bundle.object_masks[i, k])
        kp = bundle.keypoints[i]
        (vdir / "keypoints.json").write_text(json.dumps(
            {"joints": [[float(u), float(v), float(c)] for u, v, c in kp]}))
        if bundle.depths is not None:
            save_depth(vdir / "depth.tiff", bundle.depths[i])


def read_bundle(root, frame: int, cameras) -> FrameBundle:
    fdir = frame_dir(root, frame)
    V = len(cameras)
    images, hmasks, omasks, kps, depths = [], [], [], [], []
    have_depth = True
    for i in range(V):
        vdir = fdir / f"view_{i}"
        images.append(load_image(vdir / "image.png"))
        hmasks.append(load_mask(vdir / "mask_human.png"))
        obj = []
        k = 0
        while (vdir / f"mask_obj{k}.png").exists():
            obj.append(load_mask(vdir / f"mask_obj{k}.png"))
            k += 1
        omasks.append(obj)
        kp = json.loads((vdir / "keypoints.json").read_text())["joints"]
        kps.append(np.asarray(kp, dtype=np.float64))
        if (vdir / "depth.tiff").exists():
            depths.append(load_depth(vdir / "depth.tiff").values)
        else:
            have_depth = False
    K = len(omasks[0])
    H, W = images[0].shape[:2]
    object_masks = np.zeros((V, K, H, W), dtype=bool)
    for i in range(V):
        for k in range(K):
            object_masks[i, k] = omasks[i][k]
    bundle = FrameBundle(
        frame, np.stack(images), np.stack(hmasks), object_masks,
        np.stack(kps), list(cameras),
        np.stack(depths) if have_depth else None)
    bundle.validate()
    return bundle


def write_dataset(scene: SyntheticScene, root, rng=None) -> Path:
    """Render and persist every frame plus ground truth; returns the root."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    save_cameras(root / "cameras.json", scene.cameras)
    for t in range(scene.frames):
        write_bundle(root, render_bundle(scene, t, rng=rng))
    gt = root / "gt"
    gt.mkdir(exist_ok=True)
    save_body_model(gt / "body_model.npz", scene.body_model)
    scene.body_params.save(gt / "body_params.json")
    np.save(gt / "body_colors.npy", scene.body_colors)
    for k, obj in enumerate(scene.objects):
        (gt / f"object_{k}.json").write_text(json.dumps({
            "kind": obj.kind,
            "poses": [p.to_dict() for p in obj.poses],
        }))
        save_ply(gt / f"object_{k}.ply", obj.template)
    return root


def read_dataset_cameras(root):
    return load_cameras(Path(root) / "cameras.json")


def read_gt_body(root):
    gt = Path(root) / "gt"
    model = load_body_model(gt / "body_model.npz")
    params = BodyParams.load(gt / "body_params.json")
    colors_path = gt / "body_colors.npy"
    colors = np.load(colors_path) if colors_path.exists() else None
    return model, params, colors


def count_frames(root) -> int:
    return len(sorted(Path(root).glob("frame_*")))
