"""Training for the blend-weight network on synthetic novel views.

Each training item is a held-out ring camera: ground truth is the human
layer rendered at that camera, inputs are the two nearest rig views warped
through the novel human depth.  Loss is the appearance objective: per-image
sum of squared errors plus a perceptual feature term, averaged over the
batch, restricted to human-layer pixels.  Random source-order swapping
during training enforces the swap symmetry the architecture does not
hard-code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..geometry.rasterize import render_color, render_depth
from ..synth.bundle import render_bundle
from ..synth.scene import SyntheticScene, camera_ring
from .inputs import BlendInputs, build_blend_inputs, select_sources, swap_inputs
from .net import BlendWeightNet, blend, prepare_branch_inputs
from .perceptual import make_perceptual


@dataclass
class BlendTrainConfig:
    iterations: int = 44000
    lr: float = 1e-4
    batch: int = 4
    swap_augment: bool = True
    perceptual: str = "pyramid"
    novel_per_frame: int = 8
    holdout_per_frame: int = 2
    seed: int = 0


@dataclass
class BlendItem:
    inputs: BlendInputs
    branch: torch.Tensor      # (2, 5, H, W)
    gt: torch.Tensor          # (3, H, W)
    mask: torch.Tensor        # (H, W) bool, human pixels with valid geometry
    azimuth: float


def _novel_camera(scene: SyntheticScene, azimuth: float):
    return camera_ring(1, scene.config.image_size, scene.config.focal_scale,
                       start_azimuth=azimuth, id_offset=1000)[0]


def make_blend_item(scene: SyntheticScene, frame: int, azimuth: float,
                    source_images, source_depths) -> BlendItem:
    cam = _novel_camera(scene, azimuth)
    body = scene.body_mesh(frame)
    gt_img, gt_depth = render_color(body, cam, shading=scene.config.shading)
    i1, i2 = select_sources(cam, scene.cameras)
    inputs = build_blend_inputs(
        cam, gt_depth, [i1, i2],
        [source_depths[i1.id], source_depths[i2.id]],
        [source_images[i1.id], source_images[i2.id]])
    mask = gt_depth.mask & (inputs.valid[0] | inputs.valid[1])
    return BlendItem(inputs, prepare_branch_inputs(inputs),
                     torch.as_tensor(np.moveaxis(gt_img, -1, 0).copy(),
                                     dtype=torch.float32),
                     torch.as_tensor(mask), azimuth)


class BlendDataset:
    """Precomputed train/holdout novel views over one or more scenes."""

    def __init__(self, scenes: list[SyntheticScene],
                 config: BlendTrainConfig):
        rng = np.random.default_rng(config.seed)
        self.train: list[BlendItem] = []
        self.holdout: list[BlendItem] = []
        for scene in scenes:
            for t in range(scene.frames):
                bundle = render_bundle(scene, t)
                src_imgs = {c.id: bundle.images[i]
                            for i, c in enumerate(scene.cameras)}
                from ..geometry.warp import DepthMap

                src_depths = {c.id: DepthMap(bundle.depths[i])
                              for i, c in enumerate(scene.cameras)}
                n = config.novel_per_frame + config.holdout_per_frame
                azimuths = rng.uniform(0, 2 * np.pi, size=n)
                for k, az in enumerate(azimuths):
                    item = make_blend_item(scene, t, az, src_imgs, src_depths)
                    if k < config.novel_per_frame:
                        self.train.append(item)
                    else:
                        self.holdout.append(item)


def appearance_loss(rendered: torch.Tensor, target: torch.Tensor,
                    perceptual) -> torch.Tensor:
    """(B, 3, H, W) pair -> mean over batch of (SSE + perceptual SSE)."""
    l2 = ((rendered - target) ** 2).flatten(1).sum(dim=1)
    pf = perceptual(rendered)
    pt = perceptual(target)
    per = ((pf - pt) ** 2).sum(dim=1)
    return (l2 + per).mean()


def _batch_forward(net, items, swap_flags):
    branches = []
    for item, sw in zip(items, swap_flags):
        b = item.branch.flip(0) if sw else item.branch
        branches.append(b)
    x = torch.stack(branches)
    w = net(x)
    outs = []
    for k, (item, sw) in enumerate(zip(items, swap_flags)):
        i1 = item.branch[1 if sw else 0, :3]
        i2 = item.branch[0 if sw else 1, :3]
        out = w[k][None] * i1 + (1 - w[k][None]) * i2
        m = item.mask[None].to(out.dtype)
        outs.append((out * m, item.gt * m))
    return (torch.stack([o for o, _ in outs]),
            torch.stack([g for _, g in outs]))


def train_blend(net: BlendWeightNet, dataset: BlendDataset,
                config: BlendTrainConfig | None = None):
    """Returns (net, log); log rows carry iteration and loss."""
    config = config or BlendTrainConfig()
    perceptual = make_perceptual(config.perceptual)
    opt = torch.optim.Adam(net.parameters(), lr=config.lr)
    rng = np.random.default_rng(config.seed)
    torch.manual_seed(config.seed)
    log = []
    items = dataset.train
    for it in range(config.iterations):
        idx = rng.choice(len(items), size=min(config.batch, len(items)),
                         replace=False)
        batch = [items[i] for i in idx]
        swaps = (rng.random(len(batch)) < 0.5) if config.swap_augment \
            else np.zeros(len(batch), dtype=bool)
        opt.zero_grad()
        out, gt = _batch_forward(net, batch, swaps)
        loss = appearance_loss(out, gt, perceptual)
        loss.backward()
        opt.step()
        if it % 50 == 0 or it == config.iterations - 1:
            log.append({"iteration": it, "loss": float(loss.detach())})
    return net, log


def evaluate_blend(net: BlendWeightNet | None, items: list[BlendItem],
                   fixed_weight: float | None = None,
                   zero_direction_channels: bool = False) -> float:
    """Mean absolute error (8-bit scale) over human pixels of the items."""
    total, count = 0.0, 0
    for item in items:
        if fixed_weight is not None:
            w = np.full(item.inputs.images[0].shape[:2], fixed_weight)
            out, _ = blend(item.inputs, weights=w)
        else:
            branch = item.branch.clone()
            if zero_direction_channels:
                branch[:, 3:5] = 0.0
            with torch.no_grad():
                wmap = net(branch)
            out, _ = blend(item.inputs, weights=wmap.numpy().astype(np.float64))
        gt = np.moveaxis(item.gt.numpy(), 0, -1)
        m = item.mask.numpy()
        if m.any():
            total += np.abs(out[m] - gt[m]).sum() * 255.0
            count += int(m.sum()) * 3
    return total / max(count, 1)
