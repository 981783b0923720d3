"""Training loop for the occupancy network.

Two-phase schedule: phase 1 at lr 1e-4 with surface sigmas (3 cm, 6 cm),
phase 2 at lr 1e-5 with sigmas (2 cm, 3 cm), both plus uniform samples at
the 16:1 surface:uniform ratio.  Epoch counts scale by config for desk-size
runs.  Checkpoints carry optimizer and RNG state, so a resumed run
reproduces the uninterrupted loss trajectory exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..geometry.voxel import VoxelGrid
from ..synth.bundle import render_bundle
from ..synth.sampling import sample_points, tag_visibility
from ..synth.scene import SyntheticScene
from .loss import occupancy_loss
from .net import OccupancyNet


@dataclass
class ReconTrainConfig:
    epochs_phase1: int = 20
    epochs_phase2: int = 100
    lr_phase1: float = 1e-4
    lr_phase2: float = 1e-5
    sigmas_phase1: tuple = (0.03, 0.06)
    sigmas_phase2: tuple = (0.02, 0.03)
    batch_frames: int = 4
    steps_per_epoch: int = 1      # dataset passes per epoch (desk-scale lever)
    points_per_frame: int = 1700
    lambda_occ: float = 2.0
    lambda_vis: float = 1.0
    prior_resolution: int = 32
    use_prior: bool = True
    pool_multiplier: int = 16     # labeled-pool size per frame, in batches
    seed: int = 0
    checkpoint_dir: str | None = None
    checkpoint_every: int = 50


@dataclass
class FrameItem:
    scene: SyntheticScene
    frame: int
    images: torch.Tensor          # (V, 3, H, W)
    prior: VoxelGrid
    pools: dict = field(default_factory=dict)   # sigmas -> (pts, occ, occl)

    def draw(self, sigmas, count, rng, config):
        """Random minibatch from the per-phase labeled pool."""
        key = tuple(sigmas)
        if key not in self.pools:
            pool_n = max(count * config.pool_multiplier, count)
            batch = sample_points(self.scene, self.frame, pool_n,
                                  sigmas=sigmas,
                                  rng=np.random.default_rng(config.seed + self.frame))
            batch = tag_visibility(batch, self.scene, self.frame)
            self.pools[key] = batch
        pool = self.pools[key]
        idx = rng.choice(len(pool), size=count, replace=False)
        return pool.points[idx], pool.occupancy_gt[idx], pool.occluded[idx]


class ReconDataset:
    """Pre-rendered frames of one or more synthetic scenes."""

    def __init__(self, scenes: list[SyntheticScene], config: ReconTrainConfig):
        self.items: list[FrameItem] = []
        for scene in scenes:
            for t in range(scene.frames):
                bundle = render_bundle(scene, t)
                images = torch.as_tensor(
                    np.moveaxis(bundle.images, -1, 1).copy(), dtype=torch.float32)
                prior = _make_prior(scene, t, config)
                self.items.append(FrameItem(scene, t, images, prior))

    def __len__(self):
        return len(self.items)


def _make_prior(scene: SyntheticScene, frame: int,
                config: ReconTrainConfig) -> VoxelGrid:
    from ..body.fitting import voxelize_prior

    prior = voxelize_prior(scene.body_model, scene.body_params, frame,
                           resolution=config.prior_resolution)
    if not config.use_prior:
        prior = VoxelGrid(prior.origin, prior.spacing,
                          np.zeros_like(prior.values))
    return prior


def _epoch_plan(config: ReconTrainConfig):
    plan = []
    for _ in range(config.epochs_phase1):
        plan.append((1, config.lr_phase1, config.sigmas_phase1))
    for _ in range(config.epochs_phase2):
        plan.append((2, config.lr_phase2, config.sigmas_phase2))
    return plan


def save_checkpoint(path, net, optimizer, epoch, rng, config):
    torch.save({
        "model": net.state_dict(),
        "optimizer": optimizer.state_dict(),
        "epoch": epoch,
        "np_rng": rng.bit_generator.state,
        "torch_rng": torch.get_rng_state(),
        "config": vars(config),
    }, path)


def load_checkpoint(path, net, optimizer=None):
    data = torch.load(path, weights_only=False)
    net.load_state_dict(data["model"])
    if optimizer is not None and "optimizer" in data:
        optimizer.load_state_dict(data["optimizer"])
    return data


def train_recon(net: OccupancyNet, dataset: ReconDataset,
                config: ReconTrainConfig | None = None,
                resume_from=None):
    """Returns (net, metrics) where metrics is a list of per-epoch dicts."""
    config = config or ReconTrainConfig()
    plan = _epoch_plan(config)
    optimizer = torch.optim.Adam(net.parameters(), lr=config.lr_phase1)
    rng = np.random.default_rng(config.seed)
    torch.manual_seed(config.seed)
    start_epoch = 0
    if resume_from is not None:
        data = load_checkpoint(resume_from, net, optimizer)
        start_epoch = data["epoch"] + 1
        rng.bit_generator.state = data["np_rng"]
        torch.set_rng_state(data["torch_rng"])

    ckpt_dir = Path(config.checkpoint_dir) if config.checkpoint_dir else None
    if ckpt_dir:
        ckpt_dir.mkdir(parents=True, exist_ok=True)

    metrics = []
    for epoch in range(start_epoch, len(plan)):
        phase, lr, sigmas = plan[epoch]
        for g in optimizer.param_groups:
            g["lr"] = lr
        order = np.concatenate([rng.permutation(len(dataset.items))
                                for _ in range(config.steps_per_epoch)])
        epoch_loss = 0.0
        steps = 0
        for start in range(0, len(order), config.batch_frames):
            batch = [dataset.items[i] for i in order[start:start + config.batch_frames]]
            optimizer.zero_grad()
            total = 0.0
            for item in batch:
                pts, occ, occl = item.draw(sigmas, config.points_per_frame,
                                           rng, config)
                points = torch.as_tensor(pts, dtype=torch.float32)
                target = torch.as_tensor(occ, dtype=torch.float32)
                occluded = torch.as_tensor(occl)
                pred = net(item.images, item.scene.cameras, item.prior, points)
                loss = occupancy_loss(pred, target, occluded,
                                      config.lambda_occ, config.lambda_vis)
                total = total + loss
            total = total / len(batch)
            total.backward()
            optimizer.step()
            epoch_loss += float(total.detach())
            steps += 1
        metrics.append({"epoch": epoch, "phase": phase,
                        "loss": epoch_loss / max(steps, 1)})
        if ckpt_dir and ((epoch + 1) % config.checkpoint_every == 0
                         or epoch == len(plan) - 1):
            save_checkpoint(ckpt_dir / f"recon_{epoch:05d}.pt", net, optimizer,
                            epoch, rng, config)
    if ckpt_dir:
        write_metrics_csv(ckpt_dir / "metrics.csv", metrics)
    return net, metrics


def write_metrics_csv(path, metrics: list[dict]) -> None:
    if not metrics:
        return
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(metrics[0].keys()))
        writer.writeheader()
        writer.writerows(metrics)
