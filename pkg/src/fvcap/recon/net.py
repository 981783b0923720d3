"""Occlusion-aware implicit occupancy network.

A query point P gets three conditioning features:
  - mean over views of a 128-channel pixel-aligned image feature sampled at
    P's projection (bilinear, zero padding outside the image),
  - trilinear samples from a multi-resolution encoding of the voxelized
    body-prior volume, channel counts (1, 16, 32, 32, 32), zero padded
    outside the volume,
  - a 1-d depth feature: the camera-frame z of P, scaled by the rig radius
    and averaged over views.
The decoder MLP has layer widths (242, 1024, 512, 256, 128, 1) with a final
sigmoid; 242 = 128 + 113 + 1 is asserted at construction.  The final layer
is zero-initialized, so an untrained net answers 0.5 everywhere.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .. import RIG_RADIUS
from ..geometry.camera import CameraView
from ..geometry.voxel import VoxelGrid

IMAGE_FEATURE_CHANNELS = 128
VOXEL_FEATURE_CHANNELS = (1, 16, 32, 32, 32)
DECODER_WIDTHS = (242, 1024, 512, 256, 128, 1)


class ImageEncoder(nn.Module):
    """Encoder-decoder with skip connections, full-resolution 128-ch output."""

    def __init__(self, base: int = 16):
        super().__init__()
        self.down1 = self._block(3, base)
        self.down2 = self._block(base, base * 2)
        self.down3 = self._block(base * 2, base * 4)
        self.up2 = self._block(base * 4 + base * 2, base * 2)
        self.up1 = self._block(base * 2 + base, base)
        self.head = nn.Conv2d(base, IMAGE_FEATURE_CHANNELS, 1)

    @staticmethod
    def _block(cin, cout):
        return nn.Sequential(
            nn.Conv2d(cin, cout, 3, padding=1),
            nn.GroupNorm(4, cout),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(cout, cout, 3, padding=1),
            nn.GroupNorm(4, cout),
            nn.LeakyReLU(0.2, inplace=True),
        )

    def forward(self, x):
        h, w = x.shape[-2:]
        pad_h = (-h) % 4
        pad_w = (-w) % 4
        if pad_h or pad_w:
            x = F.pad(x, (0, pad_w, 0, pad_h))
        f1 = self.down1(x)
        f2 = self.down2(F.avg_pool2d(f1, 2))
        f3 = self.down3(F.avg_pool2d(f2, 2))
        u2 = self.up2(torch.cat([
            F.interpolate(f3, scale_factor=2, mode="bilinear", align_corners=False),
            f2], dim=1))
        u1 = self.up1(torch.cat([
            F.interpolate(u2, scale_factor=2, mode="bilinear", align_corners=False),
            f1], dim=1))
        out = self.head(u1)
        return out[..., :h, :w]


class VoxelEncoder(nn.Module):
    """Strided 3D convolutions; returns the input volume plus 4 feature levels."""

    def __init__(self):
        super().__init__()
        chans = VOXEL_FEATURE_CHANNELS
        self.convs = nn.ModuleList([
            nn.Conv3d(chans[i], chans[i + 1], 3, stride=2, padding=1)
            for i in range(len(chans) - 1)
        ])

    def forward(self, vol):
        feats = [vol]
        x = vol
        for conv in self.convs:
            x = F.leaky_relu(conv(x), 0.2)
            feats.append(x)
        return feats


class OccupancyDecoder(nn.Module):
    def __init__(self):
        super().__init__()
        widths = DECODER_WIDTHS
        self.layers = nn.ModuleList([
            nn.Linear(widths[i], widths[i + 1]) for i in range(len(widths) - 1)
        ])
        nn.init.zeros_(self.layers[-1].weight)
        nn.init.zeros_(self.layers[-1].bias)

    def forward(self, x):
        for layer in self.layers[:-1]:
            x = F.leaky_relu(layer(x), 0.2)
        return torch.sigmoid(self.layers[-1](x))


class OccupancyNet(nn.Module):
    def __init__(self, image_base: int = 16):
        super().__init__()
        expected = IMAGE_FEATURE_CHANNELS + sum(VOXEL_FEATURE_CHANNELS) + 1
        if DECODER_WIDTHS[0] != expected:
            raise AssertionError(
                f"decoder input width {DECODER_WIDTHS[0]} != "
                f"{IMAGE_FEATURE_CHANNELS}+{sum(VOXEL_FEATURE_CHANNELS)}+1")
        self.image_encoder = ImageEncoder(image_base)
        self.voxel_encoder = VoxelEncoder()
        self.decoder = OccupancyDecoder()

    # -- feature assembly -------------------------------------------------

    def encode_images(self, images: torch.Tensor) -> torch.Tensor:
        """(V, 3, H, W) -> (V, C, H, W)."""
        return self.image_encoder(images)

    def encode_prior(self, volume: torch.Tensor):
        """(1, 1, X, Y, Z) -> feature pyramid list."""
        return self.voxel_encoder(volume)

    @staticmethod
    def _project(points: torch.Tensor, cam: CameraView):
        R = torch.as_tensor(cam.rotation, dtype=points.dtype)
        t = torch.as_tensor(cam.translation, dtype=points.dtype)
        pc = points @ R.T + t
        z = pc[:, 2]
        safe = z.clamp_min(1e-6)
        fx, fy = cam.focal
        cx, cy = cam.principal
        u = fx * pc[:, 0] / safe + cx
        v = fy * pc[:, 1] / safe + cy
        return u, v, z

    def pixel_features(self, feats: torch.Tensor, cams, points: torch.Tensor):
        """Mean over views of bilinear feature samples at the projections."""
        N = points.shape[0]
        acc = 0.0
        for i, cam in enumerate(cams):
            u, v, z = self._project(points, cam)
            W, H = cam.resolution
            gx = 2.0 * u / (W - 1) - 1.0
            gy = 2.0 * v / (H - 1) - 1.0
            grid = torch.stack([gx, gy], dim=-1).reshape(1, N, 1, 2)
            sampled = F.grid_sample(feats[i:i + 1], grid, mode="bilinear",
                                    padding_mode="zeros", align_corners=True)
            front = (z > 0).to(points.dtype).reshape(1, 1, N, 1)
            acc = acc + (sampled * front)[0, :, :, 0].T
        return acc / len(cams)

    @staticmethod
    def depth_feature(cams, points: torch.Tensor) -> torch.Tensor:
        zs = []
        for cam in cams:
            R = torch.as_tensor(cam.rotation, dtype=points.dtype)
            t = torch.as_tensor(cam.translation, dtype=points.dtype)
            zs.append((points @ R.T + t)[:, 2] / RIG_RADIUS)
        return torch.stack(zs, dim=0).mean(dim=0, keepdim=False)[:, None]

    @staticmethod
    def prior_features(pyramid, grid: VoxelGrid, points: torch.Tensor):
        """Concatenated trilinear samples from every pyramid level.

        Points outside the prior volume get exactly zero features; the
        explicit mask matters because grid_sample cannot zero-pad along a
        size-1 axis (the coarsest levels can collapse that far).
        """
        dims = torch.as_tensor(grid.values.shape, dtype=points.dtype)
        origin = torch.as_tensor(grid.origin, dtype=points.dtype)
        idx = (points - origin) / grid.spacing
        norm = 2.0 * idx / (dims - 1.0) - 1.0
        inside = (norm.abs() <= 1.0).all(dim=1).to(points.dtype)[:, None]
        g = torch.stack([norm[:, 2], norm[:, 1], norm[:, 0]], dim=-1)
        g = g.reshape(1, -1, 1, 1, 3)
        outs = []
        for level in pyramid:
            s = F.grid_sample(level, g, mode="bilinear", padding_mode="zeros",
                              align_corners=True)
            outs.append(s[0, :, :, 0, 0].T)
        return torch.cat(outs, dim=1) * inside

    def query_features(self, image_feats, cams, pyramid, prior_grid, points):
        pix = self.pixel_features(image_feats, cams, points)
        vox = self.prior_features(pyramid, prior_grid, points)
        dep = self.depth_feature(cams, points)
        return torch.cat([pix, vox, dep], dim=1)

    def forward(self, images, cams, prior_grid: VoxelGrid, points):
        """images (V,3,H,W), points (N,3) -> occupancy (N,) in (0,1)."""
        feats = self.encode_images(images)
        vol = torch.as_tensor(prior_grid.values, dtype=points.dtype)[None, None]
        pyramid = self.encode_prior(vol)
        x = self.query_features(feats, cams, pyramid, prior_grid, points)
        return self.decoder(x)[:, 0]


def query_occupancy(net: OccupancyNet, images: np.ndarray, cams,
                    prior: VoxelGrid, points: np.ndarray,
                    chunk: int = 65536) -> np.ndarray:
    """Numpy convenience wrapper: images (V,H,W,3) in [0,1], points (N,3)."""
    dtype = next(net.parameters()).dtype
    imgs = torch.as_tensor(np.moveaxis(images, -1, 1).copy(), dtype=dtype)
    pts_all = torch.as_tensor(np.atleast_2d(points), dtype=dtype)
    with torch.no_grad():
        feats = net.encode_images(imgs)
        vol = torch.as_tensor(prior.values, dtype=dtype)[None, None]
        pyramid = net.encode_prior(vol)
        outs = []
        for i in range(0, len(pts_all), chunk):
            x = net.query_features(feats, cams, pyramid, prior, pts_all[i:i + chunk])
            outs.append(net.decoder(x)[:, 0])
    return torch.cat(outs).numpy()
