"""Per-pixel blending weight prediction from two warped sources.

Siamese layout: both source branches go through the *same* encoder module
(weights tied by construction), the decoder fuses both feature stacks with
skip connections and emits a single sigmoid weight map W.  The blended
novel view is exactly W * I1 + (1 - W) * I2; no other color pathway exists.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .inputs import BlendInputs

OCCLUSION_CLAMP_M = 0.5    # meters; scaled to [-1, 1] before the net


def prepare_branch_inputs(inputs: BlendInputs, dtype=torch.float32):
    """(2, 5, H, W) tensors: RGB + scaled occlusion + angle cosine.

    Invalid pixels are encoded as the extreme signal (I=0, O=-1, A=-1).
    """
    imgs = np.moveaxis(inputs.images, -1, 1).copy()        # (2, 3, H, W)
    occ = np.clip(inputs.occlusion / OCCLUSION_CLAMP_M, -1.0, 1.0)
    ang = inputs.angles.copy()
    valid = inputs.valid
    for i in range(2):
        imgs[i][:, ~valid[i]] = 0.0
        occ[i][~valid[i]] = -1.0
        ang[i][~valid[i]] = -1.0
    stack = np.concatenate([imgs, occ[:, None], ang[:, None]], axis=1)
    return torch.as_tensor(stack, dtype=dtype)


class _ConvBlock(nn.Module):
    def __init__(self, cin, cout):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(cin, cout, 3, padding=1),
            nn.GroupNorm(4, cout),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(cout, cout, 3, padding=1),
            nn.GroupNorm(4, cout),
            nn.LeakyReLU(0.2, inplace=True),
        )

    def forward(self, x):
        return self.body(x)


class BlendWeightNet(nn.Module):
    """Twin shared-weight encoder + joint decoder with skips -> W in [0,1]."""

    def __init__(self, base: int = 16):
        super().__init__()
        self.enc1 = _ConvBlock(5, base)
        self.enc2 = _ConvBlock(base, base * 2)
        self.enc3 = _ConvBlock(base * 2, base * 4)
        self.dec2 = _ConvBlock(base * 4 * 2 + base * 2 * 2, base * 2)
        self.dec1 = _ConvBlock(base * 2 + base * 2, base)
        self.head = nn.Conv2d(base, 1, 1)

    def encode(self, x):
        f1 = self.enc1(x)
        f2 = self.enc2(F.avg_pool2d(f1, 2))
        f3 = self.enc3(F.avg_pool2d(f2, 2))
        return f1, f2, f3

    def forward(self, branch_inputs: torch.Tensor) -> torch.Tensor:
        """branch_inputs (2, 5, H, W) or batched (B, 2, 5, H, W) -> W maps."""
        single = branch_inputs.dim() == 4
        x = branch_inputs[None] if single else branch_inputs
        B = x.shape[0]
        h, w = x.shape[-2:]
        pad_h = (-h) % 4
        pad_w = (-w) % 4
        if pad_h or pad_w:
            x = F.pad(x.reshape(B * 2, 5, h, w), (0, pad_w, 0, pad_h))
            x = x.reshape(B, 2, 5, h + pad_h, w + pad_w)
        # both branches through the same (shared) encoder
        fa = self.encode(x[:, 0])
        fb = self.encode(x[:, 1])
        f3 = torch.cat([fa[2], fb[2]], dim=1)
        f2 = torch.cat([fa[1], fb[1]], dim=1)
        f1 = torch.cat([fa[0], fb[0]], dim=1)
        u2 = self.dec2(torch.cat([
            F.interpolate(f3, scale_factor=2, mode="bilinear", align_corners=False),
            f2], dim=1))
        u1 = self.dec1(torch.cat([
            F.interpolate(u2, scale_factor=2, mode="bilinear", align_corners=False),
            f1], dim=1))
        w_map = torch.sigmoid(self.head(u1))[:, 0, :h, :w]
        return w_map[0] if single else w_map


def predict_weights(net: BlendWeightNet, inputs: BlendInputs) -> np.ndarray:
    with torch.no_grad():
        w = net(prepare_branch_inputs(inputs))
    return w.numpy().astype(np.float64)


def blend(inputs: BlendInputs, net: BlendWeightNet | None = None,
          weights: np.ndarray | None = None):
    """Convex per-pixel combination of the two warped sources.

    Returns (novel image, weight map).  `weights` overrides the net (used
    by tests and the fixed-weight baseline).
    """
    if weights is None:
        if net is None:
            raise ValueError("either a net or explicit weights are required")
        weights = predict_weights(net, inputs)
    w = np.asarray(weights, dtype=np.float64)
    if ((w < 0) | (w > 1)).any():
        raise ValueError("blend weights must lie in [0, 1]")
    out = w[..., None] * inputs.images[0] + (1.0 - w[..., None]) * inputs.images[1]
    return out, w
