"""Pluggable perceptual feature extractors for the appearance loss.

The default is an offline multi-scale gradient bank (fixed Gaussian +
derivative kernels over an image pyramid), so training and tests run
hermetically.  A VGG-19 third-block extractor is available when
torchvision and its pretrained weights are present.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F


class PyramidGradientFeatures(torch.nn.Module):
    """Fixed (non-trainable) luminance/gradient features at three scales."""

    def __init__(self, levels: int = 3):
        super().__init__()
        self.levels = levels
        g = torch.tensor([[1., 2., 1.], [2., 4., 2.], [1., 2., 1.]]) / 16.0
        dx = torch.tensor([[-1., 0., 1.], [-2., 0., 2.], [-1., 0., 1.]]) / 8.0
        kernels = torch.stack([g, dx, dx.T])[:, None]          # (3, 1, 3, 3)
        self.register_buffer("kernels", kernels)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        """(B, 3, H, W) -> (B, C) flattened multi-scale features."""
        x = images
        feats = []
        for _ in range(self.levels):
            lum = x.mean(dim=1, keepdim=True)
            f = F.conv2d(lum, self.kernels, padding=1)
            feats.append(f.flatten(1))
            x = F.avg_pool2d(x, 2)
        return torch.cat(feats, dim=1)


class VggThirdBlockFeatures(torch.nn.Module):
    """Third-block features of a pretrained VGG-19 (requires torchvision)."""

    def __init__(self):
        super().__init__()
        from torchvision.models import VGG19_Weights, vgg19

        vgg = vgg19(weights=VGG19_Weights.IMAGENET1K_V1)
        self.body = vgg.features[:18].eval()    # through relu3_4
        for p in self.body.parameters():
            p.requires_grad_(False)
        self.register_buffer("mean", torch.tensor([0.485, 0.456, 0.406])[None, :, None, None])
        self.register_buffer("std", torch.tensor([0.229, 0.224, 0.225])[None, :, None, None])

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        x = (images - self.mean) / self.std
        return self.body(x).flatten(1)


def make_perceptual(kind: str = "pyramid"):
    if kind == "pyramid":
        return PyramidGradientFeatures()
    if kind == "vgg":
        return VggThirdBlockFeatures()
    raise ValueError(f"unknown perceptual extractor {kind!r}")
