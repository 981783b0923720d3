"""Seeding, metrics and small image helpers used across modules."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def seed_all(seed: int):
    """Seed torch's global RNG and return a numpy Generator for the caller."""
    import torch

    torch.manual_seed(seed)
    return np.random.default_rng(seed)


def chamfer_distance(points_a: np.ndarray, points_b: np.ndarray) -> float:
    """Symmetric mean nearest-neighbor distance between two point sets."""
    from scipy.spatial import cKDTree

    a = np.asarray(points_a, dtype=np.float64)
    b = np.asarray(points_b, dtype=np.float64)
    da = cKDTree(b).query(a)[0]
    db = cKDTree(a).query(b)[0]
    return 0.5 * (da.mean() + db.mean())


def mesh_chamfer(mesh_a, mesh_b, samples: int = 5000, seed: int = 0) -> float:
    """Chamfer distance between surface samples of two meshes."""
    from .geometry.mesh import sample_surface

    rng = np.random.default_rng(seed)
    pa, _, _ = sample_surface(mesh_a, samples, rng)
    pb, _, _ = sample_surface(mesh_b, samples, rng)
    return chamfer_distance(pa, pb)


def bilinear_sample(image: np.ndarray, pixels: np.ndarray):
    """Sample an H x W (x C) image at float (u, v) locations.

    Returns (values, valid); out-of-bounds samples are zero with valid False.
    """
    img = np.asarray(image, dtype=np.float64)
    squeeze = img.ndim == 2
    if squeeze:
        img = img[..., None]
    H, W, C = img.shape
    pix = np.atleast_2d(np.asarray(pixels, dtype=np.float64))
    u, v = pix[:, 0], pix[:, 1]
    valid = (u >= 0) & (u <= W - 1) & (v >= 0) & (v <= H - 1)
    u = np.clip(u, 0, W - 1)
    v = np.clip(v, 0, H - 1)
    u0 = np.floor(u).astype(int)
    v0 = np.floor(v).astype(int)
    u1 = np.minimum(u0 + 1, W - 1)
    v1 = np.minimum(v0 + 1, H - 1)
    fu = (u - u0)[:, None]
    fv = (v - v0)[:, None]
    out = (
        img[v0, u0] * (1 - fu) * (1 - fv)
        + img[v0, u1] * fu * (1 - fv)
        + img[v1, u0] * (1 - fu) * fv
        + img[v1, u1] * fu * fv
    )
    out[~valid] = 0.0
    if squeeze:
        out = out[:, 0]
    return out, valid


# ---------------------------------------------------------------------------
# image files

def save_image(path, image: np.ndarray) -> None:
    """Save an H x W (x3) float [0,1] array as 8-bit PNG."""
    from PIL import Image

    arr = np.clip(np.asarray(image) * 255.0 + 0.5, 0, 255).astype(np.uint8)
    Image.fromarray(arr).save(str(path))


def load_image(path) -> np.ndarray:
    from PIL import Image

    arr = np.asarray(Image.open(str(path)), dtype=np.float64) / 255.0
    return arr


def save_mask(path, mask: np.ndarray) -> None:
    from PIL import Image

    Image.fromarray((np.asarray(mask) > 0).astype(np.uint8) * 255).save(str(path))


def load_mask(path) -> np.ndarray:
    from PIL import Image

    return np.asarray(Image.open(str(path))) > 127


def save_depth(path, depth) -> None:
    """Single-channel 32-bit float TIFF; the 0 sentinel round-trips exactly."""
    from PIL import Image

    values = depth.values if hasattr(depth, "values") else np.asarray(depth)
    Image.fromarray(values.astype(np.float32), mode="F").save(str(path))


def load_depth(path):
    from PIL import Image

    from .geometry.warp import DepthMap

    return DepthMap(np.asarray(Image.open(str(path)), dtype=np.float64))


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    from skimage.metrics import peak_signal_noise_ratio

    return float(peak_signal_noise_ratio(a, b, data_range=1.0))


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    from skimage.metrics import structural_similarity

    return float(structural_similarity(a, b, channel_axis=-1, data_range=1.0))


def mae(a: np.ndarray, b: np.ndarray) -> float:
    """Mean absolute error in 8-bit scale, the usual image-difference report."""
    return float(np.abs(np.asarray(a) - np.asarray(b)).mean() * 255.0)
