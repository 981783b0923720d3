"""Calibrated perspective cameras and point projection.

Conventions used throughout the package:

World frame (right-handed):
  - z up, meters; the capture rig sits on a circle of radius ``RIG_RADIUS``
    at height 1 m around the origin.

Camera frame (right-handed, standard computer vision):
  - x right, y down, z forward along the optical axis.
  - world-to-camera: ``x_cam = R @ X_world + t``.

Image frame:
  - origin top-left, u right, v down, units pixels.
  - pixel (u, v) corresponds to the continuous image-plane point (u, v);
    integer coordinates are pixel centers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class CameraView:
    """One calibrated perspective camera.

    rotation is the 3x3 world-to-camera matrix, translation the 3-vector
    such that x_cam = R X + t.  focal = (fx, fy), principal = (cx, cy),
    resolution = (W, H).
    """

    id: int
    rotation: np.ndarray
    translation: np.ndarray
    focal: tuple[float, float]
    principal: tuple[float, float]
    resolution: tuple[int, int]

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)
        if not np.allclose(R @ R.T, np.eye(3), atol=1e-6):
            raise ValueError(f"camera {self.id}: rotation is not orthonormal")
        if not np.isclose(np.linalg.det(R), 1.0, atol=1e-6):
            raise ValueError(f"camera {self.id}: rotation determinant != +1")
        fx, fy = self.focal
        cx, cy = self.principal
        W, H = self.resolution
        if fx <= 0 or fy <= 0:
            raise ValueError(f"camera {self.id}: non-positive focal length")
        if not (0 <= cx < W and 0 <= cy < H):
            raise ValueError(f"camera {self.id}: principal point outside image")

    @property
    def center(self) -> np.ndarray:
        """Camera optical center in world coordinates (-R^T t)."""
        return -self.rotation.T @ self.translation

    @property
    def optical_axis(self) -> np.ndarray:
        """Unit viewing direction (camera +z) in world coordinates."""
        return self.rotation.T @ np.array([0.0, 0.0, 1.0])

    @property
    def intrinsics(self) -> np.ndarray:
        fx, fy = self.focal
        cx, cy = self.principal
        return np.array([[fx, 0.0, cx], [0.0, fy, cy], [0.0, 0.0, 1.0]])

    def to_dict(self) -> dict:
        fx, fy = self.focal
        cx, cy = self.principal
        W, H = self.resolution
        return {
            "id": int(self.id),
            "R": [float(x) for x in self.rotation.reshape(-1)],
            "t": [float(x) for x in self.translation],
            "fx": float(fx),
            "fy": float(fy),
            "cx": float(cx),
            "cy": float(cy),
            "W": int(W),
            "H": int(H),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraView":
        return cls(
            id=int(d["id"]),
            rotation=np.asarray(d["R"], dtype=np.float64).reshape(3, 3),
            translation=np.asarray(d["t"], dtype=np.float64),
            focal=(float(d["fx"]), float(d["fy"])),
            principal=(float(d["cx"]), float(d["cy"])),
            resolution=(int(d["W"]), int(d["H"])),
        )


def look_at_camera(cam_id: int, center: np.ndarray, target: np.ndarray,
                   focal: float, resolution: tuple[int, int],
                   up: np.ndarray = (0.0, 0.0, 1.0)) -> CameraView:
    """Build a camera at `center` looking toward `target`, image up toward `up`."""
    center = np.asarray(center, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    up = np.asarray(up, dtype=np.float64)
    fwd = target - center
    fwd = fwd / np.linalg.norm(fwd)
    right = np.cross(fwd, up)
    nr = np.linalg.norm(right)
    if nr < 1e-12:
        # looking straight along `up`; pick an arbitrary right vector
        right = np.cross(fwd, np.array([1.0, 0.0, 0.0]))
        nr = np.linalg.norm(right)
    right = right / nr
    down = np.cross(fwd, right)
    R = np.stack([right, down, fwd], axis=0)
    t = -R @ center
    W, H = resolution
    return CameraView(
        id=cam_id,
        rotation=R,
        translation=t,
        focal=(focal, focal),
        principal=((W - 1) / 2.0, (H - 1) / 2.0),
        resolution=(W, H),
    )


def project(points: np.ndarray, cam: CameraView):
    """Perspective-project world points into a camera.

    Accepts a single 3-vector or an (N, 3) array.  Returns
    (pixels, depth, valid): pixels are (u, v) image coordinates, depth the
    camera-frame z, valid flags points strictly in front of the camera.
    Points behind the camera keep depth <= 0 and valid False instead of
    raising.
    """
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    cam_pts = pts @ cam.rotation.T + cam.translation
    z = cam_pts[:, 2]
    valid = z > 0
    safe_z = np.where(valid, z, 1.0)
    fx, fy = cam.focal
    cx, cy = cam.principal
    u = fx * cam_pts[:, 0] / safe_z + cx
    v = fy * cam_pts[:, 1] / safe_z + cy
    pix = np.stack([u, v], axis=-1)
    if single:
        return pix[0], float(z[0]), bool(valid[0])
    return pix, z, valid


def unproject(pixels: np.ndarray, depth: np.ndarray, cam: CameraView) -> np.ndarray:
    """Inverse of :func:`project` for valid (pixel, depth > 0) pairs."""
    pix = np.asarray(pixels, dtype=np.float64)
    single = pix.ndim == 1
    pix = np.atleast_2d(pix)
    z = np.atleast_1d(np.asarray(depth, dtype=np.float64))
    fx, fy = cam.focal
    cx, cy = cam.principal
    x = (pix[:, 0] - cx) / fx * z
    y = (pix[:, 1] - cy) / fy * z
    cam_pts = np.stack([x, y, z], axis=-1)
    world = (cam_pts - cam.translation) @ cam.rotation
    if single:
        return world[0]
    return world


def in_image(pixels: np.ndarray, resolution: tuple[int, int],
             margin: float = 0.0) -> np.ndarray:
    """True where (u, v) falls inside the image bounds (pixel centers)."""
    pix = np.atleast_2d(np.asarray(pixels))
    W, H = resolution
    return (
        (pix[:, 0] >= -0.5 + margin)
        & (pix[:, 0] <= W - 0.5 - margin)
        & (pix[:, 1] >= -0.5 + margin)
        & (pix[:, 1] <= H - 0.5 - margin)
    )


def save_cameras(path, cams: list[CameraView]) -> None:
    Path(path).write_text(json.dumps([c.to_dict() for c in cams], indent=2))


def load_cameras(path) -> list[CameraView]:
    data = json.loads(Path(path).read_text())
    return [CameraView.from_dict(d) for d in data]
