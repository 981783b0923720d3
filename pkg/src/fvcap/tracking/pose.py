"""Rigid 6DoF poses as unit quaternion + translation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    n = np.linalg.norm(axis)
    if n < 1e-15 or angle == 0.0:
        return np.array([1.0, 0.0, 0.0, 0.0])
    axis = axis / n
    half = angle / 2.0
    return np.concatenate([[np.cos(half)], np.sin(half) * axis])


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


@dataclass(frozen=True)
class RigidPose:
    """x_world = R(q) x + t, with q = (w, x, y, z), ||q|| = 1."""

    quaternion: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.quaternion, dtype=np.float64).reshape(4)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        n = np.linalg.norm(q)
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"quaternion norm {n} is not 1")
        object.__setattr__(self, "quaternion", q)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidPose":
        return cls(np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(3))

    @classmethod
    def from_axis_angle(cls, axis, angle, translation=(0.0, 0.0, 0.0)) -> "RigidPose":
        return cls(quat_from_axis_angle(axis, angle), np.asarray(translation, float))

    @classmethod
    def from_matrix(cls, R: np.ndarray, t) -> "RigidPose":
        R = np.asarray(R, dtype=np.float64)
        tr = np.trace(R)
        if tr > 0:
            s = np.sqrt(tr + 1.0) * 2
            q = np.array([0.25 * s, (R[2, 1] - R[1, 2]) / s,
                          (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s])
        else:
            i = int(np.argmax(np.diag(R)))
            j, k = (i + 1) % 3, (i + 2) % 3
            s = np.sqrt(max(R[i, i] - R[j, j] - R[k, k] + 1.0, 1e-18)) * 2
            q = np.zeros(4)
            q[0] = (R[k, j] - R[j, k]) / s
            q[1 + i] = 0.25 * s
            q[1 + j] = (R[j, i] + R[i, j]) / s
            q[1 + k] = (R[k, i] + R[i, k]) / s
        q = q / np.linalg.norm(q)
        return cls(q, np.asarray(t, float))

    @property
    def rotation(self) -> np.ndarray:
        return quat_to_matrix(self.quaternion)

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.atleast_2d(points) @ self.rotation.T + self.translation

    def compose(self, other: "RigidPose") -> "RigidPose":
        """self after other: (self o other)(x) = self(other(x))."""
        q = quat_multiply(self.quaternion, other.quaternion)
        q = q / np.linalg.norm(q)
        t = self.rotation @ other.translation + self.translation
        return RigidPose(q, t)

    def inverse(self) -> "RigidPose":
        qinv = self.quaternion * np.array([1.0, -1.0, -1.0, -1.0])
        return RigidPose(qinv, -(quat_to_matrix(qinv) @ self.translation))

    def rotation_angle_to(self, other: "RigidPose") -> float:
        """Geodesic rotation distance in radians."""
        d = abs(float(np.dot(self.quaternion, other.quaternion)))
        return 2.0 * np.arccos(min(d, 1.0))

    def to_dict(self) -> dict:
        return {"q": self.quaternion.tolist(), "t": self.translation.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "RigidPose":
        return cls(np.asarray(d["q"], float), np.asarray(d["t"], float))
