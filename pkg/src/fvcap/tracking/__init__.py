"""Rigid object tracking by differentiable silhouette optimization."""

from .pose import RigidPose, quat_from_axis_angle, quat_to_matrix
from .silhouette import hard_silhouette, soft_silhouette, transform_vertices
from .tracker import (TrackConfig, TrackResult, align_first_frame,
                      silhouette_residual, track_frame, tracking_loss)

__all__ = [
    "RigidPose", "quat_from_axis_angle", "quat_to_matrix",
    "soft_silhouette", "hard_silhouette", "transform_vertices",
    "tracking_loss", "track_frame", "align_first_frame",
    "TrackConfig", "TrackResult", "silhouette_residual",
]
