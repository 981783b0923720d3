"""Parametric body: model, bundled template, keypoint fitting, prior volume."""

from .builtin import build_body, template_mesh
from .fitting import (FitConfig, FitResult, fit_body, reprojection_energy,
                      voxelize_prior)
from .model import (BodyModel, BodyParams, load_body_model, load_smpl_pickle,
                    pose_body, pose_joints, save_body_model)

__all__ = [
    "BodyModel", "BodyParams", "build_body", "template_mesh",
    "pose_body", "pose_joints", "save_body_model", "load_body_model",
    "load_smpl_pickle",
    "fit_body", "FitConfig", "FitResult", "reprojection_energy",
    "voxelize_prior",
]
