"""Implicit occupancy reconstruction: network, loss, training, extraction."""

from .loss import LAMBDA_OCCLUDED, LAMBDA_VISIBLE, occupancy_loss
from .net import (DECODER_WIDTHS, IMAGE_FEATURE_CHANNELS,
                  VOXEL_FEATURE_CHANNELS, OccupancyNet, query_occupancy)
from .reconstruct import largest_component, reconstruct_mesh
from .train import (ReconDataset, ReconTrainConfig, load_checkpoint,
                    save_checkpoint, train_recon, write_metrics_csv)

__all__ = [
    "OccupancyNet", "query_occupancy", "occupancy_loss", "reconstruct_mesh",
    "largest_component",
    "ReconDataset", "ReconTrainConfig", "train_recon",
    "save_checkpoint", "load_checkpoint", "write_metrics_csv",
    "IMAGE_FEATURE_CHANNELS", "VOXEL_FEATURE_CHANNELS", "DECODER_WIDTHS",
    "LAMBDA_OCCLUDED", "LAMBDA_VISIBLE",
]
