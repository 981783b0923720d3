"""Two-source neural texture blending for novel views."""

from .inputs import (BlendInputs, build_blend_inputs, select_sources,
                     swap_inputs)
from .net import (OCCLUSION_CLAMP_M, BlendWeightNet, blend,
                  predict_weights, prepare_branch_inputs)
from .perceptual import (PyramidGradientFeatures, VggThirdBlockFeatures,
                         make_perceptual)
from .train import (BlendDataset, BlendItem, BlendTrainConfig,
                    appearance_loss, evaluate_blend, make_blend_item,
                    train_blend)

__all__ = [
    "BlendInputs", "build_blend_inputs", "select_sources", "swap_inputs",
    "BlendWeightNet", "blend", "predict_weights", "prepare_branch_inputs",
    "OCCLUSION_CLAMP_M",
    "make_perceptual", "PyramidGradientFeatures", "VggThirdBlockFeatures",
    "BlendDataset", "BlendItem", "BlendTrainConfig", "train_blend",
    "evaluate_blend", "appearance_loss", "make_blend_item",
]
