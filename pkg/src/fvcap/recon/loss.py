"""Occlusion-aware occupancy regression loss.

Two squared-error terms, one over samples no camera can see past the
objects ("occluded") and one over the rest, with separate weights.  The
default normalizes each term by its own sample count so the weights keep
their meaning regardless of how many points happen to be occluded;
reduction="sum" gives the raw-sum form instead.  An empty group
contributes 0.
"""

from __future__ import annotations

import torch

LAMBDA_OCCLUDED = 2.0
LAMBDA_VISIBLE = 1.0


def occupancy_loss(pred: torch.Tensor, target: torch.Tensor,
                   occluded: torch.Tensor,
                   lambda_occ: float = LAMBDA_OCCLUDED,
                   lambda_vis: float = LAMBDA_VISIBLE,
                   reduction: str = "mean") -> torch.Tensor:
    if reduction not in ("mean", "sum"):
        raise ValueError("reduction must be 'mean' or 'sum'")
    occluded = occluded.to(torch.bool)
    sq = (pred - target) ** 2
    zero = pred.new_zeros(())

    def term(mask):
        if not bool(mask.any()):
            return zero
        vals = sq[mask]
        return vals.mean() if reduction == "mean" else vals.sum()

    return lambda_occ * term(occluded) + lambda_vis * term(~occluded)
