"""
Completion loss: mean squared point error over the predicted set R
"""
import numpy as np

from difftalk.autodiff.tensor import Tensor, as_tensor
from difftalk.exceptions import ShapeError
from difftalk.landmarks.landmark import Landmark68
from difftalk.landmarks.partition import DEFAULT_PARTITION, RegionPartition


def completion_loss(pred: Landmark68, gt: Landmark68, part: RegionPartition = DEFAULT_PARTITION) -> float:
    """(1/N) Σ_{p∈R} ‖pred_p − gt_p‖², N = |R|"""
    idx = list(part.predicted)
    diff = pred.points[idx] - gt.points[idx]
    return float(np.mean(np.sum(diff * diff, axis=1)))


def region_loss(pred_region: Tensor, gt_region: np.ndarray) -> Tensor:
    """
    Batched, differentiable form of completion_loss

    Args:
        pred_region: [B, |R|, 2] predicted points
        gt_region: [B, |R|, 2] ground truth

    Returns:
        Scalar tensor averaged over points and batch
    """
    pred_region = as_tensor(pred_region)
    if pred_region.shape != np.shape(gt_region):
        raise ShapeError(f"region loss shape mismatch: {pred_region.shape} vs {np.shape(gt_region)}")
    diff = pred_region - gt_region
    return (diff * diff).sum(axis=-1).mean()
