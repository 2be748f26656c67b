"""
Audio-driven landmark completion agent (LF-Trans, BM-Trans, AM-Trans)
"""
from difftalk.completion.analysis import MouthSweep, base_mouth_containment, mouth_sweep, swap_audio
from difftalk.completion.data import CompletionDataset
from difftalk.completion.loss import completion_loss, region_loss
from difftalk.completion.model import (
    CompletionConfig,
    CompletionModel,
    am_forward,
    bm_forward,
    clip_to_canvas,
    complete,
    complete_points,
    embed_audio,
    lf_forward,
)
from difftalk.completion.trainer import evaluate_completion, predict_landmarks, train_completion

__all__ = [
    "CompletionConfig",
    "CompletionDataset",
    "CompletionModel",
    "MouthSweep",
    "am_forward",
    "base_mouth_containment",
    "bm_forward",
    "clip_to_canvas",
    "complete",
    "complete_points",
    "completion_loss",
    "embed_audio",
    "evaluate_completion",
    "lf_forward",
    "mouth_sweep",
    "predict_landmarks",
    "region_loss",
    "swap_audio",
    "train_completion",
]
