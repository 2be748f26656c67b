"""
Evaluation metrics and reports
"""
from difftalk.metrics.evaluate import EvalReport, FrameScore, evaluate, parse_report
from difftalk.metrics.measures import gaussian_window, landmark_distance, psnr, ssim

__all__ = [
    "EvalReport",
    "FrameScore",
    "evaluate",
    "gaussian_window",
    "landmark_distance",
    "parse_report",
    "psnr",
    "ssim",
]
