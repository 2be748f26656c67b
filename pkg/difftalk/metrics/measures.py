"""
Per-frame quality measures: landmark distance, PSNR and SSIM
"""
import math
from typing import Optional, Sequence

import numpy as np
from scipy.signal import convolve2d

from difftalk.exceptions import ShapeError, ValidationError
from difftalk.landmarks.landmark import Landmark68
from difftalk.landmarks.partition import DEFAULT_PARTITION

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
DYNAMIC_RANGE = 255.0


def landmark_distance(pred: Landmark68, gt: Landmark68, subset: Optional[Sequence[int]] = None) -> float:
    """Mean Euclidean distance over subset (default: the predicted set R)"""
    idx = list(DEFAULT_PARTITION.predicted if subset is None else subset)
    return float(np.mean(np.linalg.norm(pred.points[idx] - gt.points[idx], axis=1)))


def _pair(a: np.ndarray, b: np.ndarray, what: str):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"{what}: image shapes differ, {a.shape} vs {b.shape}")
    return a, b


def psnr(a: np.ndarray, b: np.ndarray, max_val: float = DYNAMIC_RANGE) -> float:
    """10·log10(max_val² / MSE) in dB; identical images give math.inf"""
    a, b = _pair(a, b, "psnr")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(max_val * max_val / mse)


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    coords = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(coords ** 2) / (2.0 * sigma * sigma))
    window = np.outer(g, g)
    return window / window.sum()


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """
    Single-scale SSIM with an 11×11 Gaussian window (σ 1.5), k1 0.01, k2 0.03, range 255

    The SSIM map is evaluated at every full window position and averaged.

    Raises:
        ShapeError: Shapes differ or images are not 2-D
        ValidationError: Image smaller than the window
    """
    a, b = _pair(a, b, "ssim")
    if a.ndim != 2:
        raise ShapeError(f"ssim expects 2-D grayscale images, got shape {a.shape}")
    if min(a.shape) < SSIM_WINDOW:
        raise ValidationError(f"ssim needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {a.shape}")
    window = gaussian_window()
    c1 = (SSIM_K1 * DYNAMIC_RANGE) ** 2
    c2 = (SSIM_K2 * DYNAMIC_RANGE) ** 2

    def filt(x: np.ndarray) -> np.ndarray:
        return convolve2d(x, window, mode="valid")

    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a * mu_a
    var_b = filt(b * b) - mu_b * mu_b
    cov = filt(a * b) - mu_a * mu_b
    numerator = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    denominator = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(numerator / denominator))
