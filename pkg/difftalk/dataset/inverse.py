"""
Analysis-by-synthesis landmark read-back

Generated images are scored against the renderer: the mouth openness that
best re-renders the lower half of an image is found by a coarse-to-fine grid
search, and the analytic landmarks of that fit are returned. All other
parameters come from the frame's params sidecar.
"""
import logging

import numpy as np

from difftalk.dataset.geometry import FaceParams, landmarks_from_params
from difftalk.dataset.render import render
from difftalk.exceptions import ShapeError
from difftalk.landmarks.landmark import Landmark68

logger = logging.getLogger(__name__)

COARSE_STEPS = 51
FINE_STEPS = 21


def _lower_error(image: np.ndarray, params: FaceParams, m: float) -> float:
    size = image.shape[0]
    candidate = render(params.with_mouth(m), size)
    diff = candidate[size // 2:].astype(np.float64) - image[size // 2:].astype(np.float64)
    return float(np.sum(diff * diff))


def fit_mouth_openness(image: np.ndarray, params: FaceParams) -> float:
    """Mouth openness in [0, 1] minimizing the lower-half squared error"""
    image = np.asarray(image)
    if image.ndim != 2 or image.shape[0] != image.shape[1]:
        raise ShapeError(f"read-back needs a square grayscale image, got shape {image.shape}")
    coarse = np.linspace(0.0, 1.0, COARSE_STEPS)
    errors = [_lower_error(image, params, m) for m in coarse]
    best = float(coarse[int(np.argmin(errors))])
    spacing = coarse[1] - coarse[0]
    fine = np.clip(np.linspace(best - spacing, best + spacing, FINE_STEPS), 0.0, 1.0)
    errors = [_lower_error(image, params, m) for m in fine]
    return float(fine[int(np.argmin(errors))])


def read_back_landmarks(image: np.ndarray, params: FaceParams) -> Landmark68:
    """Analytic landmarks of the frame with its mouth openness re-fitted from image"""
    m = fit_mouth_openness(image, params)
    logger.debug(f"Read-back mouth openness {m:.3f} (sidecar {params.m:.3f})")
    return landmarks_from_params(params.with_mouth(m))
