"""
Image file helpers: 8-bit grayscale portable graymaps (P5), PNG files and landmark overlays
"""
import logging
import os

import numpy as np
from PIL import Image, ImageDraw

from difftalk.exceptions import ShapeError, ValidationError

logger = logging.getLogger(__name__)


def save_pgm(path: str, image: np.ndarray) -> str:
    """
    Write a uint8 (H, W) array as a binary PGM

    Raises:
        ShapeError: image is not 2-D
        ValidationError: image is not uint8
    """
    image = np.asarray(image)
    if image.ndim != 2:
        raise ShapeError(f"grayscale image must be 2-D, got shape {image.shape}")
    if image.dtype != np.uint8:
        raise ValidationError(f"grayscale image must be uint8, got {image.dtype}")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    Image.fromarray(image).save(path, format="PPM")
    return path


def load_pgm(path: str) -> np.ndarray:
    with Image.open(path) as img:
        if img.mode != "L":
            raise ValidationError(f"{path}: expected 8-bit grayscale, got mode {img.mode}")
        return np.asarray(img, dtype=np.uint8).copy()


def save_png(path: str, image: np.ndarray) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    Image.fromarray(np.asarray(image, dtype=np.uint8)).save(path, format="PNG")
    return path


# ============== LANDMARK OVERLAYS ==============

GT_COLOR = (0, 200, 0)
PRED_COLOR = (230, 40, 40)


def _panel(image: np.ndarray, point_sets, scale: int) -> Image.Image:
    gray = Image.fromarray(np.asarray(image, dtype=np.uint8))
    panel = gray.resize((gray.width * scale, gray.height * scale), Image.NEAREST).convert("RGB")
    draw = ImageDraw.Draw(panel)
    for points, color in point_sets:
        for x, y in np.asarray(points) * np.array([panel.width, panel.height]):
            draw.ellipse([x - 1.5, y - 1.5, x + 1.5, y + 1.5], fill=color)
    return panel


def landmark_overlay(reference: np.ndarray, generated: np.ndarray, gt_points: np.ndarray,
                     pred_points: np.ndarray, scale: int = 4) -> np.ndarray:
    """
    Side-by-side RGB panel: ground-truth frame with both point sets, generated frame with the prediction

    Args:
        reference: uint8 ground-truth image [s, s]
        generated: uint8 generated image [s, s]
        gt_points: Ground-truth landmarks, normalised [68, 2]
        pred_points: Completed landmarks, normalised [68, 2]
        scale: Nearest-neighbour magnification of each panel

    Returns:
        uint8 [s·scale, 2·s·scale, 3]
    """
    if np.shape(reference) != np.shape(generated):
        raise ShapeError(f"overlay panels differ: {np.shape(reference)} vs {np.shape(generated)}")
    left = _panel(reference, [(gt_points, GT_COLOR), (pred_points, PRED_COLOR)], scale)
    right = _panel(generated, [(pred_points, PRED_COLOR)], scale)
    canvas = Image.new("RGB", (left.width * 2, left.height))
    canvas.paste(left, (0, 0))
    canvas.paste(right, (left.width, 0))
    return np.asarray(canvas, dtype=np.uint8)
