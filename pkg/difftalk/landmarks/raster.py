"""
Landmark rasterisation for the synthesis conditioning branch
"""
import numpy as np

from difftalk.exceptions import ValidationError
from difftalk.landmarks.landmark import Landmark68

MIN_RASTER_SIZE = 16


def rasterize(lm: Landmark68, size: int) -> np.ndarray:
    """
    Splat every landmark as a unit-mass bilinear impulse on a zero canvas

    A point at normalised (x, y) lands at continuous pixel (x·size, y·size);
    integer positions put all mass in one pixel, fractional ones spill into
    the neighbouring pixels. Coordinates are clamped to the canvas.

    Args:
        lm: Landmarks to draw
        size: Canvas side length in pixels

    Returns:
        float64 image [size, size] with total mass 68
    """
    if size < MIN_RASTER_SIZE:
        raise ValidationError(f"raster size must be >= {MIN_RASTER_SIZE}, got {size}")
    coords = np.clip(lm.points * size, 0.0, size - 1.0)
    x0 = np.floor(coords[:, 0]).astype(int)
    y0 = np.floor(coords[:, 1]).astype(int)
    fx = coords[:, 0] - x0
    fy = coords[:, 1] - y0
    x1 = np.minimum(x0 + 1, size - 1)
    y1 = np.minimum(y0 + 1, size - 1)

    canvas = np.zeros((size, size))
    np.add.at(canvas, (y0, x0), (1.0 - fx) * (1.0 - fy))
    np.add.at(canvas, (y0, x1), fx * (1.0 - fy))
    np.add.at(canvas, (y1, x0), (1.0 - fx) * fy)
    np.add.at(canvas, (y1, x1), fx * fy)
    return canvas


def rasterize_batch(points: np.ndarray, size: int) -> np.ndarray:
    """Rasterise a batch of point arrays [B, 68, 2] into [B, 1, size, size]"""
    return np.stack([rasterize(Landmark68(p), size)[None] for p in points])
