"""
Landmark68 value type: normalisation, region split/merge and geometry helpers
"""
import logging
from typing import Sequence, Tuple

import numpy as np
from scipy.spatial import Delaunay

from difftalk.exceptions import ShapeError, ValidationError
from difftalk.landmarks.partition import (
    DEFAULT_PARTITION,
    INNER_LIP_PAIRS,
    JAW,
    MOUTH,
    N_POINTS,
    RegionPartition,
)

logger = logging.getLogger(__name__)


class Landmark68:
    """
    68 ordered (x, y) points normalised to [0, 1]

    Immutable: the point array is read-only once constructed.
    """

    __slots__ = ("points",)

    def __init__(self, points: np.ndarray):
        points = np.array(points, dtype=np.float64)
        if points.shape != (N_POINTS, 2):
            raise ShapeError(f"Landmark68 needs shape (68, 2), got {points.shape}")
        outside = np.flatnonzero(((points < 0.0) | (points > 1.0)).any(axis=1))
        if outside.size:
            raise ValidationError(f"landmark point {int(outside[0])} outside [0, 1]: {points[outside[0]].tolist()}")
        points.setflags(write=False)
        self.points = points

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Landmark68) and np.array_equal(self.points, other.points)

    def __hash__(self) -> int:
        return hash(self.points.tobytes())

    def __repr__(self) -> str:
        return f"Landmark68(centroid={self.points.mean(axis=0).round(4).tolist()})"

    def subset(self, indices: Sequence[int]) -> np.ndarray:
        return self.points[list(indices)]

    def shifted(self, dx: float, dy: float) -> "Landmark68":
        return Landmark68(self.points + np.array([dx, dy]))


# ============== NORMALISATION ==============

def normalize(points_px: np.ndarray, width: float, height: float) -> Landmark68:
    """
    Convert pixel coordinates to normalised coordinates

    Args:
        points_px: 68 (x, y) pixel pairs
        width: Image width in pixels
        height: Image height in pixels

    Raises:
        ValidationError: Non-positive size, or a point outside the image (index named)
    """
    if width <= 0 or height <= 0:
        raise ValidationError(f"image size must be positive, got {width}x{height}")
    points_px = np.asarray(points_px, dtype=np.float64)
    if points_px.shape != (N_POINTS, 2):
        raise ShapeError(f"expected 68 pixel pairs, got shape {points_px.shape}")
    for i, (x, y) in enumerate(points_px):
        if not (0.0 <= x <= width and 0.0 <= y <= height):
            raise ValidationError(f"landmark point {i} at ({x}, {y}) outside {width}x{height} image")
    return Landmark68(points_px / np.array([width, height], dtype=np.float64))


def denormalize(lm: Landmark68, width: float, height: float) -> np.ndarray:
    return lm.points * np.array([width, height], dtype=np.float64)


# ============== REGION SPLIT ==============

def split(lm: Landmark68, part: RegionPartition = DEFAULT_PARTITION) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Route points to (upper 39, lower contour 9, mouth 20), keeping index order"""
    return lm.subset(part.upper_input), lm.subset(part.lower_contour), lm.subset(part.mouth)


def merge_points(upper: np.ndarray, lower_contour: np.ndarray, mouth: np.ndarray,
                 part: RegionPartition = DEFAULT_PARTITION) -> np.ndarray:
    """Inverse of split on raw arrays; leading batch axes are allowed"""
    upper, lower_contour, mouth = (np.asarray(a, dtype=np.float64) for a in (upper, lower_contour, mouth))
    expected = ((len(part.upper_input), 2), (len(part.lower_contour), 2), (len(part.mouth), 2))
    for name, arr, shape in zip(("upper", "lower_contour", "mouth"), (upper, lower_contour, mouth), expected):
        if arr.shape[-2:] != shape:
            raise ShapeError(f"{name}: expected trailing shape {shape}, got {arr.shape}")
    out = np.zeros(upper.shape[:-2] + (N_POINTS, 2))
    out[..., list(part.upper_input), :] = upper
    out[..., list(part.lower_contour), :] = lower_contour
    out[..., list(part.mouth), :] = mouth
    return out


def merge(upper: np.ndarray, lower_contour: np.ndarray, mouth: np.ndarray,
          part: RegionPartition = DEFAULT_PARTITION) -> Landmark68:
    return Landmark68(merge_points(upper, lower_contour, mouth, part))


# ============== GEOMETRY ==============

def inner_lip_gap(points: np.ndarray) -> np.ndarray:
    """
    Mean vertical gap between facing inner-lip points

    Accepts a Landmark68 point array [68, 2] or a batch [..., 68, 2].
    """
    points = points.points if isinstance(points, Landmark68) else np.asarray(points)
    gaps = [points[..., low, 1] - points[..., up, 1] for up, low in INNER_LIP_PAIRS]
    return np.mean(gaps, axis=0)


def mouth_centroid(points: np.ndarray) -> np.ndarray:
    points = points.points if isinstance(points, Landmark68) else np.asarray(points)
    return points[..., list(MOUTH), :].mean(axis=-2)


def inside_jaw_hull(points: np.ndarray, query: np.ndarray) -> bool:
    """True when query lies inside the convex hull of the jaw contour"""
    points = points.points if isinstance(points, Landmark68) else np.asarray(points)
    hull = Delaunay(points[list(JAW)])
    return bool(hull.find_simplex(np.asarray(query).reshape(1, 2))[0] >= 0)
