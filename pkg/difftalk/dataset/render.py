"""
Grayscale face renderer

Shapes are drawn with Pillow on a 4× supersampled canvas and box-filtered down
to the target size, which gives anti-aliased edges while staying bit-exact
for identical inputs.
"""
from typing import Sequence, Tuple

import numpy as np
from PIL import Image, ImageDraw

from difftalk.dataset.geometry import FaceParams, landmark_points
from difftalk.exceptions import ValidationError
from difftalk.landmarks.partition import BROWS, EYES, INNER_LIP, NOSE, OUTER_LIP

SUPERSAMPLE = 4

BACKGROUND = 30
SKIN = 170
BROW = 70
EYE = 45
NOSE_LINE = 120
LIP = 100
MOUTH_CAVITY = 25


def _scaled(points: np.ndarray, size: int) -> list:
    canvas = size * SUPERSAMPLE
    return [(float(x * canvas), float(y * canvas)) for x, y in points]


def render(p: FaceParams, size: int = 64) -> np.ndarray:
    """
    Render one frame

    Args:
        p: Face parameters
        size: Output side length in pixels

    Returns:
        uint8 array (size, size)
    """
    if size < 16:
        raise ValidationError(f"render size must be at least 16, got {size}")
    canvas = size * SUPERSAMPLE
    points = landmark_points(p)
    stroke = max(1, round(0.02 * canvas))

    image = Image.new("L", (canvas, canvas), BACKGROUND)
    draw = ImageDraw.Draw(image)
    draw.ellipse(
        [(p.cx - p.rx) * canvas, (p.cy - p.ry) * canvas, (p.cx + p.rx) * canvas, (p.cy + p.ry) * canvas],
        fill=SKIN,
    )
    for brow in (BROWS[:5], BROWS[5:]):
        draw.line(_scaled(points[list(brow)], size), fill=BROW, width=stroke)
    draw.line(_scaled(points[list(NOSE[:4])], size), fill=NOSE_LINE, width=stroke)
    draw.line(_scaled(points[list(NOSE[4:])], size), fill=NOSE_LINE, width=stroke)
    for eye in (EYES[:6], EYES[6:]):
        draw.polygon(_scaled(points[list(eye)], size), fill=EYE)
    draw.polygon(_scaled(points[list(OUTER_LIP)], size), fill=LIP)
    draw.polygon(_scaled(points[list(INNER_LIP)], size), fill=MOUTH_CAVITY)

    small = image.resize((size, size), Image.BOX)
    return np.asarray(small, dtype=np.uint8).copy()


def mouth_box(params: Sequence[FaceParams], size: int, margin: int = 1) -> Tuple[int, int, int, int]:
    """
    Pixel box (x0, y0, x1, y1), end-exclusive, covering the lips of every given frame

    Args:
        params: Frames whose outer-lip polygons are covered
        size: Image side length
        margin: Extra pixels on each side
    """
    outer = np.concatenate([landmark_points(p)[list(OUTER_LIP)] for p in params]) * size
    x0 = max(int(np.floor(outer[:, 0].min())) - margin, 0)
    y0 = max(int(np.floor(outer[:, 1].min())) - margin, 0)
    x1 = min(int(np.ceil(outer[:, 0].max())) + margin + 1, size)
    y1 = min(int(np.ceil(outer[:, 1].max())) + margin + 1, size)
    return x0, y0, x1, y1
