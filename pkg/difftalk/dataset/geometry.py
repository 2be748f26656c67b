"""
Analytic face geometry: FaceParams -> 68 normalized landmarks

All placements are fixed offsets scaled by the head radii. The feature centre
shifts laterally by `yaw`; the jaw sides stay on the head ellipse while its
lower arc follows the shift. The mouth is two lip curves: the inner-lip pairs
(61,67), (62,66), (63,65) sit at my ∓ g/2 with

    g = 0.18 · m · ry

so the mean inner-lip gap equals g exactly. The jaw does not depend on m.
"""
from dataclasses import dataclass, fields, replace
from typing import Dict, Tuple

import numpy as np

from difftalk.exceptions import ValidationError
from difftalk.landmarks.landmark import Landmark68
from difftalk.landmarks.partition import N_POINTS

GAP_FACTOR = 0.18
MOUTH_DROP = 0.50
MOUTH_HALF_WIDTH = 0.30

PARAM_RANGES: Dict[str, Tuple[float, float]] = {
    "cx": (0.45, 0.55),
    "cy": (0.48, 0.55),
    "rx": (0.24, 0.32),
    "ry": (0.28, 0.38),
    "yaw": (-0.04, 0.04),
    "eye": (0.3, 1.0),
    "m": (0.0, 1.0),
}


@dataclass(frozen=True)
class FaceParams:
    """
    Pose, eye and mouth state of one synthetic frame

    Attributes:
        cx, cy: Head centre (normalized)
        rx, ry: Head radii
        yaw: Lateral shift of the facial features
        eye: Eye openness in [0, 1]
        m: Mouth openness in [0, 1]
        seed: Seed of the sequence the frame belongs to
    """
    cx: float = 0.5
    cy: float = 0.52
    rx: float = 0.28
    ry: float = 0.33
    yaw: float = 0.0
    eye: float = 1.0
    m: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name, (low, high) in PARAM_RANGES.items():
            value = getattr(self, name)
            if not np.isfinite(value) or not low - 1e-12 <= value <= high + 1e-12:
                raise ValidationError(f"face parameter {name}={value} outside [{low}, {high}]")

    def with_mouth(self, m: float) -> "FaceParams":
        return replace(self, m=float(m))

    def as_row(self) -> Tuple[float, ...]:
        return tuple(getattr(self, f.name) for f in fields(self))


def mouth_gap(p: FaceParams) -> float:
    return GAP_FACTOR * p.m * p.ry


def _jaw(p: FaceParams) -> np.ndarray:
    angles = np.pi * (1.0 - np.arange(17) / 16.0)
    x = p.cx + p.rx * np.cos(angles) + p.yaw * np.sin(angles)
    y = p.cy + p.ry * np.sin(angles)
    return np.stack([x, y], axis=1)


def _brows(p: FaceParams, fx: float) -> np.ndarray:
    j = np.arange(5)
    arch = np.sin(np.pi * j / 4.0)
    y = p.cy - 0.45 * p.ry - 0.06 * p.ry * arch
    left_x = fx + p.rx * np.linspace(-0.55, -0.15, 5)
    right_x = fx + p.rx * np.linspace(0.15, 0.55, 5)
    return np.concatenate([np.stack([left_x, y], 1), np.stack([right_x, y], 1)])


def _nose(p: FaceParams, fx: float) -> np.ndarray:
    bridge_y = p.cy + p.ry * np.linspace(-0.30, 0.05, 4)
    bridge = np.stack([np.full(4, fx), bridge_y], 1)
    bottom_x = fx + p.rx * np.array([-0.12, -0.06, 0.0, 0.06, 0.12])
    bottom_y = p.cy + p.ry * np.array([0.12, 0.13, 0.14, 0.13, 0.12])
    return np.concatenate([bridge, np.stack([bottom_x, bottom_y], 1)])


def _eye(p: FaceParams, ex: float) -> np.ndarray:
    ey = p.cy - 0.25 * p.ry
    w = 0.12 * p.rx
    h = 0.06 * p.ry * p.eye
    return np.array([
        [ex - w, ey], [ex - w / 3, ey - h], [ex + w / 3, ey - h],
        [ex + w, ey], [ex + w / 3, ey + h], [ex - w / 3, ey + h],
    ])


def _mouth(p: FaceParams, fx: float) -> np.ndarray:
    my = p.cy + MOUTH_DROP * p.ry
    w = MOUTH_HALF_WIDTH * p.rx
    half_gap = mouth_gap(p) / 2.0
    top, bottom = my - half_gap, my + half_gap
    ry = p.ry
    outer = [
        (fx - w, my),
        (fx - 0.6 * w, top - 0.07 * ry), (fx - 0.25 * w, top - 0.09 * ry), (fx, top - 0.08 * ry),
        (fx + 0.25 * w, top - 0.09 * ry), (fx + 0.6 * w, top - 0.07 * ry),
        (fx + w, my),
        (fx + 0.6 * w, bottom + 0.08 * ry), (fx + 0.25 * w, bottom + 0.10 * ry), (fx, bottom + 0.11 * ry),
        (fx - 0.25 * w, bottom + 0.10 * ry), (fx - 0.6 * w, bottom + 0.08 * ry),
    ]
    inner = [
        (fx - 0.8 * w, my),
        (fx - 0.4 * w, top), (fx, top), (fx + 0.4 * w, top),
        (fx + 0.8 * w, my),
        (fx + 0.4 * w, bottom), (fx, bottom), (fx - 0.4 * w, bottom),
    ]
    return np.array(outer + inner)


def landmark_points(p: FaceParams) -> np.ndarray:
    """(68, 2) analytic landmark array for p"""
    fx = p.cx + p.yaw
    points = np.concatenate([
        _jaw(p),
        _brows(p, fx),
        _nose(p, fx),
        _eye(p, fx - 0.35 * p.rx),
        _eye(p, fx + 0.35 * p.rx),
        _mouth(p, fx),
    ])
    assert points.shape == (N_POINTS, 2)
    return points


def landmarks_from_params(p: FaceParams) -> Landmark68:
    return Landmark68(landmark_points(p))


# ============== SEQUENCES ==============

def _reflect(value: float, low: float, high: float) -> float:
    span = high - low
    if span <= 0:
        return low
    offset = (value - low) % (2 * span)
    return low + (offset if offset <= span else 2 * span - offset)


def random_walk(rng: np.random.Generator, n: int, low: float, high: float, step: float) -> np.ndarray:
    """Bounded random walk reflected at the range ends, started uniformly in the range"""
    values = np.empty(n)
    values[0] = rng.uniform(low, high)
    steps = rng.standard_normal(n) * step * (high - low)
    for i in range(1, n):
        values[i] = _reflect(values[i - 1] + steps[i], low, high)
    return values


def mouth_signal(rng: np.random.Generator, n: int, n_waves: int = 3) -> np.ndarray:
    """Band-limited mouth openness: sum of low-frequency sinusoids clipped to [0, 1]"""
    t = np.arange(n)
    freqs = rng.uniform(0.02, 0.12, n_waves)
    phases = rng.uniform(0.0, 2 * np.pi, n_waves)
    amps = rng.uniform(0.5, 1.0, n_waves)
    wave = (amps[:, None] * np.sin(2 * np.pi * freqs[:, None] * t + phases[:, None])).sum(0)
    return np.clip(0.5 + 0.7 * wave / amps.sum(), 0.0, 1.0)


def sequence_params(n: int, seed: int) -> list:
    """Per-frame FaceParams of one seeded sequence"""
    rng = np.random.default_rng(seed)
    walks = {
        name: random_walk(rng, n, *PARAM_RANGES[name], step=0.02)
        for name in ("cx", "cy", "rx", "ry", "yaw", "eye")
    }
    m = mouth_signal(rng, n)
    return [
        FaceParams(**{name: float(walks[name][i]) for name in walks}, m=float(m[i]), seed=seed)
        for i in range(n)
    ]
