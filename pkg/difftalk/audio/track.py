"""
Per-frame 29-dim audio features, 16-frame windows and the synthetic feature generator

The generator replaces a speech-recognition front end: every frame is a fixed
random linear code of the mouth-openness signal plus a little Gaussian noise,
so mouth openness stays decodable from the features.
"""
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from difftalk.exceptions import ShapeError, ValidationError

logger = logging.getLogger(__name__)

FEATURE_DIM = 29
WINDOW = 16
WINDOW_PAST = 8
DEFAULT_FRAME_RATE = 25.0
DEFAULT_NOISE = 0.01


@dataclass(frozen=True)
class AudioTrack:
    """One 29-dim feature vector per video frame"""
    frames: np.ndarray
    frame_rate: float = DEFAULT_FRAME_RATE

    def __post_init__(self):
        frames = np.array(self.frames, dtype=np.float64)
        if frames.ndim != 2 or frames.shape[1] != FEATURE_DIM:
            raise ShapeError(f"audio frames need shape (n, {FEATURE_DIM}), got {frames.shape}")
        if self.frame_rate <= 0:
            raise ValidationError(f"frame rate must be positive, got {self.frame_rate}")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return self.frames.shape[0]


@dataclass(frozen=True)
class AudioWindow:
    """16 consecutive feature frames centred on one video frame"""
    block: np.ndarray

    def __post_init__(self):
        if self.block.shape != (WINDOW, FEATURE_DIM):
            raise ShapeError(f"audio window needs shape ({WINDOW}, {FEATURE_DIM}), got {self.block.shape}")


def window_indices(n_frames: int, frame_idx: int) -> np.ndarray:
    """Frame indices [idx-8, idx+7], clamped to the track"""
    return np.clip(np.arange(frame_idx - WINDOW_PAST, frame_idx - WINDOW_PAST + WINDOW), 0, n_frames - 1)


def window(track: AudioTrack, frame_idx: int) -> AudioWindow:
    """
    Cut the 16-frame window around frame_idx (row 8 is the frame itself)

    Raises:
        ValidationError: frame_idx outside the track
    """
    if not 0 <= frame_idx < len(track):
        raise ValidationError(f"frame index {frame_idx} outside track of {len(track)} frames")
    return AudioWindow(track.frames[window_indices(len(track), frame_idx)])


def windows(track: AudioTrack, frame_indices: Sequence[int]) -> np.ndarray:
    """Stacked window blocks [len(frame_indices), 16, 29]"""
    return np.stack([window(track, int(i)).block for i in frame_indices])


# ============== SYNTHETIC FEATURES ==============

def mouth_basis(mouth_signal: np.ndarray) -> np.ndarray:
    """φ(m) = [m, m², sin(πm), cos(πm)]"""
    m = np.asarray(mouth_signal, dtype=np.float64)
    return np.stack([m, m * m, np.sin(np.pi * m), np.cos(np.pi * m)], axis=-1)


def audio_code(seed: int) -> np.ndarray:
    """The fixed 29×4 code matrix P drawn from seed"""
    return np.random.default_rng(seed).standard_normal((FEATURE_DIM, 4))


def synth_track(mouth_signal: Sequence[float], seed: int, sigma: float = DEFAULT_NOISE,
                frame_rate: float = DEFAULT_FRAME_RATE) -> AudioTrack:
    """
    frame_i = P·φ(m_i) + σ·η_i

    P and η come from one Generator seeded with seed (P first), so the code
    is identical for every track generated from the same seed.
    """
    rng = np.random.default_rng(seed)
    code = rng.standard_normal((FEATURE_DIM, 4))
    phi = mouth_basis(np.asarray(mouth_signal, dtype=np.float64))
    noise = rng.standard_normal((phi.shape[0], FEATURE_DIM))
    frames = phi @ code.T + sigma * noise
    logger.debug(f"Synthesised {len(frames)} audio frames (seed={seed}, sigma={sigma})")
    return AudioTrack(frames, frame_rate)


def recover_mouth_signal(track: AudioTrack, seed: int) -> np.ndarray:
    """Least-squares inverse of the code; exact for σ = 0"""
    code = audio_code(seed)
    phi, *_ = np.linalg.lstsq(code, track.frames.T, rcond=None)
    return phi[0]
