"""
Dataset directory loader and the deterministic train/test split
"""
import logging
import os
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from difftalk.audio.io import load_audio_file
from difftalk.audio.track import AudioTrack
from difftalk.dataset.generate import AUDIO_FILE, LANDMARK_FILE, PARAMS_FILE, image_path
from difftalk.dataset.geometry import FaceParams
from difftalk.dataset.io import load_params_file
from difftalk.exceptions import ValidationError
from difftalk.landmarks.io import read_indexed_landmarks
from difftalk.utils.image_io import load_pgm
from difftalk.utils.manifest import MANIFEST_NAME, read_manifest

logger = logging.getLogger(__name__)


@dataclass
class FaceDataset:
    """
    One loaded sequence

    Attributes:
        root: Dataset directory
        images: uint8 [n, size, size]
        landmarks: float64 [n, 68, 2]
        audio: Per-frame audio features
        params: Per-frame FaceParams (empty when the sidecar is absent)
        seed: Generation seed recorded in the manifest
    """
    root: str
    images: np.ndarray
    landmarks: np.ndarray
    audio: AudioTrack
    params: List[FaceParams]
    seed: Optional[int] = None

    def __len__(self) -> int:
        return self.images.shape[0]

    @property
    def size(self) -> int:
        return self.images.shape[1]


def load_dataset(root: str) -> FaceDataset:
    """
    Load a directory written by gen_sequence

    Raises:
        ValidationError: Missing files or inconsistent frame counts
    """
    landmark_path = os.path.join(root, LANDMARK_FILE)
    audio_path = os.path.join(root, AUDIO_FILE)
    for path in (landmark_path, audio_path):
        if not os.path.isfile(path):
            raise ValidationError(f"dataset file missing: {path}")

    indexed = read_indexed_landmarks(landmark_path)
    for expected, (index, _) in enumerate(indexed):
        if index != expected:
            raise ValidationError(f"{landmark_path}: expected frame {expected}, found {index}")
    landmarks = np.stack([lm.points for _, lm in indexed]) if indexed else np.zeros((0, 68, 2))
    n = landmarks.shape[0]
    if n == 0:
        raise ValidationError(f"empty dataset: {root}")

    missing = [i for i in range(n) if not os.path.isfile(image_path(root, i))]
    if missing:
        raise ValidationError(f"{len(missing)} images missing under {root}, first: {missing[:5]}")
    images = np.stack([load_pgm(image_path(root, i)) for i in range(n)])

    audio = load_audio_file(audio_path)
    if len(audio) != n:
        raise ValidationError(f"{audio_path}: {len(audio)} audio frames for {n} landmark frames")

    params_path = os.path.join(root, PARAMS_FILE)
    params = load_params_file(params_path) if os.path.isfile(params_path) else []
    if params and len(params) != n:
        raise ValidationError(f"{params_path}: {len(params)} entries for {n} frames")

    seed = None
    if os.path.isfile(os.path.join(root, MANIFEST_NAME)):
        seed = read_manifest(root).get("seed")
    logger.info(f"Loaded dataset {root}: {n} frames of {images.shape[1]}x{images.shape[2]}")
    return FaceDataset(root, images, landmarks, audio, params, seed)


def train_test_split(n_frames: int, n_test: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    The last n_test frames are held out

    Returns:
        (train indices, test indices)
    """
    if not 0 <= n_test < n_frames:
        raise ValidationError(f"cannot hold out {n_test} of {n_frames} frames")
    indices = np.arange(n_frames)
    return indices[:n_frames - n_test], indices[n_frames - n_test:]
