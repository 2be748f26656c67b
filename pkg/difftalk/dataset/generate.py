"""
Synthetic talking-face sequences

Directory layout:
    images/%06d.pgm   rendered frames
    landmarks.txt     68 normalized points per frame
    audio.txt         29-dim features per frame
    params.txt        FaceParams sidecar for oracle checks
    manifest.yaml     seed and counts
"""
import logging
import os
from typing import Any, Dict, Optional

from difftalk.audio.io import save_audio_file
from difftalk.audio.track import DEFAULT_FRAME_RATE, DEFAULT_NOISE, synth_track
from difftalk.dataset.geometry import landmarks_from_params, sequence_params
from difftalk.dataset.io import save_params_file
from difftalk.dataset.render import render
from difftalk.exceptions import ValidationError
from difftalk.landmarks.io import save_landmark_file
from difftalk.utils.image_io import save_pgm
from difftalk.utils.manifest import write_manifest

logger = logging.getLogger(__name__)

IMAGE_DIR = "images"
LANDMARK_FILE = "landmarks.txt"
AUDIO_FILE = "audio.txt"
PARAMS_FILE = "params.txt"


def image_path(root: str, index: int) -> str:
    return os.path.join(root, IMAGE_DIR, f"{index:06d}.pgm")


def gen_sequence(out_dir: str, n_frames: int, seed: int, size: int = 64,
                 audio_noise: float = DEFAULT_NOISE, frame_rate: float = DEFAULT_FRAME_RATE,
                 config: Optional[Dict[str, Any]] = None) -> str:
    """
    Generate one seeded sequence into out_dir

    Args:
        out_dir: Dataset directory
        n_frames: Number of frames (≥ 1)
        seed: Sequence seed; pose, mouth signal and audio code all derive from it
        size: Image side length
        audio_noise: σ of the audio feature noise
        frame_rate: Recorded frame rate of the audio track
        config: Effective run configuration to echo into the manifest

    Returns:
        out_dir
    """
    if n_frames < 1:
        raise ValidationError(f"n_frames must be at least 1, got {n_frames}")
    logger.info(f"Generating {n_frames} frames (seed={seed}, size={size}) into {out_dir}")

    params = sequence_params(n_frames, seed)
    for index, p in enumerate(params):
        save_pgm(image_path(out_dir, index), render(p, size))
    save_landmark_file(os.path.join(out_dir, LANDMARK_FILE), [landmarks_from_params(p) for p in params])
    track = synth_track([p.m for p in params], seed, sigma=audio_noise, frame_rate=frame_rate)
    save_audio_file(os.path.join(out_dir, AUDIO_FILE), track)
    save_params_file(os.path.join(out_dir, PARAMS_FILE), params)
    write_manifest(out_dir, "gen-data", seed, config=config, extra={
        "frames": n_frames,
        "image_size": size,
        "audio_noise": float(audio_noise),
    })
    logger.info(f"Dataset ready: {out_dir}")
    return out_dir
