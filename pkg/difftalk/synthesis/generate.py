"""
Face generation: guided lower-half inpainting in latent space plus pixel compositing
"""
import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from difftalk.audio.track import AudioWindow
from difftalk.autodiff.tensor import Tensor, no_grad
from difftalk.diffusion.noising import upper_rows
from difftalk.diffusion.sampler import sample_loop
from difftalk.diffusion.schedule import NoiseSchedule
from difftalk.exceptions import ShapeError, ValidationError
from difftalk.landmarks.landmark import Landmark68
from difftalk.landmarks.raster import rasterize
from difftalk.synthesis.config import CONDITION_AUDIO
from difftalk.synthesis.dual_branch import DualBranchModel

logger = logging.getLogger(__name__)

Guidance = Union[Landmark68, AudioWindow]


@dataclass(frozen=True)
class GeneratedFace:
    """
    Attributes:
        image: Final uint8 frame, upper half copied from the input
        latent: Sampled latent before decoding (upper rows equal z0_upper's)
        z0_upper: Latent of the input with its lower half blanked
    """
    image: np.ndarray
    latent: np.ndarray
    z0_upper: np.ndarray


def blank_lower_half(image: np.ndarray) -> np.ndarray:
    masked = np.array(image, dtype=np.uint8)
    masked[masked.shape[0] // 2:] = 0
    return masked


def guidance_input(model: DualBranchModel, guidance: Guidance, size: int) -> np.ndarray:
    """Batch-of-one conditioning input for the model's branch"""
    if model.cfg.condition == CONDITION_AUDIO:
        if not isinstance(guidance, AudioWindow):
            raise ValidationError("audio-conditioned model needs an AudioWindow")
        return guidance.block[None]
    if not isinstance(guidance, Landmark68):
        raise ValidationError("landmark-conditioned model needs a Landmark68")
    return rasterize(guidance, size)[None, None]


def generate_face(model: DualBranchModel, upper_image: np.ndarray, guidance: Guidance,
                  sched: NoiseSchedule, seed: int) -> GeneratedFace:
    """
    Generate one frame

    The latent of the input (lower half blanked) supplies the upper rows, which
    stay clamped through every sampling step; the guidance tokens are computed
    once. After decoding, the original upper-half pixels are pasted back.

    Args:
        model: Trained dual-branch model
        upper_image: uint8 [s, s]; only its upper half is used
        guidance: Completed landmarks (or an audio window for the audio variant)
        sched: Noise schedule
        seed: Seed of the initial noise

    Returns:
        GeneratedFace
    """
    upper_image = np.asarray(upper_image)
    if upper_image.ndim != 2 or upper_image.shape[0] != upper_image.shape[1]:
        raise ShapeError(f"upper image must be square [s, s], got {upper_image.shape}")
    size = upper_image.shape[0]
    z0_upper = model.ae.encode(blank_lower_half(upper_image))
    with no_grad():
        tokens = model.tokens(guidance_input(model, guidance, size))

    def eps_model(z_t: np.ndarray, t: int, cond) -> np.ndarray:
        with no_grad():
            return model.eps_from_tokens(Tensor(z_t), t, cond).data

    latent = sample_loop(eps_model, z0_upper, tokens, sched, seed)
    rows = upper_rows(latent.shape[-2])
    assert np.array_equal(latent[..., :rows, :], z0_upper[..., :rows, :])

    image = model.ae.decode(latent)[0]
    image[:size // 2] = upper_image[:size // 2]
    return GeneratedFace(image=image, latent=latent[0], z0_upper=z0_upper[0])
