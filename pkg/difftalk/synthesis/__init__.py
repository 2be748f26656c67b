"""
Landmark-guided face synthesis: toy autoencoder, conditional UNet and the dual-branch model
"""
from difftalk.synthesis.autoencoder import (
    ToyAutoencoder,
    encode_all,
    images_to_unit,
    pretrain_autoencoder,
    reconstruction_mse,
    unit_to_images,
)
from difftalk.synthesis.config import CONDITION_AUDIO, CONDITION_LANDMARKS, SynthesisConfig
from difftalk.synthesis.dual_branch import (
    AudioConditionEncoder,
    DualBranchModel,
    LandmarkEncoder,
    landmark_encoder_forward,
)
from difftalk.synthesis.generate import GeneratedFace, generate_face
from difftalk.synthesis.trainer import build_base, pretrain_base, train_synthesis, verify_frozen
from difftalk.synthesis.unet import CondUNet, FusionAttention, ResBlock, SpatialCrossAttention, unet_forward

__all__ = [
    "CONDITION_AUDIO",
    "CONDITION_LANDMARKS",
    "AudioConditionEncoder",
    "CondUNet",
    "DualBranchModel",
    "FusionAttention",
    "GeneratedFace",
    "LandmarkEncoder",
    "ResBlock",
    "SpatialCrossAttention",
    "SynthesisConfig",
    "ToyAutoencoder",
    "build_base",
    "encode_all",
    "generate_face",
    "images_to_unit",
    "landmark_encoder_forward",
    "pretrain_autoencoder",
    "pretrain_base",
    "reconstruction_mse",
    "train_synthesis",
    "unet_forward",
    "unit_to_images",
    "verify_frozen",
]
