"""
Face synthesis settings
"""
from dataclasses import dataclass

CONDITION_LANDMARKS = "landmarks"
CONDITION_AUDIO = "audio"
CONDITIONS = (CONDITION_LANDMARKS, CONDITION_AUDIO)


@dataclass(frozen=True)
class SynthesisConfig:
    """
    Architecture and training settings of the face synthesis agent

    Attributes:
        condition: 'landmarks' (completed-landmark guidance) or 'audio' (audio tokens as guidance)
        ae_target_mse: Autoencoder reconstruction target on the [0, 1] pixel scale
        strict_convergence: Raise instead of warn when a stage misses its target
    """
    latent_channels: int = 4
    base_channels: int = 32
    d_time: int = 64
    d_cond: int = 64
    n_heads: int = 1
    condition: str = CONDITION_LANDMARKS
    ae_epochs: int = 30
    ae_lr: float = 2e-3
    ae_target_mse: float = 2e-3
    base_epochs: int = 40
    base_lr: float = 5e-4
    base_patience: int = 5
    synth_epochs: int = 30
    synth_lr: float = 1e-4
    batch_size: int = 16
    seed: int = 0
    strict_convergence: bool = False
