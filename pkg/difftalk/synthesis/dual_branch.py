"""
Dual-branch face synthesis model

- Frozen base: the pre-trained CondUNet under `synth.base`, always fed its null token
- Trainable guidance branch: extra convolutions plus a copy of the base encoder
  topology (initialised from the base weights) turning a landmark raster into
  token sets, one per decoder fusion site
- Fusion: zero-initialised cross-attention adding guidance features to the base decoder

The audio-conditioned variant swaps the landmark branch for an encoder that
turns audio windows into the same token sets.
"""
import logging
from typing import Dict, Optional, Union

import numpy as np

from difftalk.audio.encoder import TemporalEncoder
from difftalk.autodiff.nn import Conv2d, Linear, Module
from difftalk.autodiff.params import ParamStore
from difftalk.autodiff.tensor import Tensor, as_tensor, no_grad
from difftalk.exceptions import ShapeError, ValidationError
from difftalk.synthesis.autoencoder import ToyAutoencoder
from difftalk.synthesis.config import CONDITION_AUDIO, CONDITION_LANDMARKS, SynthesisConfig
from difftalk.synthesis.unet import FUSION_SITES, CondUNet, Fusion, FusionAttention, ResBlock, to_tokens

logger = logging.getLogger(__name__)

BASE_PREFIX = "synth.base"
LANDMARK_PREFIX = "synth.lmenc"
AUDIO_PREFIX = "synth.audenc"
HINT_CHANNELS = (8, 16)
AUDIO_TOKENS = 4

Tokens = Dict[str, Tensor]


class GuidanceBranch(Module):
    """Common part of both guidance encoders: one fusion module per decoder site"""

    def __init__(self, store: ParamStore, prefix: str, rng: np.random.Generator, base: CondUNet, n_heads: int):
        super().__init__(store, prefix, rng)
        self.site_channels = base.site_shapes()
        self.fusion = {
            site: FusionAttention(store, self.path(f"fusion_{site}"), rng, channels, channels, n_heads)
            for site, channels in self.site_channels.items()
        }

    def fusion_map(self, tokens: Tokens) -> Fusion:
        return {site: (self.fusion[site], tokens[site]) for site in FUSION_SITES}

    def zero_tokens(self, tokens: Tokens) -> Tokens:
        return {site: Tensor(np.zeros(t.shape)) for site, t in tokens.items()}


class LandmarkEncoder(GuidanceBranch):
    """Landmark raster [B, 1, s, s] -> {site: tokens}"""

    def __init__(self, store: ParamStore, rng: np.random.Generator, base: CondUNet, n_heads: int = 1):
        super().__init__(store, LANDMARK_PREFIX, rng, base, n_heads)
        c = base.base_channels
        channels = (1,) + HINT_CHANNELS + (base.latent_channels,)
        self.hint = [
            Conv2d(store, self.path(f"hint{i}"), rng, channels[i], channels[i + 1], stride=2)
            for i in range(len(channels) - 1)
        ]
        # same relative layout as the base encoder, without time inputs
        self.conv_in = Conv2d(store, self.path("encoder.conv_in"), rng, base.latent_channels, c)
        self.down1 = ResBlock(store, self.path("encoder.down1"), rng, c, c)
        self.downsample = Conv2d(store, self.path("encoder.downsample"), rng, c, c, stride=2)
        self.down2 = ResBlock(store, self.path("encoder.down2"), rng, c, 2 * c)

    def init_from_base(self, base: CondUNet) -> int:
        """Copy the base encoder weights into the encoder copy"""
        copied = 0
        for name in ("conv_in", "down1", "downsample", "down2"):
            copied += self.store.copy_values(base.path(name), self.path(f"encoder.{name}"))
        logger.debug(f"Landmark encoder initialised from base: {copied} tensors copied")
        return copied

    def forward(self, raster: Union[Tensor, np.ndarray]) -> Tokens:
        x = as_tensor(raster)
        if x.ndim != 4 or x.shape[1] != 1:
            raise ShapeError(f"landmark raster must be [B, 1, s, s], got {x.shape}")
        for conv in self.hint:
            x = conv(x).silu()
        feat1 = self.down1(self.conv_in(x))
        feat2 = self.down2(self.downsample(feat1))
        return {"up1": to_tokens(feat1), "up2": to_tokens(feat2)}


class AudioConditionEncoder(GuidanceBranch):
    """Audio windows [B, 16, 29] -> {site: AUDIO_TOKENS tokens}"""

    def __init__(self, store: ParamStore, rng: np.random.Generator, base: CondUNet, n_heads: int = 1):
        super().__init__(store, AUDIO_PREFIX, rng, base, n_heads)
        self.audio = TemporalEncoder(store, self.path("audio"), rng)
        self.heads = {
            site: Linear(store, self.path(f"tokens_{site}"), rng, self.audio.embed_dim, AUDIO_TOKENS * channels)
            for site, channels in self.site_channels.items()
        }

    def forward(self, windows: Union[Tensor, np.ndarray]) -> Tokens:
        emb = self.audio(windows)
        batch = emb.shape[0]
        return {
            site: self.heads[site](emb).reshape(batch, AUDIO_TOKENS, channels)
            for site, channels in self.site_channels.items()
        }


class DualBranchModel:
    """
    Frozen base UNet + trainable guidance branch (+ the frozen autoencoder)

    Attributes:
        ae: Latent codec
        base: Frozen noise predictor
        branch: LandmarkEncoder or AudioConditionEncoder
    """

    def __init__(self, store: ParamStore, ae: ToyAutoencoder, base: CondUNet, cfg: SynthesisConfig,
                 rng: Optional[np.random.Generator] = None):
        if cfg.condition not in (CONDITION_LANDMARKS, CONDITION_AUDIO):
            raise ValidationError(f"unknown synthesis condition '{cfg.condition}'")
        rng = rng if rng is not None else np.random.default_rng([cfg.seed, 30])
        self.store = store
        self.cfg = cfg
        self.ae = ae
        self.base = base
        if cfg.condition == CONDITION_LANDMARKS:
            self.branch = LandmarkEncoder(store, rng, base, cfg.n_heads)
            self.branch.init_from_base(base)
        else:
            self.branch = AudioConditionEncoder(store, rng, base, cfg.n_heads)

    @property
    def branch_prefix(self) -> str:
        return self.branch.prefix

    def tokens(self, cond_input: Union[Tensor, np.ndarray]) -> Tokens:
        """Guidance tokens from a raster batch (landmarks) or window batch (audio)"""
        return self.branch(cond_input)

    def eps_from_tokens(self, z_t: Union[Tensor, np.ndarray], t, tokens: Tokens) -> Tensor:
        return self.base(z_t, t, None, self.branch.fusion_map(tokens))

    def forward(self, z_t: Union[Tensor, np.ndarray], t, cond_input: Union[Tensor, np.ndarray]) -> Tensor:
        return self.eps_from_tokens(z_t, t, self.tokens(cond_input))

    __call__ = forward

    def base_eps(self, z_t: np.ndarray, t) -> np.ndarray:
        with no_grad():
            return self.base(z_t, t).data


def landmark_encoder_forward(model: DualBranchModel, lm_raster: Union[Tensor, np.ndarray]) -> Tokens:
    """
    Token sets for each fusion site from a landmark raster batch

    An all-zero raster is not a null condition: its tokens come from the
    branch biases and are generally non-zero. Null guidance is
    GuidanceBranch.zero_tokens, which reproduces the base output.
    """
    if not isinstance(model.branch, LandmarkEncoder):
        raise ValidationError("model was built for audio conditioning, not landmarks")
    return model.branch(lm_raster)
