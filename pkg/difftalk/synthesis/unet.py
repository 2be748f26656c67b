"""
Conditional UNet noise predictor

Layout (latent c×8×8, C = base_channels):
    conv_in c->C
    down1  ResBlock C      (skip1, 8×8)
    downsample stride-2    (4×4)
    down2  ResBlock C->2C  (skip2)
    mid    ResBlock 2C + cross-attention over conditioning tokens
    up2    [h, skip2] ResBlock 4C->2C + cross-attention   <- fusion site "up2"
    upsample 2×            (8×8)
    up1    [h, skip1] ResBlock 3C->C + cross-attention    <- fusion site "up1"
    conv_out C->c

Extra features from a guidance branch are added at the decoder fusion sites.
"""
import logging
import math
from typing import Dict, Optional, Tuple, Union

import numpy as np

from difftalk.autodiff import functional as fn
from difftalk.autodiff.nn import MLP, Conv2d, LayerNorm, Linear, Module, MultiHeadAttention
from difftalk.autodiff.params import ParamStore
from difftalk.autodiff.tensor import Tensor, as_tensor
from difftalk.exceptions import ShapeError

logger = logging.getLogger(__name__)

FUSION_SITES = ("up2", "up1")
TIME_FREQ_DIM = 32


def timestep_embedding(t: Union[int, np.ndarray], batch: int, dim: int = TIME_FREQ_DIM) -> np.ndarray:
    """Sinusoidal embedding [batch, dim] of integer steps (scalar t is broadcast)"""
    steps = np.broadcast_to(np.asarray(t, dtype=np.float64), (batch,))
    half = dim // 2
    freqs = np.exp(-math.log(10000.0) * np.arange(half) / half)
    args = steps[:, None] * freqs[None]
    return np.concatenate([np.sin(args), np.cos(args)], axis=1)


def to_tokens(h: Tensor) -> Tensor:
    """[B, C, H, W] -> [B, H·W, C]"""
    batch, channels, height, width = h.shape
    return h.reshape(batch, channels, height * width).transpose(0, 2, 1)


def to_grid(tokens: Tensor, height: int, width: int) -> Tensor:
    batch, _, channels = tokens.shape
    return tokens.transpose(0, 2, 1).reshape(batch, channels, height, width)


class ResBlock(Module):
    """Two 3×3 convolutions with SiLU, optional time injection and a residual path"""

    def __init__(self, store: ParamStore, prefix: str, rng: np.random.Generator,
                 c_in: int, c_out: int, d_time: Optional[int] = None):
        super().__init__(store, prefix, rng)
        self.c_out = c_out
        self.conv1 = Conv2d(store, self.path("conv1"), rng, c_in, c_out)
        self.time_proj = Linear(store, self.path("time_proj"), rng, d_time, c_out) if d_time else None
        self.conv2 = Conv2d(store, self.path("conv2"), rng, c_out, c_out)
        self.skip = Conv2d(store, self.path("skip"), rng, c_in, c_out, kernel=1) if c_in != c_out else None

    def forward(self, x: Tensor, temb: Optional[Tensor] = None) -> Tensor:
        h = self.conv1(x.silu())
        if self.time_proj is not None and temb is not None:
            h = h + self.time_proj(temb.silu()).reshape(temb.shape[0], self.c_out, 1, 1)
        h = self.conv2(h.silu())
        return (self.skip(x) if self.skip is not None else x) + h


class SpatialCrossAttention(Module):
    """Feature-map positions attend to a token sequence; residual"""

    def __init__(self, store: ParamStore, prefix: str, rng: np.random.Generator,
                 channels: int, d_cond: int, n_heads: int = 1):
        super().__init__(store, prefix, rng)
        self.norm = LayerNorm(store, self.path("norm"), rng, channels)
        self.attn = MultiHeadAttention(store, self.path("attn"), rng, channels, d_cond, channels, n_heads)

    def forward(self, h: Tensor, tokens: Tensor) -> Tensor:
        _, _, height, width = h.shape
        return h + to_grid(self.attn(self.norm(to_tokens(h)), tokens), height, width)


class FusionAttention(Module):
    """
    Cross-attention from a decoder feature map into guidance tokens

    Value and output projections carry no bias and the output projection
    starts at zero, so an all-zero token set contributes exactly nothing.
    Returns the increment, not the updated map.
    """

    def __init__(self, store: ParamStore, prefix: str, rng: np.random.Generator,
                 channels: int, d_memory: int, n_heads: int = 1):
        super().__init__(store, prefix, rng)
        self.d_memory = d_memory
        self.norm = LayerNorm(store, self.path("norm"), rng, channels)
        self.attn = MultiHeadAttention(store, self.path("attn"), rng, channels, d_memory, channels, n_heads,
                                       value_bias=False, out_bias=False, zero_init_out=True)

    def forward(self, h: Tensor, tokens: Tensor) -> Tensor:
        if tokens.shape[-1] != self.d_memory:
            raise ShapeError(f"{self.prefix}: tokens of width {tokens.shape[-1]}, expected {self.d_memory}")
        _, _, height, width = h.shape
        return to_grid(self.attn(self.norm(to_tokens(h)), tokens), height, width)


Fusion = Dict[str, Tuple[FusionAttention, Tensor]]


class CondUNet(Module):
    """
    ε′ = Unet(z_t, t, y)

    Attributes:
        null_token: Learned (1, d_cond) token used when no guidance tokens are given
    """

    def __init__(self, store: ParamStore, prefix: str, rng: np.random.Generator, latent_channels: int = 4,
                 base_channels: int = 32, d_time: int = 64, d_cond: int = 64, n_heads: int = 1):
        super().__init__(store, prefix, rng)
        c = base_channels
        self.latent_channels = latent_channels
        self.base_channels = c
        self.d_cond = d_cond
        self.time_mlp = MLP(store, self.path("time_mlp"), rng, TIME_FREQ_DIM, d_time, d_time, activation="silu")
        self.null_token = self.param("null_token", (1, d_cond), std=1.0)
        self.conv_in = Conv2d(store, self.path("conv_in"), rng, latent_channels, c)
        self.down1 = ResBlock(store, self.path("down1"), rng, c, c, d_time)
        self.downsample = Conv2d(store, self.path("downsample"), rng, c, c, stride=2)
        self.down2 = ResBlock(store, self.path("down2"), rng, c, 2 * c, d_time)
        self.mid = ResBlock(store, self.path("mid"), rng, 2 * c, 2 * c, d_time)
        self.mid_attn = SpatialCrossAttention(store, self.path("mid_attn"), rng, 2 * c, d_cond, n_heads)
        self.up2 = ResBlock(store, self.path("up2"), rng, 4 * c, 2 * c, d_time)
        self.up2_attn = SpatialCrossAttention(store, self.path("up2_attn"), rng, 2 * c, d_cond, n_heads)
        self.up1 = ResBlock(store, self.path("up1"), rng, 3 * c, c, d_time)
        self.up1_attn = SpatialCrossAttention(store, self.path("up1_attn"), rng, c, d_cond, n_heads)
        self.conv_out = Conv2d(store, self.path("conv_out"), rng, c, latent_channels)

    def site_shapes(self) -> Dict[str, int]:
        """Channel count of each fusion site"""
        return {"up2": 2 * self.base_channels, "up1": self.base_channels}

    def null_tokens(self, batch: int) -> Tensor:
        return self.null_token + Tensor(np.zeros((batch, 1, self.d_cond)))

    def forward(self, z_t: Union[Tensor, np.ndarray], t: Union[int, np.ndarray],
                cond_tokens: Optional[Tensor] = None, fusion: Optional[Fusion] = None) -> Tensor:
        """
        Args:
            z_t: Noised latents [B, c, h, w] (h, w even)
            t: Step, scalar or one per batch element
            cond_tokens: [B, L, d_cond]; the learned null token when None
            fusion: site -> (fusion module, guidance tokens)

        Returns:
            Predicted noise, same shape as z_t
        """
        z_t = as_tensor(z_t)
        if z_t.ndim != 4 or z_t.shape[1] != self.latent_channels or z_t.shape[2] % 2 or z_t.shape[3] % 2:
            raise ShapeError(f"UNet input must be [B, {self.latent_channels}, h, w] with even h, w, got {z_t.shape}")
        batch = z_t.shape[0]
        tokens = self.null_tokens(batch) if cond_tokens is None else as_tensor(cond_tokens)
        if tokens.ndim != 3 or tokens.shape[0] != batch or tokens.shape[1] == 0 or tokens.shape[2] != self.d_cond:
            raise ShapeError(f"conditioning tokens must be [{batch}, L>0, {self.d_cond}], got {tokens.shape}")
        fusion = fusion or {}
        temb = self.time_mlp(Tensor(timestep_embedding(t, batch)))

        h = self.conv_in(z_t)
        skip1 = self.down1(h, temb)
        h = self.downsample(skip1)
        skip2 = self.down2(h, temb)
        h = self.mid_attn(self.mid(skip2, temb), tokens)

        h = self.up2_attn(self.up2(fn.concat([h, skip2], axis=1), temb), tokens)
        h = self._fuse("up2", h, fusion)
        h = fn.upsample(h)
        h = self.up1_attn(self.up1(fn.concat([h, skip1], axis=1), temb), tokens)
        h = self._fuse("up1", h, fusion)
        return self.conv_out(h.silu())

    @staticmethod
    def _fuse(site: str, h: Tensor, fusion: Fusion) -> Tensor:
        if site not in fusion:
            return h
        module, tokens = fusion[site]
        return h + module(h, tokens)


def unet_forward(model: CondUNet, z_t: Union[Tensor, np.ndarray], t: Union[int, np.ndarray],
                 cond_tokens: Optional[Tensor] = None) -> Tensor:
    """Predicted noise for z_t at step t under cond_tokens"""
    return model(z_t, t, cond_tokens)
