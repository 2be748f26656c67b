"""
Landmark completion network: LF-Trans, BM-Trans and AM-Trans

- LF-Trans: upper points -> self-attention -> 9 contour queries -> lower jaw contour
- BM-Trans: full contour (48 points) -> 20 mouth queries -> base mouth (no audio)
- AM-Trans: mouth tokens attend to audio tokens -> bounded offsets added to the base mouth

Coordinates are predicted relative to the centroid of each network's input
points. In ablation mode AM-Trans is not built: the audio tokens join the
BM-Trans memory and the mouth is predicted directly.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from difftalk.audio.encoder import AUDIO_EMBED_DIM, COMPLETION_AUDIO_PREFIX, TemporalEncoder
from difftalk.autodiff import functional as fn
from difftalk.autodiff.nn import MLP, CrossAttentionBlock, Linear, Module, SelfAttentionBlock
from difftalk.autodiff.params import ParamStore
from difftalk.autodiff.tensor import Tensor, as_tensor, no_grad
from difftalk.exceptions import ContractViolation, ShapeError
from difftalk.landmarks.landmark import Landmark68, merge_points
from difftalk.landmarks.partition import DEFAULT_PARTITION, N_LOWER, N_MOUTH, N_UPPER

logger = logging.getLogger(__name__)

N_CONTOUR = N_UPPER + N_LOWER


@dataclass(frozen=True)
class CompletionConfig:
    """Architecture and training settings of the completion agent"""
    d_model: int = 64
    n_layers: int = 2
    n_heads: int = 1
    audio_dim: int = AUDIO_EMBED_DIM
    n_audio_tokens: int = 4
    offset_bound: float = 0.15
    ablate_am: bool = False
    lr: float = 5e-4
    epochs: int = 50
    batch_size: int = 32
    min_frames: int = 200
    seed: int = 0


class PointEncoder(Module):
    """Coordinate MLP plus a learned embedding per point slot"""

    def __init__(self, store: ParamStore, prefix: str, rng: np.random.Generator, n_points: int, d_model: int):
        super().__init__(store, prefix, rng)
        self.n_points = n_points
        self.coord = MLP(store, self.path("coord_in"), rng, 2, d_model, d_model)
        self.index_embed = self.param("index_embed", (n_points, d_model), std=0.1)

    def forward(self, points: Tensor) -> Tensor:
        if points.shape[1:] != (self.n_points, 2):
            raise ShapeError(f"{self.prefix}: expected (B, {self.n_points}, 2) points, got {points.shape}")
        return self.coord(points) + self.index_embed


class QueryDecoder(Module):
    """Learnable queries cross-attending to a memory, decoded to (x, y)"""

    def __init__(self, store: ParamStore, prefix: str, rng: np.random.Generator,
                 n_queries: int, d_model: int, n_layers: int, n_heads: int):
        super().__init__(store, prefix, rng)
        self.n_queries = n_queries
        self.queries = self.param("queries", (n_queries, d_model), std=0.1)
        self.blocks = [
            CrossAttentionBlock(store, self.path(f"cross{i}"), rng, d_model, d_model, n_heads)
            for i in range(n_layers)
        ]
        self.coord_out = MLP(store, self.path("coord_out"), rng, d_model, d_model, 2)

    def forward(self, memory: Tensor) -> Tensor:
        batch = memory.shape[0]
        x = self.queries + Tensor(np.zeros((batch, self.n_queries, 1)))
        for block in self.blocks:
            x = block(x, memory)
        return self.coord_out(x)


class LFTrans(Module):
    """Upper face -> lower jaw contour"""

    def __init__(self, store: ParamStore, prefix: str, rng: np.random.Generator, cfg: CompletionConfig):
        super().__init__(store, prefix, rng)
        self.points = PointEncoder(store, self.path("points"), rng, N_UPPER, cfg.d_model)
        self.encoder = [
            SelfAttentionBlock(store, self.path(f"self{i}"), rng, cfg.d_model, cfg.n_heads)
            for i in range(cfg.n_layers)
        ]
        self.decoder = QueryDecoder(store, self.path("contour"), rng, N_LOWER, cfg.d_model, cfg.n_layers, cfg.n_heads)

    def forward(self, upper: Tensor) -> Tensor:
        h = self.points(upper)
        for block in self.encoder:
            h = block(h)
        return self.decoder(h) + upper.mean(axis=1, keepdims=True)


class BMTrans(Module):
    """Full contour -> base mouth; takes audio tokens only in ablation mode"""

    def __init__(self, store: ParamStore, prefix: str, rng: np.random.Generator, cfg: CompletionConfig):
        super().__init__(store, prefix, rng)
        self.cfg = cfg
        self.points = PointEncoder(store, self.path("points"), rng, N_CONTOUR, cfg.d_model)
        self.encoder = SelfAttentionBlock(store, self.path("self0"), rng, cfg.d_model, cfg.n_heads)
        self.decoder = QueryDecoder(store, self.path("mouth"), rng, N_MOUTH, cfg.d_model, cfg.n_layers, cfg.n_heads)
        self.audio_tokens = (
            Linear(store, self.path("audio_tokens"), rng, cfg.audio_dim, cfg.n_audio_tokens * cfg.d_model)
            if cfg.ablate_am else None
        )

    def forward(self, contour: Tensor, audio_emb: Optional[Tensor] = None) -> Tensor:
        h = self.points(contour)
        if audio_emb is not None:
            if self.audio_tokens is None:
                raise ContractViolation("BM-Trans takes no audio input unless built in ablation mode")
            tokens = self.audio_tokens(audio_emb).reshape(audio_emb.shape[0], self.cfg.n_audio_tokens, self.cfg.d_model)
            h = fn.concat([h, tokens], axis=1)
        h = self.encoder(h)
        return self.decoder(h) + contour.mean(axis=1, keepdims=True)


class AMTrans(Module):
    """Audio embedding + base mouth -> per-point offsets bounded by ±offset_bound"""

    def __init__(self, store: ParamStore, prefix: str, rng: np.random.Generator, cfg: CompletionConfig):
        super().__init__(store, prefix, rng)
        self.cfg = cfg
        self.points = PointEncoder(store, self.path("points"), rng, N_MOUTH, cfg.d_model)
        self.audio_tokens = Linear(store, self.path("audio_tokens"), rng, cfg.audio_dim,
                                   cfg.n_audio_tokens * cfg.d_model)
        self.blocks = [
            CrossAttentionBlock(store, self.path(f"cross{i}"), rng, cfg.d_model, cfg.d_model, cfg.n_heads)
            for i in range(cfg.n_layers)
        ]
        # zero final layer: training starts from "audio has no effect"
        self.coord_out = MLP(store, self.path("coord_out"), rng, cfg.d_model, cfg.d_model, 2, zero_init_out=True)

    def forward(self, audio_emb: Tensor, base_mouth: Tensor) -> Tensor:
        batch = audio_emb.shape[0]
        memory = self.audio_tokens(audio_emb).reshape(batch, self.cfg.n_audio_tokens, self.cfg.d_model)
        x = self.points(base_mouth)
        for block in self.blocks:
            x = block(x, memory)
        return self.coord_out(x).tanh() * self.cfg.offset_bound


class CompletionModel(Module):
    """
    The audio-driven landmark completion agent

    Parameter groups live under completion.lf / .bm / .am / .audio.
    """

    def __init__(self, store: ParamStore, cfg: CompletionConfig, rng: Optional[np.random.Generator] = None):
        rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        super().__init__(store, "completion", rng)
        self.cfg = cfg
        self.audio = TemporalEncoder(store, COMPLETION_AUDIO_PREFIX, rng, cfg.audio_dim)
        self.lf = LFTrans(store, self.path("lf"), rng, cfg)
        self.bm = BMTrans(store, self.path("bm"), rng, cfg)
        self.am = None if cfg.ablate_am else AMTrans(store, self.path("am"), rng, cfg)
        logger.debug(f"CompletionModel built: {store.count('completion')} parameters (ablate_am={cfg.ablate_am})")

    def forward(self, upper: Tensor, audio_windows: Tensor) -> Tuple[Tensor, Tensor, Tensor, Tensor]:
        """
        Args:
            upper: [B, 39, 2] upper-face points
            audio_windows: [B, 16, 29] audio windows

        Returns:
            (lower contour [B,9,2], base mouth [B,20,2], offsets [B,20,2], final mouth [B,20,2])
        """
        upper = as_tensor(upper)
        audio_emb = self.audio(audio_windows)
        lower = self.lf(upper)
        contour = fn.concat([upper, lower], axis=1)
        if self.am is None:
            mouth = self.bm(contour, audio_emb)
            return lower, mouth, Tensor(np.zeros(mouth.shape)), mouth
        base = self.bm(contour)
        offsets = self.am(audio_emb, base)
        return lower, base, offsets, base + offsets

    def predict_region(self, upper: Tensor, audio_windows: Tensor) -> Tensor:
        """Predicted point set R (lower contour then mouth), [B, 29, 2]"""
        lower, _, _, mouth = self.forward(upper, audio_windows)
        return fn.concat([lower, mouth], axis=1)


# ============== SINGLE-FRAME OPERATIONS ==============

def _check_points(points: np.ndarray, n: int, what: str) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    if points.shape != (n, 2):
        raise ShapeError(f"{what}: expected {n} points, got shape {points.shape}")
    return points


def lf_forward(model: CompletionModel, upper: np.ndarray) -> np.ndarray:
    """39 upper points -> 9 lower-contour points"""
    upper = _check_points(upper, N_UPPER, "lf_forward")
    with no_grad():
        return model.lf(Tensor(upper[None])).data[0]


def bm_forward(model: CompletionModel, contour: np.ndarray) -> np.ndarray:
    """48 contour points (upper then lower) -> 20 base mouth points"""
    contour = _check_points(contour, N_CONTOUR, "bm_forward")
    with no_grad():
        return model.bm(Tensor(contour[None])).data[0]


def am_forward(model: CompletionModel, audio_emb: np.ndarray, base_mouth: np.ndarray) -> np.ndarray:
    """Audio embedding + base mouth -> 20 bounded offsets (zeros in ablation mode)"""
    base_mouth = _check_points(base_mouth, N_MOUTH, "am_forward")
    if model.am is None:
        return np.zeros_like(base_mouth)
    with no_grad():
        return model.am(Tensor(np.asarray(audio_emb)[None]), Tensor(base_mouth[None])).data[0]


def embed_audio(model: CompletionModel, audio_windows: np.ndarray) -> np.ndarray:
    with no_grad():
        return model.audio(Tensor(np.asarray(audio_windows))).data


def complete_points(model: CompletionModel, upper: np.ndarray, audio_emb: np.ndarray) -> np.ndarray:
    """
    Batched completion from precomputed embeddings

    The result is the exact network output: mouth points equal
    BM(contour) + AM(audio, base) with no clipping, so predictions may
    leave the unit canvas. Use clip_to_canvas before building Landmark68.

    Args:
        upper: [B, 39, 2]
        audio_emb: [B, audio_dim]

    Returns:
        [B, 68, 2]; upper points passed through unchanged
    """
    upper = np.asarray(upper, dtype=np.float64)
    emb = Tensor(np.asarray(audio_emb, dtype=np.float64))
    with no_grad():
        upper_t = Tensor(upper)
        lower = model.lf(upper_t)
        contour = fn.concat([upper_t, lower], axis=1)
        if model.am is None:
            mouth = model.bm(contour, emb)
        else:
            base = model.bm(contour)
            mouth = base + model.am(emb, base)
    return merge_points(upper, lower.data, mouth.data, DEFAULT_PARTITION)


def clip_to_canvas(points: np.ndarray) -> np.ndarray:
    """Clamp coordinates into [0, 1]; logs how many coordinates moved"""
    points = np.asarray(points, dtype=np.float64)
    clipped = np.clip(points, 0.0, 1.0)
    moved = int(np.count_nonzero(clipped != points))
    if moved:
        logger.debug(f"clip_to_canvas: {moved} coordinates clamped into [0, 1]")
    return clipped


def complete(model: CompletionModel, upper: np.ndarray, audio_emb: np.ndarray) -> Landmark68:
    """
    merge(upper, LF(upper), BM(contour) + AM(audio, base)) as a Landmark68

    Clamping predicted coordinates into the unit canvas is the only
    difference from complete_points; on-canvas predictions keep the exact
    base + offset decomposition.
    """
    upper = _check_points(upper, N_UPPER, "complete")
    return Landmark68(clip_to_canvas(complete_points(model, upper[None], np.asarray(audio_emb)[None])[0]))
