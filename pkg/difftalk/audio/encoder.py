"""
Temporal convolutional audio encoder: 16×29 window -> 64-dim embedding
"""
from typing import Union

import numpy as np

from difftalk.audio.track import FEATURE_DIM, WINDOW, AudioWindow
from difftalk.autodiff import functional as fn
from difftalk.autodiff.nn import Conv1d, Linear, Module
from difftalk.autodiff.params import ParamStore
from difftalk.autodiff.tensor import Tensor, as_tensor
from difftalk.exceptions import ContractViolation, ShapeError

AUDIO_EMBED_DIM = 64
CONV_CHANNELS = (32, 32, 64)
# parameter prefix of the encoder trained with the completion agent
COMPLETION_AUDIO_PREFIX = "completion.audio"


class TemporalEncoder(Module):
    """
    Three stride-2 1-D convolutions over time (kernel 3, leaky-ReLU), then a
    linear map to the embedding. Feature components are the conv channels.
    """

    def __init__(self, store: ParamStore, prefix: str, rng: np.random.Generator,
                 embed_dim: int = AUDIO_EMBED_DIM):
        super().__init__(store, prefix, rng)
        self.embed_dim = embed_dim
        channels = (FEATURE_DIM,) + CONV_CHANNELS
        self.convs = [
            Conv1d(store, self.path(f"conv{i}"), rng, channels[i], channels[i + 1], kernel=3, stride=2, padding=1)
            for i in range(len(CONV_CHANNELS))
        ]
        length = WINDOW
        for _ in CONV_CHANNELS:
            length = (length + 2 - 3) // 2 + 1
        self.out = Linear(store, self.path("out"), rng, CONV_CHANNELS[-1] * length, embed_dim)

    def forward(self, windows: Union[Tensor, np.ndarray]) -> Tensor:
        """
        Args:
            windows: [B, 16, 29] window blocks

        Returns:
            [B, embed_dim] embeddings
        """
        return encode_windows(windows, self.store, self.prefix)


def encode_windows(windows: Union[Tensor, np.ndarray], store: ParamStore, prefix: str) -> Tensor:
    """
    Run the encoder whose parameters live under prefix in store

    Raises:
        ShapeError: Windows are not [B, 16, 29]
        ContractViolation: The store holds no encoder under prefix
    """
    x = as_tensor(windows)
    if x.shape[1:] != (WINDOW, FEATURE_DIM):
        raise ShapeError(f"audio windows need shape (B, {WINDOW}, {FEATURE_DIM}), got {x.shape}")
    if f"{prefix}.out.weight" not in store:
        raise ContractViolation(f"no audio encoder parameters under '{prefix}'")
    h = x.transpose(0, 2, 1)
    for i in range(len(CONV_CHANNELS)):
        conv = f"{prefix}.conv{i}"
        h = fn.conv1d(h, store[f"{conv}.weight"], store[f"{conv}.bias"], stride=2, padding=1).leaky_relu()
    return fn.matmul(h.reshape(h.shape[0], -1), store[f"{prefix}.out.weight"]) + store[f"{prefix}.out.bias"]


def temporal_encode(win: AudioWindow, params: Union[ParamStore, TemporalEncoder],
                    prefix: str = COMPLETION_AUDIO_PREFIX) -> np.ndarray:
    """
    Embed a single window; returns the 64-dim vector

    Args:
        win: Audio window
        params: Parameter store holding the encoder, or a built encoder
        prefix: Encoder prefix inside a store (ignored for an encoder)
    """
    if isinstance(params, TemporalEncoder):
        params, prefix = params.store, params.prefix
    return encode_windows(win.block[None], params, prefix).data[0]
