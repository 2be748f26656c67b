"""
Minimal dense-tensor core with reverse-mode differentiation and Adam
"""
from difftalk.autodiff.checkpoint import load_checkpoint, read_checkpoint, save_checkpoint
from difftalk.autodiff.functional import attention, concat, conv1d, conv2d, matmul, mse, softmax, upsample
from difftalk.autodiff.gradcheck import gradcheck
from difftalk.autodiff.optim import Adam, adam_step
from difftalk.autodiff.params import ParamStore
from difftalk.autodiff.tensor import Tensor, as_tensor, no_grad, parameter

__all__ = [
    "Adam",
    "ParamStore",
    "Tensor",
    "adam_step",
    "as_tensor",
    "attention",
    "concat",
    "conv1d",
    "conv2d",
    "gradcheck",
    "load_checkpoint",
    "matmul",
    "mse",
    "no_grad",
    "parameter",
    "read_checkpoint",
    "save_checkpoint",
    "softmax",
    "upsample",
]
