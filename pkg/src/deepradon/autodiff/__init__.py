"""Minimal reverse-mode autodiff for the reconstruction network."""

from .adam import Adam, AdamState, adam_step
from .checkpoint import load_checkpoint, save_checkpoint
from .nn import batch_norm, concat, conv2d, downsample2, relu, sum_squares, upsample2
from .radon import backproject_layer, radon_layer
from .tensor import Tensor, as_tensor

__all__ = [
    "Tensor",
    "as_tensor",
    "conv2d",
    "batch_norm",
    "relu",
    "downsample2",
    "upsample2",
    "concat",
    "sum_squares",
    "radon_layer",
    "backproject_layer",
    "Adam",
    "AdamState",
    "adam_step",
    "save_checkpoint",
    "load_checkpoint",
]
