"""
Numerics Module
Dense networks, losses, Adam and the checkpoint container
"""

from .network import DenseLayer, DenseNet, backward, forward, forward_with_cache, softmax
from .losses import bce_with_logits, l2_norm, mse, mse_rows, nll_from_probs
from .optim import AdamState, adam_step
from .gradcheck import finite_diff_grad, relative_error
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint

__all__ = [
    "DenseLayer",
    "DenseNet",
    "forward",
    "forward_with_cache",
    "backward",
    "softmax",
    "mse",
    "mse_rows",
    "l2_norm",
    "nll_from_probs",
    "bce_with_logits",
    "AdamState",
    "adam_step",
    "finite_diff_grad",
    "relative_error",
    "Checkpoint",
    "load_checkpoint",
    "save_checkpoint",
]
