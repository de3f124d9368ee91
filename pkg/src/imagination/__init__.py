"""
Imagination Module
Regularized auto-encoder producing category-aware object embeddings from perceptual features
"""

from .model import ImaginationModel, build_imagination, decode, encode, role_alpha
from .losses import (
    batch_imagination_loss,
    imagination_loss,
    inverse_frequency_weights,
    reconstruction_loss,
    regularization_loss,
    sample_negative,
)
from .training import (
    ImaginationTrainer,
    class_weights_for,
    collect_objects,
    encode_objects,
    evaluate_imagination,
    hinge_activation_rate,
    nearest_centroid_accuracy,
    train_imagination,
)

__all__ = [
    "ImaginationModel",
    "build_imagination",
    "encode",
    "decode",
    "role_alpha",
    "batch_imagination_loss",
    "imagination_loss",
    "inverse_frequency_weights",
    "reconstruction_loss",
    "regularization_loss",
    "sample_negative",
    "ImaginationTrainer",
    "class_weights_for",
    "collect_objects",
    "encode_objects",
    "evaluate_imagination",
    "hinge_activation_rate",
    "nearest_centroid_accuracy",
    "train_imagination",
]
