"""
Guesser Module
Dialogue-state encoder and dot-product candidate scoring
"""

from .classifier import CategoryClassifier, classifier_accuracy, train_classifier
from .model import (
    GuesserModel,
    RandomGuesser,
    encode_dialogue,
    object_representation,
    object_representations,
    predict_target,
    score_candidates,
    turn_matrix,
)
from .training import GuesserTrainer, examples_from, guesser_accuracy, guesser_batch_loss, train_guesser

__all__ = [
    "CategoryClassifier",
    "classifier_accuracy",
    "train_classifier",
    "GuesserModel",
    "RandomGuesser",
    "encode_dialogue",
    "object_representation",
    "object_representations",
    "predict_target",
    "score_candidates",
    "turn_matrix",
    "GuesserTrainer",
    "examples_from",
    "guesser_accuracy",
    "guesser_batch_loss",
    "train_guesser",
]
