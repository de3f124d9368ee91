"""
Category classifier on perceptual vectors (used by the predcat guesser)
"""

import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from src.config import RunConfig, named_rng
from src.errors import ConfigError
from src.imagination.training import collect_objects
from src.models.schemas import Scene
from src.numerics.checkpoint import Checkpoint, describe_net, load_checkpoint, restore_net, save_checkpoint
from src.numerics.losses import nll_from_probs
from src.numerics.network import DenseNet, backward, forward, forward_with_cache
from src.numerics.optim import AdamState, adam_step
from src.numerics.trainer import EarlyStopping, TrainingHistory, check_finite, iterate_minibatches

logger = logging.getLogger(__name__)

CHECKPOINT_KIND = "classifier"


class CategoryClassifier:
    """Softmax DenseNet v -> in-domain category"""

    def __init__(self, net: DenseNet, categories: Sequence[int]):
        if net.output_dim != len(categories):
            raise ConfigError(f"Classifier has {net.output_dim} outputs for {len(categories)} categories")
        self.net = net
        self.categories: List[int] = list(categories)

    @classmethod
    def build(cls, d_o: int, hidden: int, categories: Sequence[int], rng: Optional[np.random.Generator]) -> "CategoryClassifier":
        return cls(DenseNet.build([d_o, hidden, len(categories)], ["relu", "softmax"], rng), categories)

    def predict(self, v: np.ndarray) -> np.ndarray:
        """Category id per row of v (ties resolve to the lowest class index)"""
        probs = np.atleast_2d(forward(self.net, v))
        return np.array(self.categories)[np.argmax(probs, axis=1)]

    def named_parameters(self):
        return self.net.named_parameters("net.")

    def load_parameters(self, params) -> None:
        self.net.load_parameters(params, "net.")

    def snapshot(self):
        return {k: v.copy() for k, v in self.named_parameters().items()}

    def to_checkpoint(self) -> Checkpoint:
        return Checkpoint(
            kind=CHECKPOINT_KIND,
            meta={"net": describe_net(self.net), "categories": self.categories},
            arrays=self.snapshot(),
        )

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint) -> "CategoryClassifier":
        if checkpoint.kind != CHECKPOINT_KIND:
            raise ConfigError(f"Expected a classifier checkpoint, got kind '{checkpoint.kind}'")
        return cls(restore_net(checkpoint.meta["net"], checkpoint.arrays, "net."), checkpoint.meta["categories"])

    def save(self, path: Union[str, Path]) -> Path:
        return save_checkpoint(path, self.to_checkpoint())

    @classmethod
    def load(cls, path: Union[str, Path]) -> "CategoryClassifier":
        return cls.from_checkpoint(load_checkpoint(path))


def classifier_accuracy(classifier: CategoryClassifier, scenes: Sequence[Scene]) -> float:
    table = collect_objects(scenes)
    if len(table) == 0:
        return 0.0
    return float(np.mean(classifier.predict(table.v) == table.category))


def train_classifier(
    classifier: CategoryClassifier,
    train_scenes: Sequence[Scene],
    config: RunConfig,
    val_scenes: Optional[Sequence[Scene]] = None,
) -> Tuple[CategoryClassifier, TrainingHistory]:
    """Cross-entropy on in-domain objects; best epoch by validation accuracy"""
    table = collect_objects(train_scenes)
    index = {c: k for k, c in enumerate(classifier.categories)}
    keep = np.array([int(c) in index for c in table.category], dtype=bool) if len(table) else np.zeros(0, bool)
    if not keep.any():
        raise ConfigError("Classifier training needs objects of known categories")
    v = table.v[keep]
    targets = np.array([index[int(c)] for c in table.category[keep]])

    rng = named_rng(config.seed, f"train.{CHECKPOINT_KIND}")
    history = TrainingHistory(CHECKPOINT_KIND)
    stopper = EarlyStopping(config.patience, mode="max")
    state = AdamState.for_params(classifier.named_parameters(), lr=config.lr)

    for epoch in range(1, config.classifier_epochs + 1):
        total = 0.0
        for rows in iterate_minibatches(len(v), config.batch_size, rng):
            probs, cache = forward_with_cache(classifier.net, v[rows])
            loss, d_probs = nll_from_probs(probs, targets[rows])
            check_finite(loss, epoch)
            _, grads = backward(classifier.net, v[rows], d_probs, cache, prefix="net.")
            params, state = adam_step(classifier.named_parameters(), grads, state)
            classifier.load_parameters(params)
            total += loss * len(rows)
        train_loss = total / len(v)
        if val_scenes:
            val_acc = classifier_accuracy(classifier, val_scenes)
            history.add(epoch, train_loss=train_loss, val_acc=val_acc)
            if stopper.update(epoch, val_acc, classifier.snapshot()):
                break
        else:
            history.add(epoch, train_loss=train_loss)

    if stopper.best_snapshot is not None:
        classifier.load_parameters(stopper.best_snapshot)
    return classifier, history
