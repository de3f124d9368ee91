"""
Imagination training loop and post-training diagnostics
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.config import RunConfig, named_rng
from src.errors import ConfigError
from src.imagination.losses import batch_imagination_loss, inverse_frequency_weights, sample_negative
from src.imagination.model import ImaginationModel, encode
from src.models.schemas import Scene
from src.numerics.network import backward
from src.numerics.optim import AdamState, adam_step
from src.numerics.trainer import EarlyStopping, TrainingHistory, check_finite, iterate_minibatches, progress

logger = logging.getLogger(__name__)


@dataclass
class ObjectTable:
    """Every (scene, object) pair of a split flattened into row arrays"""

    v: np.ndarray
    scene_index: np.ndarray
    object_index: np.ndarray
    category: np.ndarray

    def __len__(self) -> int:
        return self.v.shape[0]


def collect_objects(scenes: Sequence[Scene]) -> ObjectTable:
    rows_v, rows_s, rows_o, rows_c = [], [], [], []
    for s_idx, scene in enumerate(scenes):
        for o_idx, obj in enumerate(scene.objects):
            rows_v.append(obj.v)
            rows_s.append(s_idx)
            rows_o.append(o_idx)
            rows_c.append(obj.category)
    if not rows_v:
        return ObjectTable(np.zeros((0, 0)), np.zeros(0, int), np.zeros(0, int), np.zeros(0, int))
    return ObjectTable(np.stack(rows_v), np.array(rows_s), np.array(rows_o), np.array(rows_c))


def draw_negatives(
    table: ObjectTable,
    rows: np.ndarray,
    scenes: Sequence[Scene],
    rng: np.random.Generator,
    strategy: str = "scene",
) -> np.ndarray:
    """
    Negative perceptual vector per anchor row

    scene: same scene, different category
    batch: another scene's object in the same batch with a different category
           (falls back to the same-scene draw when the batch has none)
    """
    negatives = np.zeros((len(rows), table.v.shape[1]))
    for k, row in enumerate(rows):
        if strategy == "batch":
            pool = [r for r in rows if table.scene_index[r] != table.scene_index[row]
                    and table.category[r] != table.category[row]]
            if pool:
                negatives[k] = table.v[pool[int(rng.integers(len(pool)))]]
                continue
        scene = scenes[table.scene_index[row]]
        j = sample_negative(scene, int(table.object_index[row]), rng)
        negatives[k] = scene.objects[j].v
    return negatives


def _head_targets(model: ImaginationModel, table: ObjectTable, rows: np.ndarray) -> Optional[np.ndarray]:
    if model.category_head is None:
        return None
    index = {c: k for k, c in enumerate(model.head_categories)}
    if any(int(table.category[r]) not in index for r in rows):
        return None
    return np.array([index[int(table.category[r])] for r in rows])


def evaluate_imagination(
    model: ImaginationModel, scenes: Sequence[Scene], rng: np.random.Generator, batch_size: int = 256
) -> Tuple[float, float]:
    """(mean L_IMG, hinge activation rate) over every object of the given scenes; the category head is not scored"""
    table = collect_objects(scenes)
    if len(table) == 0:
        return 0.0, 0.0
    total, active = 0.0, 0
    for rows in iterate_minibatches(len(table), batch_size, None):
        negatives = draw_negatives(table, rows, scenes, rng, "scene")
        loss, _, mask = batch_imagination_loss(model, table.v[rows], negatives, None)
        total += loss * len(rows)
        active += int(mask.sum())
    return total / len(table), active / len(table)


def hinge_activation_rate(model: ImaginationModel, scenes: Sequence[Scene], rng: np.random.Generator) -> float:
    return evaluate_imagination(model, scenes, rng)[1]


def class_weights_for(scenes: Sequence[Scene], head_categories: Sequence[int]) -> np.ndarray:
    index = {c: k for k, c in enumerate(head_categories)}
    labels = [index[obj.category] for scene in scenes for obj in scene.objects if obj.category in index]
    return inverse_frequency_weights(labels, len(head_categories))


class ImaginationTrainer:
    """Optimizer state and epoch loop for one imagination model (also driven by the modulo-n schedule)"""

    def __init__(self, model: ImaginationModel, config: RunConfig, component: str = "imagination"):
        self.model = model
        self.config = config
        self.component = component
        self.rng = named_rng(config.seed, f"train.{component}")
        self.state = AdamState.for_params(model.named_parameters(), lr=config.lr)

    def run_epoch(self, scenes: Sequence[Scene], epoch: int, table: Optional[ObjectTable] = None) -> float:
        """One pass over every (scene, object) pair; returns the mean loss"""
        table = collect_objects(scenes) if table is None else table
        total = 0.0
        batches = iterate_minibatches(len(table), self.config.batch_size, self.rng)
        for rows in progress(batches, desc=f"{self.component} {epoch}", enabled=self.config.show_progress):
            negatives = draw_negatives(table, rows, scenes, self.rng, self.config.negative_sampling)
            targets = _head_targets(self.model, table, rows)
            loss, grads, _ = batch_imagination_loss(self.model, table.v[rows], negatives, targets)
            check_finite(loss, epoch)
            params, self.state = adam_step(self.model.named_parameters(), grads, self.state)
            self.model.load_parameters(params)
            total += loss * len(rows)
        mean_loss = total / len(table)
        check_finite(mean_loss, epoch)
        return mean_loss


def train_imagination(
    model: ImaginationModel,
    train_scenes: Sequence[Scene],
    config: RunConfig,
    val_scenes: Optional[Sequence[Scene]] = None,
    component: str = "imagination",
    epochs: Optional[int] = None,
) -> Tuple[ImaginationModel, TrainingHistory]:
    """
    Mini-batch Adam over all (scene, object) pairs

    One negative per anchor, resampled every epoch. With validation scenes the
    best epoch by validation loss is restored after early stopping.

    Raises:
        ConfigError: no training objects
        TrainingError: non-finite loss
    """
    table = collect_objects(train_scenes)
    if len(table) == 0:
        raise ConfigError(f"{component}: no training scenes")
    trainer = ImaginationTrainer(model, config, component)
    val_seed = int(named_rng(config.seed, f"val.{component}").integers(2**31))
    epochs = config.imagination_epochs if epochs is None else epochs

    history = TrainingHistory(component)
    stopper = EarlyStopping(config.patience, mode="min")

    for epoch in range(1, epochs + 1):
        train_loss = trainer.run_epoch(train_scenes, epoch, table)
        if val_scenes:
            val_loss, hinge_rate = evaluate_imagination(model, val_scenes, np.random.default_rng(val_seed))
            history.add(epoch, train_loss=train_loss, val_loss=val_loss, val_hinge_rate=hinge_rate)
            if stopper.update(epoch, val_loss, model.snapshot()):
                logger.info(f"[{component}] early stop at epoch {epoch}, best epoch {stopper.best_epoch}")
                break
        else:
            history.add(epoch, train_loss=train_loss)

    if stopper.best_snapshot is not None:
        model.load_parameters(stopper.best_snapshot)
    return model, history


def encode_objects(model: ImaginationModel, scenes: Sequence[Scene]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(z matrix, v matrix, category labels) for every object"""
    table = collect_objects(scenes)
    if len(table) == 0:
        return np.zeros((0, model.d_z)), np.zeros((0, model.d_o)), np.zeros(0, int)
    return encode(model, table.v), table.v, table.category


def nearest_centroid_accuracy(
    train_x: np.ndarray, train_y: np.ndarray, test_x: np.ndarray, test_y: np.ndarray
) -> float:
    """Accuracy of assigning each test row to the closest class mean of the training rows"""
    if len(test_y) == 0:
        return 0.0
    labels: List[int] = sorted(set(int(y) for y in train_y))
    centroids = np.stack([train_x[train_y == label].mean(axis=0) for label in labels])
    distances = np.linalg.norm(test_x[:, None, :] - centroids[None, :, :], axis=2)
    predicted = np.array(labels)[np.argmin(distances, axis=1)]
    return float(np.mean(predicted == test_y))


def finetune_grads(
    model: ImaginationModel,
    v: np.ndarray,
    d_z: np.ndarray,
    negatives: Optional[np.ndarray],
    prefix: str = "imagination.",
) -> Tuple[float, Dict[str, np.ndarray]]:
    """
    Joint fine-tuning: task gradient flowing into z plus L_IMG on the same objects

    Args:
        model: Attached imagination model
        v: (batch, d_O) perceptual vectors that were encoded
        d_z: (batch, d_Z) task-loss gradient w.r.t. z
        negatives: (batch, d_O) negatives for the reconstruction term; None passes only the task gradient

    Returns:
        (L_IMG, gradients keyed '<prefix>' + model parameter name)
    """
    _, task_grads = backward(model.encoder, v, d_z, prefix="encoder.")
    if negatives is None:
        return 0.0, {f"{prefix}{name}": grad for name, grad in task_grads.items()}
    img_loss, grads, _ = batch_imagination_loss(model, v, negatives)
    for name, grad in task_grads.items():
        grads[name] = grads[name] + grad
    return img_loss, {f"{prefix}{name}": grad for name, grad in grads.items()}


def scene_negatives(items: Sequence[Tuple[Scene, int]], rng: np.random.Generator) -> np.ndarray:
    """Same-scene different-category negative vector per (scene, object index)"""
    return np.stack([scene.objects[sample_negative(scene, i, rng)].v for scene, i in items])
