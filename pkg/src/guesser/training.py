"""
Guesser training on gold dialogues
A mini-batch stacks every turn and every candidate of its games so each network
runs once per batch; per-game pooling and softmax are segment operations.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.config import RunConfig, named_rng
from src.errors import ConfigError
from src.guesser.model import GuesserModel, check_dialogue, object_representations, predict_target, turn_matrix
from src.imagination.training import finetune_grads, scene_negatives
from src.models.schemas import Dialogue, Scene
from src.numerics.network import backward, forward_with_cache
from src.numerics.optim import AdamState, adam_step
from src.numerics.trainer import EarlyStopping, TrainingHistory, check_finite, iterate_minibatches, progress

logger = logging.getLogger(__name__)

GuesserExample = Tuple[Dialogue, Scene]


def target_index(dialogue: Dialogue, scene: Scene) -> int:
    return scene.target if dialogue.target is None else dialogue.target


def guesser_batch_loss(
    model: GuesserModel,
    batch: Sequence[GuesserExample],
    finetune: bool = False,
    rng: Optional[np.random.Generator] = None,
    reconstruction: bool = True,
) -> Tuple[float, Dict[str, np.ndarray], int]:
    """
    Mean cross-entropy of the target over candidates, with gradients

    With finetune the task gradient also reaches the attached encoder; reconstruction
    adds L_IMG of the batch objects on top.

    Returns:
        (loss, gradients keyed like model.named_parameters(), correct argmax count)
    """
    turn_blocks, turn_game, turn_pos, lengths = [], [], [], []
    objects, object_game, targets = [], [], []
    for b, (dialogue, scene) in enumerate(batch):
        check_dialogue(model, dialogue)
        block = turn_matrix(model.bank, dialogue)
        turn_blocks.append(block)
        turn_game.extend([b] * block.shape[0])
        turn_pos.extend(range(block.shape[0]))
        lengths.append(block.shape[0])
        targets.append(len(objects) + target_index(dialogue, scene))
        objects.extend(scene.objects)
        object_game.extend([b] * len(scene.objects))

    n_games = len(batch)
    turn_x = np.concatenate(turn_blocks)
    turn_game = np.array(turn_game)
    turn_pos = np.array(turn_pos)
    lengths = np.array(lengths, dtype=np.float64)
    object_game = np.array(object_game)

    enc, enc_cache = forward_with_cache(model.turn_encoder, turn_x)
    weights = model.position_weights[turn_pos]
    scale = (weights / lengths[turn_game])[:, None]
    h = np.zeros((n_games, model.d_h))
    np.add.at(h, turn_game, scale * enc)

    reps, parts = object_representations(model, objects)
    m, mlp_cache = forward_with_cache(model.object_mlp, reps)
    logits = np.sum(m * h[object_game], axis=1)

    # segment softmax per game
    maxes = np.full(n_games, -np.inf)
    np.maximum.at(maxes, object_game, logits)
    exp = np.exp(logits - maxes[object_game])
    sums = np.zeros(n_games)
    np.add.at(sums, object_game, exp)
    probs = exp / sums[object_game]

    targets = np.array(targets)
    loss = float(-np.mean(np.log(np.maximum(probs[targets], 1e-12))))
    correct = 0
    for b in range(n_games):
        rows = np.flatnonzero(object_game == b)
        correct += int(rows[np.argmax(probs[rows])] == targets[b])

    d_logits = probs.copy()
    d_logits[targets] -= 1.0
    d_logits /= n_games

    d_m = d_logits[:, None] * h[object_game]
    d_h = np.zeros_like(h)
    np.add.at(d_h, object_game, d_logits[:, None] * m)

    d_enc = scale * d_h[turn_game]
    d_weights = np.zeros_like(model.position_weights)
    np.add.at(d_weights, turn_pos, np.sum(d_h[turn_game] * enc, axis=1) / lengths[turn_game])

    _, grads = backward(model.turn_encoder, turn_x, d_enc, enc_cache, prefix="turn_encoder.")
    d_reps, mlp_grads = backward(model.object_mlp, reps, d_m, mlp_cache, prefix="object_mlp.")
    grads.update(mlp_grads)
    grads["position_weights"] = d_weights

    if model.category_table is not None:
        table_grad = np.zeros_like(model.category_table)
        np.add.at(table_grad, parts["category_rows"], d_reps[:, : model.category_table.shape[1]])
        grads["category_table"] = table_grad
    if model.imagination is not None and finetune:
        negatives = None
        if reconstruction:
            items = [(scene, i) for _, scene in batch for i in range(len(scene.objects))]
            negatives = scene_negatives(items, rng)
        img_loss, img_grads = finetune_grads(
            model.imagination, parts["imagination_input"], d_reps[:, : model.imagination.d_z], negatives
        )
        loss += img_loss
        grads.update(img_grads)
    return loss, grads, correct


def guesser_accuracy(model: GuesserModel, examples: Sequence[GuesserExample]) -> float:
    if not examples:
        return 0.0
    hits = sum(
        predict_target(model, dialogue, scene) == scene.objects[target_index(dialogue, scene)].id
        for dialogue, scene in examples
    )
    return hits / len(examples)


class GuesserTrainer:
    """Optimizer state and epoch loop for one guesser (also driven by the modulo-n schedule)"""

    def __init__(self, model: GuesserModel, config: RunConfig, component: Optional[str] = None):
        self.model = model
        self.config = config
        self.component = component or model.kind
        self.rng = named_rng(config.seed, f"train.{self.component}")
        self.state = AdamState.for_params(model.named_parameters(), lr=config.lr)
        self.finetune = config.finetune_imagination and model.imagination is not None
        self.reconstruction = True

    def run_epoch(self, examples: Sequence[GuesserExample], epoch: int) -> Tuple[float, float]:
        """One pass over the examples; returns (mean loss, train accuracy)"""
        total, correct = 0.0, 0
        batches = iterate_minibatches(len(examples), self.config.batch_size, self.rng)
        for rows in progress(batches, desc=f"{self.component} {epoch}", enabled=self.config.show_progress):
            batch = [examples[r] for r in rows]
            loss, grads, hits = guesser_batch_loss(self.model, batch, self.finetune, self.rng, self.reconstruction)
            check_finite(loss, epoch)
            params, self.state = adam_step(self.model.named_parameters(), grads, self.state)
            self.model.load_parameters(params)
            total += loss * len(batch)
            correct += hits
        mean_loss = total / len(examples)
        check_finite(mean_loss, epoch)
        return mean_loss, correct / len(examples)


def train_guesser(
    model: GuesserModel,
    train_examples: Sequence[GuesserExample],
    config: RunConfig,
    val_examples: Optional[Sequence[GuesserExample]] = None,
    component: Optional[str] = None,
) -> Tuple[GuesserModel, TrainingHistory]:
    """
    Cross-entropy on the target index; best epoch by validation accuracy is restored

    Raises:
        ConfigError: no training dialogues
        TrainingError: non-finite loss
    """
    if not train_examples:
        raise ConfigError("Guesser training needs at least one gold dialogue")
    trainer = GuesserTrainer(model, config, component)
    history = TrainingHistory(trainer.component)
    stopper = EarlyStopping(config.patience, mode="max")

    for epoch in range(1, config.guesser_epochs + 1):
        train_loss, train_acc = trainer.run_epoch(train_examples, epoch)
        if val_examples:
            val_acc = guesser_accuracy(model, val_examples)
            history.add(epoch, train_loss=train_loss, train_acc=train_acc, val_acc=val_acc)
            if stopper.update(epoch, val_acc, model.snapshot()):
                logger.info(f"[{trainer.component}] early stop at epoch {epoch}, best epoch {stopper.best_epoch}")
                break
        else:
            history.add(epoch, train_loss=train_loss, train_acc=train_acc)

    if stopper.best_snapshot is not None:
        model.load_parameters(stopper.best_snapshot)
    return model, history


def examples_from(dialogues: Sequence[Dialogue], scenes: Sequence[Scene]) -> List[GuesserExample]:
    """Pair dialogues with their scenes by scene id"""
    by_id = {scene.scene_id: scene for scene in scenes}
    missing = [d.scene_id for d in dialogues if d.scene_id not in by_id]
    if missing:
        raise ConfigError(f"Dialogues reference unknown scenes: {', '.join(missing[:5])}")
    return [(d, by_id[d.scene_id]) for d in dialogues]
