"""Modulo-n multi-task schedule: the guesser objective on every n-th epoch"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

from src.config import RunConfig
from src.errors import ConfigError
from src.guesser.model import GuesserModel
from src.guesser.training import GuesserExample, GuesserTrainer, guesser_accuracy
from src.imagination.training import ImaginationTrainer, collect_objects
from src.models.schemas import Scene
from src.numerics.trainer import EarlyStopping, TrainingHistory

logger = logging.getLogger(__name__)


def modulo_n_schedule(n: int, epochs: int) -> List[Dict[str, object]]:
    """[{"epoch": e, "task": "guesser" | "imagination"}] for e = 1..epochs"""
    if n < 1:
        raise ConfigError(f"modulo_n must be >= 1, got {n}")
    return [{"epoch": e, "task": "guesser" if e % n == 0 else "imagination"} for e in range(1, epochs + 1)]


def modulo_n_train(
    guesser: GuesserModel,
    train_examples: Sequence[GuesserExample],
    train_scenes: Sequence[Scene],
    config: RunConfig,
    val_examples: Optional[Sequence[GuesserExample]] = None,
    component: str = "modulo_n",
) -> Tuple[GuesserModel, TrainingHistory, List[Dict[str, object]]]:
    """
    Jointly train an imagination-mode guesser and its encoder

    Guesser epochs update every guesser parameter (the shared encoder included);
    the other epochs train the imagination objective on the same encoder.
    The best guesser epoch by validation accuracy is restored.
    """
    if guesser.imagination is None:
        raise ConfigError("modulo-n training needs an imagination-mode guesser")
    schedule = modulo_n_schedule(config.modulo_n, config.joint_epochs)
    guesser_trainer = GuesserTrainer(guesser, config, f"{component}.guesser")
    guesser_trainer.finetune = True
    guesser_trainer.reconstruction = False
    imagination_trainer = ImaginationTrainer(guesser.imagination, config, f"{component}.imagination")
    table = collect_objects(train_scenes)

    history = TrainingHistory(component)
    stopper = EarlyStopping(0, mode="max")
    for step in schedule:
        epoch = int(step["epoch"])
        if step["task"] == "guesser":
            loss, train_acc = guesser_trainer.run_epoch(train_examples, epoch)
            val_acc = guesser_accuracy(guesser, val_examples) if val_examples else train_acc
            history.add(epoch, task="guesser", train_loss=loss, val_acc=val_acc)
            stopper.update(epoch, val_acc, guesser.snapshot())
        else:
            loss = imagination_trainer.run_epoch(train_scenes, epoch, table)
            history.add(epoch, task="imagination", train_loss=loss)
    logger.info(f"[{component}] guesser epochs: {[s['epoch'] for s in schedule if s['task'] == 'guesser']}")

    if stopper.best_snapshot is not None:
        guesser.load_parameters(stopper.best_snapshot)
    return guesser, history, schedule
