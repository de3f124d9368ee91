"""
Oracle training on sampled (question, object, answer) triples and per-type evaluation
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.analytics.stats import per_type_table
from src.config import RunConfig, named_rng
from src.errors import ConfigError
from src.imagination.training import finetune_grads, scene_negatives
from src.models.schemas import ANSWER_ORDER, Answer, Question, Scene, TypeAccuracy
from src.numerics.losses import nll_from_probs
from src.numerics.network import backward, forward_with_cache
from src.numerics.optim import AdamState, adam_step
from src.numerics.trainer import EarlyStopping, TrainingHistory, check_finite, iterate_minibatches, progress
from src.oracle.model import OracleModel, answer_from_probs, oracle_features, oracle_forward_batch
from src.oracle.questions import QuestionSampler, type_row

logger = logging.getLogger(__name__)


@dataclass
class OracleExample:
    question: Question
    scene: Scene
    target: int
    answer: Answer


def sample_examples(sampler: QuestionSampler, scenes: Sequence[Scene], rng: np.random.Generator) -> List[OracleExample]:
    examples = []
    for scene in scenes:
        for index, question, label in sampler.sample(scene, rng):
            examples.append(OracleExample(question, scene, index, label))
    return examples


def majority_distribution(examples: Sequence[OracleExample]) -> np.ndarray:
    """Empirical answer frequencies in (Yes, No, NA) order"""
    counts = np.array([sum(1 for e in examples if e.answer == a) for a in ANSWER_ORDER], dtype=np.float64)
    if counts.sum() == 0:
        return np.full(len(ANSWER_ORDER), 1.0 / len(ANSWER_ORDER))
    return counts / counts.sum()


def oracle_batch_loss(
    model: OracleModel,
    examples: Sequence[OracleExample],
    finetune: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[float, Dict[str, np.ndarray], int]:
    """
    Mean NLL over a batch with gradients for the classifier, the category table and
    (when fine-tuning) the attached imagination model

    Returns:
        (loss, gradients, number of correct argmax answers)
    """
    items = [(e.question, e.scene, e.target) for e in examples]
    x, parts = oracle_features(model, items)
    probs, cache = forward_with_cache(model.classifier, x)
    targets = np.array([ANSWER_ORDER.index(e.answer) for e in examples])
    loss, d_probs = nll_from_probs(probs, targets)
    d_x, grads = backward(model.classifier, x, d_probs, cache, prefix="classifier.")
    correct = int(np.sum(np.argmax(probs, axis=1) == targets))

    offset = 0
    for feature, width in model.feature_dims().items():
        block = d_x[:, offset:offset + width]
        offset += width
        if feature == "category":
            table_grad = np.zeros_like(model.category_table)
            np.add.at(table_grad, parts["category_rows"], block)
            grads["category_table"] = table_grad
        elif feature == "imagination" and finetune:
            negatives = scene_negatives([(e.scene, e.target) for e in examples], rng)
            img_loss, img_grads = finetune_grads(model.imagination, parts["imagination_input"], block, negatives)
            loss += img_loss
            grads.update(img_grads)
    return float(loss), grads, correct


def evaluate_oracle(model: OracleModel, examples: Sequence[OracleExample]) -> Tuple[float, Dict[str, TypeAccuracy]]:
    """Overall accuracy and per-type rows (object questions split by animacy)"""
    if not examples:
        return 0.0, {}
    predicted: List[Answer] = []
    for start in range(0, len(examples), 512):
        chunk = examples[start:start + 512]
        probs = oracle_forward_batch(model, [(e.question, e.scene, e.target) for e in chunk])
        predicted.extend(answer_from_probs(p) for p in probs)
    pairs = [(type_row(e.question), p == e.answer) for e, p in zip(examples, predicted)]
    total = sum(correct for _, correct in pairs)
    return total / len(examples), per_type_table(pairs)


def train_oracle(
    model: OracleModel,
    train_scenes: Sequence[Scene],
    config: RunConfig,
    val_scenes: Optional[Sequence[Scene]] = None,
    component: Optional[str] = None,
) -> Tuple[OracleModel, TrainingHistory]:
    """
    Cross-entropy training with fresh question samples every epoch; the best epoch
    by validation accuracy is restored. The majority baseline only counts labels.

    Raises:
        ConfigError: no training scenes
        TrainingError: non-finite loss
    """
    if not train_scenes:
        raise ConfigError("Oracle training needs at least one scene")
    component = component or model.kind
    sampler = QuestionSampler(model.bank, config.oracle_questions_per_object)
    rng = named_rng(config.seed, f"train.{component}")
    val_examples = sample_examples(sampler, val_scenes or [], named_rng(config.seed, f"val.{component}"))
    history = TrainingHistory(component)

    if not model.features:
        model.majority = majority_distribution(sample_examples(sampler, train_scenes, rng))
        val_acc, _ = evaluate_oracle(model, val_examples)
        history.add(1, val_acc=val_acc)
        return model, history

    finetune = config.finetune_imagination and model.imagination is not None
    stopper = EarlyStopping(config.patience, mode="max")
    state = AdamState.for_params(model.named_parameters(), lr=config.lr)

    for epoch in range(1, config.oracle_epochs + 1):
        examples = sample_examples(sampler, train_scenes, rng)
        total, correct = 0.0, 0
        batches = iterate_minibatches(len(examples), config.batch_size, rng)
        for rows in progress(batches, desc=f"{component} {epoch}", enabled=config.show_progress):
            batch = [examples[r] for r in rows]
            loss, grads, hits = oracle_batch_loss(model, batch, finetune, rng)
            check_finite(loss, epoch)
            params, state = adam_step(model.named_parameters(), grads, state)
            model.load_parameters(params)
            total += loss * len(batch)
            correct += hits
        train_loss = total / len(examples)
        check_finite(train_loss, epoch)

        if val_examples:
            val_acc, _ = evaluate_oracle(model, val_examples)
            history.add(epoch, train_loss=train_loss, train_acc=correct / len(examples), val_acc=val_acc)
            if stopper.update(epoch, val_acc, model.snapshot()):
                logger.info(f"[{component}] early stop at epoch {epoch}, best epoch {stopper.best_epoch}")
                break
        else:
            history.add(epoch, train_loss=train_loss, train_acc=correct / len(examples))

    if stopper.best_snapshot is not None:
        model.load_parameters(stopper.best_snapshot)
    return model, history
