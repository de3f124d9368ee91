"""
Attribute probe: how much of the target's attributes a dialogue state still carries

Linear one-vs-rest sigmoid probes for the abstract, situated and combined label
families, a single softmax layer over the five location sectors. Scores are
macro-F1 on held-out games.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.metrics import f1_score

from src.config import RunConfig, named_rng
from src.errors import ShapeError
from src.guesser.model import GuesserModel, encode_dialogue
from src.models.schemas import ATTRIBUTE_VALUES, AttributeScores, CategoryVocabulary, Dialogue, GameObject, GameResult, Scene
from src.numerics.losses import bce_with_logits, nll_from_probs
from src.numerics.network import DenseNet, backward, forward, forward_with_cache
from src.numerics.optim import AdamState, adam_step
from src.world.scenes import SECTORS, location_sector

logger = logging.getLogger(__name__)

FAMILIES = ("abstract", "situated", "abstract_situated", "location")
STD_FLOOR = 1e-8


@dataclass
class ProbeResult:
    family: str
    f1: float
    labels: List[str]
    excluded: List[str] = field(default_factory=list)


def abstract_labels(vocab: CategoryVocabulary) -> List[str]:
    return [f"supercategory:{s.name}" for s in vocab.supercategories] + ["animate", "inanimate"]


def situated_labels() -> List[str]:
    return [f"{attribute}:{value}" for attribute, values in ATTRIBUTE_VALUES.items() for value in values]


def family_labels(vocab: CategoryVocabulary, family: str) -> List[str]:
    if family == "abstract":
        return abstract_labels(vocab)
    if family == "situated":
        return situated_labels()
    if family == "abstract_situated":
        return abstract_labels(vocab) + situated_labels()
    if family == "location":
        return list(SECTORS)
    raise ValueError(f"Unknown probe family '{family}'")


def object_tags(vocab: CategoryVocabulary, obj: GameObject) -> set:
    supercategory = vocab.supercategory(obj.supercategory)
    tags = {f"supercategory:{supercategory.name}", "animate" if vocab.category(obj.category).animate else "inanimate"}
    for attribute, value in obj.attributes.model_dump().items():
        tags.add(f"{attribute}:{value}")
    return tags


def label_matrix(vocab: CategoryVocabulary, objects: Sequence[GameObject], labels: Sequence[str]) -> np.ndarray:
    """(objects, labels) 0/1 indicator matrix"""
    y = np.zeros((len(objects), len(labels)))
    for row, obj in enumerate(objects):
        tags = object_tags(vocab, obj)
        for col, label in enumerate(labels):
            if label in tags:
                y[row, col] = 1.0
    return y


def sector_targets(objects: Sequence[GameObject], middle_radius: float) -> np.ndarray:
    return np.array([SECTORS.index(location_sector(obj.s, middle_radius)) for obj in objects], dtype=np.int64)


def standardize(train_x: np.ndarray, test_x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Zero mean, unit variance per column using train statistics only"""
    mean = train_x.mean(axis=0)
    std = train_x.std(axis=0)
    std = np.where(std < STD_FLOOR, 1.0, std)
    return (train_x - mean) / std, (test_x - mean) / std


def probe_loss(net: DenseNet, x: np.ndarray, targets: np.ndarray) -> Tuple[float, Dict[str, np.ndarray]]:
    """BCE on logits for sigmoid probes, NLL for the softmax probe"""
    out, cache = forward_with_cache(net, x)
    if net.layers[-1].activation == "softmax":
        loss, d_out = nll_from_probs(out, targets)
    else:
        loss, d_out = bce_with_logits(out, targets)
    _, grads = backward(net, x, d_out, cache)
    return loss, grads


def fit_probe(
    x: np.ndarray,
    targets: np.ndarray,
    n_outputs: int,
    softmax_head: bool,
    epochs: int,
    lr: float,
    rng: np.random.Generator,
) -> DenseNet:
    """Full-batch Adam on a single linear layer"""
    net = DenseNet.build([x.shape[1], n_outputs], ["softmax" if softmax_head else "identity"], rng)
    state = AdamState.for_params(net.named_parameters(), lr=lr)
    for _ in range(epochs):
        _, grads = probe_loss(net, x, targets)
        params, state = adam_step(net.named_parameters(), grads, state)
        net.load_parameters(params)
    return net


def _sigmoid_family(
    family: str,
    train_x: np.ndarray,
    train_objects: Sequence[GameObject],
    test_x: np.ndarray,
    test_objects: Sequence[GameObject],
    vocab: CategoryVocabulary,
    config: RunConfig,
) -> ProbeResult:
    labels = family_labels(vocab, family)
    y_train = label_matrix(vocab, train_objects, labels)
    y_test = label_matrix(vocab, test_objects, labels)
    present = np.flatnonzero(y_train.sum(axis=0) > 0)
    excluded = [labels[k] for k in range(len(labels)) if k not in set(present)]
    if excluded:
        logger.info(f"[probe:{family}] labels absent from train, excluded: {excluded}")
    if present.size == 0:
        return ProbeResult(family, 0.0, [], excluded)

    net = fit_probe(train_x, y_train, len(labels), False, config.probe_epochs, config.probe_lr,
                    named_rng(config.seed, f"probe.{family}"))
    predicted = (forward(net, test_x) > 0.0).astype(np.int64)
    f1 = f1_score(y_test.astype(np.int64), predicted, labels=present, average="macro", zero_division=0)
    return ProbeResult(family, float(f1), [labels[k] for k in present], excluded)


def _location_family(
    train_x: np.ndarray,
    train_objects: Sequence[GameObject],
    test_x: np.ndarray,
    test_objects: Sequence[GameObject],
    config: RunConfig,
) -> ProbeResult:
    y_train = sector_targets(train_objects, config.middle_radius)
    y_test = sector_targets(test_objects, config.middle_radius)
    present = np.unique(y_train)
    excluded = [SECTORS[k] for k in range(len(SECTORS)) if k not in set(present)]
    if excluded:
        logger.info(f"[probe:location] sectors absent from train, excluded: {excluded}")

    net = fit_probe(train_x, y_train, len(SECTORS), True, config.probe_epochs, config.probe_lr,
                    named_rng(config.seed, "probe.location"))
    predicted = np.argmax(forward(net, test_x), axis=1)
    f1 = f1_score(y_test, predicted, labels=present, average="macro", zero_division=0)
    return ProbeResult("location", float(f1), [SECTORS[k] for k in present], excluded)


def probe_families(
    train_x: np.ndarray,
    train_objects: Sequence[GameObject],
    test_x: np.ndarray,
    test_objects: Sequence[GameObject],
    vocab: CategoryVocabulary,
    config: RunConfig,
) -> Dict[str, ProbeResult]:
    """
    Train and score every probe family

    Raises:
        ShapeError: feature rows do not match the object lists, or widths differ
    """
    train_x = np.atleast_2d(np.asarray(train_x, dtype=np.float64))
    test_x = np.atleast_2d(np.asarray(test_x, dtype=np.float64))
    if train_x.shape[0] != len(train_objects) or test_x.shape[0] != len(test_objects):
        raise ShapeError("probe features and target objects differ in length")
    if train_x.shape[1] != test_x.shape[1]:
        raise ShapeError(f"probe train width {train_x.shape[1]} != test width {test_x.shape[1]}")
    train_x, test_x = standardize(train_x, test_x)

    results = {
        family: _sigmoid_family(family, train_x, train_objects, test_x, test_objects, vocab, config)
        for family in FAMILIES[:3]
    }
    results["location"] = _location_family(train_x, train_objects, test_x, test_objects, config)
    for result in results.values():
        logger.info(f"[probe:{result.family}] macro-F1 {result.f1:.4f} over {len(result.labels)} labels")
    return results


def attribute_probe(
    train_x: np.ndarray,
    train_objects: Sequence[GameObject],
    test_x: np.ndarray,
    test_objects: Sequence[GameObject],
    vocab: CategoryVocabulary,
    config: RunConfig,
) -> AttributeScores:
    results = probe_families(train_x, train_objects, test_x, test_objects, vocab, config)
    return AttributeScores(
        a_f1=results["abstract"].f1,
        s_f1=results["situated"].f1,
        as_f1=results["abstract_situated"].f1,
        l_f1=results["location"].f1,
    )


def dialogue_states(
    guesser: GuesserModel,
    dialogues: Sequence[Dialogue],
    scenes: Sequence[Scene],
) -> Tuple[np.ndarray, List[GameObject]]:
    """
    Dialogue state h and target object per dialogue; dialogues without turns are skipped

    Returns:
        ((n, d_h) states, target objects)
    """
    by_id = {scene.scene_id: scene for scene in scenes}
    states, targets = [], []
    skipped = 0
    for dialogue in dialogues:
        if not dialogue.turns:
            skipped += 1
            continue
        scene = by_id[dialogue.scene_id]
        target = scene.target if dialogue.target is None else dialogue.target
        states.append(encode_dialogue(guesser, dialogue))
        targets.append(scene.objects[target])
    if skipped:
        logger.info(f"Skipped {skipped} dialogues without turns")
    if not states:
        return np.zeros((0, guesser.d_h)), []
    return np.vstack(states), targets


def result_dialogues(results: Sequence[GameResult], limit: Optional[int] = None) -> List[Dialogue]:
    chosen = results if limit is None else results[:limit]
    return [r.dialogue for r in chosen]
