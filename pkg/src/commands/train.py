"""
train: one component per invocation

Components:
    imagination, imagination:oracle, imagination:guesser
    classifier
    oracle:<feature set>           e.g. oracle:question+spatial+imagination
    guesser:<mode>                 category | nocat | predcat | imagination
    modulo_n (alias joint)         imagination-mode guesser trained with the modulo-n schedule
"""

import logging
from pathlib import Path
from typing import Optional

from src.commands.context import RunContext
from src.config import GUESSER_MODES, RunConfig, named_rng
from src.errors import ConfigError
from src.gameplay.schedule import modulo_n_train
from src.guesser.classifier import CategoryClassifier, classifier_accuracy, train_classifier
from src.guesser.model import GuesserModel
from src.guesser.training import examples_from, train_guesser
from src.imagination.model import ImaginationModel, build_imagination
from src.imagination.training import class_weights_for, train_imagination
from src.oracle.model import OracleModel, feature_set_name, parse_feature_set
from src.oracle.training import train_oracle

logger = logging.getLogger(__name__)

IMAGINATION_COMPONENTS = ("imagination", "imagination:oracle", "imagination:guesser")


def _train_imagination(ctx: RunContext, component: str) -> Path:
    config = ctx.config
    role = component.split(":", 1)[1] if ":" in component else None
    train, val = ctx.split("train"), ctx.split("val")
    head_categories = sorted(ctx.vocab.in_domain) if config.aux_category_loss else None
    weights = class_weights_for(train, head_categories) if head_categories else None
    model = build_imagination(config, ctx.vocab.d_o, named_rng(config.seed, f"init.{component}"), role,
                              head_categories, weights)
    model, history = train_imagination(model, train, config, val, component=component)
    ctx.save_curve(history)
    return model.save(ctx.checkpoint_path(component), kind=component)


def _train_classifier(ctx: RunContext) -> Path:
    config = ctx.config
    classifier = CategoryClassifier.build(
        ctx.vocab.d_o, config.classifier_hidden, sorted(ctx.vocab.in_domain), named_rng(config.seed, "init.classifier")
    )
    classifier, history = train_classifier(classifier, ctx.split("train"), config, ctx.split("val"))
    ctx.save_curve(history)
    logger.info(f"[classifier] validation accuracy {classifier_accuracy(classifier, ctx.split('val')):.4f}")
    return classifier.save(ctx.checkpoint_path("classifier"))


def _train_oracle(ctx: RunContext, feature_set: str) -> Path:
    config = ctx.config
    features = parse_feature_set(feature_set)
    component = f"oracle:{feature_set_name(features)}"
    imagination = ctx.imagination("oracle") if "imagination" in features else None
    model = OracleModel.build(feature_set, ctx.bank, config.oracle_d_c, config.oracle_hidden,
                              named_rng(config.seed, f"init.{component}"), imagination)
    model, history = train_oracle(model, ctx.split("train"), config, ctx.split("val"), component)
    ctx.save_curve(history)
    return model.save(ctx.checkpoint_path(component))


def _build_guesser(ctx: RunContext, mode: str, imagination: Optional[ImaginationModel] = None) -> GuesserModel:
    config = ctx.config
    classifier = ctx.classifier() if mode == "predcat" else None
    if mode == "imagination" and imagination is None:
        imagination = ctx.imagination("guesser")
    return GuesserModel.build(mode, ctx.bank, config.d_h, config.guesser_hidden, config.guesser_d_c, config.max_turns,
                              named_rng(config.seed, f"init.guesser:{mode}"), imagination, classifier)


def _train_guesser(ctx: RunContext, mode: str) -> Path:
    if mode not in GUESSER_MODES:
        raise ConfigError(f"Unknown guesser mode '{mode}' (expected one of {', '.join(GUESSER_MODES)})")
    config = ctx.config
    component = f"guesser:{mode}"
    model = _build_guesser(ctx, mode)
    train_examples = examples_from(ctx.gold("train", config.guesser_targets_per_scene), ctx.split("train"))
    val_examples = examples_from(ctx.gold("val"), ctx.split("val"))
    logger.info(f"[{component}] {len(train_examples)} gold training dialogues")
    model, history = train_guesser(model, train_examples, config, val_examples, component)
    ctx.save_curve(history)
    return model.save(ctx.checkpoint_path(component))


def _train_modulo_n(ctx: RunContext) -> Path:
    """Starts from the guesser-role encoder when one exists, otherwise from a fresh one"""
    config = ctx.config
    if ctx.has("imagination:guesser") or ctx.has("imagination"):
        imagination = ctx.imagination("guesser")
    else:
        imagination = build_imagination(config, ctx.vocab.d_o, named_rng(config.seed, "init.modulo_n"), "guesser")
    model = _build_guesser(ctx, "imagination", imagination)
    train_examples = examples_from(ctx.gold("train", config.guesser_targets_per_scene), ctx.split("train"))
    val_examples = examples_from(ctx.gold("val"), ctx.split("val"))
    model, history, _ = modulo_n_train(model, train_examples, ctx.split("train"), config, val_examples)
    ctx.save_curve(history)
    return model.save(ctx.checkpoint_path("modulo_n"))


def cmd_train(config: RunConfig, component: str) -> Path:
    """
    Train one component and write its best-validation checkpoint plus loss curve

    Raises:
        ConfigError: unknown component
        DependencyError: a checkpoint the component builds on is missing
    """
    ctx = RunContext(config)
    logger.info(f"Training {component} (seed {config.seed})")
    if component in IMAGINATION_COMPONENTS:
        path = _train_imagination(ctx, component)
    elif component == "classifier":
        path = _train_classifier(ctx)
    elif component.startswith("oracle:"):
        path = _train_oracle(ctx, component.split(":", 1)[1])
    elif component.startswith("guesser:"):
        path = _train_guesser(ctx, component.split(":", 1)[1])
    elif component in ("modulo_n", "joint"):
        path = _train_modulo_n(ctx)
    else:
        raise ConfigError(f"Unknown component '{component}'")
    print(f"{component}: checkpoint -> {path}")
    return path
