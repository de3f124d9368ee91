"""Train / val / test and zero-shot scene splits"""

import logging
from typing import Dict, List

from src.config import RunConfig, named_rng
from src.models.schemas import CategoryVocabulary, Scene
from src.numerics.trainer import progress
from src.world.scenes import generate_scene

logger = logging.getLogger(__name__)

SPLITS = ("train", "val", "test", "nd_test", "od_test")


def split_size(config: RunConfig, name: str) -> int:
    return {
        "train": config.train_scenes,
        "val": config.val_scenes,
        "test": config.test_scenes,
        "nd_test": config.nd_scenes,
        "od_test": config.od_scenes,
    }[name]


def build_split(vocab: CategoryVocabulary, config: RunConfig, seed: int, name: str) -> List[Scene]:
    """
    Scenes of one split; each split has its own random substream

    In-domain splits only use in-domain categories. Zero-shot splits draw the
    target from the held-out set and distractors from in-domain categories.
    """
    rng = named_rng(seed, f"world.split.{name}")
    target_pool = None
    if name == "nd_test":
        target_pool = vocab.near_domain_heldout
    elif name == "od_test":
        target_pool = vocab.out_domain_heldout

    count = split_size(config, name)
    if target_pool is not None and not target_pool:
        logger.warning(f"Split {name} has no held-out categories; producing no scenes")
        return []

    return [
        generate_scene(vocab, config, rng, scene_id=f"{name}-{i:05d}", target_pool=target_pool)
        for i in progress(range(count), desc=f"scenes:{name}", enabled=config.show_progress, total=count)
    ]


def build_splits(vocab: CategoryVocabulary, config: RunConfig, seed: int) -> Dict[str, List[Scene]]:
    splits = {name: build_split(vocab, config, seed, name) for name in SPLITS}
    logger.info("Built splits: " + ", ".join(f"{k}={len(v)}" for k, v in splits.items()))
    return splits
