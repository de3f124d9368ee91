"""generate: synthetic world and scene splits under <out>/data"""

import logging
from typing import Dict

from src.commands.context import RunContext
from src.config import RunConfig
from src.world.io import write_scenes, write_vocabulary
from src.world.splits import build_splits
from src.world.vocabulary import generate_world

logger = logging.getLogger(__name__)


def cmd_generate(config: RunConfig) -> Dict[str, int]:
    """Write world.json plus one JSONL file per split; returns scene counts per split"""
    ctx = RunContext(config)
    vocab = generate_world(config, config.seed)
    write_vocabulary(ctx.paths.world(), vocab)
    logger.info(
        f"World: {len(vocab.categories)} categories in {len(vocab.supercategories)} supercategories "
        f"({len(vocab.in_domain)} in-domain, {len(vocab.near_domain_heldout)} near-domain, "
        f"{len(vocab.out_domain_heldout)} out-of-domain)"
    )

    counts = {}
    for name, scenes in build_splits(vocab, config, config.seed).items():
        counts[name] = write_scenes(ctx.paths.split(name), scenes)
    for name, count in counts.items():
        print(f"{name:>8}: {count} scenes -> {ctx.paths.split(name)}")
    return counts
