"""
World Module
Synthetic categories, scenes and splits standing in for annotated photographs
"""

from .vocabulary import NAME_BANK, generate_world, heldout_counts
from .scenes import LOCATIONS, SECTORS, generate_scene, in_location, location_sector, spatial_features
from .splits import SPLITS, build_split, build_splits
from .io import read_jsonl, read_scenes, read_vocabulary, write_jsonl, write_scenes, write_vocabulary

__all__ = [
    "NAME_BANK",
    "generate_world",
    "heldout_counts",
    "LOCATIONS",
    "SECTORS",
    "generate_scene",
    "in_location",
    "location_sector",
    "spatial_features",
    "SPLITS",
    "build_split",
    "build_splits",
    "read_jsonl",
    "read_scenes",
    "read_vocabulary",
    "write_jsonl",
    "write_scenes",
    "write_vocabulary",
]
