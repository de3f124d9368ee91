"""
Category vocabulary generation
Prototypes cluster by supercategory: each category prototype is its supercategory
centroid plus an offset, so within-supercategory distances are smaller on average.
"""

import logging
from typing import Dict, List, Sequence, Tuple

import numpy as np

from src.config import RunConfig, named_rng
from src.errors import ConfigError
from src.models.schemas import ATTRIBUTE_VALUES, Category, CategoryVocabulary, Supercategory

logger = logging.getLogger(__name__)

# (supercategory name, animate, category names)
NAME_BANK: Tuple[Tuple[str, bool, Tuple[str, ...]], ...] = (
    ("person", True, ("man", "woman", "boy", "girl", "skier", "player", "chef")),
    ("animal", True, ("dog", "cat", "horse", "sheep", "cow", "bird", "zebra")),
    ("vehicle", False, ("car", "bus", "truck", "bicycle", "motorcycle", "train", "boat")),
    ("furniture", False, ("chair", "couch", "bed", "table", "bench", "shelf", "desk")),
    ("utensil", False, ("fork", "knife", "spoon", "cup", "bowl", "plate", "glass")),
    ("food", False, ("pizza", "banana", "apple", "cake", "sandwich", "carrot", "donut")),
    ("appliance", False, ("oven", "fridge", "toaster", "microwave", "sink", "kettle", "lamp")),
    ("sports", False, ("ball", "kite", "racket", "skateboard", "surfboard", "frisbee", "glove")),
)

MAX_PROTOTYPE_ATTEMPTS = 200


def _split_evenly(total: int, parts: int) -> List[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if k < extra else 0) for k in range(parts)]


def heldout_counts(config: RunConfig) -> Tuple[int, int]:
    """(near-domain count, out-of-domain count) implied by the configured fractions"""
    n_nd = int(round(config.nd_fraction * config.n_categories))
    n_od = int(round(config.od_fraction * config.n_categories))
    return n_nd, n_od


def _names(super_index: int, count: int) -> Tuple[str, bool, List[str]]:
    if super_index < len(NAME_BANK):
        name, animate, bank = NAME_BANK[super_index]
    else:
        name, animate, bank = f"group{super_index}", False, ()
    names = [bank[j] if j < len(bank) else f"{name}{j}" for j in range(count)]
    return name, animate, names


def _allocate(config: RunConfig, rng: np.random.Generator) -> Tuple[List[int], List[int]]:
    """Category count per supercategory and the out-of-domain supercategory ids"""
    n_super, n_cat = config.n_supercategories, config.n_categories
    n_nd, n_od = heldout_counts(config)
    if n_super < 1 or n_cat < n_super:
        raise ConfigError(f"Need 1 <= n_supercategories <= n_categories, got {n_super} and {n_cat}")

    n_od_super = config.od_supercategories if n_od > 0 else 0
    if n_od > 0 and not 1 <= n_od_super < n_super:
        raise ConfigError(
            f"{n_od} out-of-domain categories need between 1 and {n_super - 1} dedicated supercategories, "
            f"got od_supercategories={config.od_supercategories}"
        )
    if n_od < n_od_super:
        raise ConfigError(f"{n_od_super} out-of-domain supercategories cannot share only {n_od} categories")

    n_in_super = n_super - n_od_super
    remaining = n_cat - n_od
    if remaining - n_nd < n_in_super:
        raise ConfigError(
            f"Infeasible split: {n_nd} near-domain categories would leave a supercategory without "
            f"in-domain categories ({remaining} categories over {n_in_super} supercategories)"
        )

    od_supers = sorted(int(k) for k in rng.choice(n_super, size=n_od_super, replace=False)) if n_od_super else []
    in_supers = [k for k in range(n_super) if k not in od_supers]
    counts = [0] * n_super
    for k, count in zip(od_supers, _split_evenly(n_od, max(n_od_super, 1))):
        counts[k] = count
    for k, count in zip(in_supers, _split_evenly(remaining, n_in_super)):
        counts[k] = count
    return counts, od_supers


def _prototypes(config: RunConfig, owners: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    d = config.d_o
    centroids = rng.normal(0.0, config.prototype_scale, size=(config.n_supercategories, d))
    spread = config.category_spread * config.prototype_scale
    protos = np.zeros((len(owners), d))
    for i, owner in enumerate(owners):
        for _ in range(MAX_PROTOTYPE_ATTEMPTS):
            candidate = centroids[owner] + rng.normal(0.0, spread, size=d)
            if i == 0 or np.min(np.linalg.norm(protos[:i] - candidate, axis=1)) > config.prototype_min_distance:
                protos[i] = candidate
                break
        else:
            raise ConfigError(
                f"Could not place category {i} at distance > {config.prototype_min_distance} "
                f"from the others; lower prototype_min_distance or raise category_spread"
            )
    return protos


def _near_domain(
    counts: List[int], od_supers: List[int], by_super: Dict[int, List[int]], n_nd: int, rng: np.random.Generator
) -> List[int]:
    """Round-robin over in-domain supercategories so each keeps >= 1 in-domain category"""
    pools = {k: list(rng.permutation(by_super[k])) for k in by_super if k not in od_supers}
    chosen: List[int] = []
    while len(chosen) < n_nd:
        open_supers = [k for k in sorted(pools) if len(pools[k]) > 1]
        for k in rng.permutation(open_supers):
            if len(chosen) == n_nd:
                break
            chosen.append(int(pools[int(k)].pop()))
    return sorted(chosen)


def generate_world(config: RunConfig, seed: int) -> CategoryVocabulary:
    """
    Build the category vocabulary and its zero-shot partition

    Args:
        config: Run configuration (world section)
        seed: Root seed; the vocabulary is fully determined by (config, seed)

    Raises:
        ConfigError: infeasible held-out partition or prototype spacing
    """
    rng = named_rng(seed, "world.vocabulary")
    counts, od_supers = _allocate(config, rng)
    n_nd, _ = heldout_counts(config)

    supercategories: List[Supercategory] = []
    owners: List[int] = []
    names: List[str] = []
    animate_flags: List[bool] = []
    by_super: Dict[int, List[int]] = {}
    for k, count in enumerate(counts):
        super_name, animate, category_names = _names(k, count)
        supercategories.append(Supercategory(id=k, name=super_name, animate=animate))
        for name in category_names:
            by_super.setdefault(k, []).append(len(owners))
            owners.append(k)
            names.append(name)
            animate_flags.append(animate)

    protos = _prototypes(config, owners, rng)
    categories = [
        Category(id=i, name=names[i], supercategory=owners[i], prototype=protos[i], animate=animate_flags[i])
        for i in range(len(owners))
    ]

    near = _near_domain(counts, od_supers, by_super, n_nd, rng)
    out = sorted(i for i, owner in enumerate(owners) if owner in od_supers)
    in_domain = sorted(set(range(len(owners))) - set(near) - set(out))

    offsets = {
        attribute: {value: rng.normal(0.0, config.attribute_scale, size=config.d_o) for value in values}
        for attribute, values in ATTRIBUTE_VALUES.items()
    }

    vocab = CategoryVocabulary(
        d_o=config.d_o,
        supercategories=supercategories,
        categories=categories,
        in_domain=in_domain,
        near_domain_heldout=near,
        out_domain_heldout=out,
        attribute_offsets=offsets,
    )
    logger.info(
        f"Generated world: {len(categories)} categories in {len(supercategories)} supercategories "
        f"(in-domain {len(in_domain)}, near-domain {len(near)}, out-of-domain {len(out)})"
    )
    return vocab


def prototype_matrix(vocab: CategoryVocabulary, category_ids: Sequence[int]) -> np.ndarray:
    return np.stack([vocab.category(c).prototype for c in category_ids])
