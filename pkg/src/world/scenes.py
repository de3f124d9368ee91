"""
Scene generation and spatial features
Each object is a perceptual vector (prototype + attribute offsets + scene context + noise)
plus an 8-entry spatial vector derived from its bounding box.
"""

import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np

from src.config import RunConfig
from src.errors import InvariantError
from src.models.schemas import (
    ATTRIBUTE_VALUES,
    CategoryVocabulary,
    GameObject,
    ObjectAttributes,
    Scene,
)

logger = logging.getLogger(__name__)

LOCATIONS = (
    "top left",
    "top right",
    "bottom left",
    "bottom right",
    "left",
    "right",
    "top",
    "bottom",
    "center",
)
SECTORS = ("left", "right", "top", "bottom", "center")

# Box side as a fraction of the image side, per size class
SIZE_RANGES = {
    "small": (0.08, 0.18),
    "medium": (0.18, 0.32),
    "large": (0.32, 0.50),
}

MAX_SCENE_ATTEMPTS = 100


def spatial_features(bbox: Sequence[float], image_width: int, image_height: int) -> np.ndarray:
    """
    [x_min, y_min, x_max, y_max, x_center, y_center, w_box, h_box]
    Coordinates are mapped to [-1, 1]; widths and heights to [0, 2].

    Raises:
        InvariantError: non-positive box size or box outside the image
    """
    x, y, w, h = (float(v) for v in bbox)
    if w <= 0 or h <= 0:
        raise InvariantError(f"Degenerate bounding box {tuple(bbox)}")
    if x < 0 or y < 0 or x + w > image_width or y + h > image_height:
        raise InvariantError(f"Bounding box {tuple(bbox)} outside {image_width}x{image_height} image")

    def nx(value: float) -> float:
        return 2.0 * value / image_width - 1.0

    def ny(value: float) -> float:
        return 2.0 * value / image_height - 1.0

    return np.array(
        [
            nx(x),
            ny(y),
            nx(x + w),
            ny(y + h),
            nx(x + w / 2.0),
            ny(y + h / 2.0),
            2.0 * w / image_width,
            2.0 * h / image_height,
        ]
    )


def in_location(s: np.ndarray, location: str, middle_radius: float) -> bool:
    """Whether an object's center lies in a named region; y grows downwards"""
    xc, yc = float(s[4]), float(s[5])
    left, top = xc < 0, yc < 0
    checks = {
        "top left": top and left,
        "top right": top and not left,
        "bottom left": not top and left,
        "bottom right": not top and not left,
        "left": left,
        "right": not left,
        "top": top,
        "bottom": not top,
        "center": max(abs(xc), abs(yc)) < middle_radius,
    }
    if location not in checks:
        raise KeyError(f"Unknown location '{location}'")
    return checks[location]


def location_sector(s: np.ndarray, middle_radius: float) -> str:
    """Five-way partition: center, else the dominant axis direction"""
    xc, yc = float(s[4]), float(s[5])
    if max(abs(xc), abs(yc)) < middle_radius:
        return "center"
    if abs(xc) >= abs(yc):
        return "left" if xc < 0 else "right"
    return "top" if yc < 0 else "bottom"


def _sample_attributes(rng: np.random.Generator) -> ObjectAttributes:
    return ObjectAttributes(
        **{name: str(values[rng.integers(len(values))]) for name, values in ATTRIBUTE_VALUES.items()}
    )


def _sample_bbox(size: str, config: RunConfig, rng: np.random.Generator) -> Tuple[float, float, float, float]:
    low, high = SIZE_RANGES[size]
    w = round(float(rng.uniform(low, high)) * config.image_width, 2)
    h = round(float(rng.uniform(low, high)) * config.image_height, 2)
    # floor keeps the rounded box inside the image
    x = math.floor(float(rng.uniform(0.0, config.image_width - w)) * 100) / 100
    y = math.floor(float(rng.uniform(0.0, config.image_height - h)) * 100) / 100
    return x, y, w, h


def perceptual_vector(
    vocab: CategoryVocabulary,
    category_id: int,
    attributes: ObjectAttributes,
    context: np.ndarray,
    sigma_noise: float,
    rng: np.random.Generator,
) -> np.ndarray:
    v = vocab.category(category_id).prototype.copy()
    for name in ATTRIBUTE_VALUES:
        offsets = vocab.attribute_offsets.get(name, {})
        value = getattr(attributes, name)
        if value in offsets:
            v = v + offsets[value]
    return v + context + rng.normal(0.0, sigma_noise, size=vocab.d_o)


def generate_scene(
    vocab: CategoryVocabulary,
    config: RunConfig,
    rng: np.random.Generator,
    scene_id: str = "scene-0",
    allowed: Optional[Sequence[int]] = None,
    target_pool: Optional[Sequence[int]] = None,
) -> Scene:
    """
    Sample one scene with at least two distinct categories

    Args:
        vocab: Category vocabulary
        config: World settings (object counts, noise, image size)
        rng: Random stream for this scene
        scene_id: Identifier stored on the scene
        allowed: Categories for non-target objects (default: in-domain)
        target_pool: If given the target is drawn from these categories (zero-shot splits)
    """
    allowed = list(allowed if allowed is not None else vocab.in_domain)
    if not allowed:
        raise InvariantError("No categories available for scene generation")

    for _ in range(MAX_SCENE_ATTEMPTS):
        n = int(rng.integers(config.min_objects, config.max_objects + 1))
        if target_pool:
            target_category = int(target_pool[rng.integers(len(target_pool))])
            others = [int(c) for c in rng.choice(allowed, size=n - 1)]
            target = int(rng.integers(n))
            categories = others[:target] + [target_category] + others[target:]
        else:
            categories = [int(c) for c in rng.choice(allowed, size=n)]
            target = int(rng.integers(n))
        if len(set(categories)) >= 2:
            break
    else:
        raise InvariantError(f"Could not sample two distinct categories for {scene_id}")

    context = rng.normal(0.0, config.sigma_ctx, size=vocab.d_o)
    objects = []
    for index, category_id in enumerate(categories):
        attributes = _sample_attributes(rng)
        bbox = _sample_bbox(attributes.size, config, rng)
        objects.append(
            GameObject(
                id=index,
                category=category_id,
                supercategory=vocab.category(category_id).supercategory,
                attributes=attributes,
                bbox=bbox,
                v=perceptual_vector(vocab, category_id, attributes, context, config.sigma_noise, rng),
                s=spatial_features(bbox, config.image_width, config.image_height),
            )
        )
    return Scene(
        scene_id=scene_id,
        width=config.image_width,
        height=config.image_height,
        target=target,
        objects=objects,
    )
