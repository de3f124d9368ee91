"""
Pytest Configuration and Fixtures
A tiny world shared by all tests plus helpers to build small models
"""

from pathlib import Path
from typing import Callable, Dict, Iterable, List

import numpy as np
import pytest

from src.config import RunConfig
from src.models.schemas import CategoryVocabulary, GameObject, ObjectAttributes, Scene
from src.numerics import finite_diff_grad
from src.oracle.questions import QuestionBank
from src.world.scenes import spatial_features
from src.world.splits import build_splits
from src.world.vocabulary import generate_world

FIXTURES = Path(__file__).parent / "fixtures"

# Small enough for the whole pipeline to run in seconds
TINY_SETTINGS: Dict[str, object] = {
    "n_supercategories": 4,
    "n_categories": 12,
    "d_o": 8,
    "nd_fraction": 0.25,
    "od_fraction": 0.25,
    "prototype_min_distance": 1.0,
    "min_objects": 3,
    "max_objects": 5,
    "train_scenes": 24,
    "val_scenes": 8,
    "test_scenes": 8,
    "nd_scenes": 6,
    "od_scenes": 6,
    "d_z": 4,
    "imagination_hidden": 8,
    "oracle_d_c": 4,
    "oracle_hidden": 8,
    "guesser_d_c": 4,
    "d_h": 8,
    "guesser_hidden": 8,
    "classifier_hidden": 8,
    "max_turns": 4,
    "batch_size": 16,
    "imagination_epochs": 2,
    "oracle_epochs": 2,
    "guesser_epochs": 2,
    "classifier_epochs": 2,
    "joint_epochs": 3,
    "modulo_n": 2,
    "eval_seeds": [0],
    "probe_epochs": 20,
    "probe_train_games": 24,
    "enable_logging": False,
}


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run tests marked slow")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: statistical tests on the full-size synthetic world")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def tiny_config(**overrides) -> RunConfig:
    return RunConfig(**{**TINY_SETTINGS, **overrides})


def tiny_conf_lines(out_dir: Path) -> List[str]:
    """TINY_SETTINGS as key=value lines for the CLI"""
    lines = [f"out_dir = {out_dir}"]
    for key, value in TINY_SETTINGS.items():
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        elif isinstance(value, bool):
            value = str(value).lower()
        lines.append(f"{key} = {value}")
    return lines


def make_object(
    index: int,
    category: int,
    supercategory: int,
    bbox=(10.0, 10.0, 100.0, 80.0),
    v=None,
    color: str = "red",
    size: str = "small",
    texture: str = "smooth",
    shape: str = "round",
    width: int = 640,
    height: int = 480,
) -> GameObject:
    """Hand-built object for unit tests"""
    return GameObject(
        id=index,
        category=category,
        supercategory=supercategory,
        attributes=ObjectAttributes(color=color, size=size, texture=texture, shape=shape),
        bbox=bbox,
        v=np.zeros(8) if v is None else np.asarray(v, dtype=np.float64),
        s=spatial_features(bbox, width, height),
    )


@pytest.fixture(scope="session")
def config() -> RunConfig:
    return tiny_config()


@pytest.fixture(scope="session")
def vocab(config) -> CategoryVocabulary:
    return generate_world(config, 0)


@pytest.fixture(scope="session")
def splits(vocab, config) -> Dict[str, List[Scene]]:
    return build_splits(vocab, config, 0)


@pytest.fixture(scope="session")
def bank(vocab) -> QuestionBank:
    return QuestionBank(vocab)


@pytest.fixture
def scene(splits) -> Scene:
    return splits["train"][0]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def run_config(tmp_path) -> RunConfig:
    """Tiny configuration writing into a fresh output directory"""
    return tiny_config(out_dir=str(tmp_path / "run"))


def numeric_gradients(model, loss_at: Callable[[], float], names: Iterable[str]) -> Dict[str, np.ndarray]:
    """Finite differences of loss_at() over the named parameters only; the rest stay fixed"""
    original = model.snapshot()

    def restricted(params):
        model.load_parameters({**original, **params})
        return loss_at()

    numeric = finite_diff_grad(restricted, {name: original[name] for name in names})
    model.load_parameters(original)
    return numeric
