"""
Configuration Management
RunConfig aggregates every world, model, training and evaluation knob.
Values come from (highest priority first): --set overrides, the key=value
config file, IMAGINE_* environment variables / .env, then the defaults below.
"""

import logging
import zlib
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.errors import ConfigError

logger = logging.getLogger(__name__)

# Reference hyperparameters; the desk-scale defaults below deviate where noted in DESIGN.md
REFERENCE_ORACLE_ALPHA = 1e-7
REFERENCE_GUESSER_ALPHA = 1e-5
REFERENCE_MARGIN = 1.0
REFERENCE_MODULO_N = 5

QTYPES = ("supercategory", "object", "color", "size", "texture", "shape", "location")
GUESSER_MODES = ("category", "nocat", "predcat", "imagination")

# Alternate spellings accepted in config files and --set
KEY_ALIASES = {"paper_literal_sign": "flipped_margin_sign"}


class RunConfig(BaseSettings):
    """All run settings; flat so they map 1:1 onto key=value lines"""

    # Run
    seed: int = 0
    out_dir: str = "runs/default"
    enable_logging: bool = True
    debug: bool = False
    show_progress: bool = False

    # World
    n_supercategories: int = 6
    n_categories: int = 30
    d_o: int = 32
    nd_fraction: float = 0.2
    od_fraction: float = 0.1
    od_supercategories: int = 1
    prototype_scale: float = 1.0
    category_spread: float = 0.6
    prototype_min_distance: float = 2.0
    attribute_scale: float = 0.25
    sigma_noise: float = 0.15
    sigma_ctx: float = 0.3
    min_objects: int = 3
    max_objects: int = 10
    image_width: int = 640
    image_height: int = 480
    middle_radius: float = 0.3
    disabled_qtypes: List[str] = []
    train_scenes: int = 2000
    val_scenes: int = 300
    test_scenes: int = 500
    nd_scenes: int = 300
    od_scenes: int = 300

    # Imagination
    d_z: int = 16
    imagination_hidden: int = 32
    alpha: float = 1e-5
    oracle_alpha: float = REFERENCE_ORACLE_ALPHA
    guesser_alpha: float = REFERENCE_GUESSER_ALPHA
    eta: float = REFERENCE_MARGIN
    reconstruction: str = "triplet"
    flipped_margin_sign: bool = False
    negative_sampling: str = "scene"
    aux_category_loss: bool = False
    lambda_cat: float = 0.1
    finetune_imagination: bool = False

    # Oracle
    oracle_d_c: int = 16
    oracle_hidden: int = 64
    oracle_questions_per_object: int = 2

    # Guesser
    guesser_d_c: int = 16
    d_h: int = 32
    guesser_hidden: int = 32
    classifier_hidden: int = 32
    max_turns: int = 10
    guesser_targets_per_scene: int = 2

    # Training
    lr: float = 1e-4
    batch_size: int = 64
    imagination_epochs: int = 30
    oracle_epochs: int = 20
    guesser_epochs: int = 25
    classifier_epochs: int = 20
    patience: int = 4
    modulo_n: int = REFERENCE_MODULO_N
    joint_epochs: int = 20

    # Evaluation
    stop_threshold: float = 0.9
    settled_belief: float = 0.99
    temperature: float = 0.0
    eval_seeds: List[int] = [0, 1, 2]
    policy: str = "infogain"
    belief_source: str = "guesser"
    gold_answer_oracle: bool = False
    eval_oracle: str = "question+spatial+imagination"
    eval_guesser_modes: List[str] = list(GUESSER_MODES)
    eval_workers: int = 1
    probe_epochs: int = 150
    probe_lr: float = 0.02
    probe_source: str = "selfplay"
    probe_train_games: int = 1000
    grolla_components: List[str] = ["gameplay", "as_f1", "zeroshot"]

    model_config = SettingsConfigDict(
        env_prefix="IMAGINE_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    @field_validator("disabled_qtypes", "eval_guesser_modes", "grolla_components", mode="before")
    @classmethod
    def _split_words(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value

    @field_validator("eval_seeds", mode="before")
    @classmethod
    def _split_ints(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [int(item) for item in value.split(",") if item.strip()]
        return value

    @model_validator(mode="after")
    def _check(self) -> "RunConfig":
        if not self.eval_seeds:
            raise ValueError("eval_seeds must not be empty")
        if self.reconstruction not in ("triplet", "flipped", "mse"):
            raise ValueError(f"reconstruction must be triplet|flipped|mse, got {self.reconstruction}")
        if self.negative_sampling not in ("scene", "batch"):
            raise ValueError(f"negative_sampling must be scene|batch, got {self.negative_sampling}")
        if self.policy not in ("infogain", "random"):
            raise ValueError(f"policy must be infogain|random, got {self.policy}")
        if self.belief_source not in ("guesser", "consistency"):
            raise ValueError(f"belief_source must be guesser|consistency, got {self.belief_source}")
        if self.probe_source not in ("selfplay", "gold"):
            raise ValueError(f"probe_source must be selfplay|gold, got {self.probe_source}")
        for qtype in self.disabled_qtypes:
            if qtype not in QTYPES:
                raise ValueError(f"Unknown question type '{qtype}' in disabled_qtypes")
        for mode in self.eval_guesser_modes:
            if mode not in GUESSER_MODES:
                raise ValueError(f"Unknown guesser mode '{mode}'")
        if self.eta <= 0:
            raise ValueError("eta must be > 0")
        if min(self.alpha, self.oracle_alpha, self.guesser_alpha) < 0:
            raise ValueError("alpha values must be >= 0")
        if not 2 <= self.min_objects <= self.max_objects:
            raise ValueError("need 2 <= min_objects <= max_objects")
        if self.modulo_n < 1:
            raise ValueError(f"modulo_n must be >= 1, got {self.modulo_n}")
        if not 0.0 < self.stop_threshold <= 1.0:
            raise ValueError("stop_threshold must lie in (0, 1]")
        return self

    @property
    def effective_reconstruction(self) -> str:
        """flipped_margin_sign overrides the reconstruction choice"""
        return "flipped" if self.flipped_margin_sign else self.reconstruction

    @property
    def enabled_qtypes(self) -> List[str]:
        return [q for q in QTYPES if q not in self.disabled_qtypes]

    def rng(self, stream: str) -> np.random.Generator:
        """Named substream of the root seed (world, train.<component>, eval, ...)"""
        return named_rng(self.seed, stream)

    def paths(self) -> "RunPaths":
        return RunPaths(Path(self.out_dir))


class RunPaths:
    """Output layout under --out"""

    def __init__(self, root: Path):
        self.root = root
        self.data = root / "data"
        self.checkpoints = root / "checkpoints"
        self.curves = root / "curves"
        self.archives = root / "archives"
        self.reports = root / "reports"
        self.log_file = root / "run.log"

    def world(self) -> Path:
        return self.data / "world.json"

    def split(self, name: str) -> Path:
        return self.data / f"{name}.jsonl"

    def checkpoint(self, component: str) -> Path:
        return self.checkpoints / (component.replace(":", "-").replace("+", "_") + ".ckpt")

    def curve(self, component: str) -> Path:
        return self.curves / (component.replace(":", "-").replace("+", "_") + ".csv")


def named_rng(root_seed: int, stream: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(root_seed), zlib.crc32(stream.encode("utf-8"))]))


def parse_key_values(lines: Sequence[str], source: str = "<overrides>") -> Dict[str, str]:
    """
    Parse flat 'key = value' lines; '#' starts a comment, blank lines are ignored,
    dashes in keys become underscores and KEY_ALIASES are resolved

    Raises:
        ConfigError: on a line without '='
    """
    values: Dict[str, str] = {}
    for number, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{number}: expected key=value, got '{raw.strip()}'")
        key, value = line.split("=", 1)
        key = key.strip().replace("-", "_")
        values[KEY_ALIASES.get(key, key)] = value.strip()
    return values


def load_run_config(
    config_path: Optional[Union[str, Path]] = None,
    overrides: Sequence[str] = (),
    seed: Optional[int] = None,
    out_dir: Optional[str] = None,
) -> RunConfig:
    """
    Build a RunConfig from a key=value file plus --set overrides

    Args:
        config_path: Optional config file
        overrides: 'key=value' strings, applied after the file
        seed: --seed value (wins over file and overrides)
        out_dir: --out value (wins over file and overrides)

    Raises:
        ConfigError: unreadable file, malformed line, unknown key or invalid value
    """
    values: Dict[str, Any] = {}
    if config_path is not None:
        path = Path(config_path)
        if not path.is_file():
            raise ConfigError(f"Config file not found: {path}")
        values.update(parse_key_values(path.read_text(encoding="utf-8").splitlines(), source=str(path)))
    values.update(parse_key_values(list(overrides)))
    if seed is not None:
        values["seed"] = seed
    if out_dir is not None:
        values["out_dir"] = out_dir
    unknown = sorted(set(values) - set(RunConfig.model_fields))
    if unknown:
        raise ConfigError(f"Unknown configuration keys: {', '.join(unknown)}")
    try:
        config = RunConfig(**values)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e
    logger.debug(f"Loaded configuration with {len(values)} explicit values")
    return config
