"""
Shared state of one command: configuration, output layout, cached world and checkpoints
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional

from src.config import RunConfig, named_rng
from src.errors import DependencyError
from src.gameplay.gold import gold_dialogues
from src.guesser.classifier import CategoryClassifier
from src.guesser.model import GuesserModel
from src.imagination.model import ImaginationModel
from src.models.schemas import CategoryVocabulary, Dialogue, Scene
from src.numerics.trainer import TrainingHistory
from src.oracle.model import OracleModel, feature_set_name, parse_feature_set
from src.oracle.questions import QuestionBank
from src.world.io import read_scenes, read_vocabulary

logger = logging.getLogger(__name__)


class RunContext:
    def __init__(self, config: RunConfig):
        self.config = config
        self.paths = config.paths()
        self._vocab: Optional[CategoryVocabulary] = None
        self._bank: Optional[QuestionBank] = None
        self._splits: Dict[str, List[Scene]] = {}
        self._gold: Dict[str, List[Dialogue]] = {}

    @property
    def vocab(self) -> CategoryVocabulary:
        if self._vocab is None:
            self._vocab = read_vocabulary(self.paths.world())
        return self._vocab

    @property
    def bank(self) -> QuestionBank:
        if self._bank is None:
            self._bank = QuestionBank(self.vocab, self.config.disabled_qtypes, self.config.middle_radius)
        return self._bank

    def split(self, name: str) -> List[Scene]:
        if name not in self._splits:
            self._splits[name] = read_scenes(self.paths.split(name))
            logger.debug(f"Loaded {len(self._splits[name])} scenes from split '{name}'")
        return self._splits[name]

    def gold(self, name: str, targets_per_scene: int = 1) -> List[Dialogue]:
        """Gold dialogues of a split, drawn from their own named stream"""
        key = f"{name}.{targets_per_scene}"
        if key not in self._gold:
            rng = named_rng(self.config.seed, f"gold.{name}")
            self._gold[key] = gold_dialogues(self.bank, self.split(name), rng, self.config.max_turns, targets_per_scene)
        return self._gold[key]

    def checkpoint_path(self, component: str) -> Path:
        return self.paths.checkpoint(component)

    def require(self, component: str) -> Path:
        """
        Raises:
            DependencyError: the component's checkpoint has not been trained yet
        """
        path = self.paths.checkpoint(component)
        if not path.is_file():
            raise DependencyError(
                f"Missing checkpoint for '{component}': {path} (run 'train {component}' first)", missing=str(path)
            )
        return path

    def has(self, component: str) -> bool:
        return self.paths.checkpoint(component).is_file()

    def imagination(self, role: Optional[str] = None) -> ImaginationModel:
        """Role-specific encoder when trained, the shared one otherwise"""
        if role is not None and self.has(f"imagination:{role}"):
            return ImaginationModel.load(self.paths.checkpoint(f"imagination:{role}"))
        if role is not None:
            logger.info(f"No imagination:{role} checkpoint, falling back to the shared imagination model")
        return ImaginationModel.load(self.require("imagination"))

    def classifier(self) -> CategoryClassifier:
        return CategoryClassifier.load(self.require("classifier"))

    def oracle(self, feature_set: str) -> OracleModel:
        name = feature_set_name(parse_feature_set(feature_set))
        return OracleModel.load(self.require(f"oracle:{name}"), self.bank)

    def guesser(self, component: str) -> GuesserModel:
        """component is guesser:<mode>, a bare mode, or modulo_n"""
        if component != "modulo_n" and not component.startswith("guesser:"):
            component = f"guesser:{component}"
        return GuesserModel.load(self.require(component), self.bank)

    def save_curve(self, history: TrainingHistory) -> Path:
        return history.write_csv(self.paths.curve(history.component))
