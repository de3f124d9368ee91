"""
Guesser: dialogue state h scored by dot product against object representations

Object representation per mode:
  category     [c_lookup(c_i); s_i]      unseen categories share the UNK row
  nocat        [s_i]
  predcat      [c_lookup(classifier(v_i)); s_i]
  imagination  [E(v_i); s_i]
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.config import GUESSER_MODES
from src.errors import ConfigError, DialogueValidationError
from src.guesser.classifier import CategoryClassifier
from src.imagination.model import ImaginationModel, encode
from src.models.schemas import ANSWER_ORDER, Dialogue, GameObject, Scene
from src.numerics.checkpoint import Checkpoint, describe_net, load_checkpoint, restore_net, save_checkpoint
from src.numerics.network import DenseNet, forward, softmax
from src.oracle.questions import QuestionBank, encode_question

logger = logging.getLogger(__name__)

SPATIAL_DIM = 8


class GuesserModel:
    def __init__(
        self,
        mode: str,
        bank: QuestionBank,
        turn_encoder: DenseNet,
        position_weights: np.ndarray,
        object_mlp: DenseNet,
        category_table: Optional[np.ndarray] = None,
        imagination: Optional[ImaginationModel] = None,
        classifier: Optional[CategoryClassifier] = None,
    ):
        if mode not in GUESSER_MODES:
            raise ConfigError(f"Unknown guesser mode '{mode}'")
        if mode == "imagination" and imagination is None:
            raise ConfigError("Imagination mode needs an attached imagination model")
        if mode == "predcat" and classifier is None:
            raise ConfigError("predcat mode needs an attached category classifier")
        if mode in ("category", "predcat") and category_table is None:
            raise ConfigError(f"{mode} mode needs a category table")
        self.mode = mode
        self.bank = bank
        self.turn_encoder = turn_encoder
        self.position_weights = np.asarray(position_weights, dtype=np.float64)
        self.object_mlp = object_mlp
        self.category_table = category_table if mode in ("category", "predcat") else None
        self.imagination = imagination if mode == "imagination" else None
        self.classifier = classifier if mode == "predcat" else None
        self.known_categories: List[int] = sorted(bank.vocab.in_domain)
        self._row = {c: k for k, c in enumerate(self.known_categories)}
        if object_mlp.input_dim != self.repr_dim:
            raise ConfigError(f"Object MLP input {object_mlp.input_dim} != representation width {self.repr_dim}")
        if turn_encoder.input_dim != bank.d_q + len(ANSWER_ORDER):
            raise ConfigError("Turn encoder input must be d_Q + 3")
        if turn_encoder.output_dim != object_mlp.output_dim:
            raise ConfigError("Turn encoder and object MLP must share d_H")

    @classmethod
    def build(
        cls,
        mode: str,
        bank: QuestionBank,
        d_h: int,
        hidden: int,
        d_c: int,
        max_turns: int,
        rng: Optional[np.random.Generator],
        imagination: Optional[ImaginationModel] = None,
        classifier: Optional[CategoryClassifier] = None,
    ) -> "GuesserModel":
        turn_encoder = DenseNet.build([bank.d_q + len(ANSWER_ORDER), d_h, d_h], ["relu", "identity"], rng)
        table = None
        if mode in ("category", "predcat"):
            rows = len(bank.vocab.in_domain) + 1
            table = rng.normal(0.0, 0.1, size=(rows, d_c)) if rng is not None else np.zeros((rows, d_c))
        if mode in ("category", "predcat"):
            repr_dim = d_c + SPATIAL_DIM
        elif mode == "imagination":
            if imagination is None:
                raise ConfigError("Imagination mode needs an attached imagination model")
            repr_dim = imagination.d_z + SPATIAL_DIM
        else:
            repr_dim = SPATIAL_DIM
        object_mlp = DenseNet.build([repr_dim, hidden, d_h], ["relu", "identity"], rng)
        return cls(mode, bank, turn_encoder, np.ones(max_turns), object_mlp, table, imagination, classifier)

    @property
    def kind(self) -> str:
        return f"guesser:{self.mode}"

    @property
    def max_turns(self) -> int:
        return self.position_weights.shape[0]

    @property
    def d_h(self) -> int:
        return self.turn_encoder.output_dim

    @property
    def repr_dim(self) -> int:
        if self.mode in ("category", "predcat"):
            return self.category_table.shape[1] + SPATIAL_DIM
        if self.mode == "imagination":
            return self.imagination.d_z + SPATIAL_DIM
        return SPATIAL_DIM

    def category_row(self, category_id: int) -> int:
        """Table row of a category; unseen categories map to the UNK row (last)"""
        return self._row.get(int(category_id), len(self.known_categories))

    def named_parameters(self) -> Dict[str, np.ndarray]:
        params = {
            **self.turn_encoder.named_parameters("turn_encoder."),
            "position_weights": self.position_weights,
            **self.object_mlp.named_parameters("object_mlp."),
        }
        if self.category_table is not None:
            params["category_table"] = self.category_table
        if self.imagination is not None:
            params.update({f"imagination.{k}": v for k, v in self.imagination.named_parameters().items()})
        return params

    def load_parameters(self, params: Dict[str, np.ndarray]) -> None:
        self.turn_encoder.load_parameters(params, "turn_encoder.")
        self.position_weights = np.asarray(params["position_weights"], dtype=np.float64)
        self.object_mlp.load_parameters(params, "object_mlp.")
        if self.category_table is not None:
            self.category_table = np.asarray(params["category_table"], dtype=np.float64)
        if self.imagination is not None:
            self.imagination.load_parameters(
                {k[len("imagination."):]: v for k, v in params.items() if k.startswith("imagination.")}
            )

    def snapshot(self) -> Dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.named_parameters().items()}

    def to_checkpoint(self) -> Checkpoint:
        meta: Dict = {
            "mode": self.mode,
            "turn_encoder": describe_net(self.turn_encoder),
            "object_mlp": describe_net(self.object_mlp),
        }
        arrays = self.snapshot()
        if self.imagination is not None:
            meta["imagination"] = self.imagination.to_checkpoint().meta
        if self.classifier is not None:
            inner = self.classifier.to_checkpoint()
            meta["classifier"] = inner.meta
            arrays.update({f"classifier.{k}": v for k, v in inner.arrays.items()})
        return Checkpoint(kind=self.kind, meta=meta, arrays=arrays)

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint, bank: QuestionBank) -> "GuesserModel":
        if not checkpoint.kind.startswith("guesser:"):
            raise ConfigError(f"Expected a guesser checkpoint, got kind '{checkpoint.kind}'")
        meta, arrays = checkpoint.meta, checkpoint.arrays

        def nested(prefix: str) -> Dict[str, np.ndarray]:
            return {k[len(prefix):]: v for k, v in arrays.items() if k.startswith(prefix)}

        imagination = None
        if "imagination" in meta:
            imagination = ImaginationModel.from_checkpoint(Checkpoint("imagination", meta["imagination"], nested("imagination.")))
        classifier = None
        if "classifier" in meta:
            classifier = CategoryClassifier.from_checkpoint(Checkpoint("classifier", meta["classifier"], nested("classifier.")))
        return cls(
            meta["mode"],
            bank,
            restore_net(meta["turn_encoder"], arrays, "turn_encoder."),
            arrays["position_weights"],
            restore_net(meta["object_mlp"], arrays, "object_mlp."),
            arrays.get("category_table"),
            imagination,
            classifier,
        )

    def save(self, path: Union[str, Path]) -> Path:
        return save_checkpoint(path, self.to_checkpoint())

    @classmethod
    def load(cls, path: Union[str, Path], bank: QuestionBank) -> "GuesserModel":
        return cls.from_checkpoint(load_checkpoint(path), bank)


def turn_matrix(bank: QuestionBank, dialogue: Dialogue) -> np.ndarray:
    """(T, d_Q + 3): question encoding followed by one-hot answer, per turn"""
    rows = []
    for turn in dialogue.turns:
        answer = np.zeros(len(ANSWER_ORDER))
        answer[ANSWER_ORDER.index(turn.answer)] = 1.0
        rows.append(np.concatenate([encode_question(bank, turn.question), answer]))
    return np.stack(rows)


def check_dialogue(model: GuesserModel, dialogue: Dialogue) -> None:
    if not dialogue.turns:
        raise DialogueValidationError(f"Dialogue for {dialogue.scene_id} has no turns")
    if len(dialogue.turns) > model.max_turns:
        raise DialogueValidationError(
            f"Dialogue for {dialogue.scene_id} has {len(dialogue.turns)} turns, limit is {model.max_turns}"
        )


def encode_dialogue(model: GuesserModel, dialogue: Dialogue) -> np.ndarray:
    """h = mean over turns of position_weight[t] * turn_encoder(turn_t)"""
    check_dialogue(model, dialogue)
    encoded = forward(model.turn_encoder, turn_matrix(model.bank, dialogue))
    weights = model.position_weights[: encoded.shape[0], None]
    return np.mean(weights * encoded, axis=0)


def object_representations(model: GuesserModel, objects: Sequence[GameObject]) -> Tuple[np.ndarray, Dict]:
    """
    Representation matrix for a list of objects

    Returns:
        (matrix, parts) with the category rows or encoder inputs needed by backward
    """
    spatial = np.stack([obj.s for obj in objects])
    parts: Dict = {}
    if model.mode == "nocat":
        return spatial, parts
    if model.mode == "imagination":
        v = np.stack([obj.v for obj in objects])
        parts["imagination_input"] = v
        return np.concatenate([encode(model.imagination, v), spatial], axis=1), parts
    if model.mode == "category":
        ids = [obj.category for obj in objects]
    else:
        ids = list(model.classifier.predict(np.stack([obj.v for obj in objects])))
    rows = np.array([model.category_row(c) for c in ids], dtype=np.int64)
    parts["category_rows"] = rows
    return np.concatenate([model.category_table[rows], spatial], axis=1), parts


def object_representation(model: GuesserModel, obj: GameObject) -> np.ndarray:
    return object_representations(model, [obj])[0][0]


def score_candidates(model: GuesserModel, h: np.ndarray, scene: Scene) -> np.ndarray:
    """Softmax over <h, object_mlp(r(o_i))> for the scene's candidates"""
    reps, _ = object_representations(model, scene.objects)
    return softmax(forward(model.object_mlp, reps) @ h)


def predict_target(model: GuesserModel, dialogue: Dialogue, scene: Scene) -> int:
    """Object id with the highest score; ties go to the lowest id"""
    probs = score_candidates(model, encode_dialogue(model, dialogue), scene)
    best = np.flatnonzero(probs == probs.max())
    return min(scene.objects[i].id for i in best)


class RandomGuesser:
    """Uniform baseline"""

    mode = "random"
    kind = "guesser:random"

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def score(self, scene: Scene) -> np.ndarray:
        return np.full(len(scene.objects), 1.0 / len(scene.objects))

    def predict(self, scene: Scene) -> int:
        return scene.objects[int(self.rng.integers(len(scene.objects)))].id
