"""
Oracle: answer prediction from question and object features

Feature order (fixed): question, spatial, crop, image, category, imagination
  crop        = the object's perceptual vector v
  image       = mean v over the scene
  category    = learned per-category embedding (last row is UNK)
  imagination = z from an attached imagination encoder
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.errors import ConfigError
from src.imagination.model import ImaginationModel, encode
from src.models.schemas import ANSWER_ORDER, Answer, Question, Scene
from src.numerics.checkpoint import Checkpoint, describe_net, load_checkpoint, restore_net, save_checkpoint
from src.numerics.network import DenseNet, forward
from src.oracle.questions import QuestionBank, encode_question

logger = logging.getLogger(__name__)

FEATURES = ("question", "spatial", "crop", "image", "category", "imagination")
SPATIAL_DIM = 8

# Named baselines
BASELINES = (
    "majority",
    "question",
    "question+spatial",
    "question+spatial+crop",
    "question+spatial+image",
    "question+spatial+crop+image",
    "question+spatial+category",
    "question+spatial+imagination",
)


def parse_feature_set(name: str) -> Tuple[str, ...]:
    """'question+spatial+category' -> features in canonical order; 'majority' -> ()"""
    if name == "majority":
        return ()
    parts = [p.strip() for p in name.split("+") if p.strip()]
    unknown = [p for p in parts if p not in FEATURES]
    if unknown or not parts:
        raise ConfigError(f"Unknown oracle feature set '{name}'")
    return tuple(f for f in FEATURES if f in parts)


def feature_set_name(features: Sequence[str]) -> str:
    return "+".join(features) if features else "majority"


def _feature_dims(
    features: Sequence[str],
    bank: QuestionBank,
    category_table: Optional[np.ndarray],
    imagination: Optional[ImaginationModel],
) -> Dict[str, int]:
    d_o = bank.vocab.d_o
    dims = {
        "question": bank.d_q,
        "spatial": SPATIAL_DIM,
        "crop": d_o,
        "image": d_o,
        "category": 0 if category_table is None else category_table.shape[1],
        "imagination": 0 if imagination is None else imagination.d_z,
    }
    return {f: dims[f] for f in features}


class OracleModel:
    """3-way answer classifier over a concatenation of selected features"""

    def __init__(
        self,
        features: Sequence[str],
        bank: QuestionBank,
        classifier: Optional[DenseNet] = None,
        category_table: Optional[np.ndarray] = None,
        imagination: Optional[ImaginationModel] = None,
        majority: Optional[np.ndarray] = None,
    ):
        self.features = tuple(f for f in FEATURES if f in features)
        self.bank = bank
        self.classifier = classifier
        self.category_table = category_table
        self.imagination = imagination
        self.majority = np.full(3, 1.0 / 3.0) if majority is None else np.asarray(majority, dtype=np.float64)
        if self.features:
            if classifier is None:
                raise ConfigError("A non-majority oracle needs a classifier")
            if classifier.input_dim != self.input_dim:
                raise ConfigError(f"Classifier input {classifier.input_dim} != feature width {self.input_dim}")
        if ("category" in self.features) != (category_table is not None):
            raise ConfigError("category_table must be present iff the category feature is selected")

    @classmethod
    def build(
        cls,
        feature_set: str,
        bank: QuestionBank,
        d_c: int,
        hidden: int,
        rng: Optional[np.random.Generator],
        imagination: Optional[ImaginationModel] = None,
    ) -> "OracleModel":
        features = parse_feature_set(feature_set)
        if "imagination" in features and imagination is None:
            raise ConfigError("The imagination feature needs an attached imagination model")
        table = None
        if "category" in features:
            rows = len(bank.vocab.in_domain) + 1
            table = rng.normal(0.0, 0.1, size=(rows, d_c)) if rng is not None else np.zeros((rows, d_c))
        imagination = imagination if "imagination" in features else None
        classifier = None
        if features:
            input_dim = sum(_feature_dims(features, bank, table, imagination).values())
            classifier = DenseNet.build([input_dim, hidden, len(ANSWER_ORDER)], ["relu", "softmax"], rng)
        return cls(features, bank, classifier, table, imagination)

    @property
    def kind(self) -> str:
        return f"oracle:{feature_set_name(self.features)}"

    def feature_dims(self) -> Dict[str, int]:
        return _feature_dims(self.features, self.bank, self.category_table, self.imagination)

    @property
    def input_dim(self) -> int:
        return sum(self.feature_dims().values())

    def category_rows(self, category_ids: Sequence[int]) -> np.ndarray:
        """Table rows; categories outside the in-domain set share the UNK row (last)"""
        known = {c: k for k, c in enumerate(sorted(self.bank.vocab.in_domain))}
        unk = len(known)
        return np.array([known.get(int(c), unk) for c in category_ids], dtype=np.int64)

    def named_parameters(self) -> Dict[str, np.ndarray]:
        params: Dict[str, np.ndarray] = {}
        if self.classifier is not None:
            params.update(self.classifier.named_parameters("classifier."))
        if self.category_table is not None:
            params["category_table"] = self.category_table
        if self.imagination is not None:
            params.update({f"imagination.{k}": v for k, v in self.imagination.named_parameters().items()})
        return params

    def load_parameters(self, params: Dict[str, np.ndarray]) -> None:
        if self.classifier is not None:
            self.classifier.load_parameters(params, "classifier.")
        if self.category_table is not None:
            self.category_table = np.asarray(params["category_table"], dtype=np.float64)
        if self.imagination is not None:
            self.imagination.load_parameters(
                {k[len("imagination."):]: v for k, v in params.items() if k.startswith("imagination.")}
            )

    def snapshot(self) -> Dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.named_parameters().items()}

    def to_checkpoint(self) -> Checkpoint:
        meta: Dict = {"features": list(self.features), "majority": [float(p) for p in self.majority]}
        arrays = {}
        if self.classifier is not None:
            meta["classifier"] = describe_net(self.classifier)
            arrays.update(self.classifier.named_parameters("classifier."))
        if self.category_table is not None:
            arrays["category_table"] = self.category_table
        if self.imagination is not None:
            inner = self.imagination.to_checkpoint()
            meta["imagination"] = inner.meta
            arrays.update({f"imagination.{k}": v for k, v in inner.arrays.items()})
        return Checkpoint(kind=self.kind, meta=meta, arrays=arrays)

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint, bank: QuestionBank) -> "OracleModel":
        if not checkpoint.kind.startswith("oracle:"):
            raise ConfigError(f"Expected an oracle checkpoint, got kind '{checkpoint.kind}'")
        meta = checkpoint.meta
        classifier = restore_net(meta["classifier"], checkpoint.arrays, "classifier.") if "classifier" in meta else None
        imagination = None
        if "imagination" in meta:
            inner = {k[len("imagination."):]: v for k, v in checkpoint.arrays.items() if k.startswith("imagination.")}
            imagination = ImaginationModel.from_checkpoint(Checkpoint("imagination", meta["imagination"], inner))
        return cls(
            meta["features"],
            bank,
            classifier,
            checkpoint.arrays.get("category_table"),
            imagination,
            np.asarray(meta["majority"]),
        )

    def save(self, path: Union[str, Path]) -> Path:
        return save_checkpoint(path, self.to_checkpoint())

    @classmethod
    def load(cls, path: Union[str, Path], bank: QuestionBank) -> "OracleModel":
        return cls.from_checkpoint(load_checkpoint(path), bank)


def oracle_features(model: OracleModel, items: Sequence[Tuple[Question, Scene, int]]) -> Tuple[np.ndarray, Dict]:
    """
    Feature matrix for (question, scene, object index) items

    Returns:
        (matrix, parts) where parts holds the pieces needed for the backward pass
    """
    blocks: List[np.ndarray] = []
    parts: Dict = {}
    for feature in model.features:
        if feature == "question":
            block = np.stack([encode_question(model.bank, q) for q, _, _ in items])
        elif feature == "spatial":
            block = np.stack([scene.objects[i].s for _, scene, i in items])
        elif feature == "crop":
            block = np.stack([scene.objects[i].v for _, scene, i in items])
        elif feature == "image":
            block = np.stack([np.mean([o.v for o in scene.objects], axis=0) for _, scene, _ in items])
        elif feature == "category":
            rows = model.category_rows([scene.objects[i].category for _, scene, i in items])
            parts["category_rows"] = rows
            block = model.category_table[rows]
        else:
            if model.imagination is None:
                raise ConfigError("The imagination feature needs an attached imagination model")
            v = np.stack([scene.objects[i].v for _, scene, i in items])
            parts["imagination_input"] = v
            block = encode(model.imagination, v)
        blocks.append(block)
    return np.concatenate(blocks, axis=1), parts


def oracle_forward_batch(model: OracleModel, items: Sequence[Tuple[Question, Scene, int]]) -> np.ndarray:
    if not model.features:
        return np.tile(model.majority, (len(items), 1))
    x, _ = oracle_features(model, items)
    return forward(model.classifier, x)


def oracle_forward(model: OracleModel, question: Question, scene: Scene, target: int) -> np.ndarray:
    """Answer distribution over (Yes, No, NA)"""
    return oracle_forward_batch(model, [(question, scene, target)])[0]


def answer_from_probs(probs: np.ndarray) -> Answer:
    """argmax; exact ties resolve Yes < No < NA"""
    return ANSWER_ORDER[int(np.argmax(probs))]


def answer(model: OracleModel, question: Question, scene: Scene, target: int) -> Answer:
    return answer_from_probs(oracle_forward(model, question, scene, target))
