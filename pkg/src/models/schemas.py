"""
Pydantic Schemas for scenes, questions, dialogues, archives and reports
These are both the in-memory domain types and the on-disk JSON/JSONL formats.
"""

from enum import Enum
from typing import Annotated, Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PlainSerializer, PlainValidator, model_validator

COLORS = ("red", "blue", "green", "yellow", "white", "black")
SIZES = ("small", "medium", "large")
TEXTURES = ("smooth", "striped", "dotted", "furry")
SHAPES = ("round", "square", "long", "flat")
ATTRIBUTE_VALUES: Dict[str, Tuple[str, ...]] = {
    "color": COLORS,
    "size": SIZES,
    "texture": TEXTURES,
    "shape": SHAPES,
}


def _to_float_array(value) -> np.ndarray:
    array = np.asarray(value, dtype=np.float64)
    if array.ndim != 1:
        raise ValueError(f"expected a 1-D float array, got shape {array.shape}")
    return array


FloatArray = Annotated[
    np.ndarray,
    PlainValidator(_to_float_array),
    PlainSerializer(lambda a: [float(x) for x in a], return_type=list),
]


class _Schema(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)


class QuestionType(str, Enum):
    SUPERCATEGORY = "supercategory"
    OBJECT = "object"
    COLOR = "color"
    SIZE = "size"
    TEXTURE = "texture"
    SHAPE = "shape"
    LOCATION = "location"


class Answer(str, Enum):
    """Oracle answers; declaration order is the tie-break order"""

    YES = "Yes"
    NO = "No"
    NA = "NA"


ANSWER_ORDER: Tuple[Answer, ...] = (Answer.YES, Answer.NO, Answer.NA)


# ============================================================================
# World
# ============================================================================

class Supercategory(_Schema):
    id: int
    name: str
    animate: bool = False


class Category(_Schema):
    id: int
    name: str
    supercategory: int
    prototype: FloatArray
    animate: bool = False


class CategoryVocabulary(_Schema):
    """Categories, their prototypes and the in-domain / ND / OD partition"""

    d_o: int
    supercategories: List[Supercategory]
    categories: List[Category]
    in_domain: List[int]
    near_domain_heldout: List[int]
    out_domain_heldout: List[int]
    attribute_offsets: Dict[str, Dict[str, FloatArray]] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_partition(self) -> "CategoryVocabulary":
        ids = {c.id for c in self.categories}
        parts = [set(self.in_domain), set(self.near_domain_heldout), set(self.out_domain_heldout)]
        if sum(len(p) for p in parts) != len(set().union(*parts)) or set().union(*parts) != ids:
            raise ValueError("in_domain / near_domain_heldout / out_domain_heldout must partition the categories")
        in_supers = {self.category(c).supercategory for c in self.in_domain}
        for cid in self.near_domain_heldout:
            if self.category(cid).supercategory not in in_supers:
                raise ValueError(f"near-domain category {cid} has no in-domain sibling")
        for cid in self.out_domain_heldout:
            if self.category(cid).supercategory in in_supers:
                raise ValueError(f"out-of-domain category {cid} shares a supercategory with in-domain data")
        return self

    def category(self, category_id: int) -> Category:
        for category in self.categories:
            if category.id == category_id:
                return category
        raise KeyError(f"Unknown category id {category_id}")

    def supercategory(self, supercategory_id: int) -> Supercategory:
        for supercategory in self.supercategories:
            if supercategory.id == supercategory_id:
                return supercategory
        raise KeyError(f"Unknown supercategory id {supercategory_id}")


class ObjectAttributes(_Schema):
    color: str
    size: str
    texture: str
    shape: str

    @model_validator(mode="after")
    def _check_values(self) -> "ObjectAttributes":
        for name, allowed in ATTRIBUTE_VALUES.items():
            if getattr(self, name) not in allowed:
                raise ValueError(f"{name}={getattr(self, name)!r} is not one of {allowed}")
        return self


class GameObject(_Schema):
    """One candidate object: category, attributes, box, perceptual v and spatial s"""

    id: int
    category: int
    supercategory: int
    attributes: ObjectAttributes
    bbox: Tuple[float, float, float, float]  # x_min, y_min, width, height (pixels)
    v: FloatArray
    s: FloatArray

    @model_validator(mode="after")
    def _check_vectors(self) -> "GameObject":
        if self.s.shape != (8,):
            raise ValueError(f"spatial vector must have 8 entries, got {self.s.shape}")
        if not np.all(np.isfinite(self.v)):
            raise ValueError("perceptual vector must be finite")
        return self


class Scene(_Schema):
    scene_id: str
    width: int
    height: int
    target: int
    objects: List[GameObject]

    @model_validator(mode="after")
    def _check_scene(self) -> "Scene":
        if len(self.objects) < 2:
            raise ValueError(f"scene {self.scene_id} needs at least 2 objects")
        if not 0 <= self.target < len(self.objects):
            raise ValueError(f"scene {self.scene_id}: target index {self.target} out of range")
        for obj in self.objects:
            x, y, w, h = obj.bbox
            if x < 0 or y < 0 or x + w > self.width or y + h > self.height:
                raise ValueError(f"scene {self.scene_id}: object {obj.id} bbox outside the image")
        return self

    @property
    def target_object(self) -> GameObject:
        return self.objects[self.target]

    def category_count(self) -> int:
        return len({obj.category for obj in self.objects})


# ============================================================================
# Questions and dialogues
# ============================================================================

class Question(_Schema):
    """Templated question; text is a rendering of (qtype, argument, template)"""

    qtype: QuestionType
    argument: int
    text: str
    template: str = "T0"
    animacy: Optional[str] = None  # animate|inanimate, object questions only

    @property
    def key(self) -> Tuple[str, int]:
        return (self.qtype.value, self.argument)


class Turn(_Schema):
    question: Question
    answer: Answer


class Dialogue(_Schema):
    scene_id: str
    turns: List[Turn] = Field(default_factory=list)
    target: Optional[int] = None  # object index; defaults to the scene's designated target


class GameResult(_Schema):
    scene_id: str
    seed: int
    dialogue: Dialogue
    predicted: int
    target: int
    success: bool
    beliefs: List[List[float]] = Field(default_factory=list)
    gold_answers: List[Answer] = Field(default_factory=list)
    num_candidates: int
    stopped_early: bool = False

    @model_validator(mode="after")
    def _check_success(self) -> "GameResult":
        if self.success != (self.predicted == self.target):
            raise ValueError("success must equal (predicted == target)")
        return self


class ArchiveTurn(_Schema):
    qtype: QuestionType
    argument: int
    text: str
    answer: Answer
    gold_answer: Optional[Answer] = None
    animacy: Optional[str] = None


class DialogueRecord(_Schema):
    """One line of a dialogue archive JSONL file"""

    scene_id: str
    turns: List[ArchiveTurn]
    predicted: int
    target: int
    success: bool
    seed: int = 0
    num_candidates: int = 0
    stopped_early: bool = False

    @classmethod
    def from_result(cls, result: GameResult) -> "DialogueRecord":
        golds = list(result.gold_answers) + [None] * (len(result.dialogue.turns) - len(result.gold_answers))
        return cls(
            scene_id=result.scene_id,
            seed=result.seed,
            turns=[
                ArchiveTurn(
                    qtype=turn.question.qtype,
                    argument=turn.question.argument,
                    text=turn.question.text,
                    answer=turn.answer,
                    gold_answer=gold,
                    animacy=turn.question.animacy,
                )
                for turn, gold in zip(result.dialogue.turns, golds)
            ],
            predicted=result.predicted,
            target=result.target,
            success=result.success,
            num_candidates=result.num_candidates,
            stopped_early=result.stopped_early,
        )


# ============================================================================
# Reports
# ============================================================================

class TypeAccuracy(_Schema):
    accuracy: float = Field(..., ge=0, le=1)
    count: int = Field(..., ge=0)


class DialogueStats(_Schema):
    lexical_diversity: float = Field(..., ge=0, le=1)
    question_diversity: float = Field(..., ge=0, le=1)
    distinct_questions_per_game: float = Field(..., ge=0)
    repeated_question_rate: float = Field(..., ge=0, le=1)
    supercategory_to_object_attribute_rate: float = Field(..., ge=0, le=1)
    object_to_attribute_rate: float = Field(..., ge=0, le=1)
    location_turn_rate: float = Field(..., ge=0, le=1)
    vocabulary_size: int = Field(..., ge=0)


class AttributeScores(_Schema):
    a_f1: float = Field(..., ge=0, le=1)
    s_f1: float = Field(..., ge=0, le=1)
    as_f1: float = Field(..., ge=0, le=1)
    l_f1: float = Field(..., ge=0, le=1)


class MetricsReport(_Schema):
    """Consolidated evaluation output; every rate lies in [0, 1]"""

    suite: str
    seed: int = 0
    gameplay_accuracy: Dict[str, float] = Field(default_factory=dict)
    oracle_accuracy: Dict[str, float] = Field(default_factory=dict)
    oracle_per_type: Dict[str, Dict[str, TypeAccuracy]] = Field(default_factory=dict)
    answer_per_type: Dict[str, Dict[str, TypeAccuracy]] = Field(default_factory=dict)
    guesser_accuracy: Dict[str, float] = Field(default_factory=dict)
    attribute_f1: Dict[str, AttributeScores] = Field(default_factory=dict)
    grolla: Dict[str, float] = Field(default_factory=dict)
    dialogue_stats: Dict[str, DialogueStats] = Field(default_factory=dict)
    extra: Dict[str, float] = Field(default_factory=dict)
    schedule: List[Dict[str, Any]] = Field(default_factory=list)

    def flatten(self) -> Dict[str, float]:
        """Dotted metric name -> numeric value (one CSV row each)"""
        flat: Dict[str, float] = {}

        def walk(prefix: str, value) -> None:
            if isinstance(value, BaseModel):
                value = value.model_dump()
            if isinstance(value, dict):
                for key in value:
                    walk(f"{prefix}.{key}" if prefix else str(key), value[key])
            elif isinstance(value, bool):
                flat[prefix] = float(value)
            elif isinstance(value, (int, float)):
                flat[prefix] = float(value)

        for name in ("gameplay_accuracy", "oracle_accuracy", "oracle_per_type", "answer_per_type",
                     "guesser_accuracy", "attribute_f1", "grolla", "dialogue_stats", "extra"):
            walk(name, getattr(self, name))
        return flat
