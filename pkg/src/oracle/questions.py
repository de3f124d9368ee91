"""
Templated questions: argument spaces, surface rendering, one-hot encoding,
ground-truth answers and the per-object training sampler
"""

import csv
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.config import QTYPES
from src.errors import ConfigError, EncodingError
from src.models.schemas import (
    ATTRIBUTE_VALUES,
    Answer,
    CategoryVocabulary,
    GameObject,
    Question,
    QuestionType,
    Scene,
)
from src.world.scenes import LOCATIONS, in_location

logger = logging.getLogger(__name__)

TEMPLATES_PATH = Path(__file__).resolve().parents[2] / "resources" / "question_templates_v1.tsv"


def load_templates(path: Union[str, Path] = TEMPLATES_PATH) -> Dict[str, List[Tuple[str, str]]]:
    """qtype -> [(template id, pattern)] ordered by variant"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Question template table not found: {path}")
    rows: Dict[str, List[Tuple[int, str, str]]] = {}
    with open(path, "r", encoding="utf-8") as f:
        for row in csv.DictReader(f, delimiter="\t"):
            rows.setdefault(row["qtype"], []).append((int(row["variant"]), row["template_id"], row["pattern"]))
    missing = [q for q in QTYPES if q not in rows]
    if missing:
        raise ConfigError(f"{path}: no templates for {', '.join(missing)}")
    return {qtype: [(tid, pattern) for _, tid, pattern in sorted(entries)] for qtype, entries in rows.items()}


def _article(name: str) -> str:
    return "an" if name[:1].lower() in "aeiou" else "a"


class QuestionBank:
    """
    Argument spaces per question type for one vocabulary

    Arguments are indices: supercategory and category ids, attribute value
    positions, or positions in LOCATIONS.
    """

    def __init__(
        self,
        vocab: CategoryVocabulary,
        disabled_qtypes: Sequence[str] = (),
        middle_radius: float = 0.3,
        templates: Optional[Dict[str, List[Tuple[str, str]]]] = None,
    ):
        self.vocab = vocab
        self.disabled = set(disabled_qtypes)
        self.middle_radius = middle_radius
        self.templates = templates if templates is not None else load_templates()
        self.spaces: Dict[str, List[str]] = {
            "supercategory": [s.name for s in sorted(vocab.supercategories, key=lambda s: s.id)],
            "object": [c.name for c in sorted(vocab.categories, key=lambda c: c.id)],
            "color": list(ATTRIBUTE_VALUES["color"]),
            "size": list(ATTRIBUTE_VALUES["size"]),
            "texture": list(ATTRIBUTE_VALUES["texture"]),
            "shape": list(ATTRIBUTE_VALUES["shape"]),
            "location": list(LOCATIONS),
        }

    @property
    def d_q(self) -> int:
        return len(QTYPES) + max(len(space) for space in self.spaces.values())

    @property
    def enabled_qtypes(self) -> List[str]:
        return [q for q in QTYPES if q not in self.disabled]

    def argument_name(self, qtype: str, argument: int) -> str:
        space = self.spaces[qtype]
        if not 0 <= argument < len(space):
            raise EncodingError(f"Argument {argument} outside the {qtype} space of size {len(space)}")
        return space[argument]

    def make(self, qtype: Union[str, QuestionType], argument: int, variant: int = 0) -> Question:
        """Render (qtype, argument) with the given phrasing variant"""
        qtype = QuestionType(qtype).value
        name = self.argument_name(qtype, argument)
        template_id, pattern = self.templates[qtype][variant % len(self.templates[qtype])]
        animacy = None
        if qtype == "object":
            animacy = "animate" if self.vocab.category(argument).animate else "inanimate"
        return Question(
            qtype=QuestionType(qtype),
            argument=argument,
            text=pattern.format(name=name, article=_article(name)),
            template=template_id,
            animacy=animacy,
        )

    def candidates(self, qtypes: Optional[Sequence[str]] = None) -> List[Tuple[str, int]]:
        """Every (qtype, argument) pair of the given (default: enabled) types"""
        qtypes = self.enabled_qtypes if qtypes is None else qtypes
        return [(qtype, arg) for qtype in qtypes for arg in range(len(self.spaces[qtype]))]

    def encode(self, question: Question) -> np.ndarray:
        return encode_question(self, question)


def encode_question(bank: QuestionBank, question: Question) -> np.ndarray:
    """one-hot(qtype) followed by one-hot(argument), zero-padded to d_Q; surface text is ignored"""
    qtype = question.qtype.value
    size = len(bank.spaces[qtype])
    if not 0 <= question.argument < size:
        raise EncodingError(f"Argument {question.argument} outside the {qtype} space of size {size}")
    vector = np.zeros(bank.d_q)
    vector[QTYPES.index(qtype)] = 1.0
    vector[len(QTYPES) + question.argument] = 1.0
    return vector


def holds(bank: QuestionBank, obj: GameObject, qtype: str, argument: int) -> bool:
    """Whether (qtype, argument) is true of an object"""
    if qtype == "supercategory":
        return obj.supercategory == argument
    if qtype == "object":
        return obj.category == argument
    if qtype in ATTRIBUTE_VALUES:
        return getattr(obj.attributes, qtype) == bank.spaces[qtype][argument]
    return in_location(obj.s, LOCATIONS[argument], bank.middle_radius)


def ground_truth_answer(bank: QuestionBank, scene: Scene, index: int, question: Question) -> Answer:
    """World truth for object `index`; NA only for disabled question types"""
    qtype = question.qtype.value
    if qtype in bank.disabled:
        return Answer.NA
    bank.argument_name(qtype, question.argument)
    return Answer.YES if holds(bank, scene.objects[index], qtype, question.argument) else Answer.NO


def type_row(question: Question) -> str:
    """Row of the per-type accuracy table; object questions split by animacy"""
    if question.qtype == QuestionType.OBJECT:
        return f"object:{question.animacy or 'inanimate'}"
    return question.qtype.value


class QuestionSampler:
    """
    Labeled (question, object, answer) triples for oracle training

    Each object gets `per_object` questions. The type is uniform over all seven
    types (disabled types are labeled NA); with probability 1/2 the argument is
    one that holds for the object, otherwise uniform over the argument space.
    """

    def __init__(self, bank: QuestionBank, per_object: int = 2):
        self.bank = bank
        self.per_object = per_object

    def true_arguments(self, obj: GameObject, qtype: str) -> List[int]:
        return [arg for arg in range(len(self.bank.spaces[qtype])) if holds(self.bank, obj, qtype, arg)]

    def sample(self, scene: Scene, rng: np.random.Generator) -> List[Tuple[int, Question, Answer]]:
        triples = []
        for index, obj in enumerate(scene.objects):
            for _ in range(self.per_object):
                qtype = QTYPES[int(rng.integers(len(QTYPES)))]
                positives = self.true_arguments(obj, qtype)
                if positives and rng.random() < 0.5:
                    argument = positives[int(rng.integers(len(positives)))]
                else:
                    argument = int(rng.integers(len(self.bank.spaces[qtype])))
                question = self.bank.make(qtype, argument, variant=int(rng.integers(2)))
                triples.append((index, question, ground_truth_answer(self.bank, scene, index, question)))
        return triples
