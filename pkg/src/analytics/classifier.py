"""
Rule-based question classifier
Exact keyword rules first (attribute > category > supercategory); misspelled
words fall back to fuzzy matching against the same lexicon.
"""

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from rapidfuzz import fuzz, process

from src.errors import ConfigError
from src.models.schemas import ArchiveTurn, CategoryVocabulary, Question, QuestionType

logger = logging.getLogger(__name__)

LEXICON_PATH = Path(__file__).resolve().parents[2] / "resources" / "lexicon_v1.json"
ATTRIBUTE_ORDER = ("color", "size", "texture", "shape", "location")
FUZZY_CUTOFF = 80
MIN_FUZZY_LENGTH = 4


@dataclass(frozen=True)
class QuestionClass:
    qtype: str
    subtag: Optional[str] = None  # animate | inanimate | unknown, object questions only

    @property
    def row(self) -> str:
        return f"object:{self.subtag}" if self.qtype == "object" else self.qtype


class QuestionLexicon:
    """Keyword sets per question type plus category/supercategory words with animacy"""

    def __init__(
        self,
        attributes: Dict[str, List[str]],
        supercategories: Dict[str, bool],
        categories: Dict[str, bool],
        stopwords: List[str],
    ):
        self.attributes = {name: set(words) for name, words in attributes.items()}
        self.supercategories = dict(supercategories)
        self.categories = dict(categories)
        self.stopwords = set(stopwords)
        self._choices: Dict[str, Tuple[str, ...]] = {}
        for name in ATTRIBUTE_ORDER:
            for word in self.attributes.get(name, ()):
                self._choices[word] = ("attribute", name)
        for word in self.categories:
            self._choices.setdefault(word, ("category", word))
        for word in self.supercategories:
            self._choices.setdefault(word, ("supercategory", word))

    @classmethod
    def from_file(cls, path: Union[str, Path] = LEXICON_PATH) -> "QuestionLexicon":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"Lexicon not found: {path}")
        data = json.loads(path.read_text(encoding="utf-8"))
        return cls(data["attributes"], data["supercategories"], data["categories"], data.get("stopwords", []))

    def with_vocabulary(self, vocab: CategoryVocabulary) -> "QuestionLexicon":
        """Lexicon extended with the names of a generated world"""
        supercategories = dict(self.supercategories)
        categories = dict(self.categories)
        for s in vocab.supercategories:
            supercategories[s.name] = s.animate
        for c in vocab.categories:
            categories[c.name] = c.animate
        return QuestionLexicon(
            {k: sorted(v) for k, v in self.attributes.items()}, supercategories, categories, sorted(self.stopwords)
        )

    def _exact(self, tokens: List[str]) -> Optional[QuestionClass]:
        for name in ATTRIBUTE_ORDER:
            if any(t in self.attributes.get(name, ()) for t in tokens):
                return QuestionClass(name)
        for t in tokens:
            if t in self.categories:
                return QuestionClass("object", "animate" if self.categories[t] else "inanimate")
        for t in tokens:
            if t in self.supercategories:
                return QuestionClass("supercategory")
        return None

    def _fuzzy(self, tokens: List[str]) -> Optional[QuestionClass]:
        corrected = []
        for t in tokens:
            if len(t) < MIN_FUZZY_LENGTH or t in self.stopwords:
                continue
            match = process.extractOne(t, list(self._choices), scorer=fuzz.ratio, score_cutoff=FUZZY_CUTOFF)
            if match is not None:
                logger.debug(f"Fuzzy keyword '{t}' -> '{match[0]}' ({match[1]:.0f})")
                corrected.append(match[0])
        return self._exact(corrected) if corrected else None

    def classify_text(self, text: str) -> QuestionClass:
        tokens = tokenize(text)
        result = self._exact(tokens) or self._fuzzy(tokens)
        if result is None:
            logger.info(f"No rule fired for question '{text}'")
            return QuestionClass("object", "unknown")
        return result


_default_lexicon: Optional[QuestionLexicon] = None


def default_lexicon() -> QuestionLexicon:
    global _default_lexicon
    if _default_lexicon is None:
        _default_lexicon = QuestionLexicon.from_file()
    return _default_lexicon


def tokenize(text: str) -> List[str]:
    return re.findall(r"[a-z]+", text.lower())


def classify_question(
    item: Union[str, Question, ArchiveTurn], lexicon: Optional[QuestionLexicon] = None
) -> QuestionClass:
    """Structured questions keep their stored type; raw text goes through the keyword rules"""
    if isinstance(item, (Question, ArchiveTurn)):
        subtag = None
        if item.qtype == QuestionType.OBJECT:
            subtag = item.animacy or "unknown"
        return QuestionClass(item.qtype.value, subtag)
    return (lexicon or default_lexicon()).classify_text(item)
