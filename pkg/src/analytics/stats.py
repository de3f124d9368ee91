"""
Dialogue-quality statistics and per-type answer accuracy over archives
"""

import logging
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.analytics.classifier import QuestionLexicon, classify_question, tokenize
from src.errors import DialogueValidationError
from src.models.schemas import Answer, DialogueRecord, DialogueStats, TypeAccuracy

logger = logging.getLogger(__name__)

ATTRIBUTE_TYPES = {"color", "size", "texture", "shape", "location"}

# Fixed row order of the per-type table
TYPE_ROWS = (
    "supercategory",
    "object:animate",
    "object:inanimate",
    "object:unknown",
    "color",
    "size",
    "texture",
    "shape",
    "location",
)


def per_type_table(pairs: Iterable[Tuple[str, bool]]) -> Dict[str, TypeAccuracy]:
    """(row, correct) pairs -> row -> (accuracy, count), rows in the fixed order"""
    hits: Dict[str, List[bool]] = {}
    for row, correct in pairs:
        hits.setdefault(row, []).append(bool(correct))
    ordered = [r for r in TYPE_ROWS if r in hits] + sorted(r for r in hits if r not in TYPE_ROWS)
    return {row: TypeAccuracy(accuracy=float(np.mean(hits[row])), count=len(hits[row])) for row in ordered}


def per_type_accuracy(
    records: Sequence[DialogueRecord],
    lexicon: Optional[QuestionLexicon] = None,
    from_text: bool = False,
) -> Dict[str, TypeAccuracy]:
    """
    Accuracy of the played answers against gold answers, grouped by question type

    Args:
        records: Dialogue archive
        lexicon: Keyword lexicon used when from_text is set
        from_text: Classify the surface text instead of trusting the stored type
    """
    pairs = []
    for record in records:
        for turn in record.turns:
            if turn.gold_answer is None:
                continue
            item = turn.text if from_text else turn
            pairs.append((classify_question(item, lexicon).row, turn.answer == turn.gold_answer))
    return per_type_table(pairs)


def dialogue_stats(records: Sequence[DialogueRecord]) -> DialogueStats:
    """
    Lexical and strategy statistics of an archive

    Transition rates look at turns answered Yes: a Yes to a supercategory question
    followed by an object or attribute question, and a Yes to an object question
    followed by an attribute question. Last turns count in the denominator.

    Raises:
        DialogueValidationError: empty archive
    """
    if not records:
        raise DialogueValidationError("Cannot compute dialogue statistics on an empty archive")

    tokens: List[str] = []
    pairs_total = 0
    distinct_all = set()
    per_game_distinct = []
    repeated_games = 0
    super_yes = super_follow = 0
    object_yes = object_follow = 0
    location_turns = 0

    for record in records:
        keys = [(t.qtype.value, t.argument) for t in record.turns]
        pairs_total += len(keys)
        distinct_all.update(keys)
        per_game_distinct.append(len(set(keys)))
        if len(set(keys)) < len(keys):
            repeated_games += 1
        for k, turn in enumerate(record.turns):
            tokens.extend(tokenize(turn.text))
            qtype = turn.qtype.value
            if qtype == "location":
                location_turns += 1
            if turn.answer != Answer.YES:
                continue
            following = record.turns[k + 1].qtype.value if k + 1 < len(record.turns) else None
            if qtype == "supercategory":
                super_yes += 1
                if following == "object" or following in ATTRIBUTE_TYPES:
                    super_follow += 1
            elif qtype == "object":
                object_yes += 1
                if following in ATTRIBUTE_TYPES:
                    object_follow += 1

    def rate(num: int, den: int) -> float:
        return num / den if den else 0.0

    return DialogueStats(
        lexical_diversity=rate(len(set(tokens)), len(tokens)),
        question_diversity=rate(len(distinct_all), pairs_total),
        distinct_questions_per_game=float(np.mean(per_game_distinct)),
        repeated_question_rate=repeated_games / len(records),
        supercategory_to_object_attribute_rate=rate(super_follow, super_yes),
        object_to_attribute_rate=rate(object_follow, object_yes),
        location_turn_rate=rate(location_turns, pairs_total),
        vocabulary_size=len(set(tokens)),
    )
