"""
Gameplay Module
Gold dialogues, questioner policies, self-play and the modulo-n schedule
"""

from .gold import TYPE_PRIORITY, consistent_candidates, gold_dialogues, synthesize_gold
from .questioner import POLICY_KINDS, QuestionerPolicy, entropy, expected_information_gain, select_question
from .engine import (
    chance_rate,
    consistency_belief,
    evaluate_gameplay,
    play_game,
    read_archive,
    write_archive,
)
from .schedule import modulo_n_schedule, modulo_n_train

__all__ = [
    "TYPE_PRIORITY",
    "consistent_candidates",
    "gold_dialogues",
    "synthesize_gold",
    "POLICY_KINDS",
    "QuestionerPolicy",
    "entropy",
    "expected_information_gain",
    "select_question",
    "chance_rate",
    "consistency_belief",
    "evaluate_gameplay",
    "play_game",
    "read_archive",
    "write_archive",
    "modulo_n_schedule",
    "modulo_n_train",
]
