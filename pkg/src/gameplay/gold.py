"""
Gold dialogue synthesis: greedy splits of the candidate set that isolate the target
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.models.schemas import Dialogue, Question, Scene, Turn
from src.oracle.questions import QuestionBank, ground_truth_answer, holds

logger = logging.getLogger(__name__)

# Coarse-to-fine preference when several question types split the candidates
TYPE_PRIORITY = ("supercategory", "object", "color", "shape", "texture", "size", "location")


def consistent_candidates(bank: QuestionBank, scene: Scene, turns: Sequence[Turn]) -> List[int]:
    """Object indices agreeing with every Yes/No answer so far (NA answers carry no information)"""
    keep = []
    for index, obj in enumerate(scene.objects):
        ok = True
        for turn in turns:
            if turn.answer.value == "NA":
                continue
            truth = holds(bank, obj, turn.question.qtype.value, turn.question.argument)
            if truth != (turn.answer.value == "Yes"):
                ok = False
                break
        if ok:
            keep.append(index)
    return keep


def best_split(
    bank: QuestionBank, scene: Scene, candidates: Sequence[int], asked: set, rng: np.random.Generator
) -> Optional[Tuple[str, int]]:
    """Highest-priority question type with an informative split; within it the most balanced split"""
    for qtype in TYPE_PRIORITY:
        if qtype in bank.disabled:
            continue
        scored = []
        for argument in range(len(bank.spaces[qtype])):
            if (qtype, argument) in asked:
                continue
            yes = sum(holds(bank, scene.objects[i], qtype, argument) for i in candidates)
            balance = min(yes, len(candidates) - yes)
            if balance > 0:
                scored.append((balance, argument))
        if scored:
            top = max(b for b, _ in scored)
            tied = [a for b, a in scored if b == top]
            return qtype, tied[int(rng.integers(len(tied)))]
    return None


def synthesize_gold(
    bank: QuestionBank,
    scene: Scene,
    rng: np.random.Generator,
    max_turns: int = 10,
    target: Optional[int] = None,
) -> Dialogue:
    """
    Question sequence isolating the target under ground-truth answers

    Stops once a single candidate remains, at max_turns, or when no remaining
    question separates the candidates (indistinguishable objects).
    """
    target = scene.target if target is None else target
    turns: List[Turn] = []
    candidates = list(range(len(scene.objects)))
    asked: set = set()
    while len(candidates) > 1 and len(turns) < max_turns:
        choice = best_split(bank, scene, candidates, asked, rng)
        if choice is None:
            logger.debug(f"{scene.scene_id}: {len(candidates)} candidates cannot be separated")
            break
        asked.add(choice)
        question: Question = bank.make(choice[0], choice[1], variant=int(rng.integers(2)))
        turns.append(Turn(question=question, answer=ground_truth_answer(bank, scene, target, question)))
        candidates = [i for i in candidates if i in consistent_candidates(bank, scene, turns[-1:])]
    return Dialogue(scene_id=scene.scene_id, turns=turns, target=target)


def gold_dialogues(
    bank: QuestionBank,
    scenes: Sequence[Scene],
    rng: np.random.Generator,
    max_turns: int = 10,
    targets_per_scene: int = 1,
) -> List[Dialogue]:
    """
    Gold dialogues for guesser training; the designated target comes first, further
    targets are other objects of the scene drawn without replacement
    """
    dialogues = []
    for scene in scenes:
        others = [i for i in range(len(scene.objects)) if i != scene.target]
        extra = list(rng.permutation(others)[: max(targets_per_scene - 1, 0)])
        for target in [scene.target] + [int(t) for t in extra]:
            dialogue = synthesize_gold(bank, scene, rng, max_turns, target)
            if dialogue.turns:
                dialogues.append(dialogue)
    return dialogues
