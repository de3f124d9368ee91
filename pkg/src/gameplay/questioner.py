"""
Questioner policies: information-gain planner, random, scripted replay
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.errors import ConfigError
from src.models.schemas import Question, Scene
from src.oracle.questions import QuestionBank, holds

logger = logging.getLogger(__name__)

POLICY_KINDS = ("infogain", "random", "scripted")
GAIN_TOLERANCE = 1e-12


def entropy(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def expected_information_gain(belief: np.ndarray, yes_mask: np.ndarray) -> float:
    """H(b) minus the expected entropy of b after a Yes/No answer (bits)"""
    belief = np.asarray(belief, dtype=np.float64)
    gain = entropy(belief)
    for mask in (yes_mask, ~yes_mask):
        mass = float(belief[mask].sum())
        if mass > 0:
            gain -= mass * entropy(belief[mask] / mass)
    return max(gain, 0.0)


class QuestionerPolicy:
    """
    Chooses the next question

    Attributes:
        kind: infogain | random | scripted
        temperature: infogain samples uniformly among questions within this gain of the best (0 = argmax)
        settled_belief: a belief whose max exceeds this counts as settled (all gains 0)
        scripts: scene id -> question list, for the scripted kind
    """

    def __init__(
        self,
        bank: QuestionBank,
        kind: str = "infogain",
        temperature: float = 0.0,
        settled_belief: float = 0.99,
        memory: bool = True,
        scripts: Optional[Dict[str, List[Question]]] = None,
    ):
        if kind not in POLICY_KINDS:
            raise ConfigError(f"Unknown questioner policy '{kind}'")
        self.bank = bank
        self.kind = kind
        self.temperature = temperature
        self.settled_belief = settled_belief
        self.memory = memory
        self.scripts = scripts or {}
        self.candidates: List[Tuple[str, int]] = bank.candidates()

    def script_length(self, scene: Scene) -> Optional[int]:
        if self.kind != "scripted":
            return None
        return len(self.scripts.get(scene.scene_id, []))

    def gains(self, belief: np.ndarray, scene: Scene) -> np.ndarray:
        """Expected information gain of every candidate question, in candidate order"""
        if float(np.max(belief)) > self.settled_belief:
            return np.zeros(len(self.candidates))
        gains = np.zeros(len(self.candidates))
        for k, (qtype, argument) in enumerate(self.candidates):
            mask = np.array([holds(self.bank, obj, qtype, argument) for obj in scene.objects])
            gains[k] = expected_information_gain(belief, mask)
        return gains


def select_question(
    policy: QuestionerPolicy,
    belief: np.ndarray,
    scene: Scene,
    asked: Sequence[Tuple[str, int]],
    rng: Optional[np.random.Generator] = None,
) -> Question:
    """
    Next question for the running game

    Unasked questions only (when memory is on); once all are asked the lowest-id
    question is repeated. Ties resolve to the lowest candidate id.
    """
    variant = int(rng.integers(2)) if rng is not None else 0

    if policy.kind == "scripted":
        script = policy.scripts.get(scene.scene_id, [])
        if len(asked) >= len(script):
            raise ConfigError(f"Script for {scene.scene_id} is exhausted")
        return script[len(asked)]

    asked_set = set(asked) if policy.memory else set()
    open_ids = [k for k, key in enumerate(policy.candidates) if key not in asked_set]
    if not open_ids:
        qtype, argument = policy.candidates[0]
        return policy.bank.make(qtype, argument, variant)

    if policy.kind == "random":
        if rng is None:
            raise ConfigError("The random questioner needs a random stream")
        choice = open_ids[int(rng.integers(len(open_ids)))]
    else:
        gains = policy.gains(belief, scene)[open_ids]
        best = float(gains.max())
        if policy.temperature > 0 and rng is not None:
            pool = [k for k, g in zip(open_ids, gains) if g >= best - policy.temperature]
            choice = pool[int(rng.integers(len(pool)))]
        else:
            choice = next(k for k, g in zip(open_ids, gains) if g >= best - GAIN_TOLERANCE)
    qtype, argument = policy.candidates[choice]
    return policy.bank.make(qtype, argument, variant)
