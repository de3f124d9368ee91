"""
Self-play: questioner asks, oracle answers, guesser updates its belief and finally guesses
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from src.config import RunConfig, named_rng
from src.errors import DialogueValidationError
from src.gameplay.gold import consistent_candidates
from src.gameplay.questioner import QuestionerPolicy, select_question
from src.guesser.model import GuesserModel, RandomGuesser, encode_dialogue, predict_target, score_candidates
from src.models.schemas import Dialogue, DialogueRecord, GameResult, Scene, Turn
from src.oracle.model import OracleModel, answer
from src.oracle.questions import QuestionBank, ground_truth_answer
from src.world.io import read_jsonl, write_jsonl

logger = logging.getLogger(__name__)

Guesser = Union[GuesserModel, RandomGuesser]


def consistency_belief(bank: QuestionBank, scene: Scene, turns: Sequence[Turn]) -> np.ndarray:
    """Uniform over candidates consistent with every answer (uniform over all if none is)"""
    keep = consistent_candidates(bank, scene, turns) or list(range(len(scene.objects)))
    belief = np.zeros(len(scene.objects))
    belief[keep] = 1.0 / len(keep)
    return belief


def play_game(
    scene: Scene,
    oracle: Optional[OracleModel],
    guesser: Guesser,
    policy: QuestionerPolicy,
    config: RunConfig,
    rng: np.random.Generator,
    seed: int = 0,
    target: Optional[int] = None,
) -> GameResult:
    """
    One game of at most max_turns questions

    The belief after each turn comes from the guesser (or the consistency filter
    when belief_source=consistency or the guesser is the random baseline). The game
    stops early once the belief max exceeds stop_threshold.
    """
    bank = policy.bank
    target = scene.target if target is None else target
    use_gold = config.gold_answer_oracle or oracle is None
    limit = config.max_turns
    script_length = policy.script_length(scene)
    if script_length is not None:
        limit = min(limit, script_length)

    turns: List[Turn] = []
    beliefs: List[List[float]] = []
    gold_answers = []
    asked: List[Tuple[str, int]] = []
    belief = np.full(len(scene.objects), 1.0 / len(scene.objects))
    stopped_early = False

    while len(turns) < limit:
        question = select_question(policy, belief, scene, asked, rng)
        truth = ground_truth_answer(bank, scene, target, question)
        reply = truth if use_gold else answer(oracle, question, scene, target)
        turns.append(Turn(question=question, answer=reply))
        gold_answers.append(truth)
        asked.append(question.key)

        dialogue = Dialogue(scene_id=scene.scene_id, turns=turns, target=target)
        if config.belief_source == "guesser" and isinstance(guesser, GuesserModel):
            belief = score_candidates(guesser, encode_dialogue(guesser, dialogue), scene)
        else:
            belief = consistency_belief(bank, scene, turns)
        beliefs.append([float(p) for p in belief])
        if float(belief.max()) > config.stop_threshold and len(turns) < limit:
            stopped_early = True
            break

    dialogue = Dialogue(scene_id=scene.scene_id, turns=turns, target=target)
    if isinstance(guesser, GuesserModel) and turns:
        predicted = predict_target(guesser, dialogue, scene)
    elif isinstance(guesser, GuesserModel):
        predicted = scene.objects[0].id
    else:
        predicted = guesser.predict(scene)
    target_id = scene.objects[target].id
    return GameResult(
        scene_id=scene.scene_id,
        seed=seed,
        dialogue=dialogue,
        predicted=predicted,
        target=target_id,
        success=predicted == target_id,
        beliefs=beliefs,
        gold_answers=gold_answers,
        num_candidates=len(scene.objects),
        stopped_early=stopped_early,
    )


def evaluate_gameplay(
    scenes: Sequence[Scene],
    oracle: Optional[OracleModel],
    guesser: Guesser,
    policy: QuestionerPolicy,
    config: RunConfig,
    seeds: Sequence[int],
    split: str = "test",
) -> Tuple[float, List[GameResult]]:
    """
    Mean success over every (scene, seed) game

    Each game draws from its own root-seed stream named after the split, eval seed and scene id,
    so results do not depend on eval_workers. Results are ordered by (scene id, seed).

    Raises:
        DialogueValidationError: empty split
    """
    if not scenes:
        raise DialogueValidationError(f"Split '{split}' has no scenes to play")
    jobs = [(scene, seed) for seed in seeds for scene in scenes]

    def run(job: Tuple[Scene, int]) -> GameResult:
        scene, seed = job
        rng = named_rng(config.seed, f"eval.{split}.{seed}.{scene.scene_id}")
        player = RandomGuesser(rng) if isinstance(guesser, RandomGuesser) else guesser
        return play_game(scene, oracle, player, policy, config, rng, seed=seed)

    if config.eval_workers > 1:
        with ThreadPoolExecutor(max_workers=config.eval_workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]
    results.sort(key=lambda r: (r.scene_id, r.seed))
    accuracy = sum(r.success for r in results) / len(results)
    logger.info(f"Gameplay on {split}: {accuracy:.4f} over {len(results)} games")
    return accuracy, results


def chance_rate(scenes: Sequence[Scene]) -> float:
    """Expected accuracy of a uniform guess: mean of 1 / candidate count"""
    if not scenes:
        return 0.0
    return float(np.mean([1.0 / len(scene.objects) for scene in scenes]))


def write_archive(path: Union[str, Path], results: Sequence[GameResult]) -> int:
    return write_jsonl(path, (DialogueRecord.from_result(r) for r in results))


def read_archive(path: Union[str, Path]) -> List[DialogueRecord]:
    return read_jsonl(path, DialogueRecord)
