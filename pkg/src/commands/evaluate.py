"""
eval: metrics suites over trained checkpoints

Suites:
    oracle      accuracy (overall and per question type) of every trained oracle baseline
    guesser     accuracy on gold test dialogues per representation mode
    gameplay    self-play on the in-domain test split, dialogue archives and statistics
    zeroshot    self-play on the near-domain and out-of-domain splits
    attributes  attribute probes on dialogue states
    all         every suite above in one report, plus the GroLLA-style average
"""

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.analytics.probe import attribute_probe, dialogue_states, probe_families, result_dialogues
from src.analytics.report import grolla, write_report
from src.analytics.stats import dialogue_stats, per_type_accuracy
from src.commands.context import RunContext
from src.config import RunConfig, named_rng
from src.errors import ConfigError
from src.gameplay.engine import chance_rate, evaluate_gameplay, read_archive, write_archive
from src.gameplay.questioner import QuestionerPolicy
from src.gameplay.schedule import modulo_n_schedule
from src.guesser.classifier import classifier_accuracy
from src.guesser.model import GuesserModel, RandomGuesser
from src.guesser.training import examples_from, guesser_accuracy
from src.models.schemas import GameObject, GameResult, MetricsReport
from src.oracle.model import BASELINES, OracleModel
from src.oracle.questions import QuestionSampler
from src.oracle.training import evaluate_oracle, sample_examples

logger = logging.getLogger(__name__)

SUITES = ("oracle", "guesser", "gameplay", "zeroshot", "attributes", "all")
ZEROSHOT_SPLITS = ("nd_test", "od_test")


class Evaluator:
    """Fills one MetricsReport; every suite reads checkpoints through the run context"""

    def __init__(self, config: RunConfig, suite: str):
        self.ctx = RunContext(config)
        self.config = config
        self.report = MetricsReport(suite=suite, seed=config.seed)
        self._oracle: Optional[OracleModel] = None
        self._guessers: Dict[str, GuesserModel] = {}

    @property
    def policy(self) -> QuestionerPolicy:
        return QuestionerPolicy(self.ctx.bank, self.config.policy, self.config.temperature, self.config.settled_belief)

    def gameplay_oracle(self) -> Optional[OracleModel]:
        """The configured answering oracle; None plays with ground-truth answers"""
        if self.config.gold_answer_oracle:
            return None
        if self._oracle is None:
            self._oracle = self.ctx.oracle(self.config.eval_oracle)
        return self._oracle

    def guesser(self, mode: str) -> GuesserModel:
        if mode not in self._guessers:
            self._guessers[mode] = self.ctx.guesser(mode)
        return self._guessers[mode]

    def guesser_modes(self) -> List[str]:
        """Configured modes plus the jointly trained guesser when its checkpoint exists"""
        modes = list(self.config.eval_guesser_modes)
        if self.ctx.has("modulo_n"):
            modes.append("modulo_n")
        return modes

    def play(self, guesser, split: str, label: str) -> Tuple[float, List[GameResult]]:
        scenes = self.ctx.split(split)
        accuracy, results = evaluate_gameplay(
            scenes, self.gameplay_oracle(), guesser, self.policy, self.config, self.config.eval_seeds, split
        )
        self.report.gameplay_accuracy[f"{label}.{split}"] = accuracy
        return accuracy, results

    # ------------------------------------------------------------------ suites

    def oracle_suite(self) -> None:
        sampler = QuestionSampler(self.ctx.bank, self.config.oracle_questions_per_object)
        examples = sample_examples(sampler, self.ctx.split("val"), named_rng(self.config.seed, "eval.oracle"))
        names = [name for name in BASELINES if self.ctx.has(f"oracle:{name}")]
        if self.config.eval_oracle not in names:
            self.ctx.require(f"oracle:{self.config.eval_oracle}")
            names.append(self.config.eval_oracle)
        for name in names:
            accuracy, per_type = evaluate_oracle(self.ctx.oracle(name), examples)
            self.report.oracle_accuracy[name] = accuracy
            self.report.oracle_per_type[name] = per_type
            logger.info(f"[oracle:{name}] accuracy {accuracy:.4f} on {len(examples)} questions")

    def guesser_suite(self) -> None:
        examples = examples_from(self.ctx.gold("test"), self.ctx.split("test"))
        for mode in self.guesser_modes():
            accuracy = guesser_accuracy(self.guesser(mode), examples)
            self.report.guesser_accuracy[mode] = accuracy
            logger.info(f"[guesser:{mode}] accuracy {accuracy:.4f} on {len(examples)} gold dialogues")
        if self.ctx.has("classifier"):
            self.report.extra["classifier_accuracy"] = classifier_accuracy(self.ctx.classifier(), self.ctx.split("test"))
        if self.ctx.has("modulo_n"):
            self.report.schedule = modulo_n_schedule(self.config.modulo_n, self.config.joint_epochs)

    def gameplay_suite(self) -> None:
        for mode in self.guesser_modes():
            _, results = self.play(self.guesser(mode), "test", mode)
            path = self.ctx.paths.archives / f"{mode}-test.jsonl"
            write_archive(path, results)
            records = read_archive(path)
            self.report.dialogue_stats[mode] = dialogue_stats(records)
            self.report.answer_per_type[mode] = per_type_accuracy(records)
        self.play(RandomGuesser(named_rng(self.config.seed, "eval.random")), "test", "random")
        self.report.extra["chance.test"] = chance_rate(self.ctx.split("test"))

    def zeroshot_suite(self) -> None:
        for split in ZEROSHOT_SPLITS:
            if not self.ctx.split(split):
                logger.warning(f"Split {split} is empty; skipping")
                continue
            for mode in self.guesser_modes():
                _, results = self.play(self.guesser(mode), split, mode)
                write_archive(self.ctx.paths.archives / f"{mode}-{split}.jsonl", results)
            self.play(RandomGuesser(named_rng(self.config.seed, f"eval.random.{split}")), split, "random")
            self.report.extra[f"chance.{split}"] = chance_rate(self.ctx.split(split))

    def probe_inputs(self, guesser: GuesserModel, split: str, limit: Optional[int]) -> Tuple[np.ndarray, List[GameObject]]:
        """Dialogue states from self-play games (first eval seed) or from gold dialogues"""
        scenes = self.ctx.split(split)
        if limit is not None:
            scenes = scenes[:limit]
        if self.config.probe_source == "gold":
            dialogues = [d for d in self.ctx.gold(split) if d.scene_id in {s.scene_id for s in scenes}]
        else:
            _, results = evaluate_gameplay(scenes, self.gameplay_oracle(), guesser, self.policy, self.config,
                                           self.config.eval_seeds[:1], f"probe.{split}")
            dialogues = result_dialogues(results)
        return dialogue_states(guesser, dialogues, scenes)

    def attributes_suite(self) -> None:
        vocab = self.ctx.vocab
        for mode in self.guesser_modes():
            guesser = self.guesser(mode)
            train_x, train_objects = self.probe_inputs(guesser, "train", self.config.probe_train_games)
            test_x, test_objects = self.probe_inputs(guesser, "test", None)
            self.report.attribute_f1[mode] = attribute_probe(train_x, train_objects, test_x, test_objects, vocab,
                                                             self.config)

        # location read straight from the target's spatial vector
        train = self.ctx.split("train")[: self.config.probe_train_games]
        test = self.ctx.split("test")
        ceiling = probe_families(
            np.vstack([s.target_object.s for s in train]), [s.target_object for s in train],
            np.vstack([s.target_object.s for s in test]), [s.target_object for s in test],
            vocab, self.config,
        )
        self.report.extra["l_f1_spatial_ceiling"] = ceiling["location"].f1

    def grolla_scores(self) -> None:
        for mode in self.guesser_modes():
            components: Dict[str, float] = {}
            gameplay = self.report.gameplay_accuracy
            if f"{mode}.test" in gameplay:
                components["gameplay"] = gameplay[f"{mode}.test"]
            if mode in self.report.attribute_f1:
                components["as_f1"] = self.report.attribute_f1[mode].as_f1
            zeroshot = [gameplay[f"{mode}.{s}"] for s in ZEROSHOT_SPLITS if f"{mode}.{s}" in gameplay]
            if zeroshot:
                components["zeroshot"] = float(np.mean(zeroshot))
            self.report.grolla[mode] = grolla(components, self.config.grolla_components)

    def run(self) -> MetricsReport:
        suite = self.report.suite
        steps = {
            "oracle": [self.oracle_suite],
            "guesser": [self.guesser_suite],
            "gameplay": [self.gameplay_suite],
            "zeroshot": [self.zeroshot_suite],
            "attributes": [self.attributes_suite],
            "all": [self.oracle_suite, self.guesser_suite, self.gameplay_suite, self.zeroshot_suite,
                    self.attributes_suite, self.grolla_scores],
        }
        for step in steps[suite]:
            step()
        return self.report


def cmd_eval(config: RunConfig, suite: str) -> MetricsReport:
    """
    Run one suite and write reports/<suite>.json and reports/<suite>.csv

    Raises:
        ConfigError: unknown suite
        DependencyError: a required checkpoint or split is missing
    """
    if suite not in SUITES:
        raise ConfigError(f"Unknown suite '{suite}' (expected one of {', '.join(SUITES)})")
    report = Evaluator(config, suite).run()
    json_path, csv_path = write_report(report, config.paths().reports)
    print(f"{suite}: report -> {json_path} ({len(report.flatten())} metrics)")
    return report
