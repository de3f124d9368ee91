"""
End-to-end orderings on the default-size synthetic world
Each seed runs the whole pipeline (generate, train every component, evaluate);
run with --runslow.
"""

from pathlib import Path
from typing import Dict

import numpy as np
import pytest

from src.commands import cmd_eval, cmd_generate, cmd_train
from src.config import RunConfig
from src.models.schemas import MetricsReport

pytestmark = pytest.mark.slow

COMPONENTS = (
    "imagination",
    "imagination:oracle",
    "imagination:guesser",
    "classifier",
    "oracle:question+spatial+category",
    "oracle:question+spatial+imagination",
    "guesser:category",
    "guesser:nocat",
    "guesser:predcat",
    "guesser:imagination",
)


class Runs:
    """Lazily trained full pipelines, one output directory per seed"""

    def __init__(self, root: Path):
        self.root = root
        self.configs: Dict[int, RunConfig] = {}
        self.reports: Dict[tuple, MetricsReport] = {}

    def config(self, seed: int) -> RunConfig:
        if seed not in self.configs:
            config = RunConfig(seed=seed, out_dir=str(self.root / f"seed{seed}"), enable_logging=False)
            cmd_generate(config)
            for component in COMPONENTS:
                cmd_train(config, component)
            self.configs[seed] = config
        return self.configs[seed]

    def report(self, seed: int, suite: str) -> MetricsReport:
        if (seed, suite) not in self.reports:
            self.reports[(seed, suite)] = cmd_eval(self.config(seed), suite)
        return self.reports[(seed, suite)]


@pytest.fixture(scope="module")
def runs(tmp_path_factory) -> Runs:
    return Runs(tmp_path_factory.mktemp("acceptance"))


def mean(values) -> float:
    return float(np.mean(list(values)))


def test_in_domain_guesser_ordering(runs):
    """Test category > imagination > predcat >= nocat on gold test dialogues"""
    reports = [runs.report(seed, "guesser") for seed in (0, 1, 2)]
    accuracy = {mode: mean(r.guesser_accuracy[mode] for r in reports)
                for mode in ("category", "imagination", "predcat", "nocat")}
    assert accuracy["category"] > accuracy["imagination"] > accuracy["predcat"] >= accuracy["nocat"]
    assert accuracy["imagination"] - accuracy["nocat"] >= 0.08


def test_zero_shot_ordering(runs):
    """Test that imagination beats category(UNK) on unseen supercategories"""
    reports = [runs.report(seed, "zeroshot") for seed in range(5)]
    imagination = mean(r.gameplay_accuracy["imagination.od_test"] for r in reports)
    category_od = mean(r.gameplay_accuracy["category.od_test"] for r in reports)
    category_nd = mean(r.gameplay_accuracy["category.nd_test"] for r in reports)
    chance = mean(r.extra["chance.od_test"] for r in reports)
    assert imagination - category_od >= 0.10
    assert imagination >= 2 * chance
    assert category_nd >= category_od


def test_oracle_ordering(runs):
    reports = [runs.report(seed, "oracle") for seed in (0, 1, 2)]
    category = "question+spatial+category"
    imagination = "question+spatial+imagination"
    overall = {name: mean(r.oracle_accuracy[name] for r in reports) for name in (category, imagination)}
    color = {name: mean(r.oracle_per_type[name]["color"].accuracy for r in reports)
             for name in (category, imagination)}
    assert abs(overall[imagination] - overall[category]) <= 0.03
    assert color[imagination] > color[category]


def test_attribute_probe_direction(runs):
    reports = [runs.report(seed, "attributes") for seed in (0, 1, 2)]
    assert mean(r.attribute_f1["imagination"].l_f1 for r in reports) >= mean(
        r.attribute_f1["nocat"].l_f1 for r in reports
    )
    assert all(r.extra["l_f1_spatial_ceiling"] >= 0.95 for r in reports)


def test_rerun_is_byte_identical(runs, tmp_path):
    """Test that a second pipeline with the same seed reproduces data, checkpoints and reports"""
    first = runs.config(0)
    second = first.model_copy(update={"out_dir": str(tmp_path / "again")})
    cmd_generate(second)
    for component in ("imagination", "classifier", "guesser:nocat"):
        cmd_train(second, component)
    cmd_eval(second.model_copy(update={"eval_guesser_modes": ["nocat"]}), "guesser")
    cmd_eval(first.model_copy(update={"eval_guesser_modes": ["nocat"]}), "guesser")

    a, b = Path(first.out_dir), Path(second.out_dir)
    for relative in ("data/world.json", "data/train.jsonl", "data/od_test.jsonl",
                     "checkpoints/imagination.ckpt", "checkpoints/guesser-nocat.ckpt", "reports/guesser.json"):
        assert (a / relative).read_bytes() == (b / relative).read_bytes(), relative
