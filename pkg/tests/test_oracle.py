"""
Unit Tests for the Oracle
Question encoding, ground truth, feature sets, answer ties and training
"""

import numpy as np
import pytest

from src.config import QTYPES
from src.errors import ConfigError, EncodingError
from src.imagination import ImaginationModel
from src.models.schemas import Answer, Scene
from src.numerics import relative_error
from src.oracle import (
    BASELINES,
    OracleModel,
    QuestionBank,
    QuestionSampler,
    answer,
    answer_from_probs,
    encode_question,
    evaluate_oracle,
    ground_truth_answer,
    majority_distribution,
    oracle_forward,
    parse_feature_set,
    sample_examples,
    train_oracle,
    type_row,
)
from src.oracle.training import OracleExample, oracle_batch_loss
from src.world import LOCATIONS
from tests.conftest import make_object, numeric_gradients, tiny_config


def two_object_scene(vocab) -> Scene:
    first, second = vocab.in_domain[0], vocab.in_domain[-1]
    return Scene(
        scene_id="pair",
        width=640,
        height=480,
        target=0,
        objects=[
            make_object(0, first, vocab.category(first).supercategory, bbox=(10, 10, 60, 60), color="red"),
            make_object(1, second, vocab.category(second).supercategory, bbox=(500, 380, 80, 80), color="blue"),
        ],
    )


def oracle_for(feature_set, bank, config, seed=0):
    imagination = None
    if "imagination" in feature_set:
        imagination = ImaginationModel.build(bank.vocab.d_o, 6, 3, alpha=1e-3, eta=1.0,
                                             rng=np.random.default_rng(seed + 1))
    return OracleModel.build(feature_set, bank, config.oracle_d_c, config.oracle_hidden,
                             np.random.default_rng(seed), imagination)


class TestQuestionEncoding:
    """One-hot (type, argument) encoding"""

    def test_layout(self, bank):
        question = bank.make("object", 2)
        vector = encode_question(bank, question)
        assert vector.shape == (bank.d_q,)
        assert vector[QTYPES.index("object")] == 1.0
        assert vector[len(QTYPES) + 2] == 1.0
        assert vector.sum() == 2.0

    def test_surface_text_is_ignored(self, bank):
        a = bank.make("color", 1, variant=0)
        b = bank.make("color", 1, variant=1)
        assert a.text != b.text
        assert np.array_equal(encode_question(bank, a), encode_question(bank, b))

    def test_argument_out_of_space(self, bank):
        question = bank.make("size", 0).model_copy(update={"argument": 7})
        with pytest.raises(EncodingError):
            encode_question(bank, question)

    def test_rendering(self, bank, vocab):
        person = next(s for s in vocab.supercategories if s.name == "person")
        assert bank.make("supercategory", person.id).text == "is it a person?"
        assert bank.make("location", LOCATIONS.index("top left")).text == "is it in the top left?"

    def test_object_questions_carry_animacy(self, bank, vocab):
        for category in vocab.categories:
            expected = "animate" if category.animate else "inanimate"
            assert bank.make("object", category.id).animacy == expected
            assert type_row(bank.make("object", category.id)) == f"object:{expected}"


class TestGroundTruth:
    def test_object_and_attribute_answers(self, bank, vocab):
        scene = two_object_scene(vocab)
        target_category = scene.objects[0].category
        assert ground_truth_answer(bank, scene, 0, bank.make("object", target_category)) == Answer.YES
        assert ground_truth_answer(bank, scene, 1, bank.make("object", target_category)) == Answer.NO
        red = bank.spaces["color"].index("red")
        assert ground_truth_answer(bank, scene, 0, bank.make("color", red)) == Answer.YES
        assert ground_truth_answer(bank, scene, 1, bank.make("color", red)) == Answer.NO

    def test_location_answers(self, bank, vocab):
        scene = two_object_scene(vocab)
        top_left = bank.make("location", LOCATIONS.index("top left"))
        assert ground_truth_answer(bank, scene, 0, top_left) == Answer.YES
        assert ground_truth_answer(bank, scene, 1, top_left) == Answer.NO

    def test_disabled_type_is_not_applicable(self, vocab):
        bank = QuestionBank(vocab, disabled_qtypes=["location"])
        scene = two_object_scene(vocab)
        assert ground_truth_answer(bank, scene, 0, bank.make("location", 0)) == Answer.NA
        assert "location" not in bank.enabled_qtypes

    def test_sampler_covers_every_type(self, bank, splits):
        sampler = QuestionSampler(bank, per_object=4)
        rng = np.random.default_rng(0)
        triples = [t for scene in splits["train"] for t in sampler.sample(scene, rng)]
        assert {q.qtype.value for _, q, _ in triples} == set(QTYPES)
        yes_rate = np.mean([a == Answer.YES for _, _, a in triples])
        assert 0.2 < yes_rate < 0.8


class TestFeatureSets:
    def test_canonical_order(self):
        assert parse_feature_set("imagination+spatial+question") == ("question", "spatial", "imagination")
        assert parse_feature_set("majority") == ()

    @pytest.mark.parametrize("name", ["", "question+pixels", "+"])
    def test_unknown_feature(self, name):
        with pytest.raises(ConfigError):
            parse_feature_set(name)

    @pytest.mark.parametrize("feature_set", BASELINES)
    def test_every_baseline_gives_a_distribution(self, feature_set, bank, config, scene):
        model = oracle_for(feature_set, bank, config)
        probs = oracle_forward(model, bank.make("color", 0), scene, 0)
        assert probs.shape == (3,)
        assert probs.sum() == pytest.approx(1.0)

    def test_imagination_feature_needs_model(self, bank, config):
        with pytest.raises(ConfigError):
            OracleModel.build("question+imagination", bank, 4, 8, np.random.default_rng(0))

    def test_unknown_categories_share_the_unk_row(self, bank, vocab, config):
        model = oracle_for("question+spatial+category", bank, config)
        heldout = vocab.near_domain_heldout + vocab.out_domain_heldout
        rows = model.category_rows(heldout)
        assert np.all(rows == len(vocab.in_domain))
        assert model.category_table.shape == (len(vocab.in_domain) + 1, config.oracle_d_c)

    def test_relabeling_only_moves_the_category_oracle(self, bank, vocab, config, scene):
        """Test that renaming every category leaves imagination-oracle outputs bit-identical"""
        shift = {c: vocab.in_domain[(k + 1) % len(vocab.in_domain)] for k, c in enumerate(vocab.in_domain)}
        relabeled = scene.model_copy(update={"objects": [
            o.model_copy(update={"category": shift.get(o.category, vocab.in_domain[0])}) for o in scene.objects
        ]})
        assert all(a.category != b.category for a, b in zip(scene.objects, relabeled.objects))
        question = bank.make("color", 0)

        imagination = oracle_for("question+spatial+imagination", bank, config)
        category = oracle_for("question+spatial+category", bank, config)
        for index in range(len(scene.objects)):
            assert np.array_equal(
                oracle_forward(imagination, question, scene, index),
                oracle_forward(imagination, question, relabeled, index),
            )
        assert any(
            not np.allclose(oracle_forward(category, question, scene, index),
                            oracle_forward(category, question, relabeled, index))
            for index in range(len(scene.objects))
        )

    def test_checkpoint_round_trip(self, tmp_path, bank, config, scene):
        model = oracle_for("question+spatial+category+imagination", bank, config)
        loaded = OracleModel.load(model.save(tmp_path / "oracle.ckpt"), bank)
        question = bank.make("shape", 2)
        assert loaded.kind == model.kind
        assert np.array_equal(oracle_forward(loaded, question, scene, 1), oracle_forward(model, question, scene, 1))


class TestAnswers:
    """argmax with the Yes < No < NA tie-break"""

    @pytest.mark.parametrize(
        "probs,expected",
        [
            ([0.5, 0.5, 0.0], Answer.YES),
            ([0.0, 0.5, 0.5], Answer.NO),
            ([1 / 3, 1 / 3, 1 / 3], Answer.YES),
            ([0.1, 0.2, 0.7], Answer.NA),
        ],
    )
    def test_tie_break(self, probs, expected):
        assert answer_from_probs(np.array(probs)) == expected

    def test_majority_answers_the_most_frequent_label(self, bank, scene):
        model = OracleModel((), bank, majority=np.array([0.2, 0.7, 0.1]))
        assert answer(model, bank.make("object", 0), scene, 0) == Answer.NO

    def test_majority_distribution(self, bank, scene):
        question = bank.make("color", 0)
        examples = [OracleExample(question, scene, 0, a) for a in (Answer.YES, Answer.NO, Answer.NO, Answer.NO)]
        assert np.allclose(majority_distribution(examples), [0.25, 0.75, 0.0])


class TestGradients:
    """Analytic oracle gradients against finite differences"""

    def _examples(self, bank, splits, seed=0):
        rng = np.random.default_rng(seed)
        picks = rng.choice(len(splits["train"]), size=2, replace=False)
        return sample_examples(QuestionSampler(bank, 1), [splits["train"][int(i)] for i in picks], rng)[:6]

    @pytest.mark.parametrize("seed", range(20))
    @pytest.mark.parametrize("feature_set", ["question+spatial+category", "question+spatial+imagination"])
    def test_batch_loss(self, feature_set, seed, bank, splits, config):
        model = oracle_for(feature_set, bank, config, seed=200 + seed)
        examples = self._examples(bank, splits, seed=seed)
        _, analytic, _ = oracle_batch_loss(model, examples)
        assert not any(name.startswith("imagination.") for name in analytic)

        numeric = numeric_gradients(model, lambda: oracle_batch_loss(model, examples)[0], analytic)
        assert relative_error(analytic, numeric) < 1e-4

    @pytest.mark.parametrize("seed", range(20))
    def test_finetuned_imagination(self, seed, bank, splits, config):
        """Test the joint gradient that flows into an attached encoder"""
        model = oracle_for("question+imagination", bank, config, seed=300 + seed)
        examples = self._examples(bank, splits, seed=seed)

        def loss_at():
            return oracle_batch_loss(model, examples, finetune=True, rng=np.random.default_rng(seed))[0]

        _, analytic, _ = oracle_batch_loss(model, examples, finetune=True, rng=np.random.default_rng(seed))
        assert any(name.startswith("imagination.encoder.") for name in analytic)

        numeric = numeric_gradients(model, loss_at, analytic)
        assert relative_error(analytic, numeric) < 1e-4


class TestTraining:
    def test_training_records_history(self, bank, splits):
        config = tiny_config(oracle_epochs=3, patience=0)
        model = oracle_for("question+spatial", bank, config)
        model, history = train_oracle(model, splits["train"], config, splits["val"])
        assert len(history) == 3
        assert 0.0 <= history.rows[-1]["val_acc"] <= 1.0

    def test_majority_training_counts_labels(self, bank, splits, config):
        model, history = train_oracle(OracleModel((), bank), splits["train"], config, splits["val"])
        assert model.majority.sum() == pytest.approx(1.0)
        assert len(history) == 1

    def test_no_training_scenes(self, bank, config):
        with pytest.raises(ConfigError):
            train_oracle(oracle_for("question", bank, config), [], config)

    def test_evaluation_rows(self, bank, splits, config):
        model = oracle_for("question+spatial", bank, config)
        examples = sample_examples(QuestionSampler(bank, 2), splits["val"], np.random.default_rng(0))
        overall, table = evaluate_oracle(model, examples)
        assert 0.0 <= overall <= 1.0
        assert sum(row.count for row in table.values()) == len(examples)
        assert set(table) <= {"supercategory", "object:animate", "object:inanimate", "color", "size",
                              "texture", "shape", "location"}
