"""
Unit Tests for the Imagination Module
Triplet reconstruction loss, regularizer, composite loss gradients and training
"""

import numpy as np
import pytest

from src.errors import ConfigError, InvariantError, ShapeError
from src.imagination import (
    ImaginationModel,
    batch_imagination_loss,
    build_imagination,
    decode,
    encode,
    imagination_loss,
    inverse_frequency_weights,
    reconstruction_loss,
    regularization_loss,
    sample_negative,
    train_imagination,
)
from src.imagination.training import (
    collect_objects,
    draw_negatives,
    evaluate_imagination,
    finetune_grads,
    nearest_centroid_accuracy,
)
from src.models.schemas import Scene
from src.numerics import DenseNet, finite_diff_grad, relative_error
from tests.conftest import make_object, tiny_config


def scene_of(categories, vectors=None) -> Scene:
    objects = []
    for k, category in enumerate(categories):
        v = None if vectors is None else vectors[k]
        objects.append(make_object(k, category, 0, bbox=(10.0 * k, 10.0, 50.0, 50.0), v=v))
    return Scene(scene_id="s", width=640, height=480, target=0, objects=objects)


def tiny_model(seed: int, **kwargs) -> ImaginationModel:
    return ImaginationModel.build(6, 5, 3, alpha=kwargs.pop("alpha", 0.01), eta=1.0,
                                  rng=np.random.default_rng(seed), **kwargs)


class TestReconstructionLoss:
    """Max-margin triplet reconstruction term"""

    def test_margin_exactly_met(self):
        """Test v~ == v_i and MSE(v_j, v~) == eta gives zero"""
        v_i = np.zeros(2)
        v_j = np.array([1.0, 1.0])
        loss, grad = reconstruction_loss(v_i, v_j, v_i.copy(), eta=1.0)
        assert loss == 0.0
        assert np.array_equal(grad, np.zeros(2))

    def test_equidistant_gives_eta(self):
        loss, _ = reconstruction_loss(np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([0.5, 0.5]), eta=0.7)
        assert loss == pytest.approx(0.7)

    def test_worked_example(self):
        """Test v_i=[1,0], v_j=[0,1], v~=[0.5,0.5], eta=1 -> 1.0, and moving toward v_i lowers it"""
        v_i, v_j = np.array([1.0, 0.0]), np.array([0.0, 1.0])
        loss, _ = reconstruction_loss(v_i, v_j, np.array([0.5, 0.5]), eta=1.0)
        assert loss == pytest.approx(1.0)
        moved, _ = reconstruction_loss(v_i, v_j, np.array([0.6, 0.5]), eta=1.0)
        # 1 + 0.5*(0.16 + 0.25) - 0.5*(0.36 + 0.25)
        assert moved == pytest.approx(0.9)
        assert moved < loss

    def test_non_negative_on_random_triples(self):
        rng = np.random.default_rng(0)
        for _ in range(10_000):
            v_i, v_j, v_t = rng.normal(size=(3, 4))
            loss, _ = reconstruction_loss(v_i, v_j, v_t, eta=float(rng.uniform(0.01, 2.0)))
            assert loss >= 0.0

    def test_flipped_margin_sign(self):
        """Test the flipped orientation rewards moving away from v_i"""
        v_i, v_j = np.array([1.0, 0.0]), np.array([0.0, 1.0])
        loss, _ = reconstruction_loss(v_i, v_j, np.array([0.6, 0.5]), eta=1.0, variant="flipped")
        assert loss == pytest.approx(1.1)

    def test_mse_variant_ignores_negative(self):
        loss, _ = reconstruction_loss(np.array([1.0, 0.0]), None, np.array([0.0, 0.0]), eta=1.0, variant="mse")
        assert loss == pytest.approx(0.5)

    def test_gradient(self):
        rng = np.random.default_rng(3)
        v_i, v_j, v_t = rng.normal(size=(3, 5))
        _, analytic = reconstruction_loss(v_i, v_j, v_t, eta=5.0)
        numeric = finite_diff_grad(lambda p: reconstruction_loss(v_i, v_j, p["t"], eta=5.0)[0], {"t": v_t})
        assert relative_error({"t": analytic}, numeric) < 1e-6

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            reconstruction_loss(np.zeros(2), np.zeros(2), np.zeros(3), eta=1.0)

    def test_non_positive_eta(self):
        with pytest.raises(ConfigError):
            reconstruction_loss(np.zeros(2), np.zeros(2), np.zeros(2), eta=0.0)


class TestRegularization:
    def test_zero(self):
        assert regularization_loss(np.zeros(3), {"w": np.zeros((2, 2))}) == 0.0

    def test_three_four_five(self):
        assert regularization_loss(np.array([3.0, 4.0]), {"w": np.zeros(4)}) == pytest.approx(5.0)

    def test_matches_flatten_and_norm(self, rng):
        z = rng.normal(size=4)
        params = {"a": rng.normal(size=(2, 3)), "b": rng.normal(size=2)}
        flat = np.concatenate([params["a"].ravel(), params["b"]])
        expected = np.sqrt(np.sum(z ** 2)) + np.sqrt(np.sum(flat ** 2))
        assert regularization_loss(z, params) == pytest.approx(expected)


class TestNegativeSampling:
    """Same-scene, different-category negatives"""

    def test_forced_choice(self):
        assert sample_negative(scene_of([1, 2]), 0, np.random.default_rng(0)) == 1

    def test_same_category_objects_share_negative(self):
        rng = np.random.default_rng(0)
        scene = scene_of([1, 1, 2])
        assert {sample_negative(scene, i, rng) for i in (0, 1) for _ in range(20)} == {2}

    def test_uniform_over_valid_negatives(self):
        """Test 10,000 draws stay within 3 sigma of uniform over 3 negatives"""
        rng = np.random.default_rng(7)
        scene = scene_of([1, 2, 3, 4])
        counts = np.bincount([sample_negative(scene, 0, rng) for _ in range(10_000)], minlength=4)
        sigma = np.sqrt(10_000 * (1 / 3) * (2 / 3))
        assert counts[0] == 0
        assert np.all(np.abs(counts[1:] - 10_000 / 3) < 3 * sigma)

    def test_no_negative_raises(self, scene):
        single = scene.model_copy(update={"objects": [o.model_copy(update={"category": 1}) for o in scene.objects]})
        with pytest.raises(InvariantError):
            sample_negative(single, 0, np.random.default_rng(0))

    def test_batch_strategy_uses_other_scenes(self, splits):
        scenes = splits["train"][:4]
        table = collect_objects(scenes)
        rows = np.arange(len(table))
        negatives = draw_negatives(table, rows, scenes, np.random.default_rng(0), "batch")
        own_scene = {k: {tuple(o.v) for o in scenes[table.scene_index[k]].objects} for k in rows}
        assert any(tuple(negatives[k]) not in own_scene[k] for k in rows)


class TestModel:
    """Encoder/decoder behaviour"""

    def test_zero_model_maps_to_zero(self):
        model = ImaginationModel.build(6, 5, 3, alpha=0.0, eta=1.0, rng=None)
        z = encode(model, np.ones(6))
        assert np.array_equal(z, np.zeros(3))
        assert np.array_equal(decode(model, z), np.zeros(6))

    def test_encode_is_deterministic(self, rng):
        model = tiny_model(0)
        v = rng.normal(size=6)
        assert np.array_equal(encode(model, v), encode(model, v))

    def test_decode_length(self, rng):
        assert decode(tiny_model(0), rng.normal(size=3)).shape == (6,)

    def test_wrong_input_width(self):
        with pytest.raises(ShapeError):
            encode(tiny_model(0), np.zeros(5))

    def test_decoder_must_mirror_encoder(self, rng):
        encoder = DenseNet.build([6, 5, 3], ["relu", "identity"], rng)
        decoder = DenseNet.build([3, 4, 6], ["relu", "identity"], rng)
        with pytest.raises(ShapeError):
            ImaginationModel(encoder, decoder, alpha=0.0, eta=1.0)

    def test_label_freedom(self, scene):
        """Test that relabeling categories leaves encode/decode bit-identical"""
        model = ImaginationModel.build(8, 5, 3, alpha=0.0, eta=1.0, rng=np.random.default_rng(1))
        relabeled = [o.model_copy(update={"category": 1000 + o.category}) for o in scene.objects]
        for original, renamed in zip(scene.objects, relabeled):
            assert np.array_equal(encode(model, original.v), encode(model, renamed.v))
            assert np.array_equal(decode(model, encode(model, original.v)), decode(model, encode(model, renamed.v)))

    def test_checkpoint_round_trip(self, tmp_path, rng):
        model = tiny_model(2, head_categories=[3, 5], class_weights=np.array([0.5, 1.5]))
        loaded = ImaginationModel.load(model.save(tmp_path / "img.ckpt", kind="imagination:oracle"))
        v = rng.normal(size=6)
        assert np.array_equal(encode(loaded, v), encode(model, v))
        assert loaded.head_categories == [3, 5]
        assert np.array_equal(loaded.class_weights, [0.5, 1.5])


class TestCompositeLoss:
    """L_IMG = L_REC + alpha * L_REG (+ auxiliary head)"""

    def test_alpha_zero_is_reconstruction(self):
        rng = np.random.default_rng(0)
        model = tiny_model(0, alpha=0.0)
        scene = scene_of([1, 2], rng.normal(size=(2, 6)))
        loss, _ = imagination_loss(model, scene, 0, rng, negative=1)
        v_tilde = decode(model, encode(model, scene.objects[0].v))
        expected, _ = reconstruction_loss(scene.objects[0].v, scene.objects[1].v, v_tilde, model.eta)
        assert loss == pytest.approx(expected)

    def test_zero_model_constructed_symmetry(self):
        """Test that ||v_i|| == ||v_j|| makes a zero reconstruction equidistant, so loss == eta"""
        model = ImaginationModel.build(6, 5, 3, alpha=0.3, eta=1.0, rng=None)
        v_i = np.array([1.0, 0, 0, 0, 0, 0])
        v_j = np.array([0, 1.0, 0, 0, 0, 0])
        loss, _ = imagination_loss(model, scene_of([1, 2], [v_i, v_j]), 0, np.random.default_rng(0), negative=1)
        assert loss == pytest.approx(1.0)

    @pytest.mark.parametrize("seed", range(20))
    def test_gradients_match_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        model = tiny_model(seed, alpha=0.05)
        anchors = rng.normal(size=(3, 6))
        negatives = rng.normal(size=(3, 6))

        def loss(params):
            probe = model.copy()
            probe.load_parameters(params)
            return batch_imagination_loss(probe, anchors, negatives)[0]

        _, analytic, _ = batch_imagination_loss(model, anchors, negatives)
        numeric = finite_diff_grad(loss, model.named_parameters())
        assert relative_error(analytic, numeric) < 1e-4

    @pytest.mark.parametrize("seed", range(5))
    def test_gradients_with_category_head(self, seed):
        rng = np.random.default_rng(100 + seed)
        model = tiny_model(seed, head_categories=[0, 1, 2], class_weights=np.array([0.5, 1.0, 1.5]))
        anchors = rng.normal(size=(4, 6))
        negatives = rng.normal(size=(4, 6))
        targets = np.array([0, 2, 1, 2])

        def loss(params):
            probe = model.copy()
            probe.load_parameters(params)
            return batch_imagination_loss(probe, anchors, negatives, targets)[0]

        _, analytic, _ = batch_imagination_loss(model, anchors, negatives, targets)
        assert relative_error(analytic, finite_diff_grad(loss, model.named_parameters())) < 1e-4

    def test_regularizer_adds_alpha_times_norms(self):
        """Test L_IMG(alpha) - L_IMG(0) == alpha * (mean ||z|| + ||theta||)"""
        rng = np.random.default_rng(0)
        model = tiny_model(0, alpha=0.5)
        plain = model.copy()
        plain.alpha = 0.0
        anchors, negatives = rng.normal(size=(2, 3, 6))
        z = encode(model, anchors)
        theta = np.concatenate([p.ravel() for p in model.decoder.named_parameters().values()])
        expected = 0.5 * (np.mean(np.linalg.norm(z, axis=1)) + np.linalg.norm(theta))
        difference = batch_imagination_loss(model, anchors, negatives)[0] - batch_imagination_loss(plain, anchors, negatives)[0]
        assert difference == pytest.approx(expected)

    def test_finetune_without_negatives_is_task_only(self, rng):
        model = tiny_model(0)
        v = rng.normal(size=(2, 6))
        loss, grads = finetune_grads(model, v, np.ones((2, 3)), None)
        assert loss == 0.0
        assert all(name.startswith("imagination.encoder.") for name in grads)


class TestInverseFrequencyWeights:
    def test_mean_one_over_present_classes(self):
        weights = inverse_frequency_weights([0, 0, 0, 1], 3)
        assert weights[2] == 0.0
        assert weights[:2].mean() == pytest.approx(1.0)
        assert weights[1] == pytest.approx(3 * weights[0])


class TestTraining:
    def test_zero_learning_rate_keeps_parameters(self, splits):
        config = tiny_config(lr=0.0, imagination_epochs=1)
        model = build_imagination(config, 8, np.random.default_rng(0))
        before = model.snapshot()
        train_imagination(model, splits["train"][:1], config)
        for name, value in model.named_parameters().items():
            assert np.array_equal(value, before[name])

    def test_history_has_one_row_per_epoch(self, splits):
        config = tiny_config(imagination_epochs=3, patience=0)
        model = build_imagination(config, 8, np.random.default_rng(0))
        _, history = train_imagination(model, splits["train"], config, splits["val"])
        assert len(history) == 3
        assert "val_hinge_rate" in history.rows[0]

    def test_validation_loss_ignores_category_head(self, vocab, splits):
        """Test that attaching the auxiliary head leaves validation L_IMG and hinge rate unchanged"""
        plain = ImaginationModel.build(vocab.d_o, 8, 4, alpha=0.01, eta=1.0, rng=np.random.default_rng(6))
        headed = ImaginationModel.build(vocab.d_o, 8, 4, alpha=0.01, eta=1.0, rng=np.random.default_rng(6),
                                        head_categories=sorted(vocab.in_domain), lambda_cat=1.0)
        assert headed.category_head is not None
        v = splits["val"][0].objects[0].v
        assert np.array_equal(encode(plain, v), encode(headed, v))
        assert evaluate_imagination(plain, splits["val"], np.random.default_rng(0)) == \
            evaluate_imagination(headed, splits["val"], np.random.default_rng(0))

    def test_role_alpha(self):
        config = tiny_config(oracle_alpha=1e-7, guesser_alpha=1e-5, alpha=1e-3)
        assert build_imagination(config, 8, np.random.default_rng(0), role="oracle").alpha == 1e-7
        assert build_imagination(config, 8, np.random.default_rng(0), role="guesser").alpha == 1e-5
        assert build_imagination(config, 8, np.random.default_rng(0)).alpha == 1e-3

    def test_empty_training_set(self):
        config = tiny_config()
        with pytest.raises(ConfigError):
            train_imagination(build_imagination(config, 8, np.random.default_rng(0)), [], config)

    def test_nearest_centroid(self):
        x = np.array([[0.0], [0.1], [5.0], [5.1]])
        y = np.array([1, 1, 2, 2])
        assert nearest_centroid_accuracy(x, y, np.array([[0.2], [4.9]]), np.array([1, 2])) == 1.0


@pytest.mark.slow
class TestTrainedEmbeddings:
    """Statistical properties after training on the default-size world"""

    @pytest.fixture(scope="class")
    def trained(self):
        from src.world import build_splits, generate_world

        config = tiny_config(
            n_supercategories=6, n_categories=30, d_o=32, nd_fraction=0.2, od_fraction=0.1,
            prototype_min_distance=2.0, min_objects=3, max_objects=10, train_scenes=600, val_scenes=100,
            d_z=16, imagination_hidden=32, imagination_epochs=15, batch_size=64, patience=4, lr=1e-3,
        )
        vocab = generate_world(config, 0)
        splits = build_splits(vocab, config, 0)
        model = build_imagination(config, 32, np.random.default_rng(0))
        model, history = train_imagination(model, splits["train"], config, splits["val"])
        return model, history, splits, vocab

    def test_loss_decreases(self, trained):
        _, history, _, _ = trained
        losses = history.column("train_loss")
        assert losses[-1] < losses[0]

    def test_hinge_rate_below_half(self, trained):
        _, history, _, _ = trained
        assert min(history.column("val_hinge_rate")) < 0.5

    def test_nearest_centroid_beats_chance(self, trained):
        from src.imagination import encode_objects

        model, _, splits, vocab = trained
        z_train, _, y_train = encode_objects(model, splits["train"])
        z_val, _, y_val = encode_objects(model, splits["val"])
        accuracy = nearest_centroid_accuracy(z_train, y_train, z_val, y_val)
        assert accuracy >= 5.0 / len(vocab.in_domain)
