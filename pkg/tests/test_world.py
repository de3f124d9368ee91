"""
Unit Tests for the Synthetic World
Vocabulary partition, scenes, spatial features and JSONL persistence
"""

import numpy as np
import pytest

from src.config import named_rng
from src.errors import ConfigError, DependencyError, InvariantError, SceneParseError
from src.world import (
    SPLITS,
    build_split,
    generate_scene,
    generate_world,
    in_location,
    location_sector,
    read_scenes,
    read_vocabulary,
    spatial_features,
    write_scenes,
    write_vocabulary,
)
from tests.conftest import tiny_config


class TestVocabulary:
    """Category vocabulary and zero-shot partition"""

    def test_partition_covers_all_categories(self, vocab):
        ids = {c.id for c in vocab.categories}
        parts = [set(vocab.in_domain), set(vocab.near_domain_heldout), set(vocab.out_domain_heldout)]
        assert set().union(*parts) == ids
        assert sum(len(p) for p in parts) == len(ids)

    def test_heldout_counts_follow_fractions(self, vocab):
        """Test 12 categories at 0.25/0.25 give 3 near-domain and 3 out-of-domain"""
        assert len(vocab.near_domain_heldout) == 3
        assert len(vocab.out_domain_heldout) == 3

    def test_near_domain_has_in_domain_sibling(self, vocab):
        in_supers = {vocab.category(c).supercategory for c in vocab.in_domain}
        for cid in vocab.near_domain_heldout:
            assert vocab.category(cid).supercategory in in_supers

    def test_out_domain_supercategories_are_unseen(self, vocab):
        in_supers = {vocab.category(c).supercategory for c in vocab.in_domain}
        for cid in vocab.out_domain_heldout:
            assert vocab.category(cid).supercategory not in in_supers

    def test_same_seed_same_world(self, config):
        a = generate_world(config, 3)
        b = generate_world(config, 3)
        assert a.model_dump_json() == b.model_dump_json()

    def test_different_seed_different_prototypes(self, config):
        a = generate_world(config, 3)
        b = generate_world(config, 4)
        assert not np.allclose(a.categories[0].prototype, b.categories[0].prototype)

    def test_animacy_from_name_bank(self, vocab):
        person = next(s for s in vocab.supercategories if s.name == "person")
        assert person.animate
        for category in vocab.categories:
            assert category.animate == vocab.supercategory(category.supercategory).animate

    def test_infeasible_partition_raises(self):
        """Test that more near-domain categories than the supercategories can spare is rejected"""
        with pytest.raises(ConfigError):
            generate_world(tiny_config(n_categories=4, n_supercategories=4, nd_fraction=0.75, od_fraction=0.0), 0)

    def test_prototype_spacing_unreachable(self):
        with pytest.raises(ConfigError):
            generate_world(tiny_config(prototype_min_distance=100.0), 0)


class TestSpatialFeatures:
    def test_full_image_box(self):
        s = spatial_features((0, 0, 640, 480), 640, 480)
        assert np.allclose(s, [-1, -1, 1, 1, 0, 0, 2, 2])

    def test_coordinates_in_range(self, splits):
        for scene in splits["train"]:
            for obj in scene.objects:
                assert np.all(obj.s[:6] >= -1) and np.all(obj.s[:6] <= 1)
                assert np.all(obj.s[6:] > 0) and np.all(obj.s[6:] <= 2)

    @pytest.mark.parametrize("bbox", [(0, 0, 0, 10), (600, 0, 100, 10), (-1, 0, 10, 10)])
    def test_invalid_boxes(self, bbox):
        with pytest.raises(InvariantError):
            spatial_features(bbox, 640, 480)

    def test_locations(self):
        top_left = spatial_features((0, 0, 100, 100), 640, 480)
        assert in_location(top_left, "top left", 0.3)
        assert in_location(top_left, "left", 0.3)
        assert not in_location(top_left, "bottom", 0.3)
        centered = spatial_features((300, 220, 40, 40), 640, 480)
        assert in_location(centered, "center", 0.3)

    def test_sectors(self):
        assert location_sector(spatial_features((300, 220, 40, 40), 640, 480), 0.3) == "center"
        assert location_sector(spatial_features((0, 200, 60, 60), 640, 480), 0.3) == "left"
        assert location_sector(spatial_features((300, 400, 40, 60), 640, 480), 0.3) == "bottom"


class TestScenes:
    """Scene sampling"""

    def test_in_domain_splits_use_in_domain_categories(self, splits, vocab):
        allowed = set(vocab.in_domain)
        for name in ("train", "val", "test"):
            for scene in splits[name]:
                assert {obj.category for obj in scene.objects} <= allowed

    def test_zero_shot_targets_come_from_heldout(self, splits, vocab):
        for scene in splits["nd_test"]:
            assert scene.target_object.category in vocab.near_domain_heldout
        for scene in splits["od_test"]:
            assert scene.target_object.category in vocab.out_domain_heldout
            distractors = [o for k, o in enumerate(scene.objects) if k != scene.target]
            assert all(o.category in vocab.in_domain for o in distractors)

    def test_two_distinct_categories(self, splits):
        for scenes in splits.values():
            for scene in scenes:
                assert scene.category_count() >= 2

    def test_object_count_bounds(self, splits, config):
        for scene in splits["train"]:
            assert config.min_objects <= len(scene.objects) <= config.max_objects

    def test_single_category_world_cannot_make_scenes(self, vocab, config):
        with pytest.raises(InvariantError):
            generate_scene(vocab, config, np.random.default_rng(0), allowed=[vocab.in_domain[0]])

    def test_split_streams_are_independent(self, vocab, config):
        """Test that the test split does not depend on the train split size"""
        bigger = config.model_copy(update={"train_scenes": config.train_scenes + 5})
        a = build_split(vocab, config, 0, "test")
        b = build_split(vocab, bigger, 0, "test")
        assert [s.model_dump_json() for s in a] == [s.model_dump_json() for s in b]

    def test_all_splits_built(self, splits):
        assert set(splits) == set(SPLITS)


class TestPersistence:
    def test_scene_files_are_byte_identical_on_rewrite(self, tmp_path, splits):
        write_scenes(tmp_path / "a.jsonl", splits["train"])
        write_scenes(tmp_path / "b.jsonl", read_scenes(tmp_path / "a.jsonl"))
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()

    def test_vocabulary_round_trip(self, tmp_path, vocab):
        write_vocabulary(tmp_path / "world.json", vocab)
        loaded = read_vocabulary(tmp_path / "world.json")
        assert loaded.in_domain == vocab.in_domain
        assert np.array_equal(loaded.categories[2].prototype, vocab.categories[2].prototype)

    def test_malformed_line_reports_line_number(self, tmp_path, splits):
        path = tmp_path / "bad.jsonl"
        write_scenes(path, splits["val"][:2])
        with open(path, "a", encoding="utf-8") as f:
            f.write("{not json}\n")
        with pytest.raises(SceneParseError) as excinfo:
            read_scenes(path)
        assert excinfo.value.line_number == 3

    def test_missing_file(self, tmp_path):
        with pytest.raises(DependencyError):
            read_scenes(tmp_path / "nope.jsonl")

    def test_named_streams_differ(self):
        assert named_rng(0, "world").random() != named_rng(0, "eval").random()
