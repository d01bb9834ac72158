"""Tests for pool generation, balancing, stratification and splitting."""

import numpy as np
import pytest

from latentlens.flow.integrators import IntegratorSpec
from latentlens.pool.operations import (
    BalanceError,
    SplitError,
    StratificationError,
    balance_pool,
    build_pool,
    draw_seed,
    label_and_confidence,
    labels_and_confidences,
    level_boundary_threshold,
    pool_summary,
    split_train_test,
    stage_stream,
    stratify,
)

SPEC = IntegratorSpec("rk4", 16)


class TestStreams:
    def test_seed_depends_only_on_master_and_index(self):
        np.testing.assert_array_equal(draw_seed(7, 3, 4), draw_seed(7, 3, 4))
        assert not np.array_equal(draw_seed(7, 3, 4), draw_seed(7, 4, 4))
        assert not np.array_equal(draw_seed(7, 3, 4), draw_seed(8, 3, 4))

    def test_stage_streams_differ_by_name(self):
        a = stage_stream(7, "balance").standard_normal(3)
        b = stage_stream(7, "split").standard_normal(3)
        assert not np.array_equal(a, b)


class TestLabelAndConfidence:
    def test_margin_and_tie_break(self):
        assert label_and_confidence([0.2, 0.5, 0.3]) == (1, pytest.approx(0.2))
        assert label_and_confidence([0.5, 0.5]) == (0, 0.0)

    def test_single_class_confidence_is_top_probability(self):
        labels, confidences = labels_and_confidences(np.array([[1.0]]))
        assert labels.tolist() == [0]
        assert confidences.tolist() == [1.0]


class TestBuildPool:
    def test_worker_and_chunk_independent(self, separated_mixture, linear_schedule):
        a = build_pool(separated_mixture, linear_schedule, 40, "ddim", SPEC, master_seed=3, chunk_size=7, workers=1)
        b = build_pool(separated_mixture, linear_schedule, 40, "ddim", SPEC, master_seed=3, chunk_size=16, workers=2)
        assert a.frame.equals(b.frame)

    def test_records_are_labelled_by_posterior(self, separated_mixture, linear_schedule):
        pool = build_pool(separated_mixture, linear_schedule, 30, "ddim", SPEC, master_seed=1, workers=1)
        assert len(pool) == 30
        assert pool.frame["index"].tolist() == list(range(30))
        np.testing.assert_array_equal(pool.labels(), np.argmax(pool.posteriors(), axis=1))
        np.testing.assert_allclose(pool.posteriors().sum(axis=1), 1.0)
        assert pool.frame["level"].isna().all()
        assert pool.provenance["sampler"] == "ddim"
        assert pool.provenance["n_excluded"] == 0

    def test_seeds_match_substreams(self, separated_mixture, linear_schedule):
        pool = build_pool(separated_mixture, linear_schedule, 5, "ddim", SPEC, master_seed=9, workers=1)
        np.testing.assert_array_equal(pool.seeds()[4], draw_seed(9, 4, 2))

    def test_ddpm_noise_stream(self, separated_mixture, linear_schedule):
        same = [
            build_pool(separated_mixture, linear_schedule, 10, "ddpm", SPEC, master_seed=2, noise=0, workers=1)
            for _ in range(2)
        ]
        other = build_pool(separated_mixture, linear_schedule, 10, "ddpm", SPEC, master_seed=2, noise=1, workers=1)
        np.testing.assert_array_equal(same[0].samples(), same[1].samples())
        np.testing.assert_array_equal(same[0].seeds(), other.seeds())
        assert not np.array_equal(same[0].samples(), other.samples())

    def test_fresh_noise_changes_labels_of_the_same_seeds(self, separated_mixture, linear_schedule):
        first, second = (
            build_pool(separated_mixture, linear_schedule, 200, "ddpm", SPEC, master_seed=3, noise=noise, workers=1)
            for noise in (0, 1)
        )
        np.testing.assert_array_equal(first.seeds(), second.seeds())
        agreement = np.mean(first.labels() == second.labels())
        assert agreement < 0.9

    def test_deterministic_sampler_keeps_labels(self, separated_mixture, linear_schedule):
        first, second = (
            build_pool(separated_mixture, linear_schedule, 50, "ddim", SPEC, master_seed=3, noise=noise, workers=1)
            for noise in (0, 1)
        )
        np.testing.assert_array_equal(first.labels(), second.labels())

    @pytest.mark.parametrize("n, sampler", [(0, "ddim"), (10, "sde")])
    def test_invalid_arguments(self, separated_mixture, linear_schedule, n, sampler):
        with pytest.raises(ValueError):
            build_pool(separated_mixture, linear_schedule, n, sampler, SPEC, master_seed=0)


class TestBalance:
    def test_down_to_smallest_label(self, make_pool):
        pool = make_pool([0] * 10 + [1] * 4 + [2] * 6, np.linspace(0, 1, 20), 3)
        balanced = balance_pool(pool, np.random.default_rng(0))
        assert balanced.counts()["label"] == {"0": 4, "1": 4, "2": 4}
        assert balanced.frame["index"].is_monotonic_increasing

    def test_balanced_pool_unchanged(self, make_pool):
        pool = make_pool([0, 1, 0, 1], [0.1, 0.2, 0.3, 0.4], 2)
        assert balance_pool(pool, np.random.default_rng(0)) is pool

    def test_missing_class(self, make_pool):
        with pytest.raises(BalanceError) as excinfo:
            balance_pool(make_pool([0, 0, 2], [0.1, 0.2, 0.3], 3), np.random.default_rng(0))
        assert excinfo.value.label == 1


class TestStratify:
    def test_levels_follow_confidence(self, make_pool):
        pool = make_pool([0] * 6, [0.1, 0.9, 0.5, 0.3, 0.7, 0.2], 1)
        levels = stratify(pool, 3).frame["level"].tolist()
        assert levels == [3, 1, 2, 2, 1, 3]

    def test_remainder_goes_to_first_levels(self, make_pool):
        pool = make_pool([0] * 7, np.linspace(1.0, 0.0, 7), 1)
        counts = stratify(pool, 3).counts()["level"]
        assert counts == {"1": 3, "2": 2, "3": 2}

    def test_ties_keep_record_order(self, make_pool):
        pool = make_pool([0] * 4, [0.5] * 4, 1)
        assert stratify(pool, 2).frame["level"].tolist() == [1, 1, 2, 2]

    def test_too_few_records(self, make_pool):
        with pytest.raises(StratificationError):
            stratify(make_pool([0, 0, 1], [0.1, 0.2, 0.3], 2), 2)

    def test_level_boundary_threshold(self, make_pool):
        pool = stratify(make_pool([0] * 4, [0.9, 0.8, 0.4, 0.2], 1), 2)
        assert level_boundary_threshold(pool) == pytest.approx(0.6)


class TestSplit:
    def test_half_up_rounding_per_cell(self, make_pool):
        # every (label, level) cell has 5 records; 0.1 * 5 = 0.5 rounds up to 1
        pool = stratify(make_pool([0] * 10 + [1] * 10, np.tile(np.linspace(1, 0, 10), 2), 2), 2)
        split = split_train_test(pool, 0.1, np.random.default_rng(0))
        tests = split.select(split="test")
        assert len(tests) == 4
        assert tests.counts()["level"] == {"1": 2, "2": 2}

    def test_requires_levels(self, make_pool):
        with pytest.raises(SplitError, match="stratified"):
            split_train_test(make_pool([0, 1], [0.1, 0.2], 2), 0.5, np.random.default_rng(0))

    @pytest.mark.parametrize("fraction", [0.0, 1.0, -0.2])
    def test_fraction_bounds(self, small_pool, fraction):
        with pytest.raises(SplitError):
            split_train_test(small_pool, fraction, np.random.default_rng(0))

    def test_reproducible(self, small_pool):
        a = split_train_test(small_pool, 0.3, np.random.default_rng(4))
        b = split_train_test(small_pool, 0.3, np.random.default_rng(4))
        assert a.frame["split"].equals(b.frame["split"])


def test_pool_summary(small_pool):
    summary = pool_summary(small_pool)
    assert summary["n_records"] == len(small_pool)
    means = [summary["confidence_by_level"][str(level)]["mean"] for level in (1, 2, 3)]
    assert means[0] >= means[1] >= means[2]
