"""Tests for the per-level separability sweep and the overlay."""

import numpy as np
import pytest

from latentlens.structure.sweep import METRIC_COLUMNS, StructureError, balanced_subsample, overlay, structure_sweep


class TestStructureSweep:
    @pytest.fixture(scope="class")
    def report(self, small_pool):
        return structure_sweep(small_pool, ["seed", "sample"], np.random.default_rng(0), workers=1)

    def test_one_row_per_level_and_space(self, report):
        assert list(report.metrics.columns) == METRIC_COLUMNS
        assert len(report.metrics) == 8
        assert set(report.metrics["level"]) == {"1", "2", "3", "all"}

    def test_scores_in_range(self, report):
        assert report.metrics["lda_score"].between(0, 1).all()
        assert report.metrics["pca_variance"].between(0, 1).all()

    def test_sample_space_is_separable(self, report):
        sample = report.lda_scores("sample")
        assert (sample >= 0.85).all()

    def test_confident_seeds_are_most_separable(self, report):
        seed = report.lda_scores("seed")
        assert list(seed.index) == [1, 2, 3]
        assert seed.loc[1] >= seed.loc[3]

    def test_embeddings_and_coordinates(self, report, small_pool):
        assert set(report.embeddings["kind"]) == {"lda", "raw"}
        assert {"ld_0", "ld_1"} <= set(report.lda_coordinates.columns)
        per_level = report.lda_coordinates[
            (report.lda_coordinates["space"] == "seed") & (report.lda_coordinates["level"] == "all")
        ]
        assert len(per_level) == len(small_pool)

    def test_reproducible(self, small_pool, report):
        again = structure_sweep(small_pool, ["seed", "sample"], np.random.default_rng(0), workers=1)
        np.testing.assert_array_equal(again.metrics["lda_score"], report.metrics["lda_score"])

    def test_unknown_space(self, small_pool):
        with pytest.raises(ValueError, match="Unknown spaces"):
            structure_sweep(small_pool, ["noise"], np.random.default_rng(0))

    def test_unstratified_pool(self, make_pool):
        pool = make_pool(np.repeat([0, 1], 10), np.linspace(0, 1, 20), 2)
        with pytest.raises(StructureError):
            structure_sweep(pool, ["seed"], np.random.default_rng(0))


def test_balanced_subsample(small_pool):
    sub = balanced_subsample(small_pool, 20, np.random.default_rng(0))
    assert sub.counts()["label"] == {"0": 20, "1": 20, "2": 20}
    assert sub.frame["index"].is_monotonic_increasing
    assert balanced_subsample(small_pool, None, np.random.default_rng(0)) is small_pool


class TestOverlay:
    def test_low_confidence_records_sit_between_classes(self, small_pool):
        high, low = small_pool.select(level=1), small_pool.select(level=3)
        result = overlay(high.seeds(), high.labels(), low.seeds(), low.labels())
        assert set(result.embedding["set"]) == {"high", "low"}
        assert len(result.embedding) == len(high) + len(low)
        assert result.margin_stats["low"]["median"] < result.margin_stats["high"]["median"]

    def test_both_sets_share_the_high_confidence_frame(self):
        rng = np.random.default_rng(3)
        y = np.repeat(np.arange(4), 50)
        means = 4.0 * np.eye(8)[:4]
        X_high = means[y] + rng.standard_normal((200, 8))
        subset = np.arange(0, 200, 3)
        result = overlay(X_high, y, X_high[subset], y[subset])
        coords = result.embedding[["e0", "e1"]].to_numpy()
        high, low = coords[:200], coords[200:]
        np.testing.assert_allclose(low, high[subset], atol=1e-10)

    def test_single_class_margins_are_one(self):
        rng = np.random.default_rng(0)
        result = overlay(rng.standard_normal((10, 2)), np.zeros(10), rng.standard_normal((5, 2)), np.zeros(5))
        assert result.margin_stats["high"]["median"] == 1.0
        assert not result.interstitial()

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            overlay(np.zeros((3, 2)), [0, 1, 0], np.zeros((3, 3)), [0, 1, 0])
