"""Tests for the seed pool container and its CSV persistence."""

import json

import numpy as np
import pytest

from latentlens.pool.records import PoolParseError, SeedPool, load_pool, manifest_path, pool_columns, save_pool


class TestSeedPool:
    def test_columns_must_be_ordered(self, make_pool):
        frame = make_pool([0, 1], [0.5, 0.5], 2).frame
        with pytest.raises(ValueError, match="out of order"):
            SeedPool(frame[list(reversed(frame.columns))])

    def test_missing_meta_column(self, make_pool):
        frame = make_pool([0, 1], [0.5, 0.5], 2).frame.drop(columns=["confidence"])
        with pytest.raises(ValueError, match="missing"):
            SeedPool(frame)

    def test_shape_properties(self, small_pool):
        assert small_pool.dimension == 2
        assert small_pool.n_classes == 3
        assert small_pool.n_levels == 3
        assert small_pool.seeds().shape == (len(small_pool), 2)
        assert small_pool.posteriors().shape == (len(small_pool), 3)

    def test_select_filters_and_sorts(self, small_pool):
        subset = small_pool.select(level=2, split="test", label=1)
        assert len(subset) > 0
        assert (subset.frame["level"] == 2).all()
        assert (subset.frame["split"] == "test").all()
        assert (subset.labels() == 1).all()
        assert subset.frame["index"].is_monotonic_increasing

    def test_features_by_space(self, small_pool):
        np.testing.assert_array_equal(small_pool.features("sample"), small_pool.samples())
        with pytest.raises(ValueError, match="space"):
            small_pool.features("noise")

    def test_typed_records(self, small_pool):
        record = next(small_pool.records())
        assert record.posterior.n_classes == 3
        assert record.level in (1, 2, 3)
        assert record.split in ("train", "test")

    def test_empty_pool(self):
        pool = SeedPool.empty(3, 4)
        assert len(pool) == 0
        assert pool.dimension == 3 and pool.n_classes == 4
        assert pool.n_levels == 0


class TestPersistence:
    def test_save_load_is_bit_exact(self, small_pool, tmp_path):
        path = save_pool(small_pool, tmp_path / "pool.csv")
        restored = load_pool(path)
        assert restored.frame.equals(small_pool.frame)
        assert restored.provenance == small_pool.provenance

    def test_unstratified_cells_stay_empty(self, make_pool, tmp_path):
        path = save_pool(make_pool([0, 1, 1], [0.25, 0.5, 0.75], 2), tmp_path / "raw.csv")
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0].startswith("index,split,level,label,confidence,z_0")
        assert lines[1].startswith("0,,,0,0.25,")
        assert load_pool(path).frame["level"].isna().all()

    def test_manifest_carries_counts(self, small_pool, tmp_path):
        path = save_pool(small_pool, tmp_path / "pool.csv")
        manifest = json.loads(manifest_path(path).read_text(encoding="utf-8"))
        assert manifest_path(path).name == "pool.manifest.json"
        assert manifest["n_records"] == len(small_pool)
        assert manifest["counts"] == small_pool.counts()

    def test_bad_header(self, tmp_path):
        path = tmp_path / "pool.csv"
        path.write_text("index,label\n0,1\n", encoding="utf-8")
        with pytest.raises(PoolParseError) as excinfo:
            load_pool(path)
        assert excinfo.value.line == 1

    @pytest.mark.parametrize(
        "column, value",
        [("label", "x"), ("level", "1.5"), ("split", "validation"), ("z_0", "nan-ish")],
    )
    def test_bad_value_reports_line(self, make_pool, tmp_path, column, value):
        frame = make_pool([0, 1, 0], [0.1, 0.2, 0.3], 2).frame.astype(object)
        frame.loc[1, column] = value
        path = tmp_path / "pool.csv"
        frame.to_csv(path, index=False)
        with pytest.raises(PoolParseError) as excinfo:
            load_pool(path)
        assert excinfo.value.line == 3

    def test_empty_file(self, tmp_path):
        path = tmp_path / "pool.csv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(PoolParseError, match="empty"):
            load_pool(path)


def test_pool_columns():
    assert pool_columns(1, 2) == ["index", "split", "level", "label", "confidence", "z_0", "x_0", "p_0", "p_1"]
    assert manifest_path("out/ddim/pool.csv").as_posix() == "out/ddim/pool.manifest.json"
