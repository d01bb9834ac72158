"""Tests for the per-directory run manifest."""

import json

import pytest

from latentlens import __version__
from latentlens.monitoring.manifest import MANIFEST_NAME, RunManifest


@pytest.fixture
def manifest(tmp_path):
    """Empty manifest in a fresh output directory."""
    return RunManifest.load(tmp_path)


def _touch(path):
    path.write_text("x", encoding="utf-8")
    return path


class TestRunManifest:
    def test_load_missing_is_empty(self, manifest, tmp_path):
        assert manifest.stages == {}
        assert manifest.path == tmp_path / MANIFEST_NAME
        assert not manifest.path.exists()

    def test_completed_stage_is_complete(self, manifest, tmp_path):
        output = _touch(tmp_path / "pool.csv")
        manifest.start("pool", "abc")
        manifest.complete("pool", [output])
        assert manifest.is_complete("pool", "abc")
        assert not manifest.is_complete("pool", "def")
        assert not manifest.is_complete("cross", "abc")

    def test_deleted_output_invalidates(self, manifest, tmp_path):
        output = _touch(tmp_path / "pool.csv")
        manifest.start("pool", "abc")
        manifest.complete("pool", [output])
        output.unlink()
        assert not manifest.is_complete("pool", "abc")

    def test_missing_output_fails_stage(self, manifest, tmp_path):
        manifest.start("pool", "abc")
        manifest.complete("pool", [tmp_path / "never.csv"])
        record = manifest.stages["pool"]
        assert record.status == "failed"
        assert "outputs missing" in record.error
        assert not manifest.is_complete("pool", "abc")

    def test_fail_records_error_and_duration(self, manifest):
        manifest.start("verify", "abc")
        manifest.fail("verify", "purity below tolerance")
        record = manifest.stages["verify"]
        assert record.status == "failed"
        assert record.error == "purity below tolerance"
        assert record.duration_seconds >= 0

    def test_round_trip(self, manifest, tmp_path):
        output = _touch(tmp_path / "pool.csv")
        manifest.start("pool", "abc")
        manifest.complete("pool", [output])
        restored = RunManifest.load(tmp_path)
        assert restored.digest == "abc"
        assert restored.stages == manifest.stages
        assert restored.is_complete("pool", "abc")

    def test_saved_document(self, manifest, tmp_path):
        manifest.start("pool", "abc")
        data = json.loads((tmp_path / MANIFEST_NAME).read_text(encoding="utf-8"))
        assert data["stages"]["pool"]["status"] == "running"
        assert data["stages"]["pool"]["version"] == __version__
        assert not list(tmp_path.glob(".manifest-*"))

    def test_other_version_is_not_complete(self, manifest, tmp_path):
        output = _touch(tmp_path / "pool.csv")
        manifest.start("pool", "abc")
        manifest.complete("pool", [output])
        manifest.stages["pool"].version = "0.0.0"
        assert not manifest.is_complete("pool", "abc")
