"""Validation of the reference experiment, run end to end through the CLI.

A session fixture runs every subcommand with the reference config
(``conf/base/parameters.yml``: 5 classes in 8-D, 20,000 seeds, 10 levels).
The tests then check the headline bounds on the written artifacts. Set
``LATENTLENS_REFERENCE_OUT`` to reuse a directory; stages that already
completed there with the same config are skipped by the run manifest.
"""

import json
import os
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from scipy.stats import spearmanr

from latentlens.cli import EXIT_OK, main
from latentlens.learning.cross_level import AccuracyMatrix
from latentlens.pool.operations import level_boundary_threshold
from latentlens.pool.records import load_pool

REFERENCE_CONFIG = Path(__file__).resolve().parents[2] / "conf" / "base" / "parameters.yml"

RUNS = [
    ["pool"],
    ["heatmap"],
    ["heatmap", "--sampler", "ddpm"],
    ["structure"],
    ["predict"],
    ["condgen"],
    ["verify"],
]


@pytest.fixture(scope="session")
def reference_out(tmp_path_factory) -> Path:
    """Output directory of a complete reference run."""
    out = os.environ.get("LATENTLENS_REFERENCE_OUT")
    out = Path(out) if out else tmp_path_factory.mktemp("reference")
    for command in RUNS:
        code = main([command[0], "--config", str(REFERENCE_CONFIG), "--out", str(out), *command[1:]])
        assert code == EXIT_OK, f"latentlens {' '.join(command)} exited with {code}"
    return out


def _json(path: Path):
    return json.loads(path.read_text(encoding="utf-8"))


def _matrix(out: Path, sampler: str, trainer: str) -> AccuracyMatrix:
    return AccuracyMatrix.from_frame(pd.read_csv(out / sampler / f"heatmap_{trainer}.csv"))


@pytest.mark.slow
class TestReferencePool:
    """Validate the stored seed pool."""

    @pytest.fixture(scope="class")
    def pool(self, reference_out):
        return load_pool(reference_out / "ddim" / "pool.csv")

    def test_balanced_and_stratified(self, pool):
        """Every label appears equally often and every level has records."""
        assert len(set(pool.counts()["label"].values())) == 1
        assert pool.n_levels == 10

    def test_confidence_falls_with_level(self, pool):
        """Mean confidence does not increase from level 1 to the last level."""
        means = pool.frame.groupby("level")["confidence"].mean().sort_index()
        assert means.is_monotonic_decreasing

    def test_manifest_matches_pool(self, pool, reference_out):
        """The pool manifest counts agree with the file."""
        manifest = _json(reference_out / "ddim" / "pool.manifest.json")
        assert manifest["n_records"] == len(pool)


@pytest.mark.slow
class TestReferenceSeparability:
    """LDA score falls with level while the PCA variance stays flat."""

    @pytest.fixture(scope="class")
    def scores(self, reference_out):
        metrics = pd.read_csv(reference_out / "ddim" / "structure_metrics.csv")
        seed = metrics[(metrics["space"] == "seed") & (metrics["level"] != "all")]
        return seed.assign(level=seed["level"].astype(int)).set_index("level").sort_index()

    def test_lda_score_trend(self, scores):
        assert spearmanr(scores.index, scores["lda_score"]).correlation <= -0.7

    def test_lda_score_drop(self, scores):
        assert scores.loc[1, "lda_score"] - scores.loc[10, "lda_score"] >= 0.10

    def test_pca_variance_is_flat(self, scores):
        assert scores["pca_variance"].max() - scores["pca_variance"].min() <= 0.02


@pytest.mark.slow
class TestReferenceHeatmaps:
    """Cross-level accuracy of the deterministic sampler and the stochastic control."""

    def test_deterministic_diagonal_contrast(self, reference_out):
        matrix = _matrix(reference_out, "ddim", "mlp")
        assert matrix.cell(1, 1) - matrix.cell(10, 10) >= 0.15

    def test_deterministic_block_contrast(self, reference_out):
        matrix = _matrix(reference_out, "ddim", "mlp")
        assert matrix.accuracies[:3, :3].mean() - matrix.accuracies[-3:, -3:].mean() >= 0.10

    def test_stochastic_control_is_flat(self, reference_out):
        matrix = _matrix(reference_out, "ddpm", "mlp")
        assert abs(matrix.cell(1, 1) - matrix.cell(10, 10)) <= 0.05

    def test_trainers_agree_cellwise(self, reference_out):
        mlp = _matrix(reference_out, "ddim", "mlp")
        lda = _matrix(reference_out, "ddim", "lda")
        assert np.max(np.abs(mlp.accuracies - lda.accuracies)) <= 0.15


@pytest.mark.slow
class TestReferenceConfidenceCurve:
    def test_accuracy_rises_with_predicted_confidence(self, reference_out):
        curve = pd.read_csv(reference_out / "ddim" / "confidence_curve.csv")
        assert len(curve) == 10
        assert curve["count"].sum() == 5100
        assert spearmanr(curve["bin"], curve["accuracy"]).correlation >= 0.9


@pytest.mark.slow
def test_filtering_gap(reference_out):
    """Level-1 training beats training on the whole pool."""
    gap = _json(reference_out / "ddim" / "filtering_gap.json")
    assert gap["level_1"]["accuracy"] - gap["unconditional"]["accuracy"] >= 0.10


@pytest.mark.slow
class TestReferenceConditionalGeneration:
    @pytest.fixture(scope="class")
    def report(self, reference_out):
        return _json(reference_out / "ddim" / "condgen_report.json")

    def test_threshold_is_level_boundary(self, report, reference_out):
        pool = load_pool(reference_out / "ddim" / "pool.csv")
        assert report["threshold"] == pytest.approx(level_boundary_threshold(pool))

    def test_verified_accuracy_per_class(self, report):
        assert len(report["classes"]) == 5
        for target, entry in report["classes"].items():
            assert entry["verified_accuracy"] >= 0.95, target

    def test_generator_ran_once_per_accepted_seed(self, report):
        assert report["generator_calls"] == sum(r["n_accepted"] for r in report["classes"].values())

    def test_diversity_against_true_data(self, report, reference_out):
        reference = _json(reference_out / "ddim" / "diversity_reference.json")["unconditional"]
        for target, entry in report["classes"].items():
            assert entry["diversity"] >= 0.5 * reference[target], target


@pytest.mark.slow
class TestReferenceVerification:
    @pytest.fixture(scope="class")
    def report(self, reference_out):
        return _json(reference_out / "verify" / "verification_report.json")

    def test_every_check_passed(self, report):
        assert report["status"] == "passed", report.get("failed_checks")

    def test_class_transport(self, report):
        transport = report["class_transport"]
        assert transport["roundtrip_class_agreement"] >= 0.99
        assert transport["latent_nn_purity"] >= 0.99

    def test_gradient_gate(self, report):
        gate = {name: c for name, c in report["checks"].items() if name.startswith("gradient_")}
        assert gate
        assert all(c["value"] <= 1e-4 for c in gate.values())
