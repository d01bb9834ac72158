"""Empirical accuracy of latent predictions binned by predicted confidence."""

import logging
from dataclasses import dataclass
from functools import partial
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.stats import spearmanr

from latentlens.errors import LatentLensError
from latentlens.flow.integrators import IntegratorSpec, integrate_backward
from latentlens.gmm.mixture import MixtureModel, class_posteriors
from latentlens.gmm.schedule import NoiseSchedule
from latentlens.learning.base import Classifier, margins
from latentlens.parallel import parallel_map

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ["bin", "bin_low", "bin_high", "mean_confidence", "accuracy", "count"]
GENERATION_CHUNK = 512


class CurveError(LatentLensError):
    """Raised for invalid curve arguments or when no seed produced a finite sample."""


@dataclass(frozen=True, eq=False)
class ConfidenceCurve:
    table: pd.DataFrame
    merged_empty_bins: bool
    n_seeds: int
    overall_accuracy: float

    def spearman(self) -> Optional[float]:
        """Rank correlation between bin order and accuracy; ``None`` for fewer than 2 bins."""
        if len(self.table) < 2 or self.table["accuracy"].nunique() < 2:
            return None
        return float(spearmanr(self.table["bin"], self.table["accuracy"]).correlation)

    def summary(self) -> Dict[str, Any]:
        return {
            "n_seeds": self.n_seeds,
            "n_bins": len(self.table),
            "merged_empty_bins": self.merged_empty_bins,
            "overall_accuracy": self.overall_accuracy,
            "spearman": self.spearman(),
        }


def _generated_labels(m: MixtureModel, s: NoiseSchedule, spec: IntegratorSpec, seeds: np.ndarray) -> np.ndarray:
    """Bayes labels of the generated samples, -1 where the trajectory blew up."""
    trajectory = integrate_backward(m, s, seeds, spec, keep_path=False)
    labels = np.full(len(seeds), -1)
    if trajectory.valid.any():
        posteriors = class_posteriors(m, trajectory.final_state[trajectory.valid])
        labels[trajectory.valid] = np.argmax(posteriors, axis=1)
    return labels


def bin_by_confidence(confidences: np.ndarray, correct: np.ndarray, bins: int) -> Tuple[pd.DataFrame, bool]:
    """Equal-count bins over predicted confidence.

    Edges are quantiles of ``confidences``; duplicate edges collapse, and bins
    left empty are merged into their neighbour.

    Returns:
        (table, merged) where ``merged`` flags that at least one bin was merged.
    """
    edges = np.unique(np.quantile(confidences, np.linspace(0.0, 1.0, bins + 1)))
    if len(edges) == 1:
        table = pd.DataFrame(
            [[1, edges[0], edges[0], float(confidences.mean()), float(correct.mean()), len(correct)]],
            columns=CURVE_COLUMNS,
        )
        return table, bins > 1

    assignment = np.clip(np.searchsorted(edges[1:-1], confidences, side="right"), 0, len(edges) - 2)
    groups: List[List[int]] = [[i] for i in range(len(edges) - 1)]
    counts = np.bincount(assignment, minlength=len(edges) - 1)
    merged = bool(len(edges) - 1 < bins)
    # fold empty bins into the following bin (the last one into its predecessor)
    k = 0
    while k < len(groups):
        if sum(counts[i] for i in groups[k]) == 0 and len(groups) > 1:
            target = k + 1 if k + 1 < len(groups) else k - 1
            groups[target] = sorted(groups[target] + groups[k])
            del groups[k]
            merged = True
            continue
        k += 1

    rows = []
    for number, members in enumerate(groups, start=1):
        mask = np.isin(assignment, members)
        rows.append(
            [
                number,
                float(edges[min(members)]),
                float(edges[max(members) + 1]),
                float(confidences[mask].mean()),
                float(correct[mask].mean()),
                int(mask.sum()),
            ]
        )
    return pd.DataFrame(rows, columns=CURVE_COLUMNS), merged


def accuracy_vs_confidence(
    regressor: Classifier,
    m: MixtureModel,
    s: NoiseSchedule,
    n_fresh: int,
    bins: int,
    rng: np.random.Generator,
    spec: IntegratorSpec,
    workers: Optional[int] = None,
) -> ConfidenceCurve:
    """Bin fresh seeds by predicted confidence and measure how often the prediction holds.

    The predicted label and confidence are the argmax and top-2 margin of the
    model's predicted posterior at the seed; the ground truth is the Bayes label
    of the deterministically generated sample.

    Raises:
        CurveError: If ``n_fresh`` or ``bins`` is below 1, or every trajectory blew up.
    """
    if n_fresh < 1 or bins < 1:
        raise CurveError(f"need n_fresh >= 1 and bins >= 1, got {n_fresh}, {bins}")
    seeds = rng.standard_normal((n_fresh, m.dimension))
    predicted = regressor.predict_proba(seeds)
    predicted_labels = np.argmax(predicted, axis=1)
    predicted_confidence = margins(predicted)

    chunks = [seeds[i:i + GENERATION_CHUNK] for i in range(0, n_fresh, GENERATION_CHUNK)]
    truth = np.concatenate(parallel_map(partial(_generated_labels, m, s, spec), chunks, workers))
    finite = truth >= 0
    if not finite.any():
        raise CurveError("every fresh trajectory blew up")
    if not finite.all():
        logger.warning(f"Dropping {int((~finite).sum())} fresh seeds whose trajectories blew up")

    correct = (predicted_labels == truth)[finite].astype(float)
    table, merged = bin_by_confidence(predicted_confidence[finite], correct, bins)
    if merged:
        logger.warning(f"Confidence curve has {len(table)} of {bins} requested bins after merging")
    curve = ConfidenceCurve(
        table=table, merged_empty_bins=merged, n_seeds=int(finite.sum()), overall_accuracy=float(correct.mean())
    )
    logger.info(f"Confidence curve: {len(table)} bins, overall accuracy {curve.overall_accuracy:.3f}")
    return curve
