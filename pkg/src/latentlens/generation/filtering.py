"""Conditional generation by filtering seeds with a latent classifier.

Seeds are drawn from N(0, I) and judged by the latent model alone; only the
accepted ones are passed to the generator. The generator is never consulted
while filtering.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.spatial.distance import pdist

from latentlens.errors import LatentLensError
from latentlens.flow.integrators import IntegratorSpec, integrate_backward
from latentlens.gmm.mixture import MixtureModel, class_posteriors
from latentlens.gmm.schedule import NoiseSchedule
from latentlens.learning.base import Classifier, margins
from latentlens.pool.records import SeedPool, vector_columns

logger = logging.getLogger(__name__)

DRAW_BATCH = 1024


class ExhaustionError(LatentLensError):
    """Raised when no seed is accepted within the draw budget."""

    def __init__(self, draws: int, target: int, threshold: float):
        self.draws = int(draws)
        super().__init__(
            f"No seed accepted for class {target} at threshold {threshold:.4f} after {self.draws} draws"
        )


class DiversityError(LatentLensError):
    """Raised when diversity is requested for fewer than two samples."""


@dataclass(frozen=True)
class FilterPolicy:
    """Accept a seed when the latent label is ``target`` and its margin is at least ``threshold``."""

    target: int
    threshold: float
    max_draws: int

    def __post_init__(self) -> None:
        if self.max_draws < 1:
            raise ValueError(f"max_draws must be >= 1, got {self.max_draws}")
        if not np.isfinite(self.threshold) or self.threshold < 0:
            raise ValueError(f"threshold must be a finite value >= 0, got {self.threshold}")
        if self.target < 0:
            raise ValueError(f"target class must be >= 0, got {self.target}")


@dataclass(frozen=True, eq=False)
class FilterResult:
    seeds: np.ndarray
    margins: np.ndarray
    n_drawn: int


@dataclass(frozen=True)
class CondGenReport:
    target: int
    threshold: float
    n_requested: int
    n_drawn: int
    n_accepted: int
    acceptance_rate: float
    verified_accuracy: Optional[float]
    diversity: Optional[float]
    generator_calls: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class CountingGenerator:
    """Deterministic generator (backward flow) that counts the seeds it has turned into samples."""

    def __init__(self, m: MixtureModel, s: NoiseSchedule, spec: IntegratorSpec):
        self.m = m
        self.s = s
        self.spec = spec
        self.calls = 0

    def __call__(self, seeds: np.ndarray) -> np.ndarray:
        seeds = np.atleast_2d(seeds)
        self.calls += len(seeds)
        return integrate_backward(self.m, self.s, seeds, self.spec, keep_path=False).final_state


class OracleLatentModel:
    """Latent model that looks through the generator: the Bayes posterior of the generated sample."""

    def __init__(self, m: MixtureModel, s: NoiseSchedule, spec: IntegratorSpec):
        self.m = m
        self.s = s
        self.spec = spec

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        samples = integrate_backward(self.m, self.s, np.atleast_2d(X), self.spec, keep_path=False).final_state
        return class_posteriors(self.m, np.nan_to_num(samples))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


def filter_seeds(
    g: Classifier,
    policy: FilterPolicy,
    n_requested: int,
    rng: np.random.Generator,
    dimension: int,
    batch_size: int = DRAW_BATCH,
) -> FilterResult:
    """Draw seeds until ``n_requested`` are accepted or ``max_draws`` is spent.

    Acceptance is decided per draw index, and ``n_drawn`` stops at the draw
    that completed the request, so the result does not depend on ``batch_size``.

    Raises:
        ExhaustionError: If ``n_requested`` > 0 and nothing was accepted.
    """
    accepted, accepted_margins = [], []
    n_accepted = 0
    drawn = 0
    while n_accepted < n_requested and drawn < policy.max_draws:
        size = min(batch_size, policy.max_draws - drawn)
        seeds = rng.standard_normal((size, dimension))
        scores = g.predict_proba(seeds)
        margin = margins(scores)
        hits = np.flatnonzero((np.argmax(scores, axis=1) == policy.target) & (margin >= policy.threshold))
        needed = n_requested - n_accepted
        if len(hits) >= needed:
            hits = hits[:needed]
            drawn += int(hits[-1]) + 1
        else:
            drawn += size
        accepted.append(seeds[hits])
        accepted_margins.append(margin[hits])
        n_accepted += len(hits)

    if n_requested > 0 and n_accepted == 0:
        raise ExhaustionError(drawn, policy.target, policy.threshold)
    if n_accepted < n_requested:
        logger.warning(
            f"Class {policy.target}: only {n_accepted} of {n_requested} seeds accepted in {drawn} draws"
        )
    seeds_out = np.concatenate(accepted) if accepted else np.empty((0, dimension))
    margins_out = np.concatenate(accepted_margins) if accepted_margins else np.empty(0)
    return FilterResult(seeds=seeds_out, margins=margins_out, n_drawn=drawn)


def diversity(samples: np.ndarray) -> float:
    """Mean pairwise Euclidean distance.

    Raises:
        DiversityError: With fewer than two samples.
    """
    samples = np.asarray(samples, dtype=float)
    if len(samples) < 2:
        raise DiversityError(f"diversity needs at least 2 samples, got {len(samples)}")
    return float(pdist(samples, metric="euclidean").mean())


def generate_conditional(
    m: MixtureModel,
    s: NoiseSchedule,
    g: Classifier,
    policy: FilterPolicy,
    n_requested: int,
    rng: np.random.Generator,
    spec: IntegratorSpec,
    generator: Optional[CountingGenerator] = None,
    batch_size: int = DRAW_BATCH,
) -> Tuple[CondGenReport, pd.DataFrame]:
    """Filter seeds with ``g``, generate from the accepted ones, verify with the Bayes classifier.

    Args:
        m: Data mixture.
        s: Noise schedule.
        g: Latent model judging seeds.
        policy: Target class, threshold and draw budget.
        n_requested: Number of accepted seeds wanted.
        rng: Seed source.
        spec: Integrator for the generator.
        generator: Generator to use; a fresh counting one by default.
        batch_size: Seeds drawn per latent-model evaluation.

    Returns:
        (report, samples) where samples has columns target, margin, verified_label,
        verified_confidence, z_*, x_*.
    """
    generator = generator or CountingGenerator(m, s, spec)
    d = m.dimension
    columns = ["target", "margin", "verified_label", "verified_confidence"] + vector_columns("z", d) + vector_columns("x", d)
    if n_requested == 0:
        report = CondGenReport(policy.target, policy.threshold, 0, 0, 0, 0.0, None, None, 0)
        return report, pd.DataFrame(columns=columns)

    calls_before = generator.calls
    filtered = filter_seeds(g, policy, n_requested, rng, d, batch_size=batch_size)
    samples = generator(filtered.seeds)
    finite = np.all(np.isfinite(samples), axis=1)
    posteriors = np.full((len(samples), m.n_classes), np.nan)
    if finite.any():
        posteriors[finite] = class_posteriors(m, samples[finite])
    verified = np.where(finite, np.argmax(np.nan_to_num(posteriors, nan=-1.0), axis=1), -1)
    verified_confidence = np.where(finite, margins(np.nan_to_num(posteriors)), np.nan)

    n_accepted = len(filtered.seeds)
    report = CondGenReport(
        target=policy.target,
        threshold=policy.threshold,
        n_requested=n_requested,
        n_drawn=filtered.n_drawn,
        n_accepted=n_accepted,
        acceptance_rate=n_accepted / filtered.n_drawn,
        verified_accuracy=float(np.mean(verified == policy.target)),
        diversity=diversity(samples[finite]) if finite.sum() >= 2 else None,
        generator_calls=generator.calls - calls_before,
    )
    table = pd.DataFrame(
        {
            "target": policy.target,
            "margin": filtered.margins,
            "verified_label": verified,
            "verified_confidence": verified_confidence,
            **dict(zip(vector_columns("z", d), filtered.seeds.T)),
            **dict(zip(vector_columns("x", d), samples.T)),
        },
        columns=columns,
    )
    logger.info(
        f"Class {policy.target}: accepted {n_accepted}/{filtered.n_drawn} draws, "
        f"verified accuracy {report.verified_accuracy:.3f}"
    )
    return report, table


def level_diversity(pool: SeedPool, level: int = 1, space: str = "sample") -> Dict[int, Optional[float]]:
    """Per-label diversity of the records at one confidence level."""
    result: Dict[int, Optional[float]] = {}
    for label in range(pool.n_classes):
        records = pool.select(level=level, label=label).features(space)
        result[label] = diversity(records) if len(records) >= 2 else None
    return result
