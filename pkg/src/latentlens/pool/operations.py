"""Seed pool construction: generate, label, balance, stratify and split.

Every seed is drawn from its own counter-based substream keyed by
(master seed, record index), and generation runs in fixed-size chunks, so the
pool does not depend on how many workers produced it.
"""

import logging
import zlib
from functools import partial
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from latentlens.errors import LatentLensError
from latentlens.flow.integrators import IntegratorSpec, integrate_backward
from latentlens.flow.stochastic import ddpm_reverse_sample
from latentlens.gmm.mixture import ClassPosterior, MixtureModel, class_posteriors
from latentlens.gmm.schedule import NoiseSchedule
from latentlens.parallel import parallel_map
from latentlens.pool.records import SeedPool, pool_columns, vector_columns

logger = logging.getLogger(__name__)

SAMPLERS = ("ddim", "ddpm")
DEFAULT_CHUNK_SIZE = 512

# third word of the key separates seed draws, sampler noise and stage generators
_SEED_STREAM = 0
_NOISE_STREAM = 1
_STAGE_STREAM = 3


class BalanceError(LatentLensError):
    """Raised when a class has no records to balance against."""

    def __init__(self, label: int):
        self.label = int(label)
        super().__init__(f"Cannot balance pool: class {self.label} has no records")


class StratificationError(LatentLensError):
    """Raised when a label has fewer records than confidence levels."""


class SplitError(LatentLensError):
    """Raised for an invalid test fraction or an empty (label, level) cell."""


def seed_stream(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([int(master_seed), int(index), _SEED_STREAM])


def noise_stream(master_seed: int, index: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng([int(master_seed), int(index), _NOISE_STREAM, int(stream)])


def draw_seed(master_seed: int, index: int, dimension: int) -> np.ndarray:
    return seed_stream(master_seed, index).standard_normal(dimension)


def stage_stream(master_seed: int, stage: str) -> np.random.Generator:
    """Generator for one named pipeline step, disjoint from the per-record streams."""
    return np.random.default_rng([int(master_seed), zlib.crc32(stage.encode("utf-8")), _STAGE_STREAM, 0])


def label_and_confidence(p: Any) -> Tuple[int, float]:
    """Label (argmax, lowest index on ties) and margin top1 - top2 of one posterior."""
    probs = p.probabilities if isinstance(p, ClassPosterior) else np.asarray(p, dtype=float)
    labels, confidences = labels_and_confidences(probs[None, :])
    return int(labels[0]), float(confidences[0])


def labels_and_confidences(posteriors: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`label_and_confidence` over rows of an (n, C) matrix.

    With a single class the runner-up probability is taken as 0, so the
    confidence equals the top probability.
    """
    posteriors = np.asarray(posteriors, dtype=float)
    labels = np.argmax(posteriors, axis=1)
    ordered = np.sort(posteriors, axis=1)
    runner_up = ordered[:, -2] if posteriors.shape[1] > 1 else np.zeros(len(posteriors))
    confidences = np.clip(ordered[:, -1] - runner_up, 0.0, 1.0)
    return labels, confidences


def _generate_chunk(
    indices: np.ndarray,
    m: MixtureModel,
    s: NoiseSchedule,
    spec: IntegratorSpec,
    sampler: str,
    master_seed: int,
    noise: int,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    seeds = np.stack([draw_seed(master_seed, i, m.dimension) for i in indices])
    if sampler == "ddim":
        trajectory = integrate_backward(m, s, seeds, spec, keep_path=False)
        samples = trajectory.final_state
    else:
        streams = [noise_stream(master_seed, i, noise) for i in indices]
        samples = ddpm_reverse_sample(m, s, seeds, streams, spec)
    valid = np.all(np.isfinite(samples), axis=1)
    return seeds, samples, valid


def build_pool(
    m: MixtureModel,
    s: NoiseSchedule,
    n: int,
    sampler: str,
    spec: IntegratorSpec,
    master_seed: int,
    noise: int = 0,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    workers: Optional[int] = None,
) -> SeedPool:
    """Draw n seeds, generate a sample from each and label it with the Bayes posterior.

    Args:
        m: Data mixture.
        s: Noise schedule.
        n: Number of seeds.
        sampler: ``"ddim"`` (deterministic flow) or ``"ddpm"`` (stochastic control).
        spec: Integrator grid.
        master_seed: Root of every per-record substream.
        noise: Noise stream id for the stochastic sampler; a new id gives fresh noise.
        chunk_size: Records per parallel task; fixed so output is worker-independent.
        workers: Parallel workers (``None`` = all cores, capped by ``LATENTLENS_WORKERS``).

    Returns:
        Unstratified pool; records whose trajectory blew up are excluded and counted
        in ``provenance["n_excluded"]``.
    """
    if n < 1:
        raise ValueError(f"build_pool needs n >= 1, got {n}")
    if sampler not in SAMPLERS:
        raise ValueError(f"Unknown sampler '{sampler}', expected one of {SAMPLERS}")

    logger.info(f"Building {sampler} pool: {n} seeds, d={m.dimension}, {spec.method}/{spec.steps}")
    chunks = [np.arange(start, min(start + chunk_size, n)) for start in range(0, n, chunk_size)]
    task = partial(
        _generate_chunk, m=m, s=s, spec=spec, sampler=sampler, master_seed=master_seed, noise=noise
    )
    results = parallel_map(task, chunks, workers)

    indices = np.concatenate(chunks)
    seeds = np.concatenate([r[0] for r in results])
    samples = np.concatenate([r[1] for r in results])
    valid = np.concatenate([r[2] for r in results])
    n_excluded = int((~valid).sum())
    if n_excluded:
        logger.warning(f"Excluded {n_excluded} records whose trajectories blew up")

    indices, seeds, samples = indices[valid], seeds[valid], samples[valid]
    posteriors = class_posteriors(m, samples) if len(samples) else np.empty((0, m.n_classes))
    labels, confidences = labels_and_confidences(posteriors)

    d, c = m.dimension, m.n_classes
    frame = pd.DataFrame(
        {
            "index": indices,
            "split": pd.array([pd.NA] * len(indices), dtype="string"),
            "level": pd.array([pd.NA] * len(indices), dtype="Int64"),
            "label": labels,
            "confidence": confidences,
            **dict(zip(vector_columns("z", d), seeds.T)),
            **dict(zip(vector_columns("x", d), samples.T)),
            **dict(zip(vector_columns("p", c), posteriors.T)),
        },
        columns=pool_columns(d, c),
    )
    pool = SeedPool(
        frame,
        {
            "master_seed": int(master_seed),
            "sampler": sampler,
            "noise_stream": int(noise),
            "n_requested": int(n),
            "n_excluded": n_excluded,
        },
    )
    logger.info(f"Pool built: {len(pool)} records, label counts {pool.counts()['label']}")
    return pool


def balance_pool(pool: SeedPool, rng: np.random.Generator) -> SeedPool:
    """Subsample every over-represented label uniformly down to the smallest label count.

    Raises:
        BalanceError: If some class in [0, C) has no records.
    """
    labels = pool.labels()
    counts = np.bincount(labels, minlength=pool.n_classes)
    for label, count in enumerate(counts):
        if count == 0:
            raise BalanceError(label)
    target = int(counts.min())
    if np.all(counts == target):
        return pool

    keep: List[np.ndarray] = []
    for label in range(pool.n_classes):
        positions = np.flatnonzero(labels == label)
        if len(positions) > target:
            positions = np.sort(rng.choice(positions, size=target, replace=False))
        keep.append(positions)
    kept = np.sort(np.concatenate(keep))
    logger.info(f"Balanced pool: {len(pool)} -> {len(kept)} records ({target} per label)")
    return pool.with_frame(pool.frame.iloc[kept], balanced_per_label=target)


def stratify(pool: SeedPool, n_levels: int) -> SeedPool:
    """Assign confidence levels 1..L within each label, level 1 the most confident.

    Records of a label are ordered by confidence (descending, stable on ties) and
    cut into L bins; remainder records go one per bin starting from level 1.

    Raises:
        StratificationError: If L < 1 or some label has fewer than L records.
    """
    if n_levels < 1:
        raise StratificationError(f"Number of levels must be >= 1, got {n_levels}")
    labels = pool.labels()
    confidences = pool.confidences()
    levels = np.zeros(len(pool), dtype=int)
    counts = np.bincount(labels, minlength=pool.n_classes)
    if len(np.unique(counts)) > 1:
        logger.warning(f"Stratifying an unbalanced pool: label counts {counts.tolist()}")

    for label in range(pool.n_classes):
        positions = np.flatnonzero(labels == label)
        if len(positions) < n_levels:
            raise StratificationError(
                f"Label {label} has {len(positions)} records, fewer than {n_levels} levels"
            )
        ordered = positions[np.argsort(-confidences[positions], kind="stable")]
        for level, members in enumerate(np.array_split(ordered, n_levels), start=1):
            levels[members] = level

    frame = pool.frame.copy()
    frame["level"] = pd.array(levels, dtype="Int64")
    logger.info(f"Stratified {len(pool)} records into {n_levels} levels")
    return pool.with_frame(frame, n_levels=int(n_levels))


def split_train_test(pool: SeedPool, test_fraction: float, rng: np.random.Generator) -> SeedPool:
    """Mark round(test_fraction * size) records of every (label, level) cell as test.

    Cells are visited in (label, level) order and rounding is half-up, so the
    split is deterministic given ``rng``.

    Raises:
        SplitError: If the fraction is outside (0, 1), levels are unset, or a cell is empty.
    """
    if not 0.0 < test_fraction < 1.0:
        raise SplitError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    if pool.frame["level"].isna().any():
        raise SplitError("Pool must be stratified before splitting")

    labels = pool.labels()
    levels = pool.frame["level"].to_numpy(dtype=int)
    n_levels = int(levels.max()) if len(levels) else 0
    split = np.full(len(pool), "train", dtype=object)
    for label in range(pool.n_classes):
        for level in range(1, n_levels + 1):
            cell = np.flatnonzero((labels == label) & (levels == level))
            if len(cell) == 0:
                raise SplitError(f"Cell (label={label}, level={level}) is empty")
            n_test = int(np.floor(test_fraction * len(cell) + 0.5))
            split[rng.permutation(cell)[:n_test]] = "test"

    frame = pool.frame.copy()
    frame["split"] = pd.array(split, dtype="string")
    n_test_total = int((split == "test").sum())
    logger.info(f"Split pool: {len(pool) - n_test_total} train / {n_test_total} test")
    return pool.with_frame(frame, test_fraction=float(test_fraction))


def level_boundary_threshold(pool: SeedPool, upper: int = 1, lower: int = 2) -> float:
    """Confidence at the boundary between two adjacent levels.

    Per label, the midpoint between the least confident ``upper`` record and the
    most confident ``lower`` record, averaged over labels.
    """
    thresholds: List[float] = []
    for label in range(pool.n_classes):
        top = pool.select(level=upper, label=label).confidences()
        bottom = pool.select(level=lower, label=label).confidences()
        if len(top) and len(bottom):
            thresholds.append(0.5 * (top.min() + bottom.max()))
        elif len(top):
            thresholds.append(float(top.min()))
    if not thresholds:
        raise StratificationError(f"No records at level {upper} to derive a threshold from")
    return float(np.mean(thresholds))


def pool_summary(pool: SeedPool) -> Dict[str, Any]:
    """Per-level mean confidence and counts, for reports."""
    frame = pool.frame.dropna(subset=["level"])
    by_level = frame.groupby("level")["confidence"].agg(["mean", "min", "max", "count"])
    return {
        "n_records": len(pool),
        "counts": pool.counts(),
        "confidence_by_level": {
            str(int(level)): {k: float(v) for k, v in row.items()} for level, row in by_level.iterrows()
        },
    }
