"""Per-level separability sweep over seed and sample space, and the low-on-high overlay."""

import logging
from dataclasses import dataclass
from functools import partial
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from latentlens.errors import LatentLensError
from latentlens.learning.base import margins
from latentlens.learning.lda import train_lda
from latentlens.parallel import parallel_map
from latentlens.pool.records import SeedPool
from latentlens.structure.metrics import lda_score, pca_variance, silhouette
from latentlens.structure.projection import (
    embed_2d,
    embedding_coordinates,
    fit_lda_projection,
    fit_pca_basis,
)

logger = logging.getLogger(__name__)

SPACES = ("seed", "sample")
UNCONDITIONAL = "all"
METRIC_COLUMNS = [
    "space",
    "level",
    "n_records",
    "lda_score",
    "pca_variance",
    "silhouette_lda",
    "silhouette_raw",
]

Level = Union[int, str]


class StructureError(LatentLensError):
    """Wraps an analysis failure with the (level, space) it occurred in."""

    def __init__(self, level: Level, space: str, cause: Exception):
        self.level = level
        self.space = space
        super().__init__(f"level {level}, {space} space: {cause}")


@dataclass(frozen=True, eq=False)
class StructureReport:
    """Metrics per (space, level), 2-D embeddings and raw discriminant coordinates."""

    metrics: pd.DataFrame
    embeddings: pd.DataFrame
    lda_coordinates: pd.DataFrame

    def lda_scores(self, space: str = "seed") -> pd.Series:
        """Scores of the stratified levels in level order (the unconditional row excluded)."""
        rows = self.metrics[(self.metrics["space"] == space) & (self.metrics["level"] != UNCONDITIONAL)]
        return rows.set_index(rows["level"].astype(int))["lda_score"].sort_index()

    def pca_spread(self, space: str = "seed") -> float:
        rows = self.metrics[(self.metrics["space"] == space) & (self.metrics["level"] != UNCONDITIONAL)]
        return float(rows["pca_variance"].max() - rows["pca_variance"].min())


def balanced_subsample(
    pool: SeedPool, samples_per_class: Optional[int], rng: np.random.Generator
) -> SeedPool:
    """At most ``samples_per_class`` records of each label, drawn uniformly, in index order."""
    if not samples_per_class:
        return pool
    labels = pool.labels()
    keep: List[np.ndarray] = []
    for label in np.unique(labels):
        positions = np.flatnonzero(labels == label)
        if len(positions) > samples_per_class:
            positions = np.sort(rng.choice(positions, size=samples_per_class, replace=False))
        keep.append(positions)
    return pool.with_frame(pool.frame.iloc[np.sort(np.concatenate(keep))])


def _analyze(
    task: Tuple[Level, str, np.random.Generator],
    pool: SeedPool,
    k: int,
    test_fraction: float,
    samples_per_class: Optional[int],
) -> Tuple[Dict[str, Any], pd.DataFrame, pd.DataFrame]:
    level, space, rng = task
    try:
        records = pool if level == UNCONDITIONAL else pool.select(level=int(level))
        records = balanced_subsample(records, samples_per_class, rng)
        X, y = records.features(space), records.labels()

        score = lda_score(X, y, test_fraction, rng)
        variance = pca_variance(X, k)
        lda_basis = fit_lda_projection(X, y, k)
        raw_basis = fit_pca_basis(X, min(2, X.shape[1]))
        lda_embedding = embed_2d(X, lda_basis, y, level=level, space=space)
        raw_embedding = embed_2d(X, raw_basis, y, level=level, space=space)
    except LatentLensError as e:
        raise StructureError(level, space, e) from e

    metrics = {
        "space": space,
        "level": str(level),
        "n_records": len(records),
        "lda_score": score,
        "pca_variance": variance,
        "silhouette_lda": silhouette(lda_embedding[["e0", "e1"]].to_numpy(), y),
        "silhouette_raw": silhouette(raw_embedding[["e0", "e1"]].to_numpy(), y),
    }
    projected = lda_basis.project(X)
    coordinates = pd.DataFrame(projected, columns=[f"ld_{i}" for i in range(projected.shape[1])])
    coordinates.insert(0, "label", y)
    coordinates.insert(0, "index", records.frame["index"].to_numpy())
    coordinates.insert(0, "level", str(level))
    coordinates.insert(0, "space", space)
    return metrics, pd.concat([lda_embedding, raw_embedding], ignore_index=True), coordinates


def structure_sweep(
    pool: SeedPool,
    spaces: Sequence[str],
    rng: np.random.Generator,
    test_fraction: float = 0.2,
    k: Optional[int] = None,
    samples_per_class: Optional[int] = None,
    include_unconditional: bool = True,
    workers: Optional[int] = None,
) -> StructureReport:
    """LDA score, PCA variance and embeddings for every level and space.

    Args:
        pool: Stratified pool.
        spaces: Any of ``"seed"`` and ``"sample"``.
        rng: Parent generator; one child per (level, space) task.
        test_fraction: Held-out share for the LDA score.
        k: Projection rank; defaults to C - 1.
        samples_per_class: Per-level class-balanced subsample size (``None`` = all records).
        include_unconditional: Add a row for the whole unstratified pool (level ``"all"``).
        workers: Parallel workers across tasks.

    Raises:
        StructureError: Tagged with the failing level and space.
    """
    unknown = [s for s in spaces if s not in SPACES]
    if unknown:
        raise ValueError(f"Unknown spaces {unknown}, expected a subset of {SPACES}")
    if pool.n_levels < 1:
        raise StructureError(0, ",".join(spaces), ValueError("pool is not stratified"))
    k = k or max(pool.n_classes - 1, 1)
    levels: List[Level] = list(range(1, pool.n_levels + 1))
    if include_unconditional:
        levels.append(UNCONDITIONAL)
    pairs = [(level, space) for space in spaces for level in levels]
    children = rng.spawn(len(pairs))
    tasks = [(level, space, child) for (level, space), child in zip(pairs, children)]

    logger.info(f"Structure sweep: {len(levels)} levels x {len(spaces)} spaces, k={k}")
    analyze = partial(
        _analyze, pool=pool, k=k, test_fraction=test_fraction, samples_per_class=samples_per_class
    )
    results = parallel_map(analyze, tasks, workers)

    metrics = pd.DataFrame([r[0] for r in results], columns=METRIC_COLUMNS)
    embeddings = pd.concat([r[1] for r in results], ignore_index=True)
    embeddings["level"] = embeddings["level"].astype(str)
    coordinates = pd.concat([r[2] for r in results], ignore_index=True)
    for row in metrics.itertuples(index=False):
        logger.info(
            f"  {row.space} level {row.level}: lda_score={row.lda_score:.3f}, "
            f"pca_variance={row.pca_variance:.3f}"
        )
    return StructureReport(metrics=metrics, embeddings=embeddings, lda_coordinates=coordinates)


@dataclass(frozen=True, eq=False)
class OverlayResult:
    embedding: pd.DataFrame
    margin_stats: Dict[str, Dict[str, float]]

    def interstitial(self) -> bool:
        """Low-confidence median margin falls below the high-confidence first quartile."""
        return self.margin_stats["low"]["median"] < self.margin_stats["high"]["q1"]


def _margin_summary(values: np.ndarray) -> Dict[str, float]:
    q1, median, q3 = np.percentile(values, [25, 50, 75])
    return {"q1": float(q1), "median": float(median), "q3": float(q3), "mean": float(np.mean(values))}


def overlay(
    X_high: np.ndarray,
    y_high: np.ndarray,
    X_low: np.ndarray,
    y_low: np.ndarray,
    k: Optional[int] = None,
) -> OverlayResult:
    """Project low-confidence records through the basis fitted on high-confidence records.

    The discriminant basis and classifier are fitted on the high-confidence set
    only; both sets are embedded with that basis and their classifier margins
    summarized by quartiles. With a single class every margin is 1.
    """
    X_high = np.asarray(X_high, dtype=float)
    X_low = np.asarray(X_low, dtype=float)
    if len(X_high) == 0 or len(X_low) == 0:
        raise ValueError("overlay needs two non-empty record sets")
    if X_high.shape[1] != X_low.shape[1]:
        raise ValueError(f"dimension mismatch: {X_high.shape[1]} vs {X_low.shape[1]}")

    n_classes = len(np.unique(y_high))
    if n_classes < 2:
        basis = fit_pca_basis(X_high, min(2, X_high.shape[1]))
        margin_high, margin_low = np.ones(len(X_high)), np.ones(len(X_low))
    else:
        basis = fit_lda_projection(X_high, y_high, k or n_classes - 1)
        classifier = train_lda(X_high, y_high)
        margin_high = margins(classifier.predict_proba(X_high))
        margin_low = margins(classifier.predict_proba(X_low))

    frames = []
    for name, X, y, margin in (("high", X_high, y_high, margin_high), ("low", X_low, y_low, margin_low)):
        coords = embedding_coordinates(X, basis, reference=X_high)
        frames.append(
            pd.DataFrame(
                {"e0": coords[:, 0], "e1": coords[:, 1], "label": np.asarray(y, dtype=int), "set": name, "margin": margin}
            )
        )
    result = OverlayResult(
        embedding=pd.concat(frames, ignore_index=True),
        margin_stats={"high": _margin_summary(margin_high), "low": _margin_summary(margin_low)},
    )
    logger.info(
        f"Overlay: median margin high={result.margin_stats['high']['median']:.3f}, "
        f"low={result.margin_stats['low']['median']:.3f}"
    )
    return result

