"""Cross-level train/test accuracy matrix over confidence levels."""

import logging
from dataclasses import dataclass
from functools import partial
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from latentlens.errors import LatentLensError
from latentlens.learning.evaluation import EvaluationResult, evaluate
from latentlens.learning.lda import train_lda
from latentlens.learning.mlp import TrainingHyper, train_mlp
from latentlens.parallel import parallel_map
from latentlens.pool.records import SeedPool

logger = logging.getLogger(__name__)

TRAINERS = ("mlp", "lda")


class CrossLevelError(LatentLensError):
    """Wraps a training or evaluation failure with the (train, test) level pair."""

    def __init__(self, train_level: int, test_level: Optional[int], cause: Exception):
        self.train_level = train_level
        self.test_level = test_level
        where = f"train level {train_level}" + (f", test level {test_level}" if test_level else "")
        super().__init__(f"{where}: {cause}")


@dataclass(frozen=True, eq=False)
class AccuracyMatrix:
    """L x L accuracies; row = train level, column = test level (both 1-based names)."""

    accuracies: np.ndarray
    macro_f1: np.ndarray
    counts: np.ndarray
    sampler: str
    trainer: str
    space: str = "seed"

    @property
    def n_levels(self) -> int:
        return int(self.accuracies.shape[0])

    def cell(self, train_level: int, test_level: int) -> float:
        return float(self.accuracies[train_level - 1, test_level - 1])

    def diagonal_contrast(self) -> float:
        """cell(1, 1) - cell(L, L)."""
        return self.cell(1, 1) - self.cell(self.n_levels, self.n_levels)

    def block_contrast(self, size: int = 3) -> float:
        """Mean of the top-left block minus mean of the bottom-right block."""
        size = min(size, self.n_levels)
        return float(self.accuracies[:size, :size].mean() - self.accuracies[-size:, -size:].mean())

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {
                "train_level": i + 1,
                "test_level": j + 1,
                "accuracy": float(self.accuracies[i, j]),
                "macro_f1": float(self.macro_f1[i, j]),
                "count": int(self.counts[i, j]),
            }
            for i in range(self.n_levels)
            for j in range(self.n_levels)
        ]
        frame = pd.DataFrame(rows, columns=["train_level", "test_level", "accuracy", "macro_f1", "count"])
        frame.insert(0, "space", self.space)
        frame.insert(0, "trainer", self.trainer)
        frame.insert(0, "sampler", self.sampler)
        return frame

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "AccuracyMatrix":
        n_levels = int(frame["train_level"].max())
        grids = {}
        for column in ("accuracy", "macro_f1", "count"):
            grid = frame.pivot(index="train_level", columns="test_level", values=column)
            grids[column] = grid.reindex(index=range(1, n_levels + 1), columns=range(1, n_levels + 1)).to_numpy()
        return cls(
            accuracies=grids["accuracy"].astype(float),
            macro_f1=grids["macro_f1"].astype(float),
            counts=grids["count"].astype(int),
            sampler=str(frame["sampler"].iloc[0]),
            trainer=str(frame["trainer"].iloc[0]),
            space=str(frame["space"].iloc[0]) if "space" in frame else "seed",
        )

    def summary(self) -> Dict[str, Any]:
        return {
            "sampler": self.sampler,
            "trainer": self.trainer,
            "space": self.space,
            "diagonal_contrast": self.diagonal_contrast(),
            "block_contrast": self.block_contrast(),
            "cell_1_1": self.cell(1, 1),
            "cell_L_L": self.cell(self.n_levels, self.n_levels),
        }


def fit_latent_classifier(
    X: np.ndarray,
    y: np.ndarray,
    trainer: str,
    hyper: TrainingHyper,
    rng: np.random.Generator,
    n_classes: int,
) -> Any:
    """Train the requested latent classifier family on (X, y)."""
    if trainer == "mlp":
        return train_mlp(X, y, "classifier", hyper, rng, n_classes=n_classes)
    if trainer == "lda":
        return train_lda(X, y)
    raise ValueError(f"Unknown trainer '{trainer}', expected one of {TRAINERS}")


def _train_row(
    train_level: int,
    level_rngs: List[np.random.Generator],
    pool: SeedPool,
    tests: List[Tuple[np.ndarray, np.ndarray]],
    trainer: str,
    hyper: TrainingHyper,
    space: str,
) -> List[EvaluationResult]:
    train = pool.select(level=train_level, split="train")
    try:
        model = fit_latent_classifier(
            train.features(space), train.labels(), trainer, hyper, level_rngs[train_level - 1], pool.n_classes
        )
    except LatentLensError as e:
        raise CrossLevelError(train_level, None, e) from e

    row = []
    for test_level, (X_test, y_test) in enumerate(tests, start=1):
        try:
            row.append(evaluate(model, X_test, y_test, pool.n_classes))
        except LatentLensError as e:
            raise CrossLevelError(train_level, test_level, e) from e
    return row


def cross_level_matrix(
    pool: SeedPool,
    trainer: str,
    hyper: TrainingHyper,
    rng: np.random.Generator,
    space: str = "seed",
    workers: Optional[int] = None,
) -> AccuracyMatrix:
    """Train one model per level on its train split and test it on every level.

    Records are taken in index order and each level gets its own child generator,
    so the matrix does not depend on record order or on the worker count.

    Args:
        pool: Stratified, split pool.
        trainer: ``"mlp"`` or ``"lda"``.
        hyper: MLP settings (ignored by LDA).
        rng: Parent generator; one child is spawned per train level.
        space: Fit on seeds (``"seed"``) or generated samples (``"sample"``).
        workers: Parallel workers across train levels.

    Raises:
        CrossLevelError: Tagged with the failing (train level, test level).
    """
    n_levels = pool.n_levels
    if n_levels < 1 or pool.frame["split"].isna().any():
        raise CrossLevelError(0, None, ValueError("pool must be stratified and split"))
    level_rngs = rng.spawn(n_levels)
    tests = []
    for level in range(1, n_levels + 1):
        test = pool.select(level=level, split="test")
        tests.append((test.features(space), test.labels()))

    logger.info(f"Cross-level matrix: {trainer} on {n_levels} levels ({space} space)")
    task = partial(
        _train_row, level_rngs=level_rngs, pool=pool, tests=tests, trainer=trainer, hyper=hyper, space=space
    )
    rows = parallel_map(task, range(1, n_levels + 1), workers)

    matrix = AccuracyMatrix(
        accuracies=np.array([[r.accuracy for r in row] for row in rows]),
        macro_f1=np.array([[r.macro_f1 for r in row] for row in rows]),
        counts=np.array([[r.n for r in row] for row in rows]),
        sampler=str(pool.provenance.get("sampler", "unknown")),
        trainer=trainer,
        space=space,
    )
    logger.info(
        f"{trainer} matrix: cell(1,1)={matrix.cell(1, 1):.3f}, "
        f"cell(L,L)={matrix.cell(n_levels, n_levels):.3f}"
    )
    return matrix
