"""Confidence-stratified seed pools."""

from .operations import (
    SAMPLERS,
    BalanceError,
    SplitError,
    StratificationError,
    balance_pool,
    build_pool,
    label_and_confidence,
    labels_and_confidences,
    level_boundary_threshold,
    pool_summary,
    split_train_test,
    stage_stream,
    stratify,
)
from .records import PoolParseError, SeedPool, SeedRecord, load_pool, save_pool

__all__ = [
    "SAMPLERS",
    "BalanceError",
    "PoolParseError",
    "SeedPool",
    "SeedRecord",
    "SplitError",
    "StratificationError",
    "balance_pool",
    "build_pool",
    "label_and_confidence",
    "labels_and_confidences",
    "level_boundary_threshold",
    "load_pool",
    "pool_summary",
    "save_pool",
    "split_train_test",
    "stage_stream",
    "stratify",
]
