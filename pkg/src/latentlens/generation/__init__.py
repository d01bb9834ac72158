"""Confidence-filtered conditional generation."""

from .filtering import (
    CondGenReport,
    CountingGenerator,
    DiversityError,
    ExhaustionError,
    FilterPolicy,
    FilterResult,
    OracleLatentModel,
    diversity,
    filter_seeds,
    generate_conditional,
    level_diversity,
)

__all__ = [
    "CondGenReport",
    "CountingGenerator",
    "DiversityError",
    "ExhaustionError",
    "FilterPolicy",
    "FilterResult",
    "OracleLatentModel",
    "diversity",
    "filter_seeds",
    "generate_conditional",
    "level_diversity",
]
