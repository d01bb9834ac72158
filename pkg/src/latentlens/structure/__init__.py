"""Class-separability analysis of seeds and generated samples."""

from .metrics import lda_score, pca_variance, silhouette
from .projection import (
    DegenerateDataError,
    DimensionError,
    ProjectionBasis,
    embed_2d,
    fit_lda_projection,
    fit_pca_basis,
)
from .sweep import OverlayResult, StructureError, StructureReport, overlay, structure_sweep

__all__ = [
    "DegenerateDataError",
    "DimensionError",
    "OverlayResult",
    "ProjectionBasis",
    "StructureError",
    "StructureReport",
    "embed_2d",
    "fit_lda_projection",
    "fit_pca_basis",
    "lda_score",
    "overlay",
    "pca_variance",
    "silhouette",
    "structure_sweep",
]
