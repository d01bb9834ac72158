"""Discriminant and principal projections, and the deterministic 2-D embedding."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
from scipy.linalg import eigh
from sklearn.decomposition import PCA

from latentlens.errors import LatentLensError
from latentlens.learning.lda import scatter_matrices, shrinkage

logger = logging.getLogger(__name__)

EMBEDDING_COLUMNS = ["e0", "e1", "label", "level", "space", "kind"]


class DimensionError(LatentLensError):
    """Raised when a requested projection rank is not available."""


class DegenerateDataError(LatentLensError):
    """Raised when records carry no variance to analyze."""


@dataclass(frozen=True, eq=False)
class ProjectionBasis:
    """Directions (d, k) applied to centered records.

    Attributes:
        matrix: Column directions, discriminant order (lda) or variance order (pca).
        kind: ``"lda"`` or ``"pca"``.
        center: Mean subtracted before projecting.
        eigenvalues: Generalized (lda) or covariance (pca) eigenvalues, descending.
    """

    matrix: np.ndarray
    kind: str
    center: np.ndarray
    eigenvalues: np.ndarray

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.matrix)) or np.any(np.linalg.norm(self.matrix, axis=0) == 0):
            raise DegenerateDataError(f"{self.kind} basis has non-finite or zero columns")

    @property
    def rank(self) -> int:
        return int(self.matrix.shape[1])

    def project(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.center) @ self.matrix


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    pivots = vectors[np.argmax(np.abs(vectors), axis=0), np.arange(vectors.shape[1])]
    return vectors * np.where(pivots < 0, -1.0, 1.0)


def fit_lda_projection(X: np.ndarray, y: np.ndarray, k: int) -> ProjectionBasis:
    """Top-k generalized eigenvectors of (S_w + lambda I)^-1 S_b, eigenvalues descending.

    S_w is the pooled within-class covariance and S_b the between-class
    covariance; lambda is the classifier's shrinkage.

    Raises:
        DimensionError: If k is not in [1, C - 1] or exceeds d.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    n, d = X.shape
    n_classes = len(np.unique(y))
    if not 1 <= k <= n_classes - 1 or k > d:
        raise DimensionError(f"LDA rank k={k} must lie in [1, min(C-1, d)] with C={n_classes}, d={d}")
    within, between, _, _ = scatter_matrices(X, y)
    pooled = within / max(n - n_classes, 1)
    regularized = pooled + shrinkage(pooled) * np.eye(d)
    eigenvalues, vectors = eigh(between / n, regularized)
    top = np.argsort(eigenvalues)[::-1][:k]
    return ProjectionBasis(
        matrix=_fix_signs(vectors[:, top]),
        kind="lda",
        center=X.mean(axis=0),
        eigenvalues=np.clip(eigenvalues[top], 0.0, None),
    )


def fit_pca_basis(X: np.ndarray, k: int) -> ProjectionBasis:
    """Top-k principal directions (orthonormal columns).

    Raises:
        DegenerateDataError: With fewer than 2 records.
        DimensionError: If k exceeds min(n, d).
    """
    X = np.asarray(X, dtype=float)
    if len(X) < 2:
        raise DegenerateDataError(f"PCA needs at least 2 records, got {len(X)}")
    if not 1 <= k <= min(X.shape):
        raise DimensionError(f"PCA rank k={k} must lie in [1, {min(X.shape)}]")
    pca = PCA(n_components=k, svd_solver="full").fit(X)
    return ProjectionBasis(
        matrix=pca.components_.T.copy(), kind="pca", center=pca.mean_.copy(), eigenvalues=pca.explained_variance_
    )


def embedding_coordinates(
    X: np.ndarray, basis: ProjectionBasis, reference: Optional[np.ndarray] = None
) -> np.ndarray:
    """2-D coordinates: the projection itself for k = 2, zero-padded for k = 1,
    otherwise the top-2 principal directions of the projected records.

    Args:
        X: Records to embed.
        basis: Projection applied first.
        reference: Records the k > 2 reduction is fitted on; defaults to ``X``.
            Pass the same reference for several sets to embed them in one frame.
    """
    projected = basis.project(X)
    if basis.rank == 2:
        return projected
    if basis.rank == 1:
        return np.column_stack([projected[:, 0], np.zeros(len(projected))])
    fitted_on = projected if reference is None else basis.project(reference)
    if len(fitted_on) < 2:
        raise DegenerateDataError("need at least 2 records to reduce a projection to 2-D")
    return PCA(n_components=2, svd_solver="full").fit(fitted_on).transform(projected)


def embed_2d(
    X: np.ndarray,
    basis: ProjectionBasis,
    labels: np.ndarray,
    level: Optional[object] = None,
    space: str = "seed",
) -> pd.DataFrame:
    """Embedding table with ``e0``, ``e1`` and label/level/space/kind metadata."""
    coords = embedding_coordinates(X, basis)
    return pd.DataFrame(
        {
            "e0": coords[:, 0],
            "e1": coords[:, 1],
            "label": np.asarray(labels, dtype=int),
            "level": [level] * len(coords),
            "space": space,
            "kind": "lda" if basis.kind == "lda" else "raw",
        },
        columns=EMBEDDING_COLUMNS,
    )
