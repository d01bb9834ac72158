"""Scalar separability measures: LDA score, PCA variance, silhouette."""

import logging
from typing import Optional

import numpy as np
from sklearn.decomposition import PCA
from sklearn.metrics import silhouette_score
from sklearn.model_selection import train_test_split

from latentlens.learning.base import FitError
from latentlens.learning.evaluation import evaluate
from latentlens.learning.lda import train_lda
from latentlens.structure.projection import DegenerateDataError

logger = logging.getLogger(__name__)


def lda_score(X: np.ndarray, y: np.ndarray, test_fraction: float, rng: np.random.Generator) -> float:
    """Held-out accuracy of the shared-covariance discriminant on a stratified split.

    Raises:
        FitError: If the split or the fit is impossible for these records.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    try:
        X_train, X_test, y_train, y_test = train_test_split(
            X, y, test_size=test_fraction, stratify=y, random_state=int(rng.integers(2**31 - 1))
        )
    except ValueError as e:
        raise FitError(f"cannot split {len(y)} records for the LDA score: {e}") from e
    model = train_lda(X_train, y_train)
    return evaluate(model, X_test, y_test).accuracy


def pca_variance(X: np.ndarray, k: int) -> float:
    """Share of total variance carried by the first k principal components.

    Raises:
        DegenerateDataError: With fewer than 2 records or zero total variance.
    """
    X = np.asarray(X, dtype=float)
    if len(X) < 2:
        raise DegenerateDataError(f"PCA variance needs at least 2 records, got {len(X)}")
    if float(np.var(X, axis=0).sum()) == 0.0:
        raise DegenerateDataError("records have zero total variance")
    ratios = PCA(svd_solver="full").fit(X).explained_variance_ratio_
    return float(min(ratios[:k].sum(), 1.0))


def silhouette(coords: np.ndarray, labels: np.ndarray) -> Optional[float]:
    """Euclidean silhouette by label; ``None`` when it is undefined (fewer than 2 or all-distinct labels)."""
    labels = np.asarray(labels)
    n_labels = len(np.unique(labels))
    if n_labels < 2 or n_labels >= len(labels):
        return None
    return float(silhouette_score(coords, labels, metric="euclidean"))
