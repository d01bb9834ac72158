"""Shared-covariance linear discriminant classifier."""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import softmax

from latentlens.learning.base import FitError

logger = logging.getLogger(__name__)

SHRINKAGE = 1e-4
SHRINKAGE_FLOOR = 1e-10


def shrinkage(covariance: np.ndarray) -> float:
    """lambda = 1e-4 * trace / d, floored so a zero scatter still yields an SPD matrix."""
    d = covariance.shape[0]
    return max(SHRINKAGE * float(np.trace(covariance)) / d, SHRINKAGE_FLOOR)


def scatter_matrices(X: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Within- and between-class scatter sums plus class means and counts.

    Returns:
        (S_w, S_b, means (C', d), counts (C',)) over the classes present in ``y``,
        in ascending label order.
    """
    X = np.asarray(X, dtype=float)
    classes, inverse, counts = np.unique(y, return_inverse=True, return_counts=True)
    means = np.stack([X[inverse == k].mean(axis=0) for k in range(len(classes))])
    centered = X - means[inverse]
    within = centered.T @ centered
    overall = X.mean(axis=0)
    offsets = means - overall
    between = (offsets * counts[:, None]).T @ offsets
    return within, between, means, counts


@dataclass(frozen=True, eq=False)
class LdaClassifierModel:
    """Class means, regularized pooled covariance and priors."""

    classes: np.ndarray
    means: np.ndarray
    covariance: np.ndarray
    priors: np.ndarray

    def __post_init__(self) -> None:
        factor = cho_factor(self.covariance, lower=True)
        object.__setattr__(self, "_factor", factor)

    @property
    def n_classes(self) -> int:
        return int(self.classes.size)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        """Linear discriminants x' S^-1 mu_c - 1/2 mu_c' S^-1 mu_c + log prior_c, shape (n, C)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        solved = cho_solve(self._factor, self.means.T)  # type: ignore[attr-defined]
        offsets = -0.5 * np.einsum("dc,cd->c", solved, self.means) + np.log(self.priors)
        return X @ solved + offsets

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(self.decision_function(X), axis=1)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes[np.argmax(self.decision_function(X), axis=1)]


def train_lda(X: np.ndarray, y: np.ndarray, min_class_records: int = 2) -> LdaClassifierModel:
    """Fit the shared-covariance discriminant with shrinkage S + lambda I.

    Args:
        X: Records (n, d).
        y: Integer labels.
        min_class_records: Smallest admissible class size.

    Returns:
        Fitted classifier over the classes present in ``y``.

    Raises:
        FitError: With fewer than two classes or a class below ``min_class_records``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.ndim != 2 or len(X) != len(y):
        raise FitError(f"records and labels disagree: {X.shape} vs {y.shape}")
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) < 2:
        raise FitError(f"LDA needs at least 2 classes, got {classes.tolist()}")
    small = classes[counts < min_class_records]
    if len(small):
        raise FitError(f"class {int(small[0])} has fewer than {min_class_records} records")
    n, d = X.shape
    if n < d + len(classes):
        logger.warning(f"LDA fit on {n} records in d={d}; relying on shrinkage")

    within, _, means, counts = scatter_matrices(X, y)
    pooled = within / max(n - len(classes), 1)
    covariance = pooled + shrinkage(pooled) * np.eye(d)
    return LdaClassifierModel(classes=classes, means=means, covariance=covariance, priors=counts / n)
