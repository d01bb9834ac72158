"""Shared types for latent classifiers."""

from typing import Protocol

import numpy as np

from latentlens.errors import LatentLensError


class FitError(LatentLensError):
    """Raised when a model cannot be fitted to the given records."""


class Classifier(Protocol):
    """Anything that maps points to class scores and hard labels."""

    def predict_proba(self, X: np.ndarray) -> np.ndarray: ...

    def predict(self, X: np.ndarray) -> np.ndarray: ...


def margins(scores: np.ndarray) -> np.ndarray:
    """Top-1 minus top-2 score per row; the top score itself when there is one column."""
    ordered = np.sort(np.asarray(scores, dtype=float), axis=1)
    if ordered.shape[1] == 1:
        return ordered[:, -1]
    return ordered[:, -1] - ordered[:, -2]
