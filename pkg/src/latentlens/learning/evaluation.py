"""Accuracy, macro-F1 and confusion counts for latent classifiers."""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
from sklearn.metrics import confusion_matrix, f1_score

from latentlens.errors import LatentLensError
from latentlens.learning.base import Classifier

logger = logging.getLogger(__name__)


class EvaluationError(LatentLensError):
    """Raised when there is nothing to evaluate."""


@dataclass(frozen=True)
class EvaluationResult:
    accuracy: float
    macro_f1: float
    confusion: np.ndarray
    n: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "confusion": self.confusion.tolist(),
            "n": self.n,
        }


def score_predictions(y_true: np.ndarray, y_pred: np.ndarray, n_classes: Optional[int] = None) -> EvaluationResult:
    """Metrics of hard predictions.

    Macro-F1 averages over the labels present in either ``y_true`` or
    ``y_pred``; a class that is never predicted but has instances scores 0.
    The confusion matrix rows are true classes 0..C-1.
    """
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    if y_true.size == 0:
        raise EvaluationError("Cannot evaluate on an empty record set")
    if n_classes is None:
        n_classes = int(max(y_true.max(), y_pred.max())) + 1
    return EvaluationResult(
        accuracy=float(np.mean(y_true == y_pred)),
        macro_f1=float(f1_score(y_true, y_pred, average="macro", zero_division=0)),
        confusion=confusion_matrix(y_true, y_pred, labels=np.arange(n_classes)),
        n=int(y_true.size),
    )


def evaluate(model: Classifier, X: np.ndarray, y: np.ndarray, n_classes: Optional[int] = None) -> EvaluationResult:
    """Predict with ``model`` and score against labels ``y``.

    Raises:
        EvaluationError: If the record set is empty.
    """
    X = np.asarray(X, dtype=float)
    if len(X) == 0:
        raise EvaluationError("Cannot evaluate on an empty record set")
    return score_predictions(y, model.predict(X), n_classes)
