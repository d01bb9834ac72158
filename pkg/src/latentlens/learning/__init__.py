"""Latent classifiers, cross-level accuracy and confidence prediction."""

from .base import Classifier, FitError, margins
from .confidence_curve import ConfidenceCurve, CurveError, accuracy_vs_confidence
from .cross_level import AccuracyMatrix, CrossLevelError, cross_level_matrix
from .evaluation import EvaluationError, EvaluationResult, evaluate
from .lda import LdaClassifierModel, train_lda
from .mlp import (
    GradientCheckError,
    MlpModel,
    TrainingError,
    TrainingHyper,
    gradient_check,
    gradient_gate,
    loss_and_gradients,
    train_mlp,
)

__all__ = [
    "AccuracyMatrix",
    "Classifier",
    "ConfidenceCurve",
    "CrossLevelError",
    "CurveError",
    "EvaluationError",
    "EvaluationResult",
    "FitError",
    "GradientCheckError",
    "LdaClassifierModel",
    "MlpModel",
    "TrainingError",
    "TrainingHyper",
    "accuracy_vs_confidence",
    "cross_level_matrix",
    "evaluate",
    "gradient_check",
    "gradient_gate",
    "loss_and_gradients",
    "margins",
    "train_lda",
    "train_mlp",
]
