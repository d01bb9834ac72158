"""Closed-form Gaussian-mixture analytics under the variance-preserving diffusion."""

from .mixture import (
    ClassPosterior,
    LabeledPoints,
    MixtureError,
    MixtureModel,
    SingularCovarianceError,
    class_posterior,
    class_posteriors,
    log_density,
    marginal_mixture,
    sample_data,
    score,
    score_divergence,
)
from .schedule import DomainError, NoiseSchedule, alpha_bar

__all__ = [
    "ClassPosterior",
    "DomainError",
    "LabeledPoints",
    "MixtureError",
    "MixtureModel",
    "NoiseSchedule",
    "SingularCovarianceError",
    "alpha_bar",
    "class_posterior",
    "class_posteriors",
    "log_density",
    "marginal_mixture",
    "sample_data",
    "score",
    "score_divergence",
]
