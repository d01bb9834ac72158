"""Probability-flow integration, stochastic reverse sampling and flow-map verification."""

from .integrators import (
    FlowTrajectory,
    IntegratorSpec,
    TrajectoryError,
    drift,
    integrate_backward,
    integrate_forward,
)
from .stochastic import SamplerError, ddpm_reverse_sample
from .verification import Lemma1Report, OracleCheck, Theorem1Report, verify_lemma1, verify_theorem1

__all__ = [
    "FlowTrajectory",
    "IntegratorSpec",
    "Lemma1Report",
    "OracleCheck",
    "SamplerError",
    "Theorem1Report",
    "TrajectoryError",
    "ddpm_reverse_sample",
    "drift",
    "integrate_backward",
    "integrate_forward",
    "verify_lemma1",
    "verify_theorem1",
]
