"""Variance-preserving noise schedules with closed-form signal levels.

The forward process is dx = -1/2 beta(t) x dt + sqrt(beta(t)) dw, so a data point
x0 is distributed at time t as N(sqrt(alpha_bar(t)) x0, (1 - alpha_bar(t)) I) with
alpha_bar(t) = exp(-int_0^t beta(s) ds).
"""

import logging
from dataclasses import dataclass
from typing import Any, Mapping, Union

import numpy as np

from latentlens.errors import LatentLensError

logger = logging.getLogger(__name__)

ArrayOrFloat = Union[float, np.ndarray]

SCHEDULE_FORMS = ("constant", "linear")

# Relative slack for time grids produced by floating-point stepping.
_TIME_TOLERANCE = 1e-12


class DomainError(LatentLensError):
    """Raised when a schedule is invalid or a time lies outside [0, T]."""


@dataclass(frozen=True)
class NoiseSchedule:
    """beta(t) on [0, horizon], either constant (beta_0) or linear beta_0 -> beta_1.

    Attributes:
        form: ``"constant"`` or ``"linear"``.
        beta_0: beta at t = 0 (the constant value for the constant form).
        beta_1: beta at t = horizon; ignored by the constant form.
        horizon: Final time T > 0.
    """

    form: str = "linear"
    beta_0: float = 0.1
    beta_1: float = 20.0
    horizon: float = 1.0

    def __post_init__(self) -> None:
        if self.form not in SCHEDULE_FORMS:
            raise DomainError(f"Unknown schedule form '{self.form}', expected one of {SCHEDULE_FORMS}")
        if not np.isfinite(self.horizon) or self.horizon <= 0:
            raise DomainError(f"Schedule horizon must be positive, got {self.horizon}")
        endpoints = [self.beta_0] if self.form == "constant" else [self.beta_0, self.beta_1]
        # beta is affine in t, so positivity at the endpoints covers [0, T]
        if any(not np.isfinite(b) or b <= 0 for b in endpoints):
            raise DomainError(f"beta(t) must be positive on [0, T], got endpoints {endpoints}")

    @classmethod
    def constant(cls, beta: float, horizon: float = 1.0) -> "NoiseSchedule":
        return cls(form="constant", beta_0=beta, beta_1=beta, horizon=horizon)

    @classmethod
    def linear(cls, beta_0: float, beta_1: float, horizon: float = 1.0) -> "NoiseSchedule":
        return cls(form="linear", beta_0=beta_0, beta_1=beta_1, horizon=horizon)

    @classmethod
    def from_spec(cls, spec: Mapping[str, Any]) -> "NoiseSchedule":
        """Build a schedule from a config section (``form``, ``beta_0``, ``beta_1``, ``horizon``)."""
        form = str(spec.get("form", "linear"))
        beta_0 = float(spec.get("beta_0", 0.1))
        beta_1 = float(spec.get("beta_1", beta_0 if form == "constant" else 20.0))
        return cls(form=form, beta_0=beta_0, beta_1=beta_1, horizon=float(spec.get("horizon", 1.0)))

    def check_time(self, t: ArrayOrFloat) -> ArrayOrFloat:
        """Validate that t lies in [0, T] and clip away floating-point overshoot."""
        t_arr = np.asarray(t, dtype=float)
        slack = _TIME_TOLERANCE * max(1.0, self.horizon)
        if np.any(~np.isfinite(t_arr)) or np.any(t_arr < -slack) or np.any(t_arr > self.horizon + slack):
            raise DomainError(f"Time {t} outside schedule domain [0, {self.horizon}]")
        clipped = np.clip(t_arr, 0.0, self.horizon)
        return float(clipped) if clipped.ndim == 0 else clipped

    def beta(self, t: ArrayOrFloat) -> ArrayOrFloat:
        t_arr = np.asarray(self.check_time(t))
        if self.form == "constant":
            value = np.full_like(t_arr, self.beta_0, dtype=float)
        else:
            value = self.beta_0 + (self.beta_1 - self.beta_0) * t_arr / self.horizon
        return float(value) if value.ndim == 0 else value

    def integrated_beta(self, t: ArrayOrFloat) -> ArrayOrFloat:
        """Closed form of int_0^t beta(s) ds."""
        t = self.check_time(t)
        t_arr = np.asarray(t)
        if self.form == "constant":
            value = self.beta_0 * t_arr
        else:
            value = self.beta_0 * t_arr + (self.beta_1 - self.beta_0) * t_arr**2 / (2.0 * self.horizon)
        return float(value) if value.ndim == 0 else value


def alpha_bar(schedule: NoiseSchedule, t: ArrayOrFloat) -> ArrayOrFloat:
    """Signal level exp(-int_0^t beta) of the variance-preserving process.

    Args:
        schedule: Noise schedule.
        t: Time (scalar or array) in [0, T].

    Returns:
        Value(s) in (0, 1]; exactly 1.0 at t = 0.

    Raises:
        DomainError: If t lies outside [0, T].
    """
    value = np.exp(-np.asarray(schedule.integrated_beta(t)))
    return float(value) if value.ndim == 0 else value
