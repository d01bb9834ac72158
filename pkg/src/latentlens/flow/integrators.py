"""Fixed-step integration of the probability-flow ODE with log-det accumulation.

The flow field is F(t, x) = -1/2 beta(t) [x + grad log p_t(x)]. Its divergence
-1/2 beta(t) [d + lap log p_t(x)] is evaluated at the same stage points as the
state and combined with the same Butcher weights, so the returned log-det is the
quadrature of int div F dt along the traversed path.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np

from latentlens.errors import LatentLensError
from latentlens.gmm.mixture import MixtureModel, marginal_mixture, score, score_divergence
from latentlens.gmm.schedule import NoiseSchedule

logger = logging.getLogger(__name__)

METHODS = ("rk4", "euler")
BLOWUP_THRESHOLD = 1e6


class TrajectoryError(LatentLensError):
    """Raised when a single-point trajectory leaves the finite region."""

    def __init__(self, last_valid_time: float, message: Optional[str] = None):
        self.last_valid_time = float(last_valid_time)
        super().__init__(
            message or f"Trajectory blew up after t={self.last_valid_time:.6g} (|x| > {BLOWUP_THRESHOLD:g})"
        )


@dataclass(frozen=True)
class IntegratorSpec:
    """Integration method and number of fixed steps."""

    method: str = "rk4"
    steps: int = 256

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"Unknown integrator method '{self.method}', expected one of {METHODS}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"Integrator steps must be an integer >= 1, got {self.steps}")

    @classmethod
    def from_spec(cls, spec: Mapping[str, Any]) -> "IntegratorSpec":
        return cls(method=str(spec.get("method", "rk4")), steps=int(spec.get("steps", 256)))

    def with_steps(self, steps: int) -> "IntegratorSpec":
        return IntegratorSpec(method=self.method, steps=steps)


@dataclass(frozen=True)
class FlowTrajectory:
    """Result of integrating one point (states (k, d)) or a batch (states (k, n, d)).

    Attributes:
        times: Strictly monotone time grid; descending for the backward map.
        states: State at each retained time.
        logdet: log|det| of the Jacobian of the traversed map, scalar or (n,).
        valid: Per-row finite mask for batches, ``None`` for a single point.
            Rows that blew up hold NaN in their final state and log-det.
    """

    times: np.ndarray
    states: np.ndarray
    logdet: Any
    valid: Optional[np.ndarray] = None

    @property
    def initial_state(self) -> np.ndarray:
        return self.states[0]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def is_batch(self) -> bool:
        return self.valid is not None

    @property
    def n_diverged(self) -> int:
        return 0 if self.valid is None else int((~self.valid).sum())


class _FlowField:
    """Evaluates F and div F, reusing time-t marginals across stages that share a time."""

    def __init__(self, m: MixtureModel, s: NoiseSchedule):
        self.m = m
        self.s = s
        self.dimension = m.dimension
        self._marginals: Dict[float, Tuple[MixtureModel, float]] = {}

    def _marginal(self, t: float) -> Tuple[MixtureModel, float]:
        cached = self._marginals.get(t)
        if cached is None:
            cached = (marginal_mixture(self.m, self.s, t), float(self.s.beta(t)))
            self._marginals[t] = cached
        return cached

    def drift(self, t: float, x: np.ndarray) -> np.ndarray:
        mt, beta = self._marginal(t)
        return -0.5 * beta * (x + score(mt, x))

    def drift_and_divergence(self, t: float, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        mt, beta = self._marginal(t)
        velocity = -0.5 * beta * (x + score(mt, x))
        divergence = -0.5 * beta * (self.dimension + score_divergence(mt, x))
        return velocity, divergence


def drift(m: MixtureModel, s: NoiseSchedule, t: float, x: np.ndarray) -> np.ndarray:
    """Probability-flow velocity -1/2 beta(t) [x + score(p_t, x)] at a point or batch.

    Raises:
        DomainError: If t lies outside [0, T].
    """
    return _FlowField(m, s).drift(float(s.check_time(t)), np.asarray(x, dtype=float))


def _time_grid(s: NoiseSchedule, steps: int, backward: bool) -> np.ndarray:
    grid = np.linspace(0.0, s.horizon, steps + 1)
    return grid[::-1].copy() if backward else grid


def _integrate(
    m: MixtureModel,
    s: NoiseSchedule,
    x: np.ndarray,
    spec: IntegratorSpec,
    backward: bool,
    keep_path: bool,
) -> FlowTrajectory:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    state = (x[None, :] if single else x).copy()
    if state.ndim != 2 or state.shape[1] != m.dimension:
        raise ValueError(f"expected points of dimension {m.dimension}, got shape {x.shape}")

    field = _FlowField(m, s)
    times = _time_grid(s, spec.steps, backward)
    n_rows = state.shape[0]
    logdet = np.zeros(n_rows)
    valid = np.all(np.isfinite(state), axis=1)
    last_valid_time = np.full(n_rows, times[0])
    path = [state.copy()] if keep_path else None

    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(spec.steps):
            t0, t1 = float(times[i]), float(times[i + 1])
            h = t1 - t0
            if spec.method == "euler":
                k1, d1 = field.drift_and_divergence(t0, state)
                state = state + h * k1
                logdet = logdet + h * d1
            else:
                t_mid = 0.5 * (t0 + t1)
                k1, d1 = field.drift_and_divergence(t0, state)
                k2, d2 = field.drift_and_divergence(t_mid, state + 0.5 * h * k1)
                k3, d3 = field.drift_and_divergence(t_mid, state + 0.5 * h * k2)
                k4, d4 = field.drift_and_divergence(t1, state + h * k3)
                state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                logdet = logdet + (h / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4)

            finite = np.all(np.isfinite(state), axis=1) & np.isfinite(logdet)
            bounded = finite & np.all(np.abs(np.where(finite[:, None], state, 0.0)) <= BLOWUP_THRESHOLD, axis=1)
            newly_failed = valid & ~bounded
            if newly_failed.any():
                if single:
                    raise TrajectoryError(last_valid_time[0])
                valid &= bounded
                # park failed rows at the origin so they cannot overflow later stages
                state[~valid] = 0.0
                logdet[~valid] = 0.0
            last_valid_time[valid] = t1
            if keep_path:
                path.append(state.copy())

    if not single and not valid.all():
        logger.warning(
            f"{int((~valid).sum())} of {n_rows} trajectories blew up; "
            f"earliest failure after t={float(last_valid_time[~valid].min()):.4g}"
        )
        state[~valid] = np.nan
        logdet[~valid] = np.nan
        if keep_path:
            path[-1] = state.copy()

    if keep_path:
        states = np.stack(path)
        kept_times = times
    else:
        states = np.stack([(x[None, :] if single else x).astype(float), state])
        kept_times = times[[0, -1]]

    if single:
        return FlowTrajectory(times=kept_times, states=states[:, 0, :], logdet=float(logdet[0]))
    return FlowTrajectory(times=kept_times, states=states, logdet=logdet, valid=valid)


def integrate_forward(
    m: MixtureModel, s: NoiseSchedule, x0: np.ndarray, spec: IntegratorSpec, keep_path: bool = True
) -> FlowTrajectory:
    """Apply the diffusion-direction flow map from t=0 to t=T.

    Args:
        m: Data mixture.
        s: Noise schedule.
        x0: Data point (d,) or batch (n, d).
        spec: Integration method and step count.
        keep_path: Retain every intermediate state; otherwise only the end points.

    Returns:
        Trajectory whose ``logdet`` is log|det grad phi_T(x0)| up to discretization error.

    Raises:
        TrajectoryError: If a single point leaves the finite region.
    """
    return _integrate(m, s, x0, spec, backward=False, keep_path=keep_path)


def integrate_backward(
    m: MixtureModel, s: NoiseSchedule, z: np.ndarray, spec: IntegratorSpec, keep_path: bool = True
) -> FlowTrajectory:
    """Apply the deterministic generator: the same ODE integrated from t=T down to t=0.

    The time grid is the forward grid reversed, so the result is bit-identical for
    identical inputs and the log-det carries the opposite sign of the forward map.
    """
    return _integrate(m, s, z, spec, backward=True, keep_path=keep_path)
