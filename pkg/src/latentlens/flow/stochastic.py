"""Stochastic reverse-time sampling, the DDPM-style control for the deterministic generator."""

import logging
from typing import Sequence, Union

import numpy as np

from latentlens.errors import LatentLensError
from latentlens.flow.integrators import BLOWUP_THRESHOLD, IntegratorSpec
from latentlens.gmm.mixture import MixtureModel, marginal_mixture, score
from latentlens.gmm.schedule import NoiseSchedule

logger = logging.getLogger(__name__)

NoiseSource = Union[np.random.Generator, Sequence[np.random.Generator]]


class SamplerError(LatentLensError):
    """Raised when a stochastic reverse trajectory leaves the finite region."""


def _draw_noise(rng: NoiseSource, steps: int, n_rows: int, dimension: int) -> np.ndarray:
    """Noise increments of shape (steps, n, d).

    A sequence of generators gives each row its own stream, so a row's output
    does not depend on which other rows share its batch.
    """
    if isinstance(rng, np.random.Generator):
        return rng.standard_normal((steps, n_rows, dimension))
    if len(rng) != n_rows:
        raise SamplerError(f"expected {n_rows} noise streams, got {len(rng)}")
    per_row = np.stack([g.standard_normal((steps, dimension)) for g in rng])
    return np.ascontiguousarray(per_row.transpose(1, 0, 2))


def ddpm_reverse_sample(
    m: MixtureModel,
    s: NoiseSchedule,
    z: np.ndarray,
    rng: NoiseSource,
    spec: IntegratorSpec,
) -> np.ndarray:
    """Euler-Maruyama integration of the reverse-time SDE from T down to 0.

    Each step is x <- x + h (1/2 beta x + beta score_t(x)) + sqrt(beta h) xi on the
    same grid the deterministic integrator uses. The output is not a function of
    ``z`` alone: the injected noise comes from ``rng``.

    Args:
        m: Data mixture.
        s: Noise schedule.
        z: Seed (d,) or batch of seeds (n, d).
        rng: One generator for the whole batch, or one generator per row.
        spec: Step grid (the method field is ignored).

    Returns:
        Generated sample(s). Batch rows that blew up are NaN.

    Raises:
        SamplerError: If a single seed's trajectory becomes non-finite.
    """
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    state = (z[None, :] if single else z).copy()
    if state.ndim != 2 or state.shape[1] != m.dimension:
        raise SamplerError(f"expected seeds of dimension {m.dimension}, got shape {z.shape}")

    n_rows = state.shape[0]
    noise = _draw_noise(rng, spec.steps, n_rows, m.dimension)
    times = np.linspace(0.0, s.horizon, spec.steps + 1)[::-1]
    valid = np.ones(n_rows, dtype=bool)

    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(spec.steps):
            t = float(times[i])
            h = t - float(times[i + 1])
            beta = float(s.beta(t))
            grad = score(marginal_mixture(m, s, t), state)
            state = state + h * (0.5 * beta * state + beta * grad) + np.sqrt(beta * h) * noise[i]

            ok = np.all(np.isfinite(state), axis=1)
            ok &= np.all(np.abs(np.where(ok[:, None], state, 0.0)) <= BLOWUP_THRESHOLD, axis=1)
            if (valid & ~ok).any():
                if single:
                    raise SamplerError(f"Stochastic trajectory blew up at t={t:.6g}")
                valid &= ok
                state[~valid] = 0.0

    if not valid.all():
        logger.warning(f"{int((~valid).sum())} of {n_rows} stochastic trajectories blew up")
        state[~valid] = np.nan
    return state[0] if single else state
