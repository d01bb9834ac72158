"""Gaussian-mixture data distributions and their closed-form diffusion analytics.

A :class:`MixtureModel` is the data distribution; its time-t marginal under the
variance-preserving process is again a mixture, so the score, its divergence and
the Bayes class posterior are all available in closed form. Every Gaussian term
is evaluated in log space through per-component Cholesky factors cached at
construction.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cholesky, solve_triangular
from scipy.special import logsumexp

from latentlens.errors import LatentLensError
from latentlens.gmm.schedule import NoiseSchedule, alpha_bar

logger = logging.getLogger(__name__)

_LOG_2PI = float(np.log(2.0 * np.pi))
WEIGHT_TOLERANCE = 1e-12


class MixtureError(LatentLensError):
    """Raised for invalid weights, labels, shapes or mismatched dimensions."""


class SingularCovarianceError(MixtureError):
    """Raised when a component covariance is not symmetric positive definite."""

    def __init__(self, component: int, reason: str = "Cholesky factorization failed"):
        self.component = component
        super().__init__(f"Covariance of component {component} is not SPD: {reason}")


@dataclass(frozen=True)
class ClassPosterior:
    """Bayes class probabilities P(class c | x) for one point."""

    probabilities: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probabilities, dtype=float)
        probs.setflags(write=False)
        object.__setattr__(self, "probabilities", probs)

    @property
    def n_classes(self) -> int:
        return int(self.probabilities.shape[0])


class LabeledPoints(NamedTuple):
    points: np.ndarray
    labels: np.ndarray


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


class MixtureModel:
    """Weighted Gaussian components with a component -> class label map.

    Args:
        weights: Component weights, shape (K,), nonnegative and summing to 1.
        means: Component means, shape (K, d).
        covariances: Component covariances, shape (K, d, d), each SPD.
        class_of: Class label (0-based) of each component, shape (K,).
        n_classes: Number of classes C; defaults to ``max(class_of) + 1``.

    Raises:
        MixtureError: If weights, shapes or labels are invalid.
        SingularCovarianceError: If a covariance is not SPD.
    """

    def __init__(
        self,
        weights: Sequence[float],
        means: Sequence[Sequence[float]],
        covariances: Sequence[Sequence[Sequence[float]]],
        class_of: Sequence[int],
        n_classes: Optional[int] = None,
    ):
        weights = np.array(weights, dtype=float)
        means = np.array(means, dtype=float)
        covariances = np.array(covariances, dtype=float)
        class_of = np.array(class_of, dtype=int)

        if weights.ndim != 1 or weights.size == 0:
            raise MixtureError("weights must be a non-empty 1-D sequence")
        n_components = weights.size
        if means.ndim != 2 or means.shape[0] != n_components:
            raise MixtureError(f"means must have shape ({n_components}, d), got {means.shape}")
        dimension = means.shape[1]
        if dimension < 1:
            raise MixtureError("dimension must be at least 1")
        if covariances.shape != (n_components, dimension, dimension):
            raise MixtureError(
                f"covariances must have shape ({n_components}, {dimension}, {dimension}), "
                f"got {covariances.shape}"
            )
        if class_of.shape != (n_components,):
            raise MixtureError(f"class_of must have {n_components} entries, got {class_of.shape}")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise MixtureError(f"weights must be finite and nonnegative, got {weights.tolist()}")
        if abs(weights.sum() - 1.0) > WEIGHT_TOLERANCE:
            raise MixtureError(f"weights must sum to 1 within {WEIGHT_TOLERANCE}, got {weights.sum()!r}")
        if not np.all(np.isfinite(means)):
            raise MixtureError("means must be finite")

        if n_classes is None:
            n_classes = int(class_of.max()) + 1
        if np.any(class_of < 0) or np.any(class_of >= n_classes):
            raise MixtureError(f"class labels must lie in [0, {n_classes}), got {class_of.tolist()}")
        missing = sorted(set(range(n_classes)) - set(class_of.tolist()))
        if missing:
            raise MixtureError(f"classes {missing} are not covered by any component")

        cholesky_factors = np.empty_like(covariances)
        precisions = np.empty_like(covariances)
        identity = np.eye(dimension)
        for k, cov in enumerate(covariances):
            if not np.all(np.isfinite(cov)):
                raise SingularCovarianceError(k, "non-finite entries")
            scale = max(1.0, float(np.max(np.abs(cov))))
            if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12 * scale):
                raise SingularCovarianceError(k, "matrix is not symmetric")
            try:
                factor = cholesky(cov, lower=True)
            except LinAlgError as e:
                raise SingularCovarianceError(k) from e
            if np.any(np.diag(factor) <= 0):
                raise SingularCovarianceError(k)
            cholesky_factors[k] = factor
            inverse_factor = solve_triangular(factor, identity, lower=True)
            precisions[k] = inverse_factor.T @ inverse_factor

        self._weights = _frozen(weights)
        self._means = _frozen(means)
        self._covariances = _frozen(covariances)
        self._class_of = _frozen(class_of)
        self._n_classes = int(n_classes)
        self._cholesky = _frozen(cholesky_factors)
        self._precisions = _frozen(precisions)
        self._precision_traces = _frozen(np.trace(precisions, axis1=1, axis2=2).copy())
        log_dets = 2.0 * np.log(np.diagonal(cholesky_factors, axis1=1, axis2=2)).sum(axis=1)
        with np.errstate(divide="ignore"):
            log_weights = np.log(weights)
        # log w_k + Gaussian normalizer, shared by every density evaluation
        self._log_offsets = _frozen(log_weights - 0.5 * (dimension * _LOG_2PI + log_dets))

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def means(self) -> np.ndarray:
        return self._means

    @property
    def covariances(self) -> np.ndarray:
        return self._covariances

    @property
    def class_of(self) -> np.ndarray:
        return self._class_of

    @property
    def cholesky_factors(self) -> np.ndarray:
        return self._cholesky

    @property
    def precisions(self) -> np.ndarray:
        return self._precisions

    @property
    def n_components(self) -> int:
        return int(self._weights.size)

    @property
    def dimension(self) -> int:
        return int(self._means.shape[1])

    @property
    def n_classes(self) -> int:
        return self._n_classes

    def class_masses(self) -> np.ndarray:
        """Total weight of each class, shape (C,)."""
        return np.bincount(self._class_of, weights=self._weights, minlength=self._n_classes)

    def __repr__(self) -> str:
        return (
            f"MixtureModel(n_components={self.n_components}, dimension={self.dimension}, "
            f"n_classes={self.n_classes})"
        )

    def to_spec(self) -> Dict[str, Any]:
        """Plain-data description, the inverse of :meth:`from_components`."""
        return {
            "components": [
                {
                    "weight": float(w),
                    "mean": mu.tolist(),
                    "covariance": cov.tolist(),
                    "label": int(c),
                }
                for w, mu, cov, c in zip(self._weights, self._means, self._covariances, self._class_of)
            ],
            "n_classes": self._n_classes,
        }

    @classmethod
    def from_components(
        cls, components: Sequence[Mapping[str, Any]], n_classes: Optional[int] = None
    ) -> "MixtureModel":
        """Build a mixture from config-style component entries.

        Each entry carries ``weight``, ``mean``, ``covariance`` (full matrix or a
        scalar meaning scalar times identity) and ``label``.
        """
        if not components:
            raise MixtureError("mixture needs at least one component")
        weights: List[float] = []
        means: List[np.ndarray] = []
        covariances: List[np.ndarray] = []
        labels: List[int] = []
        for k, entry in enumerate(components):
            for key in ("weight", "mean", "label"):
                if key not in entry:
                    raise MixtureError(f"component {k} is missing '{key}'")
            mean = np.atleast_1d(np.asarray(entry["mean"], dtype=float))
            cov = np.asarray(entry.get("covariance", 1.0), dtype=float)
            if cov.ndim == 0:
                cov = float(cov) * np.eye(mean.size)
            weights.append(float(entry["weight"]))
            means.append(mean)
            covariances.append(cov)
            labels.append(int(entry["label"]))
        dims = {m.size for m in means}
        if len(dims) != 1:
            raise MixtureError(f"component means disagree on dimension: {sorted(dims)}")
        return cls(weights, means, covariances, labels, n_classes=n_classes)

    @classmethod
    def on_sphere(
        cls,
        n_classes: int,
        dimension: int,
        radius: float,
        seed: int,
        components_per_class: int = 1,
        variance: float = 1.0,
    ) -> "MixtureModel":
        """Equal-weight mixture with means drawn i.i.d. uniformly on a sphere.

        Component k belongs to class ``k // components_per_class``.
        """
        if n_classes < 1 or dimension < 1 or components_per_class < 1:
            raise MixtureError("n_classes, dimension and components_per_class must be >= 1")
        if radius < 0 or variance <= 0:
            raise MixtureError(f"need radius >= 0 and variance > 0, got {radius}, {variance}")
        n_components = n_classes * components_per_class
        rng = np.random.default_rng(seed)
        directions = rng.standard_normal((n_components, dimension))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        means = radius * directions
        covariances = np.broadcast_to(variance * np.eye(dimension), (n_components, dimension, dimension))
        weights = np.full(n_components, 1.0 / n_components)
        labels = np.arange(n_components) // components_per_class
        logger.info(
            f"Sphere mixture: {n_classes} classes x {components_per_class} components, "
            f"d={dimension}, radius={radius}"
        )
        return cls(weights, means, covariances, labels, n_classes=n_classes)

    @classmethod
    def from_spec(cls, spec: Mapping[str, Any]) -> "MixtureModel":
        """Build from a ``mixture`` config section (``components`` or ``sphere``)."""
        if "components" in spec and "sphere" in spec:
            raise MixtureError("mixture takes either 'components' or 'sphere', not both")
        if "components" in spec:
            return cls.from_components(spec["components"], n_classes=spec.get("n_classes"))
        if "sphere" in spec:
            sphere = dict(spec["sphere"])
            try:
                return cls.on_sphere(
                    n_classes=int(sphere["n_classes"]),
                    dimension=int(sphere["dimension"]),
                    radius=float(sphere["radius"]),
                    seed=int(sphere["seed"]),
                    components_per_class=int(sphere.get("components_per_class", 1)),
                    variance=float(sphere.get("variance", 1.0)),
                )
            except KeyError as e:
                raise MixtureError(f"sphere block is missing {e}") from e
        raise MixtureError("mixture needs a 'components' list or a 'sphere' block")

    def _as_batch(self, x: np.ndarray) -> Tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        batch = x[None, :] if single else x
        if batch.ndim != 2 or batch.shape[1] != self.dimension:
            raise MixtureError(f"expected points of dimension {self.dimension}, got shape {x.shape}")
        return batch, single

    def _component_terms(self, batch: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Return log(w_k N(x; mu_k, Sigma_k)) of shape (n, K) and G_k(x) of shape (n, K, d)."""
        diffs = self._means[None, :, :] - batch[:, None, :]
        gradients = np.einsum("kij,nkj->nki", self._precisions, diffs)
        quad = np.einsum("nki,nki->nk", diffs, gradients)
        return self._log_offsets[None, :] - 0.5 * quad, gradients


def _posterior_from_log_joint(log_joint: np.ndarray, class_of: np.ndarray, n_classes: int) -> np.ndarray:
    """Normalize per-component log joint terms (n, K) into class probabilities (n, C)."""
    per_class = np.full((log_joint.shape[0], n_classes), -np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        for c in range(n_classes):
            members = class_of == c
            per_class[:, c] = logsumexp(log_joint[:, members], axis=1)
        total = logsumexp(per_class, axis=1, keepdims=True)
        probs = np.exp(per_class - total)
    return np.nan_to_num(probs, nan=0.0)


def marginal_mixture(m: MixtureModel, s: NoiseSchedule, t: float) -> MixtureModel:
    """Time-t marginal: each (w, mu, Sigma) becomes (w, sqrt(a) mu, a Sigma + (1 - a) I).

    Args:
        m: Data mixture.
        s: Noise schedule.
        t: Time in [0, T].

    Returns:
        The marginal mixture; ``m`` itself when t = 0.
    """
    a = alpha_bar(s, t)
    if a == 1.0:
        return m
    identity = np.eye(m.dimension)
    return MixtureModel(
        m.weights,
        np.sqrt(a) * m.means,
        a * m.covariances + (1.0 - a) * identity[None, :, :],
        m.class_of,
        n_classes=m.n_classes,
    )


def log_density(m: MixtureModel, x: np.ndarray) -> Any:
    """log sum_k w_k N(x; mu_k, Sigma_k) for a point (d,) or a batch (n, d)."""
    batch, single = m._as_batch(x)
    log_joint, _ = m._component_terms(batch)
    values = logsumexp(log_joint, axis=1)
    return float(values[0]) if single else values


def score(m: MixtureModel, x: np.ndarray) -> np.ndarray:
    """Gradient of the log-density: sum_k r_k(x) Sigma_k^-1 (mu_k - x)."""
    batch, single = m._as_batch(x)
    log_joint, gradients = m._component_terms(batch)
    resp = np.exp(log_joint - logsumexp(log_joint, axis=1, keepdims=True))
    values = np.einsum("nk,nki->ni", resp, gradients)
    return values[0] if single else values


def score_divergence(m: MixtureModel, x: np.ndarray) -> Any:
    """Laplacian of the log-density.

    Equals sum_k r_k (|G_k|^2 - tr Sigma_k^-1) - |sum_k r_k G_k|^2 with
    G_k = Sigma_k^-1 (mu_k - x).
    """
    batch, single = m._as_batch(x)
    log_joint, gradients = m._component_terms(batch)
    resp = np.exp(log_joint - logsumexp(log_joint, axis=1, keepdims=True))
    sq_norms = np.einsum("nki,nki->nk", gradients, gradients)
    first = np.einsum("nk,nk->n", resp, sq_norms - m._precision_traces[None, :])
    mean_gradient = np.einsum("nk,nki->ni", resp, gradients)
    values = first - np.einsum("ni,ni->n", mean_gradient, mean_gradient)
    return float(values[0]) if single else values


def class_posterior(m: MixtureModel, x: np.ndarray) -> ClassPosterior:
    """Bayes posterior over classes at a single point, computed in log space."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise MixtureError(f"class_posterior takes a single point, got shape {x.shape}")
    return ClassPosterior(class_posteriors(m, x[None, :])[0])


def class_posteriors(m: MixtureModel, X: np.ndarray) -> np.ndarray:
    """Batch Bayes posteriors, shape (n, C); rows sum to 1 and never contain NaN."""
    batch, _ = m._as_batch(np.atleast_2d(X))
    log_joint, _ = m._component_terms(batch)
    return _posterior_from_log_joint(log_joint, m.class_of, m.n_classes)


def sample_data(m: MixtureModel, rng: np.random.Generator, n: int) -> LabeledPoints:
    """Draw n i.i.d. points with their ground-truth class labels.

    Raises:
        MixtureError: If n < 1.
    """
    if n < 1:
        raise MixtureError(f"sample_data needs n >= 1, got {n}")
    components = rng.choice(m.n_components, size=n, p=m.weights)
    noise = rng.standard_normal((n, m.dimension))
    points = m.means[components] + np.einsum("nij,nj->ni", m.cholesky_factors[components], noise)
    return LabeledPoints(points=points, labels=m.class_of[components].copy())
