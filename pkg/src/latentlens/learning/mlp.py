"""Three-layer perceptron written directly in numpy.

Forward and backward passes follow the layer-by-layer memory pattern: the
forward pass keeps every pre-activation, the backward pass walks them in
reverse. Training uses mini-batches with the Adam update; all randomness
(initialization and shuffling) comes from the caller's generator.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp, softmax

from latentlens.errors import LatentLensError, VerificationFailure
from latentlens.learning.base import FitError

logger = logging.getLogger(__name__)

HEADS = ("classifier", "regressor")
MIN_RECORDS_PER_CLASS = 10


class TrainingError(LatentLensError):
    """Raised when the training loss stops being finite."""

    def __init__(self, epoch: int, loss: float):
        self.epoch = int(epoch)
        self.loss = loss
        super().__init__(f"Non-finite training loss {loss!r} at epoch {self.epoch}")


class GradientCheckError(VerificationFailure):
    """Raised when analytic gradients disagree with finite differences."""


@dataclass(frozen=True)
class TrainingHyper:
    hidden: Tuple[int, ...] = (128, 64)
    batch_size: int = 128
    learning_rate: float = 1e-3
    epochs: int = 200
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self) -> None:
        if len(self.hidden) != 2 or any(int(h) < 1 for h in self.hidden):
            raise ValueError(f"hidden must be two positive widths, got {self.hidden}")
        if self.batch_size < 1 or self.epochs < 0 or self.learning_rate <= 0:
            raise ValueError("need batch_size >= 1, epochs >= 0 and learning_rate > 0")

    @classmethod
    def from_spec(cls, spec: Mapping[str, Any]) -> "TrainingHyper":
        return cls(
            hidden=tuple(int(h) for h in spec.get("hidden", (128, 64))),
            batch_size=int(spec.get("batch_size", 128)),
            learning_rate=float(spec.get("learning_rate", 1e-3)),
            epochs=int(spec.get("epochs", 200)),
        )


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_grad(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, 1.0, 0.0)


@dataclass
class MlpModel:
    """Weights (fan_in, fan_out) and biases for d -> h1 -> h2 -> C.

    ``head`` selects softmax cross-entropy (``classifier``) or a linear output
    trained by squared error on posteriors (``regressor``).
    """

    weights: List[np.ndarray]
    biases: List[np.ndarray]
    head: str = "classifier"
    initial_loss: Optional[float] = None
    final_loss: Optional[float] = None
    epochs_trained: int = 0
    loss_history: List[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.head not in HEADS:
            raise ValueError(f"Unknown head '{self.head}', expected one of {HEADS}")
        if len(self.weights) != 3 or len(self.biases) != 3:
            raise ValueError("MlpModel has exactly three layers")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if b.shape != (w.shape[1],):
                raise ValueError(f"layer {i}: bias shape {b.shape} does not match weights {w.shape}")
            if i and w.shape[0] != self.weights[i - 1].shape[1]:
                raise ValueError(f"layer {i}: input width {w.shape[0]} != {self.weights[i - 1].shape[1]}")

    @classmethod
    def initialize(
        cls, dimension: int, n_outputs: int, hidden: Sequence[int], head: str, rng: np.random.Generator
    ) -> "MlpModel":
        """He-normal weights, zero biases."""
        widths = [dimension, *hidden, n_outputs]
        weights = [
            rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in)
            for fan_in, fan_out in zip(widths[:-1], widths[1:])
        ]
        biases = [np.zeros(w.shape[1]) for w in weights]
        return cls(weights=weights, biases=biases, head=head)

    @property
    def widths(self) -> List[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def n_outputs(self) -> int:
        return self.weights[-1].shape[1]

    def parameters(self) -> List[np.ndarray]:
        """Parameter arrays in the order (W1, b1, W2, b2, W3, b3); views, not copies."""
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def n_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.parameters())

    def forward(self, X: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
        """Raw outputs and the activations needed by the backward pass."""
        x = np.asarray(X, dtype=float)
        z1 = x @ self.weights[0] + self.biases[0]
        a1 = relu(z1)
        z2 = a1 @ self.weights[1] + self.biases[1]
        a2 = relu(z2)
        out = a2 @ self.weights[2] + self.biases[2]
        return out, [x, z1, a1, z2, a2]

    def backward(self, d_out: np.ndarray, memory: List[np.ndarray]) -> List[np.ndarray]:
        x, z1, a1, z2, a2 = memory
        dW3 = a2.T @ d_out
        db3 = d_out.sum(axis=0)
        dz2 = relu_grad(z2) * (d_out @ self.weights[2].T)
        dW2 = a1.T @ dz2
        db2 = dz2.sum(axis=0)
        dz1 = relu_grad(z1) * (dz2 @ self.weights[1].T)
        dW1 = x.T @ dz1
        db1 = dz1.sum(axis=0)
        return [dW1, db1, dW2, db2, dW3, db3]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Softmax probabilities (classifier) or predicted posteriors (regressor)."""
        out, _ = self.forward(np.atleast_2d(X))
        return softmax(out, axis=1) if self.head == "classifier" else out

    def predict(self, X: np.ndarray) -> np.ndarray:
        out, _ = self.forward(np.atleast_2d(X))
        return np.argmax(out, axis=1)


def _loss(model: MlpModel, out: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
    n = out.shape[0]
    if model.head == "classifier":
        log_probs = out - logsumexp(out, axis=1, keepdims=True)
        loss = -float(np.mean(log_probs[np.arange(n), targets]))
        d_out = np.exp(log_probs)
        d_out[np.arange(n), targets] -= 1.0
        return loss, d_out / n
    residual = out - targets
    return float(np.mean(residual**2)), 2.0 * residual / residual.size


def loss_and_gradients(model: MlpModel, X: np.ndarray, targets: np.ndarray) -> Tuple[float, List[np.ndarray]]:
    """Mean loss over the batch and its gradient for every entry of :meth:`MlpModel.parameters`.

    Args:
        model: Network.
        X: Inputs (n, d).
        targets: Integer labels (classifier) or target posteriors (n, C) (regressor).
    """
    out, memory = model.forward(X)
    loss, d_out = _loss(model, out, targets)
    return loss, model.backward(d_out, memory)


def _validate_targets(head: str, targets: np.ndarray, n_classes: int) -> np.ndarray:
    if head == "classifier":
        targets = np.asarray(targets, dtype=int)
        if targets.ndim != 1 or np.any(targets < 0) or np.any(targets >= n_classes):
            raise FitError(f"classifier targets must be labels in [0, {n_classes})")
        return targets
    targets = np.asarray(targets, dtype=float)
    if targets.ndim != 2 or targets.shape[1] != n_classes:
        raise FitError(f"regressor targets must have shape (n, {n_classes}), got {targets.shape}")
    return targets


def train_mlp(
    X: np.ndarray,
    targets: np.ndarray,
    head: str,
    hyper: TrainingHyper,
    rng: np.random.Generator,
    n_classes: Optional[int] = None,
) -> MlpModel:
    """Fit a fresh MLP with mini-batch Adam.

    Args:
        X: Training inputs (n, d).
        targets: Labels for the classifier head, posteriors (n, C) for the regressor.
        head: ``"classifier"`` or ``"regressor"``.
        hyper: Widths and optimizer settings.
        rng: Source of initialization and shuffling.
        n_classes: Output width; inferred from the targets when omitted.

    Returns:
        Trained model with ``initial_loss``/``final_loss`` over the full training set.

    Raises:
        FitError: If there are fewer than 10 records per class or targets are malformed.
        TrainingError: If a mini-batch loss becomes non-finite.
    """
    X = np.asarray(X, dtype=float)
    if head not in HEADS:
        raise ValueError(f"Unknown head '{head}', expected one of {HEADS}")
    if n_classes is None:
        n_classes = int(np.max(targets)) + 1 if head == "classifier" else int(np.shape(targets)[1])
    targets = _validate_targets(head, targets, n_classes)
    n = X.shape[0]
    if n < MIN_RECORDS_PER_CLASS * n_classes:
        raise FitError(f"need at least {MIN_RECORDS_PER_CLASS * n_classes} training records, got {n}")

    model = MlpModel.initialize(X.shape[1], n_classes, hyper.hidden, head, rng)
    params = model.parameters()
    first_moment = [np.zeros_like(p) for p in params]
    second_moment = [np.zeros_like(p) for p in params]
    model.initial_loss = loss_and_gradients(model, X, targets)[0]

    step = 0
    for epoch in range(1, hyper.epochs + 1):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, hyper.batch_size):
            batch = order[start:start + hyper.batch_size]
            loss, grads = loss_and_gradients(model, X[batch], targets[batch])
            if not np.isfinite(loss):
                raise TrainingError(epoch, loss)
            epoch_loss += loss * len(batch)
            step += 1
            for p, g, m1, m2 in zip(params, grads, first_moment, second_moment):
                m1 *= hyper.beta1
                m1 += (1.0 - hyper.beta1) * g
                m2 *= hyper.beta2
                m2 += (1.0 - hyper.beta2) * g * g
                m_hat = m1 / (1.0 - hyper.beta1**step)
                v_hat = m2 / (1.0 - hyper.beta2**step)
                p -= hyper.learning_rate * m_hat / (np.sqrt(v_hat) + hyper.epsilon)
        model.loss_history.append(epoch_loss / n)
        model.epochs_trained = epoch
        if epoch % 50 == 0:
            logger.debug(f"epoch {epoch}: loss {epoch_loss / n:.5f}")

    model.final_loss = loss_and_gradients(model, X, targets)[0]
    if not np.isfinite(model.final_loss):
        raise TrainingError(hyper.epochs, model.final_loss)
    logger.info(
        f"Trained {head} MLP {model.widths} on {n} records: "
        f"loss {model.initial_loss:.4f} -> {model.final_loss:.4f} in {hyper.epochs} epochs"
    )
    return model


@dataclass(frozen=True)
class GradientCheckResult:
    max_relative_error: float
    tolerance: float
    relative_errors: List[float]

    @property
    def passed(self) -> bool:
        return self.max_relative_error <= self.tolerance


def gradient_check(
    model: MlpModel,
    X: np.ndarray,
    targets: np.ndarray,
    rng: np.random.Generator,
    n_checks: int = 10,
    step: float = 1e-5,
    tolerance: float = 1e-4,
) -> GradientCheckResult:
    """Compare analytic gradients with central differences on random parameter entries.

    The relative error of one entry is |a - f| / max(|a|, |f|, 1e-6).
    """
    _, analytic = loss_and_gradients(model, X, targets)
    params = model.parameters()
    sizes = np.array([p.size for p in params])
    flat_choices = rng.choice(sizes.sum(), size=min(n_checks, int(sizes.sum())), replace=False)
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    errors: List[float] = []
    for flat in flat_choices:
        which = int(np.searchsorted(offsets, flat, side="right") - 1)
        position = np.unravel_index(int(flat - offsets[which]), params[which].shape)
        original = params[which][position]
        params[which][position] = original + step
        loss_plus = loss_and_gradients(model, X, targets)[0]
        params[which][position] = original - step
        loss_minus = loss_and_gradients(model, X, targets)[0]
        params[which][position] = original
        numeric = (loss_plus - loss_minus) / (2.0 * step)
        exact = float(analytic[which][position])
        errors.append(abs(exact - numeric) / max(abs(exact), abs(numeric), 1e-6))

    return GradientCheckResult(max_relative_error=float(max(errors)), tolerance=tolerance, relative_errors=errors)


def gradient_gate(
    rng: np.random.Generator, dimension: int = 4, n_classes: int = 3, n_points: int = 32
) -> List[GradientCheckResult]:
    """Run the gradient check on a small random network for both heads.

    Raises:
        GradientCheckError: If either head fails.
    """
    X = rng.standard_normal((n_points, dimension))
    results: List[GradientCheckResult] = []
    for head in HEADS:
        model = MlpModel.initialize(dimension, n_classes, (16, 8), head, rng)
        if head == "classifier":
            targets: np.ndarray = rng.integers(0, n_classes, size=n_points)
        else:
            targets = rng.dirichlet(np.ones(n_classes), size=n_points)
        result = gradient_check(model, X, targets, rng)
        logger.info(f"Gradient check ({head}): max relative error {result.max_relative_error:.2e}")
        if not result.passed:
            raise GradientCheckError(
                f"{head} gradients disagree with finite differences: "
                f"max relative error {result.max_relative_error:.2e} > {result.tolerance:g}"
            )
        results.append(result)
    return results
