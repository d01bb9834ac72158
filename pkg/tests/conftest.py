"""Shared fixtures: a small well-separated mixture, a tiny stratified pool and a tiny experiment."""

import copy
from typing import Any, Dict

import numpy as np
import pandas as pd
import pytest

from latentlens.flow.integrators import IntegratorSpec
from latentlens.gmm.mixture import MixtureModel
from latentlens.gmm.schedule import NoiseSchedule
from latentlens.pool.operations import balance_pool, build_pool, split_train_test, stage_stream, stratify
from latentlens.pool.records import SeedPool, pool_columns

SEPARATED_MEANS = [[6.0, 0.0], [-3.0, 5.2], [-3.0, -5.2]]

TINY_EXPERIMENT: Dict[str, Any] = {
    "run": {"seed": 7, "sampler": "ddim", "noise_stream": 0, "workers": 1},
    "mixture": {
        "components": [
            {"weight": 1.0 / 3.0, "mean": mean, "covariance": 1.0, "label": label}
            for label, mean in enumerate(SEPARATED_MEANS)
        ]
    },
    "schedule": {"form": "linear", "beta_0": 0.1, "beta_1": 20.0, "horizon": 1.0},
    "integrator": {"method": "rk4", "steps": 64},
    "pool": {"size": 300, "levels": 3, "test_fraction": 0.2, "chunk_size": 64},
    "training": {"hidden": [16, 8], "batch_size": 32, "learning_rate": 0.01, "epochs": 30, "space": "seed"},
    "prediction": {"n_fresh": 200, "bins": 4, "train_level": 1},
    "structure": {
        "spaces": ["seed", "sample"],
        "samples_per_class": None,
        "test_fraction": 0.2,
        "include_unconditional": True,
        "high_level": 1,
        "low_level": None,
    },
    "condgen": {
        "n_requested": 5,
        "max_draws": 5000,
        "threshold": 0.0,
        "batch_size": 256,
        "classes": None,
        "train_level": 1,
        "reference_samples": 120,
    },
    "verify": {
        "closed_form_points": 4,
        "lemma1_points": 5,
        "lemma1_steps": 128,
        "lemma1_tolerance": 0.001,
        "convergence_steps": [64, 128],
        "rk4_order_steps": [8, 16],
        "theorem1_n": 300,
        "separation": 12.0,
        "purity_tolerance": 0.99,
    },
}


@pytest.fixture
def tiny_experiment() -> Dict[str, Any]:
    """Tiny but complete experiment config (3 separated classes in 2-D)."""
    return copy.deepcopy(TINY_EXPERIMENT)


@pytest.fixture
def separated_mixture():
    """Three unit-variance classes in 2-D, roughly six standard deviations apart."""
    return MixtureModel(np.full(3, 1.0 / 3.0), SEPARATED_MEANS, [np.eye(2)] * 3, [0, 1, 2])


@pytest.fixture
def standard_normal():
    return MixtureModel([1.0], [[0.0, 0.0]], [np.eye(2)], [0])


@pytest.fixture
def linear_schedule():
    return NoiseSchedule.linear(0.1, 20.0)


@pytest.fixture
def rk4_spec():
    return IntegratorSpec("rk4", 64)


@pytest.fixture(scope="session")
def small_pool() -> SeedPool:
    """Balanced, 3-level, split DDIM pool over the separated mixture."""
    m = MixtureModel(np.full(3, 1.0 / 3.0), SEPARATED_MEANS, [np.eye(2)] * 3, [0, 1, 2])
    s = NoiseSchedule.linear(0.1, 20.0)
    raw = build_pool(m, s, 600, "ddim", IntegratorSpec("rk4", 32), master_seed=7, chunk_size=128, workers=1)
    balanced = balance_pool(raw, stage_stream(7, "balance"))
    return split_train_test(stratify(balanced, 3), 0.2, stage_stream(7, "split"))


def make_pool(labels, confidences, n_classes: int, dimension: int = 2, seed: int = 0) -> SeedPool:
    """Hand-built unstratified pool with the given labels and confidences."""
    rng = np.random.default_rng(seed)
    labels = np.asarray(labels, dtype=int)
    n = len(labels)
    posteriors = np.full((n, n_classes), 0.0)
    posteriors[np.arange(n), labels] = 1.0
    frame = pd.DataFrame(
        {
            "index": np.arange(n),
            "split": pd.array([pd.NA] * n, dtype="string"),
            "level": pd.array([pd.NA] * n, dtype="Int64"),
            "label": labels,
            "confidence": np.asarray(confidences, dtype=float),
            **{f"z_{i}": rng.standard_normal(n) for i in range(dimension)},
            **{f"x_{i}": rng.standard_normal(n) for i in range(dimension)},
            **{f"p_{i}": posteriors[:, i] for i in range(n_classes)},
        },
        columns=pool_columns(dimension, n_classes),
    )
    return SeedPool(frame, {"sampler": "ddim"})


@pytest.fixture(name="make_pool")
def make_pool_fixture():
    """Factory for hand-built pools, see :func:`make_pool`."""
    return make_pool
