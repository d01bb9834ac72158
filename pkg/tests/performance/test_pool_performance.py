"""Performance benchmarks for seed pool generation and training.

These tests measure the cost of the hot loops (backward flow over a chunked
pool, per-level MLP fits) so that reference-scale runs stay practical.
"""

import time

import numpy as np
import pytest

from latentlens.flow.integrators import IntegratorSpec
from latentlens.learning.mlp import TrainingHyper, train_mlp
from latentlens.pool.operations import build_pool


class TestPoolPerformance:
    """Benchmark pool generation throughput."""

    @pytest.mark.benchmark
    @pytest.mark.parametrize("size", [1000, 5000])
    def test_build_pool(self, separated_mixture, linear_schedule, size):
        """Generate a pool at the reference step count."""
        start_time = time.time()
        pool = build_pool(
            separated_mixture, linear_schedule, size, "ddim", IntegratorSpec("rk4", 256), master_seed=0, workers=1
        )
        elapsed = time.time() - start_time

        print(f"\nPool of {size} at rk4/256:")
        print(f"  Time: {elapsed:.2f}s")
        print(f"  Rate: {size / elapsed:.1f} seeds/sec")

        assert len(pool) == size
        assert elapsed < size / 50, f"Pool generation too slow: {elapsed:.2f}s"

    @pytest.mark.benchmark
    def test_parallel_chunks_match_serial(self, separated_mixture, linear_schedule):
        """Two workers give the serial result and are not slower than 2x serial."""
        spec = IntegratorSpec("rk4", 128)
        timings = {}
        pools = {}
        for workers in (1, 2):
            start_time = time.time()
            pools[workers] = build_pool(
                separated_mixture, linear_schedule, 4000, "ddim", spec, master_seed=0, chunk_size=500, workers=workers
            )
            timings[workers] = time.time() - start_time

        print(f"\nSerial {timings[1]:.2f}s, two workers {timings[2]:.2f}s")
        assert pools[1].frame.equals(pools[2].frame)
        assert timings[2] < 2 * timings[1] + 5.0


class TestTrainingPerformance:
    """Benchmark MLP training on a level-sized training set."""

    @pytest.mark.benchmark
    def test_classifier_epochs(self):
        """200 epochs on 1,600 points with the reference architecture."""
        rng = np.random.default_rng(0)
        X = rng.standard_normal((1600, 8))
        y = (X[:, 0] > 0).astype(int) + (X[:, 1] > 0).astype(int)
        hyper = TrainingHyper(hidden=(128, 64), batch_size=128, learning_rate=0.001, epochs=200)

        start_time = time.time()
        train_mlp(X, y, "classifier", hyper, np.random.default_rng(1), n_classes=3)
        elapsed = time.time() - start_time

        print(f"\nClassifier, 200 epochs on 1600 points: {elapsed:.2f}s")
        assert elapsed < 120.0, f"Training too slow: {elapsed:.2f}s"
