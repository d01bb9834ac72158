"""Seed pool nodes: generate, balance, stratify, split.

Each step draws from its own stage generator derived from the master seed, so
re-running any single node reproduces its output exactly.
"""

import logging
from dataclasses import asdict
from typing import Any, Dict

from latentlens.config import digest_of
from latentlens.flow.integrators import IntegratorSpec
from latentlens.gmm.mixture import MixtureModel
from latentlens.gmm.schedule import NoiseSchedule
from latentlens.pool.operations import (
    balance_pool,
    build_pool,
    pool_summary,
    split_train_test,
    stage_stream,
    stratify,
)
from latentlens.pool.records import SeedPool

logger = logging.getLogger(__name__)


def generate_pool(
    mixture_model: MixtureModel,
    noise_schedule: NoiseSchedule,
    integrator_spec: IntegratorSpec,
    run: Dict[str, Any],
    pool: Dict[str, Any],
) -> SeedPool:
    """Draw ``pool.size`` seeds and label the sample each one generates."""
    raw = build_pool(
        mixture_model,
        noise_schedule,
        int(pool["size"]),
        run["sampler"],
        integrator_spec,
        int(run["seed"]),
        noise=int(run.get("noise_stream", 0)),
        chunk_size=int(pool.get("chunk_size", 512)),
        workers=run.get("workers"),
    )
    inputs = {
        "run": run,
        "mixture": mixture_model.to_spec(),
        "schedule": asdict(noise_schedule),
        "integrator": asdict(integrator_spec),
        "pool": pool,
    }
    return raw.with_frame(
        raw.frame,
        config_digest=digest_of(inputs),
        schedule=asdict(noise_schedule),
        integrator=asdict(integrator_spec),
    )


def balance(raw_pool: SeedPool, run: Dict[str, Any]) -> SeedPool:
    return balance_pool(raw_pool, stage_stream(run["seed"], "balance"))


def stratify_pool(balanced_pool: SeedPool, pool: Dict[str, Any]) -> SeedPool:
    return stratify(balanced_pool, int(pool["levels"]))


def split_pool(stratified_pool: SeedPool, run: Dict[str, Any], pool: Dict[str, Any]) -> SeedPool:
    return split_train_test(stratified_pool, float(pool["test_fraction"]), stage_stream(run["seed"], "split"))


def summarize_pool(seed_pool: SeedPool) -> Dict[str, Any]:
    """Counts and per-level confidence statistics, plus whether mean confidence falls with level."""
    summary = pool_summary(seed_pool)
    means = [v["mean"] for _, v in sorted(summary["confidence_by_level"].items(), key=lambda kv: int(kv[0]))]
    summary["confidence_non_increasing"] = all(a >= b for a, b in zip(means, means[1:]))
    summary["provenance"] = seed_pool.provenance
    logger.info(f"Pool summary: {summary['n_records']} records, per-level mean confidence {means}")
    return summary
