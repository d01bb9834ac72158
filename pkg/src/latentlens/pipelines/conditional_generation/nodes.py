"""Conditional generation nodes.

A latent classifier trained on seeds decides which fresh seeds are worth
generating from; only accepted seeds reach the generator, and the generated
samples are checked against the Bayes classifier.
"""

import logging
from typing import Any, Dict, List, Tuple

import pandas as pd

from latentlens.flow.integrators import IntegratorSpec
from latentlens.generation.filtering import (
    CountingGenerator,
    FilterPolicy,
    diversity,
    generate_conditional,
    level_diversity,
)
from latentlens.gmm.mixture import MixtureModel, sample_data
from latentlens.gmm.schedule import NoiseSchedule
from latentlens.learning.mlp import MlpModel, TrainingHyper, train_mlp
from latentlens.monitoring.checks import bound_check, checks_report
from latentlens.pool.operations import level_boundary_threshold, stage_stream
from latentlens.pool.records import SeedPool

logger = logging.getLogger(__name__)

VERIFIED_ACCURACY_MIN = 0.95
DIVERSITY_RATIO_MIN = 0.5


def train_latent_classifier(
    seed_pool: SeedPool,
    gradient_gate_report: Dict[str, Any],
    training: Dict[str, Any],
    condgen: Dict[str, Any],
    run: Dict[str, Any],
) -> MlpModel:
    """MLP classifier g on training seeds (one level, or all levels when ``train_level`` is null)."""
    train = seed_pool.select(level=condgen.get("train_level"), split="train")
    return train_mlp(
        train.seeds(),
        train.labels(),
        "classifier",
        TrainingHyper.from_spec(training),
        stage_stream(run["seed"], "latent_classifier"),
        n_classes=seed_pool.n_classes,
    )


def filter_threshold(seed_pool: SeedPool, condgen: Dict[str, Any]) -> float:
    """Configured threshold, or the confidence at the level-1/level-2 boundary."""
    if condgen.get("threshold") is not None:
        return float(condgen["threshold"])
    if seed_pool.n_levels < 2:
        logger.warning("Pool has a single level; filtering on the label alone")
        return 0.0
    threshold = level_boundary_threshold(seed_pool)
    logger.info(f"Filter threshold from the level boundary: {threshold:.4f}")
    return threshold


def generate_samples(
    mixture_model: MixtureModel,
    noise_schedule: NoiseSchedule,
    integrator_spec: IntegratorSpec,
    latent_classifier: MlpModel,
    filter_threshold: float,
    condgen: Dict[str, Any],
    run: Dict[str, Any],
) -> Tuple[Dict[str, Any], pd.DataFrame]:
    """Filter seeds per target class and generate from the accepted ones.

    Returns:
        (reports keyed by class, accepted samples of every class)
    """
    classes = condgen.get("classes")
    if classes is None:
        classes = list(range(mixture_model.n_classes))
    generator = CountingGenerator(mixture_model, noise_schedule, integrator_spec)
    reports: Dict[str, Any] = {}
    tables: List[pd.DataFrame] = []
    for target in classes:
        policy = FilterPolicy(int(target), float(filter_threshold), int(condgen["max_draws"]))
        report, table = generate_conditional(
            mixture_model,
            noise_schedule,
            latent_classifier,
            policy,
            int(condgen["n_requested"]),
            stage_stream(run["seed"], f"condgen/{target}"),
            integrator_spec,
            generator=generator,
            batch_size=int(condgen.get("batch_size", 1024)),
        )
        reports[str(target)] = report.to_dict()
        tables.append(table)
    summary = {"threshold": float(filter_threshold), "classes": reports, "generator_calls": generator.calls}
    return summary, pd.concat(tables, ignore_index=True)


def reference_diversity(
    mixture_model: MixtureModel, seed_pool: SeedPool, condgen: Dict[str, Any], run: Dict[str, Any]
) -> Dict[str, Any]:
    """Within-class diversity of true data and of level-1 generated samples."""
    rng = stage_stream(run["seed"], "reference_diversity")
    data = sample_data(mixture_model, rng, int(condgen["reference_samples"]))
    unconditional = {}
    for label in range(mixture_model.n_classes):
        members = data.points[data.labels == label]
        unconditional[str(label)] = diversity(members) if len(members) >= 2 else None
    level_1 = {str(k): v for k, v in level_diversity(seed_pool, level=1).items()}
    return {"unconditional": unconditional, "level_1": level_1}


def condgen_checks(condgen_reports: Dict[str, Any], diversity_reference: Dict[str, Any]) -> Dict[str, Any]:
    """Per-class verified accuracy, diversity ratio and the generator-call invariant."""
    checks = []
    n_accepted = 0
    for target, report in condgen_reports["classes"].items():
        n_accepted += report["n_accepted"]
        checks.append(
            bound_check(f"class_{target}_verified_accuracy", report["verified_accuracy"], VERIFIED_ACCURACY_MIN)
        )
        baseline = diversity_reference["unconditional"].get(target)
        ratio = None
        if report["diversity"] is not None and baseline:
            ratio = report["diversity"] / baseline
        checks.append(bound_check(f"class_{target}_diversity_ratio", ratio, DIVERSITY_RATIO_MIN))
    checks.append(
        bound_check("generator_calls_match_accepted", abs(condgen_reports["generator_calls"] - n_accepted), 0, "max")
    )
    return checks_report("condgen", checks, threshold=condgen_reports["threshold"], diversity=diversity_reference)

