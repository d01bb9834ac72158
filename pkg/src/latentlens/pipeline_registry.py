"""Project pipelines registry.

Every stage is a modular pipeline wrapped in a namespace named after the
stage, which gives the expand/collapse view in Kedro Viz. Inputs, outputs
and parameters stay global so stages connect through shared dataset names
and the catalog needs no namespace prefixes.
"""

from typing import Callable, Dict

from kedro.pipeline import Pipeline, pipeline

from latentlens.pipelines import (
    conditional_generation,
    confidence_prediction,
    cross_level,
    experiment_setup,
    flow_verification,
    seed_pool,
    structure_analysis,
)

STAGES: Dict[str, Callable[..., Pipeline]] = {
    "experiment_setup": experiment_setup.create_pipeline,
    "seed_pool": seed_pool.create_pipeline,
    "cross_level": cross_level.create_pipeline,
    "structure_analysis": structure_analysis.create_pipeline,
    "confidence_prediction": confidence_prediction.create_pipeline,
    "conditional_generation": conditional_generation.create_pipeline,
    "flow_verification": flow_verification.create_pipeline,
}


def namespaced(name: str) -> Pipeline:
    """Stage pipeline ``name`` inside its namespace, with global datasets and parameters."""
    pipe = STAGES[name]()
    all_inputs = pipe.inputs()
    params = {n: n for n in all_inputs if n.startswith("params:") or n == "parameters"}
    inputs = {n: n for n in all_inputs if n not in params}
    return pipeline(
        pipe,
        namespace=name,
        inputs=inputs,
        outputs={ds: ds for ds in pipe.all_outputs()},
        parameters=params,
    )


def register_pipelines() -> Dict[str, Pipeline]:
    """Register the project's pipelines.

    1. experiment_setup: mixture, schedule, integrator and the gradient gate
    2. seed_pool: generate, balance, stratify and split the seed pool
    3. cross_level: per-level accuracy matrices and heatmaps
    4. structure_analysis: separability sweep, overlay and filtering gap
    5. confidence_prediction: accuracy versus predicted confidence
    6. conditional_generation: confidence-filtered generation
    7. flow_verification: closed-form and self-consistency checks of the flow

    Returns:
        A mapping from pipeline names to Pipeline objects.
    """
    pipelines = {name: namespaced(name) for name in STAGES}
    pipelines["__default__"] = sum(pipelines.values(), Pipeline([]))
    return pipelines
