"""Tests for the pipeline registry."""

from latentlens.pipeline_registry import STAGES, register_pipelines


class TestRegistry:
    def test_every_stage_is_registered(self):
        pipelines = register_pipelines()
        assert set(pipelines) == set(STAGES) | {"__default__"}

    def test_default_runs_every_node(self):
        pipelines = register_pipelines()
        stage_nodes = sum(len(pipelines[name].nodes) for name in STAGES)
        assert len(pipelines["__default__"].nodes) == stage_nodes

    def test_nodes_are_namespaced_but_datasets_are_global(self):
        pipe = register_pipelines()["seed_pool"]
        assert all(n.name.startswith("seed_pool.") for n in pipe.nodes)
        assert "seed_pool" in pipe.all_outputs()
        assert "params:pool" in pipe.inputs()
        assert "mixture_model" in pipe.inputs()

    def test_stages_connect_through_shared_names(self):
        default = register_pipelines()["__default__"]
        free_inputs = {name for name in default.inputs() if not name.startswith("params:")}
        assert free_inputs == set()
