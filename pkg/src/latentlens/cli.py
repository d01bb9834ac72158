"""Command line entry point.

Each subcommand runs one stage pipeline (plus the setup and, when needed, the
seed-pool stage) with Kedro's ``SequentialRunner`` over a catalog rooted at
``--out``. Exit codes: 0 success, 1 usage/config/stage error, 2 verification failure.
"""

import logging
import logging.config
import os
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import click
import yaml
from kedro.io import AbstractDataset, DataCatalog, DatasetError, MemoryDataset
from kedro.pipeline import Pipeline
from kedro.runner import SequentialRunner
from kedro_datasets.json import JSONDataset
from kedro_datasets.pandas import CSVDataset
from kedro_datasets.partitions import PartitionedDataset
from kedro_datasets.text import TextDataset
from rich.logging import RichHandler

from latentlens import __version__
from latentlens.config import ExperimentConfig
from latentlens.datasets import SeedPoolDataset
from latentlens.errors import LatentLensError, VerificationFailure
from latentlens.monitoring.manifest import RunManifest
from latentlens.pipeline_registry import namespaced
from latentlens.pool.operations import SAMPLERS
from latentlens.pool.records import FLOAT_FORMAT, manifest_path

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VERIFICATION = 2

LOGGING_ENV = "KEDRO_LOGGING_CONFIG"

# dataset name -> (path under the run directory, kind); "{sampler}" dirs hold sampler-specific runs
ARTIFACTS: Dict[str, Tuple[str, str]] = {
    "seed_pool": ("{sampler}/pool.csv", "pool"),
    "pool_summary": ("{sampler}/pool_summary.json", "json"),
    "mlp_accuracy_matrix": ("{sampler}/heatmap_mlp.csv", "csv"),
    "lda_accuracy_matrix": ("{sampler}/heatmap_lda.csv", "csv"),
    "heatmap_checks": ("{sampler}/heatmap_checks.json", "json"),
    "heatmap_figures": ("{sampler}/figures/heatmap", "svgs"),
    "structure_metrics": ("{sampler}/structure_metrics.csv", "csv"),
    "structure_embeddings": ("{sampler}/structure_embeddings.csv", "csv"),
    "lda_coordinates": ("{sampler}/lda_coordinates.csv", "csv"),
    "overlay_embedding": ("{sampler}/overlay_embedding.csv", "csv"),
    "overlay_summary": ("{sampler}/overlay_summary.json", "json"),
    "filtering_gap": ("{sampler}/filtering_gap.json", "json"),
    "structure_checks": ("{sampler}/structure_checks.json", "json"),
    "structure_figures": ("{sampler}/figures/structure", "svgs"),
    "confidence_curve": ("{sampler}/confidence_curve.csv", "csv"),
    "confidence_curve_checks": ("{sampler}/predict_checks.json", "json"),
    "confidence_curve_figure": ("{sampler}/figures/confidence_curve.svg", "text"),
    "condgen_samples": ("{sampler}/condgen_samples.csv", "csv"),
    "condgen_reports": ("{sampler}/condgen_report.json", "json"),
    "diversity_reference": ("{sampler}/diversity_reference.json", "json"),
    "condgen_checks": ("{sampler}/condgen_checks.json", "json"),
    "verification_report": ("verify/verification_report.json", "json"),
}

# subcommand -> stage pipeline; every command also runs experiment_setup
COMMANDS: Dict[str, str] = {
    "pool": "seed_pool",
    "heatmap": "cross_level",
    "structure": "structure_analysis",
    "predict": "confidence_prediction",
    "condgen": "conditional_generation",
    "verify": "flow_verification",
}


def configure_logging(verbose: bool = False) -> None:
    """Apply ``KEDRO_LOGGING_CONFIG`` if set, otherwise log to a rich handler."""
    config_path = os.environ.get(LOGGING_ENV)
    if config_path and Path(config_path).exists():
        logging.config.dictConfig(yaml.safe_load(Path(config_path).read_text(encoding="utf-8")))
    else:
        logging.basicConfig(
            level=logging.INFO,
            format="%(message)s",
            datefmt="[%X]",
            handlers=[RichHandler(rich_tracebacks=True, show_path=False)],
            force=True,
        )
        logging.getLogger("matplotlib").setLevel(logging.WARNING)
    logging.getLogger("latentlens").setLevel(logging.DEBUG if verbose else logging.INFO)


def _dataset(path: Path, kind: str) -> AbstractDataset:
    if kind == "pool":
        return SeedPoolDataset(filepath=str(path))
    if kind == "csv":
        return CSVDataset(
            filepath=str(path),
            save_args={"index": False, "float_format": FLOAT_FORMAT, "lineterminator": "\n"},
        )
    if kind == "json":
        return JSONDataset(filepath=str(path), save_args={"indent": 2, "sort_keys": True})
    if kind == "text":
        return TextDataset(filepath=str(path))
    if kind == "svgs":
        return PartitionedDataset(path=str(path), dataset="text.TextDataset", filename_suffix=".svg")
    raise ValueError(f"Unknown artifact kind '{kind}'")


def artifact_path(out_dir: Path, name: str, sampler: str) -> Path:
    return out_dir / ARTIFACTS[name][0].format(sampler=sampler)


def build_catalog(config: ExperimentConfig, out_dir: Path) -> Tuple[DataCatalog, Dict[str, AbstractDataset]]:
    """File datasets for every artifact plus memory datasets for the parameters."""
    datasets: Dict[str, AbstractDataset] = {
        name: _dataset(artifact_path(out_dir, name, config.sampler), kind)
        for name, (_, kind) in ARTIFACTS.items()
    }
    for name, value in config.parameters().items():
        datasets[name] = MemoryDataset(data=value, copy_mode="assign")
    return DataCatalog(datasets=datasets), datasets


def _outputs_on_disk(pipe: Pipeline, out_dir: Path, sampler: str) -> List[Path]:
    paths = [artifact_path(out_dir, name, sampler) for name in sorted(pipe.all_outputs()) if name in ARTIFACTS]
    if "seed_pool" in pipe.all_outputs():
        paths.append(manifest_path(artifact_path(out_dir, "seed_pool", sampler)))
    return paths


def _stage_key(command: str, sampler: str) -> str:
    return command if command == "verify" else f"{command}/{sampler}"


def run_command(
    command: str,
    config: ExperimentConfig,
    out_dir: Path,
    force: bool = False,
) -> int:
    """Run one subcommand and record it in the run manifest.

    Returns:
        Exit code.
    """
    manifest = RunManifest.load(out_dir)
    digest = config.digest
    key = _stage_key(command, config.sampler)
    if not force and manifest.is_complete(key, digest):
        logger.info(f"[{command}] up to date for config {digest[:12]}; use --force to rerun")
        return EXIT_OK

    stages = ["experiment_setup"]
    pool_key = _stage_key("pool", config.sampler)
    needs_pool = command != "verify"
    rebuild_pool = needs_pool and (command == "pool" or not manifest.is_complete(pool_key, digest))
    if rebuild_pool:
        stages.append("seed_pool")
    if command != "pool":
        stages.append(COMMANDS[command])
    pipe = sum((namespaced(name) for name in stages), Pipeline([]))
    if not rebuild_pool and needs_pool:
        logger.info(f"[{command}] reusing seed pool from {artifact_path(out_dir, 'seed_pool', config.sampler)}")

    catalog, datasets = build_catalog(config, out_dir)
    started = time.perf_counter()
    if rebuild_pool and command != "pool":
        manifest.start(pool_key, digest)
    manifest.start(key, digest)
    try:
        SequentialRunner().run(pipe, catalog)
    except Exception as e:
        manifest.fail(key, f"{type(e).__name__}: {e}")
        if rebuild_pool and command != "pool":
            manifest.fail(pool_key, f"{type(e).__name__}: {e}")
        raise

    if rebuild_pool and command != "pool":
        manifest.complete(pool_key, _outputs_on_disk(namespaced("seed_pool"), out_dir, config.sampler))
    stage_pipe = namespaced(COMMANDS[command])
    manifest.complete(key, _outputs_on_disk(stage_pipe, out_dir, config.sampler))
    logger.info(f"[{command}] finished in {time.perf_counter() - started:.1f}s, outputs in {out_dir}")

    if command == "verify":
        report = datasets["verification_report"].load()
        for name, check in report["checks"].items():
            click.echo(f"{check['status']:>7}  {name}: {check['value']} ({check['kind']} {check['bound']})")
        if report["status"] != "passed":
            manifest.fail(key, f"verification checks failed: {report.get('failed_checks')}")
            raise VerificationFailure(f"checks failed: {', '.join(report.get('failed_checks', []))}")
    return EXIT_OK


def _execute(
    ctx: click.Context,
    command: str,
    config_path: Optional[str],
    out: str,
    seed: Optional[int],
    sampler: Optional[str],
    force: bool,
) -> None:
    try:
        config = ExperimentConfig.from_yaml(config_path) if config_path else ExperimentConfig.from_mapping({})
        config = config.with_overrides(seed=seed, sampler=sampler)
        code = run_command(command, config, Path(out), force=force)
    except VerificationFailure as e:
        click.echo(f"{command}: verification failed: {e}", err=True)
        code = EXIT_VERIFICATION
    except (LatentLensError, DatasetError, ValueError) as e:
        click.echo(f"{command}: {e}", err=True)
        code = EXIT_ERROR
    ctx.exit(code)


def _common_options(func):
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), help="Experiment YAML file."),
        click.option("--out", default="output", show_default=True, type=click.Path(file_okay=False)),
        click.option("--seed", type=click.IntRange(0, 2**64 - 1), help="Override run.seed."),
        click.option("--sampler", type=click.Choice(SAMPLERS), help="Override run.sampler."),
        click.option("--force", is_flag=True, help="Rerun even if the stage is up to date."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@click.group()
@click.version_option(__version__, prog_name="latentlens")
@click.option("--verbose", "-v", is_flag=True, help="Debug logging.")
def cli(verbose: bool) -> None:
    """Confidence-stratified latent analysis of deterministic diffusion on Gaussian mixtures."""
    configure_logging(verbose)


def _make_command(name: str, help_text: str) -> None:
    @cli.command(name=name, help=help_text)
    @_common_options
    @click.pass_context
    def command(ctx: click.Context, **kwargs: Any) -> None:
        _execute(ctx, name, **kwargs)


_make_command("pool", "Build, balance, stratify and split the seed pool.")
_make_command("heatmap", "Cross-level accuracy matrices (MLP and LDA) and heatmaps.")
_make_command("structure", "Separability sweep, overlay, filtering gap and embeddings.")
_make_command("predict", "Posterior regressor and the accuracy-vs-confidence curve.")
_make_command("condgen", "Confidence-filtered conditional generation.")
_make_command("verify", "Closed-form flow checks, density identity and class transport.")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and return its exit code; usage errors map to 1."""
    try:
        result = cli.main(args=list(argv) if argv is not None else None, prog_name="latentlens", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return EXIT_ERROR
    except click.Abort:
        return EXIT_ERROR
    return result if isinstance(result, int) else EXIT_OK


def run() -> None:
    sys.exit(main())
