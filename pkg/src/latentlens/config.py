"""Experiment configuration: one YAML document, validated and hashed.

The same sections are used as Kedro parameters (``params:<section>``) so a CLI
run and a ``kedro run`` over ``conf/base/parameters.yml`` see identical values.
"""

import copy
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import yaml

from latentlens.errors import LatentLensError
from latentlens.flow.integrators import IntegratorSpec
from latentlens.gmm.mixture import MixtureModel
from latentlens.gmm.schedule import NoiseSchedule
from latentlens.learning.mlp import TrainingHyper
from latentlens.pool.operations import SAMPLERS
from latentlens.structure.sweep import SPACES

logger = logging.getLogger(__name__)

DEFAULTS: Dict[str, Dict[str, Any]] = {
    "run": {"seed": 42, "sampler": "ddim", "noise_stream": 0, "workers": None},
    "mixture": {"sphere": {"n_classes": 5, "dimension": 8, "radius": 2.5, "seed": 42}},
    "schedule": {"form": "linear", "beta_0": 0.1, "beta_1": 20.0, "horizon": 1.0},
    "integrator": {"method": "rk4", "steps": 256},
    "pool": {"size": 20000, "levels": 10, "test_fraction": 0.2, "chunk_size": 512},
    "training": {
        "hidden": [128, 64],
        "batch_size": 128,
        "learning_rate": 0.001,
        "epochs": 200,
        "space": "seed",
    },
    "prediction": {"n_fresh": 5100, "bins": 10, "train_level": 1},
    "structure": {
        "spaces": ["seed", "sample"],
        "samples_per_class": None,
        "test_fraction": 0.2,
        "include_unconditional": True,
        "high_level": 1,
        "low_level": None,
    },
    "condgen": {
        "n_requested": 200,
        "max_draws": 100000,
        "threshold": None,
        "batch_size": 1024,
        "classes": None,
        "train_level": 1,
        "reference_samples": 2000,
    },
    "verify": {
        "closed_form_points": 16,
        "lemma1_points": 100,
        "lemma1_steps": 512,
        "lemma1_tolerance": 0.001,
        "convergence_steps": [16, 32],
        "rk4_order_steps": [8, 16],
        "theorem1_n": 500,
        "separation": 12.0,
        "purity_tolerance": 0.99,
    },
}

SECTIONS = tuple(DEFAULTS)


def digest_of(data: Mapping[str, Any]) -> str:
    """SHA-256 of the canonical JSON rendering (sorted keys, no whitespace)."""
    return hashlib.sha256(json.dumps(data, sort_keys=True, separators=(",", ":")).encode("utf-8")).hexdigest()


class ConfigError(LatentLensError):
    """Raised for an unreadable config or an invalid value; names the offending key."""

    def __init__(self, key: str, reason: str):
        self.key = key
        super().__init__(f"config key '{key}': {reason}")


def _merge(section: str, value: Any) -> Dict[str, Any]:
    if not isinstance(value, Mapping):
        raise ConfigError(section, f"expected a table, got {type(value).__name__}")
    if section == "mixture":
        return copy.deepcopy(dict(value))
    unknown = sorted(set(value) - set(DEFAULTS[section]))
    if unknown:
        raise ConfigError(f"{section}.{unknown[0]}", "unknown key")
    return {**copy.deepcopy(DEFAULTS[section]), **copy.deepcopy(dict(value))}


def _require(condition: bool, key: str, reason: str) -> None:
    if not condition:
        raise ConfigError(key, reason)


def _positive_int(sections: Mapping[str, Mapping[str, Any]], key: str, allow_zero: bool = False) -> None:
    section, name = key.split(".")
    value = sections[section][name]
    ok = isinstance(value, int) and not isinstance(value, bool) and value >= (0 if allow_zero else 1)
    _require(ok, key, f"expected an integer >= {0 if allow_zero else 1}, got {value!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment sections with a stable digest.

    Attributes:
        sections: Mapping of section name to its merged settings.
        source: File the config was read from, if any.
    """

    sections: Dict[str, Dict[str, Any]]
    source: Optional[str] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        self._validate()

    @classmethod
    def from_mapping(cls, data: Optional[Mapping[str, Any]], source: Optional[str] = None) -> "ExperimentConfig":
        data = data or {}
        if not isinstance(data, Mapping):
            raise ConfigError("<root>", f"expected a table, got {type(data).__name__}")
        unknown = sorted(set(data) - set(SECTIONS))
        if unknown:
            raise ConfigError(unknown[0], f"unknown section, expected one of {list(SECTIONS)}")
        sections = {
            name: _merge(name, data[name]) if name in data else copy.deepcopy(DEFAULTS[name])
            for name in SECTIONS
        }
        return cls(sections, source)

    @classmethod
    def from_yaml(cls, path: Union[str, Path]) -> "ExperimentConfig":
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(str(path), "file not found") from None
        except yaml.YAMLError as e:
            raise ConfigError(str(path), f"invalid YAML: {e}") from None
        logger.info(f"Loaded config from {path}")
        return cls.from_mapping(data, source=str(path))

    def with_overrides(self, seed: Optional[int] = None, sampler: Optional[str] = None) -> "ExperimentConfig":
        sections = copy.deepcopy(self.sections)
        if seed is not None:
            sections["run"]["seed"] = seed
        if sampler is not None:
            sections["run"]["sampler"] = sampler
        return ExperimentConfig(sections, self.source)

    def _validate(self) -> None:
        s = self.sections
        _positive_int(s, "run.seed", allow_zero=True)
        _require(s["run"]["seed"] < 2**64, "run.seed", "must fit in 64 bits")
        _require(s["run"]["sampler"] in SAMPLERS, "run.sampler", f"expected one of {SAMPLERS}")
        _positive_int(s, "run.noise_stream", allow_zero=True)
        if s["run"]["workers"] is not None:
            _positive_int(s, "run.workers")

        try:
            self.mixture_model()
        except (LatentLensError, ValueError, TypeError) as e:
            raise ConfigError("mixture", str(e)) from e
        try:
            self.noise_schedule()
        except (LatentLensError, ValueError, TypeError) as e:
            raise ConfigError("schedule", str(e)) from e
        try:
            self.integrator_spec()
        except (ValueError, TypeError) as e:
            raise ConfigError("integrator", str(e)) from e
        try:
            self.training_hyper()
        except (ValueError, TypeError) as e:
            raise ConfigError("training", str(e)) from e

        for key in ("pool.size", "pool.levels", "pool.chunk_size", "prediction.n_fresh", "prediction.bins"):
            _positive_int(s, key)
        fraction = s["pool"]["test_fraction"]
        _require(isinstance(fraction, (int, float)) and 0 < fraction < 1, "pool.test_fraction", "must lie in (0, 1)")
        fraction = s["structure"]["test_fraction"]
        _require(
            isinstance(fraction, (int, float)) and 0 < fraction < 1, "structure.test_fraction", "must lie in (0, 1)"
        )

        _require(s["training"]["space"] in SPACES, "training.space", f"expected one of {SPACES}")
        spaces = s["structure"]["spaces"]
        _require(bool(spaces) and set(spaces) <= set(SPACES), "structure.spaces", f"expected a subset of {SPACES}")

        levels = s["pool"]["levels"]
        for key in ("prediction.train_level", "structure.high_level", "structure.low_level", "condgen.train_level"):
            section, name = key.split(".")
            value = s[section][name]
            if value is None:
                continue
            _positive_int(s, key)
            _require(value <= levels, key, f"level {value} exceeds pool.levels={levels}")

        _positive_int(s, "condgen.n_requested", allow_zero=True)
        for key in ("condgen.max_draws", "condgen.batch_size", "condgen.reference_samples"):
            _positive_int(s, key)
        threshold = s["condgen"]["threshold"]
        _require(
            threshold is None or (isinstance(threshold, (int, float)) and threshold >= 0),
            "condgen.threshold",
            "must be null or a number >= 0",
        )
        classes = s["condgen"]["classes"]
        n_classes = self.mixture_model().n_classes
        _require(
            classes is None or (bool(classes) and all(isinstance(c, int) and 0 <= c < n_classes for c in classes)),
            "condgen.classes",
            f"must be null or a list of labels in [0, {n_classes})",
        )

        for key in ("verify.closed_form_points", "verify.lemma1_points", "verify.lemma1_steps", "verify.theorem1_n"):
            _positive_int(s, key)
        for key in ("verify.convergence_steps", "verify.rk4_order_steps"):
            section, name = key.split(".")
            pair = s[section][name]
            _require(
                isinstance(pair, (list, tuple)) and len(pair) == 2 and all(isinstance(k, int) and k >= 1 for k in pair),
                key,
                "expected two step counts",
            )

    def mixture_model(self) -> MixtureModel:
        return MixtureModel.from_spec(self.sections["mixture"])

    def noise_schedule(self) -> NoiseSchedule:
        return NoiseSchedule.from_spec(self.sections["schedule"])

    def integrator_spec(self) -> IntegratorSpec:
        return IntegratorSpec.from_spec(self.sections["integrator"])

    def training_hyper(self) -> TrainingHyper:
        return TrainingHyper.from_spec(self.sections["training"])

    @property
    def seed(self) -> int:
        return int(self.sections["run"]["seed"])

    @property
    def sampler(self) -> str:
        return str(self.sections["run"]["sampler"])

    @property
    def digest(self) -> str:
        """SHA-256 of the canonical JSON rendering of the sections."""
        return digest_of(self.sections)

    def parameters(self) -> Dict[str, Any]:
        """Kedro-style ``params:<section>`` mapping."""
        return {f"params:{name}": copy.deepcopy(values) for name, values in self.sections.items()}
