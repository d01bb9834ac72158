"""Seed records, the seed pool container and its lossless CSV persistence.

Pool file layout (UTF-8, LF line endings)::

    index,split,level,label,confidence,z_0..z_{d-1},x_0..x_{d-1},p_0..p_{C-1}

Floats are written with 17 significant digits so every double survives a
save/load cycle bit for bit. Unset ``split``/``level`` cells are empty. A
companion ``<stem>.manifest.json`` carries the pool provenance.
"""

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from latentlens.errors import LatentLensError
from latentlens.gmm.mixture import ClassPosterior

logger = logging.getLogger(__name__)

META_COLUMNS = ["index", "split", "level", "label", "confidence"]
SPLITS = ("train", "test")
FLOAT_FORMAT = "%.17g"


class PoolParseError(LatentLensError):
    """Raised when a pool file is malformed; ``line`` is 1-based (header = line 1)."""

    def __init__(self, path: Union[str, Path], line: int, reason: str):
        self.path = str(path)
        self.line = int(line)
        super().__init__(f"{self.path}, line {self.line}: {reason}")


def vector_columns(prefix: str, size: int) -> List[str]:
    return [f"{prefix}_{i}" for i in range(size)]


def pool_columns(dimension: int, n_classes: int) -> List[str]:
    return (
        META_COLUMNS
        + vector_columns("z", dimension)
        + vector_columns("x", dimension)
        + vector_columns("p", n_classes)
    )


def _count_prefixed(columns: Sequence[str], prefix: str) -> int:
    return sum(1 for c in columns if re.fullmatch(rf"{prefix}_\d+", c))


def manifest_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}.manifest.json")


@dataclass(frozen=True)
class SeedRecord:
    """Typed view of one pool row."""

    index: int
    seed: np.ndarray
    sample: np.ndarray
    posterior: ClassPosterior
    label: int
    confidence: float
    level: Optional[int] = None
    split: Optional[str] = None


@dataclass(frozen=True)
class SeedPool:
    """Tabular pool of seeds, generated samples and their Bayes labels.

    The frame holds one row per record with the columns listed in the module
    docstring; dtypes are normalized on construction (``level`` is nullable
    ``Int64``, ``split`` is nullable ``string``).
    """

    frame: pd.DataFrame
    provenance: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        frame = self.frame
        missing = [c for c in META_COLUMNS if c not in frame.columns]
        if missing:
            raise ValueError(f"pool frame is missing columns {missing}")
        d = _count_prefixed(frame.columns, "z")
        c = _count_prefixed(frame.columns, "p")
        expected = pool_columns(d, c)
        if list(frame.columns) != expected:
            raise ValueError(f"pool columns out of order: {list(frame.columns)}")
        normalized = frame.reset_index(drop=True).astype(
            {
                "index": "int64",
                "split": "string",
                "level": "Int64",
                "label": "int64",
                "confidence": "float64",
                **{col: "float64" for col in expected[len(META_COLUMNS):]},
            }
        )
        object.__setattr__(self, "frame", normalized)
        object.__setattr__(self, "provenance", dict(self.provenance))

    @classmethod
    def empty(cls, dimension: int, n_classes: int, provenance: Optional[Dict[str, Any]] = None) -> "SeedPool":
        return cls(pd.DataFrame(columns=pool_columns(dimension, n_classes)), provenance or {})

    @property
    def dimension(self) -> int:
        return _count_prefixed(self.frame.columns, "z")

    @property
    def n_classes(self) -> int:
        return _count_prefixed(self.frame.columns, "p")

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def n_levels(self) -> int:
        levels = self.frame["level"].dropna()
        return int(levels.max()) if len(levels) else 0

    def seeds(self) -> np.ndarray:
        return self.frame[vector_columns("z", self.dimension)].to_numpy(dtype=float)

    def samples(self) -> np.ndarray:
        return self.frame[vector_columns("x", self.dimension)].to_numpy(dtype=float)

    def posteriors(self) -> np.ndarray:
        return self.frame[vector_columns("p", self.n_classes)].to_numpy(dtype=float)

    def labels(self) -> np.ndarray:
        return self.frame["label"].to_numpy(dtype=int)

    def confidences(self) -> np.ndarray:
        return self.frame["confidence"].to_numpy(dtype=float)

    def features(self, space: str = "seed") -> np.ndarray:
        """Seed coordinates (``space="seed"``) or generated samples (``space="sample"``)."""
        if space == "seed":
            return self.seeds()
        if space == "sample":
            return self.samples()
        raise ValueError(f"Unknown space '{space}', expected 'seed' or 'sample'")

    def with_frame(self, frame: pd.DataFrame, **provenance: Any) -> "SeedPool":
        return SeedPool(frame, {**self.provenance, **provenance})

    def select(
        self,
        level: Optional[int] = None,
        split: Optional[str] = None,
        label: Optional[int] = None,
    ) -> "SeedPool":
        """Sub-pool filtered by level, split and/or label, sorted by record index."""
        mask = pd.Series(True, index=self.frame.index)
        if level is not None:
            mask &= self.frame["level"].eq(level).fillna(False)
        if split is not None:
            mask &= self.frame["split"].eq(split).fillna(False)
        if label is not None:
            mask &= self.frame["label"].eq(label)
        subset = self.frame[mask.astype(bool)].sort_values("index", kind="stable")
        return SeedPool(subset, self.provenance)

    def records(self) -> Iterator[SeedRecord]:
        z, x, p = self.seeds(), self.samples(), self.posteriors()
        meta = zip(*(self.frame[col] for col in META_COLUMNS))
        for i, (index, split, level, label, confidence) in enumerate(meta):
            yield SeedRecord(
                index=int(index),
                seed=z[i],
                sample=x[i],
                posterior=ClassPosterior(p[i]),
                label=int(label),
                confidence=float(confidence),
                level=None if pd.isna(level) else int(level),
                split=None if pd.isna(split) else str(split),
            )

    def counts(self) -> Dict[str, Dict[str, int]]:
        """Record counts per label and per level, keyed by strings for JSON."""
        per_label = self.frame["label"].value_counts().sort_index()
        per_level = self.frame["level"].dropna().astype(int).value_counts().sort_index()
        per_split = self.frame["split"].dropna().value_counts().sort_index()
        return {
            "label": {str(k): int(v) for k, v in per_label.items()},
            "level": {str(k): int(v) for k, v in per_level.items()},
            "split": {str(k): int(v) for k, v in per_split.items()},
        }

    def equals(self, other: "SeedPool") -> bool:
        return self.frame.equals(other.frame) and self.provenance == other.provenance


def save_pool(pool: SeedPool, path: Union[str, Path]) -> Path:
    """Write the pool CSV and its companion manifest.

    Returns:
        Path of the CSV file.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pool.frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n", encoding="utf-8")
    provenance = {**pool.provenance, "counts": pool.counts(), "n_records": len(pool)}
    manifest_path(path).write_text(json.dumps(provenance, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info(f"Saved pool of {len(pool)} records to {path}")
    return path


def _parse_column(raw: pd.Series, dtype: str, path: Path, column: str) -> pd.Series:
    """Convert one string column, reporting the first offending line on failure.

    ``dtype`` is ``"float"``, ``"int"`` or ``"nullable"`` (integer or empty).
    """
    blank = raw.eq("")
    numeric = pd.to_numeric(raw.mask(blank), errors="coerce")
    bad = numeric.isna() & ~(blank & (dtype == "nullable"))
    if dtype != "float":
        bad |= numeric.notna() & (numeric != np.round(numeric))
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise PoolParseError(path, row + 2, f"column '{column}' holds invalid value {raw.iloc[row]!r}")
    if dtype == "float":
        # Python's float() parser is correctly rounded, which keeps 17-digit text bit-exact
        return raw.astype(float)
    if dtype == "int":
        return numeric.astype("int64")
    return numeric.astype("Int64")


def load_pool(path: Union[str, Path]) -> SeedPool:
    """Read a pool written by :func:`save_pool`.

    Raises:
        PoolParseError: On a malformed header or value, with the 1-based line number.
    """
    path = Path(path)
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise PoolParseError(path, 1, "file is empty") from None
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        raise PoolParseError(path, int(match.group(1)) if match else 0, str(e)) from None

    columns = list(raw.columns)
    d = _count_prefixed(columns, "z")
    c = _count_prefixed(columns, "p")
    if columns != pool_columns(d, c) or _count_prefixed(columns, "x") != d:
        raise PoolParseError(path, 1, f"unexpected header {columns}")

    parsed = {
        "index": _parse_column(raw["index"], "int", path, "index"),
        "split": raw["split"].replace("", pd.NA).astype("string"),
        "level": _parse_column(raw["level"], "nullable", path, "level"),
        "label": _parse_column(raw["label"], "int", path, "label"),
    }
    bad_split = parsed["split"].notna() & ~parsed["split"].isin(SPLITS)
    if bad_split.any():
        row = int(np.flatnonzero(bad_split.to_numpy())[0])
        raise PoolParseError(path, row + 2, f"split must be one of {SPLITS}, got {raw['split'].iloc[row]!r}")
    for column in columns[len(META_COLUMNS) - 1:]:
        parsed[column] = _parse_column(raw[column], "float", path, column)

    frame = pd.DataFrame(parsed, columns=columns)
    provenance: Dict[str, Any] = {}
    companion = manifest_path(path)
    if companion.exists():
        provenance = json.loads(companion.read_text(encoding="utf-8"))
        provenance.pop("counts", None)
        provenance.pop("n_records", None)
    logger.info(f"Loaded pool of {len(frame)} records from {path}")
    return SeedPool(frame, provenance)
