"""Kedro dataset persisting a :class:`SeedPool` as CSV plus a JSON manifest."""

from pathlib import Path
from typing import Any, Dict, Optional

from kedro.io import AbstractDataset, DatasetError

from latentlens.pool.records import SeedPool, load_pool, manifest_path, save_pool


class SeedPoolDataset(AbstractDataset[SeedPool, SeedPool]):
    """Load and save seed pools in the pool file format.

    Example catalog entry:

    .. code-block:: yaml

        stratified_pool:
          type: latentlens.datasets.SeedPoolDataset
          filepath: data/03_primary/stratified_pool.csv
    """

    def __init__(self, filepath: str, metadata: Optional[Dict[str, Any]] = None):
        self._filepath = Path(filepath)
        self.metadata = metadata

    def load(self) -> SeedPool:
        return load_pool(self._filepath)

    def save(self, data: SeedPool) -> None:
        if not isinstance(data, SeedPool):
            raise DatasetError(f"SeedPoolDataset can only save a SeedPool, got {type(data).__name__}")
        save_pool(data, self._filepath)

    def _exists(self) -> bool:
        return self._filepath.exists()

    def _describe(self) -> Dict[str, Any]:
        return {"filepath": str(self._filepath), "manifest": str(manifest_path(self._filepath))}
