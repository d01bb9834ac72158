"""Custom Kedro datasets."""

from .seed_pool_dataset import SeedPoolDataset

__all__ = ["SeedPoolDataset"]
