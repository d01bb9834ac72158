"""Run bookkeeping: the run manifest and acceptance-check reports."""

from .checks import bound_check, checks_report
from .manifest import RunManifest, StageRecord

__all__ = ["RunManifest", "StageRecord", "bound_check", "checks_report"]
