"""Acceptance-check reports written next to each stage's outputs."""

import logging
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)

KINDS = ("min", "max", "abs_max")


def bound_check(name: str, value: Optional[float], bound: float, kind: str = "min") -> Dict[str, Any]:
    """Compare a measured value with a bound.

    Args:
        name: Check name.
        value: Measured value; ``None`` marks the check as skipped.
        bound: Threshold.
        kind: ``"min"`` (value >= bound), ``"max"`` (value <= bound) or
            ``"abs_max"`` (|value| <= bound).

    Returns:
        Check entry with ``status`` in {passed, failed, skipped}.
    """
    if kind not in KINDS:
        raise ValueError(f"Unknown check kind '{kind}', expected one of {KINDS}")
    if value is None:
        status = "skipped"
    elif kind == "min":
        status = "passed" if value >= bound else "failed"
    elif kind == "max":
        status = "passed" if value <= bound else "failed"
    else:
        status = "passed" if abs(value) <= bound else "failed"
    return {
        "name": name,
        "value": None if value is None else float(value),
        "bound": float(bound),
        "kind": kind,
        "status": status,
    }


def checks_report(stage: str, checks: List[Dict[str, Any]], **context: Any) -> Dict[str, Any]:
    """Collect check entries into a stage report.

    Trend checks are reported, not enforced: a failed check does not stop the run.
    """
    failed = [c["name"] for c in checks if c["status"] == "failed"]
    report = {
        "stage": stage,
        "status": "failed" if failed else "passed",
        "checks": {c["name"]: c for c in checks},
        **context,
    }
    if failed:
        report["failed_checks"] = failed
        logger.warning(f"{stage}: checks not met: {failed}")
    else:
        logger.info(f"{stage}: all {len(checks)} checks met")
    return report
