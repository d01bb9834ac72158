"""Tests for bound checks and stage check reports."""

import pytest

from latentlens.monitoring.checks import bound_check, checks_report


class TestBoundCheck:
    @pytest.mark.parametrize(
        "value, bound, kind, status",
        [
            (0.9, 0.8, "min", "passed"),
            (0.7, 0.8, "min", "failed"),
            (0.8, 0.8, "min", "passed"),
            (1e-4, 1e-3, "max", "passed"),
            (2e-3, 1e-3, "max", "failed"),
            (-0.05, 0.1, "abs_max", "passed"),
            (-0.5, 0.1, "abs_max", "failed"),
        ],
    )
    def test_status(self, value, bound, kind, status):
        assert bound_check("c", value, bound, kind)["status"] == status

    def test_missing_value_is_skipped(self):
        check = bound_check("purity", None, 0.99)
        assert check == {"name": "purity", "value": None, "bound": 0.99, "kind": "min", "status": "skipped"}

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="kind"):
            bound_check("c", 1.0, 1.0, "between")


class TestChecksReport:
    def test_all_passed(self):
        report = checks_report("cross_level", [bound_check("a", 1.0, 0.5)], n_classes=3)
        assert report["status"] == "passed"
        assert report["n_classes"] == 3
        assert "failed_checks" not in report

    def test_failed_checks_are_listed(self):
        checks = [bound_check("a", 1.0, 0.5), bound_check("b", 0.1, 0.5), bound_check("c", None, 0.5)]
        report = checks_report("structure", checks)
        assert report["status"] == "failed"
        assert report["failed_checks"] == ["b"]
        assert report["checks"]["c"]["status"] == "skipped"
