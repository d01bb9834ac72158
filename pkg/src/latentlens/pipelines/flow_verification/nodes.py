"""Flow verification nodes: closed-form flows, the density identity and class transport."""

import logging
from typing import Any, Dict, List

from latentlens.flow.integrators import IntegratorSpec
from latentlens.flow.verification import (
    OracleCheck,
    closed_form_checks,
    lemma1_convergence,
    rk4_order_check,
    separated_pair_mixture,
    verify_lemma1,
    verify_theorem1,
)
from latentlens.gmm.mixture import MixtureModel, sample_data
from latentlens.gmm.schedule import NoiseSchedule
from latentlens.monitoring.checks import bound_check, checks_report
from latentlens.pool.operations import stage_stream

logger = logging.getLogger(__name__)


def _entry(check: OracleCheck, kind: str) -> Dict[str, Any]:
    return {
        "name": check.name,
        "value": check.error,
        "bound": check.tolerance,
        "kind": kind,
        "status": "passed" if check.passed else "failed",
        "detail": check.detail,
    }


def closed_form(integrator_spec: IntegratorSpec, verify: Dict[str, Any], run: Dict[str, Any]) -> List[Dict[str, Any]]:
    """Identity, translation and scaling flows against their exact maps."""
    checks = closed_form_checks(
        integrator_spec, stage_stream(run["seed"], "verify/closed_form"), int(verify["closed_form_points"])
    )
    entries = [_entry(c, "max") for c in checks]
    entries.append(_entry(rk4_order_check(tuple(verify["rk4_order_steps"])), "min"))
    return entries


def density_identity(
    mixture_model: MixtureModel, noise_schedule: NoiseSchedule, verify: Dict[str, Any], run: Dict[str, Any]
) -> List[Dict[str, Any]]:
    """Density identity on points of the experiment mixture, and its convergence in the step count."""
    points = sample_data(mixture_model, stage_stream(run["seed"], "verify/lemma1"), int(verify["lemma1_points"])).points
    report = verify_lemma1(mixture_model, noise_schedule, points, IntegratorSpec("rk4", int(verify["lemma1_steps"])))
    convergence = lemma1_convergence(mixture_model, noise_schedule, points, tuple(verify["convergence_steps"]))
    return [
        bound_check("lemma1_max_abs_err", report.max_abs_err, float(verify["lemma1_tolerance"]), kind="max"),
        _entry(convergence, "min"),
    ]


def class_transport(
    noise_schedule: NoiseSchedule, integrator_spec: IntegratorSpec, verify: Dict[str, Any], run: Dict[str, Any]
) -> Dict[str, Any]:
    """Round trip and latent purity on two classes ``separation`` standard deviations apart."""
    m = separated_pair_mixture(float(verify["separation"]))
    report = verify_theorem1(
        m, noise_schedule, int(verify["theorem1_n"]), stage_stream(run["seed"], "verify/theorem1"), integrator_spec
    )
    tolerance = float(verify["purity_tolerance"])
    return {
        "report": report.to_dict(),
        "checks": [
            bound_check("roundtrip_class_agreement", report.roundtrip_class_agreement, tolerance),
            bound_check("latent_nn_purity", report.latent_nn_purity, tolerance),
        ],
    }


def verification_report(
    closed_form_results: List[Dict[str, Any]],
    density_identity_results: List[Dict[str, Any]],
    class_transport_results: Dict[str, Any],
    gradient_gate_report: Dict[str, Any],
) -> Dict[str, Any]:
    """All verification checks in one report; ``status`` is ``failed`` if any check failed."""
    gate = [
        bound_check(f"gradient_{head}", r["max_relative_error"], r["tolerance"], kind="max")
        for head, r in gradient_gate_report["heads"].items()
    ]
    checks = closed_form_results + density_identity_results + class_transport_results["checks"] + gate
    return checks_report("verify", checks, class_transport=class_transport_results["report"])
