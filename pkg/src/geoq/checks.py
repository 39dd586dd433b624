"""Kinematic self-checks: gauge curls, bracket axioms, flux integrality, CCR convergence and gauge invariance."""
from __future__ import annotations

from dataclasses import dataclass
import logging
import math
from typing import Callable, Iterator

import numpy as np

from .extended_dynamics import IntegratorConfig, guiding_brackets, initial_state, integrate_extended
from .phase_space import (
    CoordinateProductField,
    FunctionField,
    PhaseModel,
    PolynomialField,
    canonical_gauge,
    clifford_torus,
    embedded_sphere,
    flat_torus,
    gauge_check,
    gauge_transform,
    jacobi_residual,
    kostant_flux,
    poisson_bracket,
    symmetric_gauge,
)
from .prequantum import ccr_residual, gaussian_section, polarization_residual, polarized_section
from .program_params import ScenarioConfig
from .quantum_reduction import GridSpec, build_operator, lowest_spectrum

logger = logging.getLogger(__name__)

SAMPLE_BOX = 3.0


@dataclass(frozen=True)
class CheckOutcome:
    """One pass/fail line of a run's summary."""

    name: str
    passed: bool
    value: float | None = None
    threshold: float | None = None
    detail: str = ""


def _at_most(name: str, value: float, threshold: float, detail: str = "") -> CheckOutcome:
    return CheckOutcome(name=name, passed=bool(value <= threshold), value=float(value), threshold=threshold,
                        detail=detail)


def check_gauges(config: ScenarioConfig, rng: np.random.Generator) -> Iterator[CheckOutcome]:
    n = config.n
    checks = config.checks
    points = rng.uniform(-SAMPLE_BOX, SAMPLE_BOX, size=(checks.gauge_points, 2 * n))
    gauges = [canonical_gauge(n), symmetric_gauge(n), gauge_transform(canonical_gauge(n), CoordinateProductField(n))]
    for gauge in gauges:
        result = gauge_check(gauge, points, checks.gauge_tolerance)
        yield _at_most(f"gauge curl ({gauge.label})", result.max_residual, checks.gauge_tolerance)
    if checks.broken_gauge:
        broken = gauge_check(canonical_gauge(n, scale=2.0), points, checks.gauge_tolerance)
        yield CheckOutcome(
            name="gauge curl detects a wrong potential",
            passed=not broken.passed,
            value=broken.max_residual,
            threshold=checks.gauge_tolerance,
        )


def check_brackets(config: ScenarioConfig, rng: np.random.Generator) -> Iterator[CheckOutcome]:
    n = config.n
    checks = config.checks
    q = FunctionField(function=lambda xi: xi[..., 0], gradient_function=lambda xi: np.eye(2 * n)[0] + 0 * xi)
    p = FunctionField(function=lambda xi: xi[..., n], gradient_function=lambda xi: np.eye(2 * n)[n] + 0 * xi)
    point = rng.uniform(-1.0, 1.0, size=2 * n)
    yield _at_most("bracket {q, p} = 1", abs(float(poisson_bracket(q, p, point)) - 1.0), 1e-12)

    worst = 0.0
    for _ in range(checks.jacobi_trials):
        f, g, k = (PolynomialField.random(2 * n, 3, rng) for _ in range(3))
        worst = max(worst, jacobi_residual(f, g, k, rng.uniform(-1.0, 1.0, size=2 * n)))
    yield _at_most("Jacobi identity (random cubics)", worst, checks.jacobi_tolerance)

    model = config.model.build(n)
    hbar = config.hbar[-1]
    brackets = guiding_brackets(initial_state(model, config.initial_point, hbar, config.j0), model, hbar)
    yield _at_most("bracket {X, Π} = 0", brackets.max_x_pi, checks.bracket_tolerance)
    pi_sign = float(np.sign(brackets.pi_pi[0, n]))
    x_sign = float(np.sign(brackets.x_x[0, n]))
    yield CheckOutcome(
        name="bracket signs ℏ{Π_q, Π_p} = −1, {X^q, X^p} = +1",
        passed=pi_sign < 0 < x_sign,
        value=hbar * float(brackets.pi_pi[0, n]),
        threshold=-1.0,
        detail=f"{{X^q, X^p}} = {brackets.x_x[0, n]:.12g}",
    )


def check_flux(config: ScenarioConfig) -> Iterator[CheckOutcome]:
    tolerance = config.checks.flux_tolerance
    torus = kostant_flux(flat_torus(math.sqrt(config.checks.torus_area)), tolerance=tolerance)
    expected = round(config.checks.torus_area / (2 * math.pi))
    yield CheckOutcome(
        name="flux of the flat torus",
        passed=torus.integrality_residual <= tolerance and torus.nearest_integer == expected,
        value=torus.flux,
        threshold=tolerance,
        detail=f"nearest integer {torus.nearest_integer}",
    )
    for name, mesh in (("immersed torus", clifford_torus()), ("immersed sphere", embedded_sphere())):
        result = kostant_flux(mesh, tolerance=tolerance)
        yield _at_most(f"flux of the {name}", abs(result.flux), tolerance)


def check_prequantum(config: ScenarioConfig) -> Iterator[CheckOutcome]:
    checks = config.checks
    coarse, fine = checks.ccr_points
    residuals = [
        ccr_residual(gaussian_section(checks.ccr_half_width, points, width=checks.ccr_width), checks.ccr_hbar)
        for points in (coarse, fine)
    ]
    yield _at_most(f"CCR residual (N={fine})", residuals[1], checks.ccr_max_residual)
    expected_ratio = checks.ccr_order_ratio ** math.log2(fine / coarse)
    ratio = residuals[0] / residuals[1] if residuals[1] > 0 else math.inf
    yield _at_most(
        "CCR convergence order",
        abs(ratio / expected_ratio - 1.0),
        checks.ccr_ratio_tolerance,
        detail=f"ratio {ratio:.4g}, expected {expected_ratio:.4g}",
    )
    section = polarized_section(checks.polarization_half_width, fine, width=checks.ccr_width)
    yield _at_most("polarization of f(q) sections", polarization_residual(section), checks.polarization_tolerance)


def _sup_difference(model: PhaseModel, other: PhaseModel, config: ScenarioConfig) -> float:
    checks = config.checks
    hbar = checks.trajectory_gauge_hbar
    runs = [
        integrate_extended(
            initial_state(m, config.initial_point, hbar, config.j0),
            checks.trajectory_gauge_duration,
            m,
            hbar,
            IntegratorConfig(),
        )
        for m in (model, other)
    ]
    return float(np.max(np.abs(runs[0].xi - runs[1].xi)))


def check_gauge_invariance(config: ScenarioConfig, seed: int) -> Iterator[CheckOutcome]:
    checks = config.checks
    model = config.model.build(config.n)
    transformed = model.with_gauge(gauge_transform(model.gauge, CoordinateProductField(config.n)))
    yield _at_most("ξ trajectory under θ → θ + d(qp)", _sup_difference(model, transformed, config),
                   checks.trajectory_gauge_tolerance)
    if config.n != 1:
        return
    grid = GridSpec(checks.spectrum_gauge_grid.half_width, checks.spectrum_gauge_grid.points)
    hbar = checks.spectrum_gauge_hbar
    spectra = [
        lowest_spectrum(
            build_operator(model.with_gauge(gauge), hbar, grid, checks.spectrum_gauge_grid.stencil_order),
            checks.spectrum_gauge_levels,
            seed,
        ).require_converged()
        for gauge in (canonical_gauge(1), symmetric_gauge(1))
    ]
    difference = float(np.max(np.abs(spectra[0].eigenvalues - spectra[1].eigenvalues)))
    yield _at_most("spectrum under Landau vs symmetric gauge", difference, checks.spectrum_gauge_tolerance)


CHECK_GROUPS: dict[str, Callable[[ScenarioConfig, np.random.Generator, int], Iterator[CheckOutcome]]] = {
    "gauge": lambda config, rng, seed: check_gauges(config, rng),
    "brackets": lambda config, rng, seed: check_brackets(config, rng),
    "flux": lambda config, rng, seed: check_flux(config),
    "prequantum": lambda config, rng, seed: check_prequantum(config),
    "gauge-invariance": lambda config, rng, seed: check_gauge_invariance(config, seed),
}


def run_checks(config: ScenarioConfig) -> list[CheckOutcome]:
    """Run every check group with one seeded generator."""
    rng = np.random.default_rng(config.seed)
    outcomes: list[CheckOutcome] = []
    for group, check in CHECK_GROUPS.items():
        logger.debug(f"Running {group} checks")
        outcomes.extend(check(config, rng, config.seed))
    return outcomes
