"""
The main program logic.

Program logic is separated from the command-line interface (CLI) logic, to allow easily switching CLI/ GUI libraries.
Each run writes its result files and, last, a ``manifest.json`` into ``<output directory>/<scenario id>/``.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
import logging
import time
from typing import Any, Callable, Sequence

import numpy as np
from rich.table import Table
import simplejson

from .checks import CheckOutcome, run_checks
from .extended_dynamics import ScalingReport, ScalingScenario, ScalingStudyError, TrajectoryRecord, scaling_study
from .program_params import Commands, ModelIds, ProgramParams, ScenarioConfig, ScenarioKinds
from .quantum_reduction import (
    BOUNDARY_DECAY,
    BandComparison,
    BandReport,
    EigensolverConvergenceError,
    GridResolutionError,
    GridSpec,
    NonMechanicalModelError,
    OracleSpectrum,
    QuantumReductionError,
    SpectrumResult,
    band_analysis,
    banded_spectrum,
    build_operator,
    compare_bands,
    effective_prediction,
    oracle_h_spectrum,
)
from .version import __version__
from .writer import ResultWriter

logger = logging.getLogger(__name__)
PROGRAM_NAME = "geoq"
VERSION = __version__
PROGRAM_AND_VERSION = f"{PROGRAM_NAME}: {VERSION}"
MANIFEST_NAME = "manifest.json"
ARTIFACT_VERSION = 1

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_INTEGRATION = 3
EXIT_EIGENSOLVER = 4


class ProgramBaseError(Exception):
    """Base class for all program control flow errors."""


class BadParameterError(ProgramBaseError):
    """Raised when a parameter is invalid."""


class WarningEncounteredError(ProgramBaseError):
    """Raised when a warning is encountered."""


class RunFailedError(ProgramBaseError):
    """Raised after outputs are written when a run did not fully succeed."""

    def __init__(self, message: str, exit_code: int) -> None:
        self.message = message
        self.exit_code = exit_code
        super().__init__(message)


@dataclass
class PointStatus:
    hbar: float
    status: str
    error: str | None = None


@dataclass
class RunManifest:
    """What a run produced and whether its acceptance checks passed."""

    command: str
    scenario_id: str
    config_hash: str
    outputs: list[str] = field(default_factory=list)
    points: list[PointStatus] = field(default_factory=list)
    checks: list[CheckOutcome] = field(default_factory=list)
    artifact_version: int = ARTIFACT_VERSION
    program_version: str = VERSION

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks) and all(point.status == "ok" for point in self.points)

    def as_dict(self) -> dict[str, Any]:
        return asdict(self) | {"passed": self.passed}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RunManifest:
        data = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        data["points"] = [PointStatus(**p) for p in data.get("points", [])]
        data["checks"] = [CheckOutcome(**c) for c in data.get("checks", [])]
        return cls(**data)


@dataclass
class QuantumPoint:
    """Everything computed for one ℏ value of a spectrum run; picklable for worker processes."""

    hbar: float
    spectrum: SpectrumResult | None = None
    report: BandReport | None = None
    oracle: OracleSpectrum | None = None
    comparison: BandComparison | None = None
    error: str | None = None
    error_type: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _hbar_tag(hbar: float) -> str:
    return f"hbar={hbar:g}"


def _interior_boundary_weight(spectrum: SpectrumResult) -> float:
    """Largest boundary weight among states that are not edge states."""
    if spectrum.boundary_weight is None:
        return 0.0
    interior = spectrum.boundary_weight[~spectrum.edge_states]
    return float(np.max(interior)) if interior.size else 0.0


def run_quantum_point(scenario: ScenarioConfig, hbar: float) -> QuantumPoint:
    """Spectrum, band analysis and comparison against the effective prediction at one ℏ."""
    model = scenario.model.build(1, gauge=scenario.quantum_gauge)
    grid = GridSpec(scenario.grid.half_width, scenario.grid.points)
    point = QuantumPoint(hbar=hbar)
    try:
        operator = build_operator(model, hbar, grid, scenario.grid.stencil_order)
        point.spectrum = banded_spectrum(
            operator, scenario.eigenpairs, scenario.probe_bands, scenario.probe_count, scenario.seed
        )
        point.report = band_analysis(point.spectrum, model, hbar)
        point.spectrum.require_converged()
    except QuantumReductionError as e:
        logger.warning(f"Spectrum at ℏ={hbar:g} failed: {e}")
        point.error, point.error_type = str(e), type(e).__name__
        return point
    try:
        size = max(len(band.levels) for band in point.report.bands)
        point.oracle = oracle_h_spectrum(model, hbar, size)
    except NonMechanicalModelError as e:
        logger.warning(f"No reference spectrum: {e}")
        return point
    predictions = {band.index: list(effective_prediction(point.oracle, band.index)) for band in point.report.bands}
    tolerances = scenario.tolerances
    point.comparison = compare_bands(
        point.report, predictions, tolerances.level, tolerances.splitting, tolerances.gap
    )
    return point


class Program:
    """
    The main program logic.

    Program logic is separated from the CLI/ GUI logic, to allow easily switching CLI/ GUI libraries.

    The program is run by calling the `run` method.

    The `print` method is used to display informational messages to the user.

    The `params` attribute contains the program parameters.
    """

    def __init__(self, params: ProgramParams, print_callback: Callable[[Any], None] = print) -> None:
        self.params = params
        self.print_callback = print_callback

    def print(self, message: Any) -> None:
        """Display an informational message to the user (suppressed by --quiet)."""
        if not self.params.ui.quiet:
            self.print_callback(message)

    def run(self) -> RunManifest | None:
        """Run the program."""
        logging.getLogger().setLevel(self.params.ui.effective_log_level)
        command = self.params.command
        if command == Commands.schema:
            self.print_callback(simplejson.dumps(ScenarioConfig.model_json_schema(), indent=2))
            return None
        if command == Commands.report:
            self._report()
            return None
        scenario = self._require_scenario()
        started = time.perf_counter()
        manifest = RunManifest(
            command=command.value,
            scenario_id=scenario.scenario_id,
            config_hash=scenario.config_hash(),
        )
        writer = ResultWriter(self.params.run.output_directory / scenario.scenario_id, manifest.config_hash)
        if command == Commands.classical_scan:
            failure = self._classical_scan(scenario, writer, manifest)
        elif command == Commands.quantum_spectrum:
            failure = self._quantum_spectrum(scenario, writer, manifest)
        elif command == Commands.checks:
            failure = self._checks(scenario, writer, manifest)
        else:
            raise NotImplementedError(f"Unknown command: {command}")
        manifest.outputs = [path.name for path in writer.written]
        logger.debug(f"{command.value} finished in {time.perf_counter() - started:.1f} s")
        writer.json(MANIFEST_NAME, manifest.as_dict())
        self._print_summary(manifest)
        if failure is not None:
            raise failure
        if not manifest.passed:
            failed = [check.name for check in manifest.checks if not check.passed]
            raise RunFailedError(f"acceptance checks failed: {failed}", EXIT_CHECK_FAILED)
        return manifest

    def _require_scenario(self) -> ScenarioConfig:
        scenario = self.params.scenario
        if scenario is None:
            raise BadParameterError(f"the {self.params.command.value} command needs a scenario")
        expected = {
            Commands.classical_scan: ScenarioKinds.classical,
            Commands.quantum_spectrum: ScenarioKinds.quantum,
            Commands.checks: ScenarioKinds.checks,
        }[self.params.command]
        if scenario.kind != expected:
            self._warn(f"Scenario {scenario.scenario_id} is a {scenario.kind.value} scenario; running it anyway.")
        return scenario

    def _classical_scan(
        self, scenario: ScenarioConfig, writer: ResultWriter, manifest: RunManifest
    ) -> RunFailedError | None:
        model = scenario.model.build(scenario.n)
        study = ScalingScenario(
            model=model,
            xi0=np.asarray(scenario.initial_point, dtype=float),
            duration=scenario.T,
            j0=scenario.j0,
            integrator=scenario.integrator.to_config(),
            reference=scenario.integrator.to_config(scenario.reference_scheme),
        )
        try:
            report = scaling_study(study, scenario.hbar, jobs=self.params.run.jobs)
        except ScalingStudyError as e:
            raise BadParameterError(str(e)) from None
        for point in report.points:
            manifest.points.append(PointStatus(point.hbar, "ok" if point.ok else "failed", point.error))
            if point.trajectory is not None:
                self._write_trajectory(writer, point.trajectory, scenario.n)
                self.print(
                    f"[blue]ℏ={point.hbar:g}[/blue]: {point.trajectory.stats.steps} steps, "
                    f"energy drift {point.trajectory.stats.max_energy_drift:.2e}"
                )
            else:
                self.print(f"[blue]ℏ={point.hbar:g}[/blue]: [red]{point.error_type}[/red] {point.error}")
        self._write_deviations(writer, report)
        writer.json(
            "scaling_report.json",
            {
                "scenario_id": scenario.scenario_id,
                "model": model.identifier,
                "points": [
                    {
                        "hbar": point.hbar,
                        "status": "ok" if point.ok else "failed",
                        "error": point.error,
                        "reference_rate": point.reference_rate,
                        "metrics": point.metrics.as_dict() if point.metrics else None,
                        "stats": asdict(point.trajectory.stats) if point.trajectory else None,
                    }
                    for point in report.points
                ],
                "fits": {name: asdict(fit) for name, fit in report.fits.items()},
            },
        )
        manifest.checks.extend(self._classical_checks(scenario, report))
        failed = report.failed_points
        if failed:
            return RunFailedError(f"integration failed at ℏ = {[p.hbar for p in failed]}", EXIT_INTEGRATION)
        return None

    def _write_trajectory(self, writer: ResultWriter, trajectory: TrajectoryRecord, n: int) -> None:
        dim = 2 * n
        coordinates = [f"xi_{i + 1}" for i in range(dim)] + [f"X_{i + 1}" for i in range(dim)]
        header = ["t", *coordinates, "J", "H", "energy_drift"]
        drift = trajectory.energy_drift
        rows = (
            [trajectory.times[i], *trajectory.xi[i], *trajectory.X[i], trajectory.J[i], trajectory.energy[i], drift[i]]
            for i in range(len(trajectory.times))
        )
        writer.csv(f"trajectory_{_hbar_tag(trajectory.hbar)}.csv", header, rows)

    def _write_deviations(self, writer: ResultWriter, report: ScalingReport) -> None:
        metrics = ["xi_ref", "guiding_ref", "radius", "action_drift", "guiding_drift"]
        header = ["hbar", "status", *metrics, "max_energy_drift", "steps", "rejected_steps", "error"]
        rows = []
        for point in report.points:
            values = point.metrics.as_dict() if point.metrics else {}
            stats = point.trajectory.stats if point.trajectory else None
            rows.append(
                [
                    point.hbar,
                    "ok" if point.ok else "failed",
                    *(values.get(name) for name in metrics),
                    stats.max_energy_drift if stats else None,
                    stats.steps if stats else None,
                    stats.rejected_steps if stats else None,
                    point.error,
                ]
            )
        writer.csv("deviations.csv", header, rows)

    def _classical_checks(self, scenario: ScenarioConfig, report: ScalingReport) -> list[CheckOutcome]:
        tolerances = scenario.tolerances
        good = [point for point in report.points if point.ok and point.metrics is not None]
        checks: list[CheckOutcome] = []
        if scenario.model.id == ModelIds.constant:
            for point in good:
                assert point.metrics is not None
                drift = point.metrics.guiding_drift
                checks.append(
                    CheckOutcome(f"guiding center frozen (ℏ={point.hbar:g})", drift <= tolerances.freeze, drift,
                                 tolerances.freeze)
                )
            return checks
        for name, fit in report.fits.items():
            if fit.degenerate:
                self._warn(f"Degenerate {name} exponent fit: {fit.reason}.")
        radius = report.fits["radius"]
        checks.append(
            CheckOutcome(
                "exponent of sup|ξ − X|",
                radius.exponent is not None
                and abs(radius.exponent - tolerances.radius_exponent) <= tolerances.radius_exponent_tolerance,
                radius.exponent,
                tolerances.radius_exponent,
            )
        )
        for name, minimum, label in (
            ("guiding_ref", tolerances.min_guiding_exponent, "exponent of sup|X − ξ_ref|"),
            ("action_drift", tolerances.min_action_exponent, "exponent of the fast-action drift"),
        ):
            fit = report.fits[name]
            checks.append(CheckOutcome(label, fit.exponent is not None and fit.exponent >= minimum, fit.exponent,
                                       minimum))
        for name, fit in report.fits.items():
            if fit.residual is not None:
                checks.append(
                    CheckOutcome(f"log-log fit residual ({name})", fit.residual <= tolerances.max_fit_residual,
                                 fit.residual, tolerances.max_fit_residual)
                )
        for point in good:
            assert point.metrics is not None
            checks.append(
                CheckOutcome(
                    f"guiding center beats ξ against the reference (ℏ={point.hbar:g})",
                    point.metrics.guiding_ref < point.metrics.xi_ref,
                    point.metrics.guiding_ref,
                    point.metrics.xi_ref,
                )
            )
        drifts = [point.metrics.action_drift for point in good if point.metrics is not None]
        checks.append(
            CheckOutcome("fast-action drift decreases with ℏ", all(a > b for a, b in zip(drifts, drifts[1:])))
        )
        return checks

    def _quantum_spectrum(
        self, scenario: ScenarioConfig, writer: ResultWriter, manifest: RunManifest
    ) -> RunFailedError | None:
        if scenario.n != 1:
            raise BadParameterError(f"the quantum spectrum solver supports n = 1 only, got n = {scenario.n}")
        grid = GridSpec(scenario.grid.half_width, scenario.grid.points)
        for hbar in scenario.hbar:
            try:
                grid.check_resolution(hbar)
            except GridResolutionError as e:
                raise BadParameterError(str(e)) from None
        jobs = self.params.run.jobs
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as executor:
                points = list(executor.map(run_quantum_point, [scenario] * len(scenario.hbar), scenario.hbar))
        else:
            points = [run_quantum_point(scenario, hbar) for hbar in scenario.hbar]
        for point in points:
            manifest.points.append(PointStatus(point.hbar, "ok" if point.ok else "failed", point.error))
            self._write_quantum_point(writer, point)
            manifest.checks.extend(self._quantum_point_checks(scenario, point))
        manifest.checks.extend(self._splitting_scaling_checks(scenario, points))
        unconverged = [p.hbar for p in points if p.error_type == EigensolverConvergenceError.__name__]
        if unconverged:
            return RunFailedError(f"eigensolver did not converge at ℏ = {unconverged}", EXIT_EIGENSOLVER)
        return None

    def _write_quantum_point(self, writer: ResultWriter, point: QuantumPoint) -> None:
        tag = _hbar_tag(point.hbar)
        spectrum = point.spectrum
        if spectrum is not None:
            header = ["index", "eigenvalue", "residual", "fast_action", "boundary_weight", "band", "edge"]
            labels = spectrum.band_labels
            edges = spectrum.edge_states
            rows = (
                [
                    i,
                    spectrum.eigenvalues[i],
                    spectrum.residuals[i],
                    spectrum.fast_action[i] if spectrum.fast_action is not None else None,
                    spectrum.boundary_weight[i] if spectrum.boundary_weight is not None else None,
                    labels[i],
                    bool(edges[i]),
                ]
                for i in range(len(spectrum))
            )
            writer.csv(f"eigenvalues_{tag}.csv", header, rows)
        payload: dict[str, Any] = {"hbar": point.hbar, "status": "ok" if point.ok else "failed", "error": point.error}
        if point.report is not None:
            payload["bands"] = point.report.as_dict()
        if spectrum is not None:
            payload["converged"] = spectrum.converged
            payload["residual_ok"] = spectrum.residual_ok
            payload["boundary_weight"] = _interior_boundary_weight(spectrum)
            payload["boundary_decayed"] = payload["boundary_weight"] <= BOUNDARY_DECAY
        if point.oracle is not None:
            payload["oracle"] = {
                "method": point.oracle.method,
                "eigenvalues": point.oracle.eigenvalues,
                "richardson_change": point.oracle.richardson_change,
                "stable": point.oracle.stable,
            }
        if point.comparison is not None:
            payload["comparison"] = {
                "level_error": point.comparison.level_error,
                "splitting_error": point.comparison.splitting_error,
                "gap_error": point.comparison.gap_error,
                "checked_bands": list(point.comparison.checked_bands),
                "passed": point.comparison.passed,
            }
            writer.csv(
                f"comparison_{tag}.csv",
                ["kind", "band", "index", "computed", "predicted", "relative_error"],
                (
                    [row.kind, row.band, row.index, row.computed, row.predicted, row.relative_error]
                    for row in point.comparison.rows
                ),
            )
        writer.json(f"band_report_{tag}.json", payload)
        if point.report is not None:
            gap = point.report.first_gap
            self.print(
                f"[blue]ℏ={point.hbar:g}[/blue]: {len(spectrum or [])} levels in {len(point.report.bands)} bands, "
                f"first gap {gap if gap is None else f'{gap:.6g}'}"
            )
        else:
            self.print(f"[blue]ℏ={point.hbar:g}[/blue]: [red]{point.error_type}[/red] {point.error}")

    def _quantum_point_checks(self, scenario: ScenarioConfig, point: QuantumPoint) -> list[CheckOutcome]:
        tolerances = scenario.tolerances
        tag = f"ℏ={point.hbar:g}"
        if point.spectrum is None or point.report is None:
            return []
        checks = [
            CheckOutcome(
                f"eigenpair residuals ({tag})",
                point.spectrum.residual_ok,
                float(np.max(point.spectrum.residuals)) if len(point.spectrum) else None,
                point.spectrum.residual_tolerance,
            )
        ]
        if scenario.model.id == ModelIds.constant:
            # any mix of a degenerate Landau band is an eigenvector
            logger.debug(f"Boundary decay not checked for the flat model ({tag}).")
            c = scenario.model.c
            for k in range(scenario.probe_bands + 1):
                band = point.report.band(k)
                error = (
                    max(abs(level - (k + 0.5) * c) / ((k + 0.5) * c) for level in band.levels) if band else None
                )
                checks.append(
                    CheckOutcome(f"Landau level {k} ({tag})", error is not None and error <= tolerances.landau, error,
                                 tolerances.landau)
                )
            return checks
        weight = _interior_boundary_weight(point.spectrum)
        if weight > BOUNDARY_DECAY:
            self._warn(
                f"Boundary decay not reached at {tag}: weight {weight:.2e} exceeds {BOUNDARY_DECAY:.0e}; increase R."
            )
        checks.append(CheckOutcome(f"boundary decay ({tag})", weight <= BOUNDARY_DECAY, weight, BOUNDARY_DECAY))
        report = point.report
        checks.append(
            CheckOutcome(
                f"gap/splitting ratio ({tag})",
                report.gap_ratio is not None and report.gap_ratio >= tolerances.min_gap_ratio,
                report.gap_ratio,
                tolerances.min_gap_ratio,
            )
        )
        checks.append(
            CheckOutcome(f"band separation ({tag})", report.separation_ok, report.gap_ratio,
                         report.separation_threshold)
        )
        if point.comparison is not None:
            comparison = point.comparison
            for kind, error, tolerance in (
                ("lowest-band levels", comparison.level_error, comparison.level_tolerance),
                ("lowest-band splitting", comparison.splitting_error, comparison.splitting_tolerance),
                ("first gap", comparison.gap_error, comparison.gap_tolerance),
            ):
                checks.append(
                    CheckOutcome(f"{kind} vs effective prediction ({tag})", error is not None and error <= tolerance,
                                 error, tolerance)
                )
        return checks

    def _splitting_scaling_checks(self, scenario: ScenarioConfig, points: Sequence[QuantumPoint]) -> list[CheckOutcome]:
        if scenario.model.id == ModelIds.constant:
            return []
        splittings = []
        for point in points:
            band = point.report.band(0) if point.report else None
            if band is not None and band.mean_splitting:
                splittings.append((point.hbar, band.mean_splitting))
        checks = []
        for (hbar_a, split_a), (hbar_b, split_b) in zip(splittings, splittings[1:]):
            expected = hbar_a / hbar_b
            ratio = split_a / split_b
            checks.append(
                CheckOutcome(
                    f"splitting ∝ ℏ (ℏ={hbar_a:g} vs {hbar_b:g})",
                    abs(ratio / expected - 1.0) <= scenario.tolerances.splitting_scaling,
                    ratio,
                    expected,
                )
            )
        return checks

    def _checks(
        self, scenario: ScenarioConfig, writer: ResultWriter, manifest: RunManifest
    ) -> RunFailedError | None:
        try:
            outcomes = run_checks(scenario)
        except QuantumReductionError as e:
            if isinstance(e, EigensolverConvergenceError):
                raise RunFailedError(str(e), EXIT_EIGENSOLVER) from None
            raise
        for outcome in outcomes:
            colour = "green" if outcome.passed else "red"
            self.print(f"[{colour}]{'pass' if outcome.passed else 'FAIL'}[/{colour}] {outcome.name}")
        writer.json("checks.json", {"scenario_id": scenario.scenario_id, "checks": [asdict(c) for c in outcomes]})
        manifest.checks.extend(outcomes)
        return None

    def _print_summary(self, manifest: RunManifest) -> None:
        passed = sum(check.passed for check in manifest.checks)
        colour = "green" if manifest.passed else "red"
        self.print_callback(
            f"[{colour}]{manifest.scenario_id}[/{colour}]: {passed}/{len(manifest.checks)} checks passed, "
            f"{len(manifest.outputs)} files written"
        )

    def _report(self) -> None:
        directory = self.params.run.output_directory
        if not directory.is_dir():
            raise BadParameterError(f"Output directory does not exist: {directory}")
        manifests = []
        for path in sorted(directory.glob(f"*/{MANIFEST_NAME}")):
            with open(path, encoding="utf-8") as fd:
                manifests.append((path.parent.name, RunManifest.from_dict(simplejson.load(fd))))
        if not manifests:
            self._warn(f"No run manifests found in {directory}.")
            return
        table = Table(title=f"{PROGRAM_NAME} runs in {directory}")
        for column in ("scenario", "command", "checks", "points", "config hash", "status"):
            table.add_column(column)
        for name, manifest in manifests:
            passed = sum(check.passed for check in manifest.checks)
            failed_points = sum(point.status != "ok" for point in manifest.points)
            table.add_row(
                name,
                manifest.command,
                f"{passed}/{len(manifest.checks)}",
                f"{len(manifest.points) - failed_points}/{len(manifest.points)}",
                manifest.config_hash[:12],
                "[green]pass[/green]" if manifest.passed else "[red]FAIL[/red]",
            )
        self.print_callback(table)
        failed_runs = [name for name, manifest in manifests if not manifest.passed]
        if failed_runs:
            raise RunFailedError(f"runs with failed checks: {failed_runs}", EXIT_CHECK_FAILED)

    def _warn(self, message: str) -> None:
        """Display a warning message to the user."""
        if self.params.ui.stop_on_warning:
            raise WarningEncounteredError(message)
        logger.warning(message)
