"""Data classes representing the user-configurable program parameters and scenario configuration."""
from __future__ import annotations

from enum import Enum
import hashlib
import logging
import math
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, PositiveFloat, PositiveInt, field_validator
from pydantic import model_validator
import simplejson

from .extended_dynamics import IntegratorConfig
from .phase_space import PhaseModel, build_model


class BaseParams(BaseModel):
    """A base class for parameter dataclasses."""

    model_config = ConfigDict(validate_assignment=True, extra="forbid")


class PythonReprEnum(Enum):
    """An Enum that uses a Python representation."""

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}.{self.name}"


class Commands(str, PythonReprEnum):
    """The sub-commands of the harness."""

    classical_scan = "classical-scan"
    quantum_spectrum = "quantum-spectrum"
    checks = "checks"
    report = "report"
    schema = "schema"


class ScenarioKinds(str, PythonReprEnum):
    """Which sub-command a scenario is meant for."""

    classical = "classical"
    quantum = "quantum"
    checks = "checks"


class ModelIds(str, PythonReprEnum):
    """The built-in Hamiltonians."""

    constant = "constant"
    shifted_harmonic = "shifted-harmonic"
    quartic = "quartic"


class GaugeIds(str, PythonReprEnum):
    """The built-in gauge potentials."""

    canonical = "canonical"
    symmetric = "symmetric"


class Schemes(str, PythonReprEnum):
    """The available time integrators."""

    implicit_midpoint = "implicit-midpoint"
    dop853 = "dop853"


class ModelParams(BaseParams):
    """The Hamiltonian and gauge of a scenario."""

    id: ModelIds = ModelIds.quartic
    c: PositiveFloat = Field(default=1.0, description="Energy offset; also the positivity floor h_min.")
    lam: NonNegativeFloat = Field(default=0.1, description="Quartic coupling.")
    gauge: GaugeIds = GaugeIds.canonical

    def build(self, n: int, gauge: GaugeIds | None = None) -> PhaseModel:
        """Assemble the `PhaseModel` for ``n`` degrees of freedom."""
        return build_model(self.id.value, n=n, c=self.c, lam=self.lam, gauge=(gauge or self.gauge).value)


class IntegratorParams(BaseParams):
    """Time-integration settings."""

    scheme: Schemes = Schemes.implicit_midpoint
    step: Literal["auto"] | PositiveFloat = "auto"
    fixed_point_tolerance: PositiveFloat = 1e-12
    max_fixed_point_iterations: PositiveInt = 100
    max_steps: PositiveInt = 5_000_000
    energy_tolerance: PositiveFloat = 1e-6
    max_refinements: int = Field(default=4, ge=0)
    output_samples: PositiveInt = 2000
    rtol: PositiveFloat = 1e-12
    atol: PositiveFloat = 1e-12

    def to_config(self, scheme: Schemes | None = None) -> IntegratorConfig:
        return IntegratorConfig(
            scheme=(scheme or self.scheme).value,  # type: ignore[arg-type]
            step=None if self.step == "auto" else float(self.step),
            fixed_point_tolerance=self.fixed_point_tolerance,
            max_fixed_point_iterations=self.max_fixed_point_iterations,
            max_steps=self.max_steps,
            energy_tolerance=self.energy_tolerance,
            max_refinements=self.max_refinements,
            output_samples=self.output_samples,
            rtol=self.rtol,
            atol=self.atol,
        )


class GridParams(BaseParams):
    """Phase-space grid for the quantum solver."""

    half_width: PositiveFloat = Field(default=6.0, description="The grid covers [-R, R]².")
    points: int = Field(default=256, ge=8, description="Interior nodes per axis.")
    stencil_order: Literal[2, 4] = 4


class AcceptanceParams(BaseParams):
    """Acceptance thresholds."""

    freeze: PositiveFloat = Field(default=1e-6, description="Max guiding-center drift for constant h.")
    radius_exponent: float = 0.5
    radius_exponent_tolerance: PositiveFloat = 0.1
    min_guiding_exponent: float = 0.4
    min_action_exponent: float = 0.4
    max_fit_residual: PositiveFloat = 0.1
    landau: PositiveFloat = Field(default=0.01, description="Relative tolerance on flat Landau levels.")
    level: PositiveFloat = 0.05
    splitting: PositiveFloat = 0.25
    gap: PositiveFloat = 0.25
    min_gap_ratio: PositiveFloat = 14.0
    splitting_scaling: PositiveFloat = Field(default=0.15, description="Relative tolerance on splitting ∝ ℏ.")


class ChecksParams(BaseParams):
    """Settings of the geometric and numerical self-checks."""

    gauge_points: PositiveInt = 100
    gauge_tolerance: PositiveFloat = 1e-8
    broken_gauge: bool = Field(default=False, description="Also check a deliberately wrong potential (must fail).")
    jacobi_trials: PositiveInt = 10
    jacobi_tolerance: PositiveFloat = 1e-7
    flux_tolerance: PositiveFloat = 1e-8
    torus_area: PositiveFloat = Field(default=4 * math.pi, description="Symplectic area of the flat torus.")
    bracket_tolerance: PositiveFloat = 1e-6
    ccr_hbar: PositiveFloat = 0.1
    ccr_half_width: PositiveFloat = 6.0
    ccr_width: PositiveFloat = 1.5
    ccr_points: tuple[int, int] = (64, 128)
    ccr_max_residual: PositiveFloat = 1e-6
    ccr_order_ratio: PositiveFloat = 16.0
    ccr_ratio_tolerance: PositiveFloat = 0.3
    polarization_half_width: PositiveFloat = 10.0
    polarization_tolerance: PositiveFloat = 1e-10
    trajectory_gauge_hbar: PositiveFloat = 0.05
    trajectory_gauge_duration: PositiveFloat = 1.0
    trajectory_gauge_tolerance: PositiveFloat = 1e-8
    spectrum_gauge_hbar: PositiveFloat = 0.1
    spectrum_gauge_grid: GridParams = GridParams(half_width=4.0, points=120)
    spectrum_gauge_levels: PositiveInt = 6
    spectrum_gauge_tolerance: PositiveFloat = 1e-6


class ScenarioConfig(BaseParams):
    """A complete, validated run description; hashed into every output file."""

    scenario_id: str = "custom"
    kind: ScenarioKinds = ScenarioKinds.classical
    n: PositiveInt = 1
    model: ModelParams = ModelParams()
    hbar: list[PositiveFloat] = Field(default=[0.1, 0.05, 0.02, 0.01], min_length=1)
    T: PositiveFloat = Field(default=5.0, description="Integration time.")
    xi0: list[float] | None = Field(default=None, description="Initial point; defaults to (1, 0, …, 0).")
    j0: PositiveFloat = 1.0
    integrator: IntegratorParams = IntegratorParams()
    reference_scheme: Schemes = Schemes.dop853
    grid: GridParams = GridParams()
    quantum_gauge: GaugeIds = GaugeIds.symmetric
    eigenpairs: PositiveInt = 10
    probe_bands: int = Field(default=1, ge=0)
    probe_count: PositiveInt = 16
    tolerances: AcceptanceParams = AcceptanceParams()
    checks: ChecksParams = ChecksParams()
    seed: int = Field(default=0, ge=0, lt=2**64)

    @field_validator("hbar")
    @classmethod
    def _check_decreasing(cls, value: list[float]) -> list[float]:
        if any(a <= b for a, b in zip(value, value[1:])):
            raise ValueError("hbar values must be strictly decreasing")
        return value

    @model_validator(mode="after")
    def _check_initial_point(self) -> ScenarioConfig:
        if self.xi0 is not None and len(self.xi0) != 2 * self.n:
            raise ValueError(f"xi0 must have {2 * self.n} coordinates")
        return self

    @property
    def initial_point(self) -> list[float]:
        if self.xi0 is not None:
            return list(self.xi0)
        return [1.0] + [0.0] * (2 * self.n - 1)

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form."""
        canonical = simplejson.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class UIParams(BaseParams):
    """The configurable parameters for logging and information."""

    log_level: str = "info"
    no_color: bool = False
    quiet: bool = Field(default=False, description="Hide progress lines and raise the log level to at least warning.")
    stop_on_warning: bool = Field(default=False, description="Stop the run if a warning is encountered.")
    tracebacks: bool = False

    @property
    def effective_log_level(self) -> int:
        level = logging.getLevelName(self.log_level.upper())
        return max(level, logging.WARNING) if self.quiet else level


class RunParams(BaseParams):
    """Where results go and how much parallelism to use."""

    output_directory: Path = Path("results")
    jobs: PositiveInt = 1


class ProgramParams(BaseParams):
    """The configurable parameters for the program."""

    command: Commands
    ui: UIParams = UIParams()
    run: RunParams = RunParams()
    scenario: ScenarioConfig | None = None
