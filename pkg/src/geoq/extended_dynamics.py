"""
Classical dynamics on the extended phase space ``(ξ, p)`` and the guiding-center scaling study.

The extended Hamiltonian ``H = (1/2ℏ) g^{ij}(p_i − θ_i)(p_j − θ_j)`` with ``g = h⁻¹δ`` gives a fast cyclotron motion of
period ``2πℏ/h`` around a guiding center ``X`` that follows the flow of ``h`` on the original phase space.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import logging
import math
from typing import Callable, Iterable, Literal, Sequence

import numpy as np
from numpy.typing import ArrayLike
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .phase_space import (
    FloatArray,
    InvalidDimensionError,
    PhaseModel,
    PhaseSpaceError,
    central_derivatives,
    hamiltonian_vector_field,
    omega_bar,
)

logger = logging.getLogger(__name__)

Scheme = Literal["implicit-midpoint", "dop853"]
SCHEMES: tuple[Scheme, ...] = ("implicit-midpoint", "dop853")

STEPS_PER_CYCLOTRON_PERIOD = 50
REFERENCE_AUTO_STEP = 1e-3
MIN_STEP_FRACTION = 1e-12
NOISE_FLOOR = 1e-9
SCALING_METRICS = ("guiding_ref", "radius", "action_drift")


class IntegrationError(Exception):
    """Base class for integration failures."""


class StepSizeUnderflowError(IntegrationError):
    """Raised when the step would shrink below a negligible fraction of the time horizon."""


class MaxStepsExceededError(IntegrationError):
    """Raised when a run needs more steps than allowed."""


class FixedPointConvergenceError(IntegrationError):
    """Raised when the implicit-midpoint fixed-point iteration does not converge."""


class EnergyDriftError(IntegrationError):
    """Raised when the energy drift stays above tolerance after all step refinements."""


class ScalingStudyError(Exception):
    """Raised when a scaling study is requested with unusable inputs."""


class EmptyOverlapError(ScalingStudyError):
    """Raised when two trajectories share no common time window."""


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: Scheme = "implicit-midpoint"
    step: float | None = None
    """Fixed step (or max step for DOP853); ``None`` selects the automatic step."""
    fixed_point_tolerance: float = 1e-12
    max_fixed_point_iterations: int = 100
    max_steps: int = 5_000_000
    energy_tolerance: float = 1e-6
    max_refinements: int = 4
    output_samples: int = 2000
    rtol: float = 1e-12
    atol: float = 1e-12

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown integration scheme {self.scheme!r}")
        if self.step is not None and not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step!r}")
        if self.output_samples < 1:
            raise ValueError("output_samples must be at least 1")


@dataclass(frozen=True, eq=False)
class ExtendedState:
    """A point ``(ξ, p)`` of the extended phase space at time ``t``."""

    xi: FloatArray
    p: FloatArray
    t: float = 0.0

    def __post_init__(self) -> None:
        xi = np.asarray(self.xi, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if xi.ndim != 1 or xi.shape != p.shape or xi.shape[0] % 2:
            raise InvalidDimensionError(f"inconsistent state shapes: xi {xi.shape}, p {p.shape}")
        if not (np.all(np.isfinite(xi)) and np.all(np.isfinite(p))):
            raise PhaseSpaceError("non-finite extended state")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.xi.shape[0] // 2

    def as_vector(self) -> FloatArray:
        return np.concatenate([self.xi, self.p])

    @classmethod
    def from_vector(cls, y: ArrayLike, t: float = 0.0) -> ExtendedState:
        y = np.asarray(y, dtype=float)
        half = y.shape[0] // 2
        return cls(xi=y[:half], p=y[half:], t=t)


@dataclass(frozen=True, eq=False)
class GuidingDecomposition:
    """Guiding center ``X``, fast momentum ``Π`` and fast action ``J = ½|Π|²``; arrays may hold a time series."""

    X: FloatArray
    Pi: FloatArray
    J: FloatArray


def _guiding_arrays(xi: FloatArray, p: FloatArray, model: PhaseModel, hbar: float) -> GuidingDecomposition:
    root = math.sqrt(hbar)
    k = p - model.gauge.evaluate(xi)
    pi = k / root
    # X = ξ + √ℏ ω̄ᵀΠ
    x = xi + root * np.einsum("ji,...j->...i", omega_bar(model.chart.n), pi)
    return GuidingDecomposition(X=x, Pi=pi, J=0.5 * np.sum(pi**2, axis=-1))


def to_guiding(state: ExtendedState, model: PhaseModel, hbar: float) -> GuidingDecomposition:
    """Split a state into guiding center and fast motion. Pure and total."""
    _check_hbar(hbar)
    result = _guiding_arrays(state.xi, state.p, model, hbar)
    return GuidingDecomposition(X=result.X, Pi=result.Pi, J=result.J)


def extended_hamiltonian(state: ExtendedState, model: PhaseModel, hbar: float) -> float:
    """``H = (1/2ℏ) g^{ij} k_i k_j`` with ``k = p − θ(ξ)``; raises `DomainViolationError` below ``h_min``."""
    _check_hbar(hbar)
    k = state.p - model.gauge.evaluate(state.xi)
    upper = model.metric.upper(state.xi)
    return float(k @ upper @ k / (2.0 * hbar))


@dataclass(frozen=True, eq=False)
class GuidingBrackets:
    """Numerical Poisson brackets among guiding-center and fast variables at one state."""

    x_pi: FloatArray
    pi_pi: FloatArray
    x_x: FloatArray

    @property
    def max_x_pi(self) -> float:
        return float(np.max(np.abs(self.x_pi)))


def guiding_brackets(state: ExtendedState, model: PhaseModel, hbar: float) -> GuidingBrackets:
    """
    ``{X^a, Π_b}``, ``{Π_a, Π_b}`` and ``{X^a, X^b}`` on the extended phase space.

    The canonical bracket there is ``{F, G} = ∂_ξF·∂_pG − ∂_pF·∂_ξG``; derivatives are finite differences.
    """
    dim = model.chart.dimension

    def guiding(z: FloatArray) -> FloatArray:
        return _guiding_arrays(z[..., :dim], z[..., dim:], model, hbar).X

    def fast(z: FloatArray) -> FloatArray:
        return _guiding_arrays(z[..., :dim], z[..., dim:], model, hbar).Pi

    z = state.as_vector()
    jac_x = central_derivatives(guiding, z)
    jac_pi = central_derivatives(fast, z)

    def bracket(jf: FloatArray, jg: FloatArray) -> FloatArray:
        return jf[:dim].T @ jg[dim:] - jf[dim:].T @ jg[:dim]

    return GuidingBrackets(x_pi=bracket(jac_x, jac_pi), pi_pi=bracket(jac_pi, jac_pi), x_x=bracket(jac_x, jac_x))


def initial_state(model: PhaseModel, xi0: ArrayLike, hbar: float, j0: float = 1.0) -> ExtendedState:
    """The state at ``ξ0`` with ``Π`` along ``(1, …, 1)`` and fast action ``J = j0``."""
    _check_hbar(hbar)
    xi0 = model.chart.validate(xi0)
    dim = model.chart.dimension
    pi0 = math.sqrt(2.0 * j0) * np.ones(dim) / math.sqrt(dim)
    p0 = model.gauge.evaluate(xi0) + math.sqrt(hbar) * pi0
    return ExtendedState(xi=xi0, p=p0, t=0.0)


def _check_hbar(hbar: float) -> None:
    if not hbar > 0:
        raise ValueError(f"hbar must be positive, got {hbar!r}")


class _CountingField:
    """Wraps a right-hand side and counts evaluations."""

    def __init__(self, rhs: Callable[[float, FloatArray], FloatArray]):
        self.rhs = rhs
        self.calls = 0

    def __call__(self, t: float, y: FloatArray) -> FloatArray:
        self.calls += 1
        return self.rhs(t, y)


def extended_vector_field(model: PhaseModel, hbar: float) -> Callable[[float, FloatArray], FloatArray]:
    """Hamilton's equations of ``H`` on ``(ξ, p)``."""
    dim = model.chart.dimension
    hamiltonian, gauge = model.hamiltonian, model.gauge

    def rhs(t: float, y: FloatArray) -> FloatArray:
        xi, p = y[:dim], y[dim:]
        k = p - gauge.evaluate(xi)
        h = float(hamiltonian.evaluate(xi))
        xi_dot = h * k / hbar
        p_dot = -hamiltonian.gradient(xi) * (k @ k) / (2.0 * hbar) + (h / hbar) * (gauge.jacobian(xi) @ k)
        return np.concatenate([xi_dot, p_dot])

    return rhs


def _extended_energy(model: PhaseModel, hbar: float) -> Callable[[FloatArray], FloatArray]:
    dim = model.chart.dimension

    def energy(ys: FloatArray) -> FloatArray:
        xi, p = ys[..., :dim], ys[..., dim:]
        k = p - model.gauge.evaluate(xi)
        return model.hamiltonian.check_domain(xi) * np.sum(k**2, axis=-1) / (2.0 * hbar)

    return energy


@dataclass(frozen=True)
class IntegratorStats:
    steps: int
    rejected_steps: int
    refinements: int
    step: float
    function_evaluations: int
    max_energy_drift: float


@dataclass(frozen=True, eq=False)
class _RawSolution:
    times: FloatArray
    ys: FloatArray
    steps: int


def _midpoint_step(
    rhs: Callable[[float, FloatArray], FloatArray], t: float, y: FloatArray, dt: float, config: IntegratorConfig
) -> FloatArray:
    z = y + dt * rhs(t, y)
    for _ in range(config.max_fixed_point_iterations):
        z_next = y + dt * rhs(t + 0.5 * dt, 0.5 * (y + z))
        if not np.all(np.isfinite(z_next)):
            break
        if np.max(np.abs(z_next - z)) <= config.fixed_point_tolerance * max(1.0, float(np.max(np.abs(z_next)))):
            return z_next
        z = z_next
    raise FixedPointConvergenceError(f"fixed-point iteration did not converge at t = {t:.6g} (step {dt:.3g})")


def _integrate_midpoint(
    rhs: Callable[[float, FloatArray], FloatArray],
    y0: FloatArray,
    duration: float,
    step: float,
    config: IntegratorConfig,
) -> _RawSolution:
    stride = max(1, math.ceil(math.ceil(duration / step) / config.output_samples))
    steps = stride * math.ceil(math.ceil(duration / step) / stride)
    if steps > config.max_steps:
        raise MaxStepsExceededError(f"{steps} steps needed, {config.max_steps} allowed")
    dt = duration / steps
    if dt < MIN_STEP_FRACTION * duration:
        raise StepSizeUnderflowError(f"step {dt:.3g} is below the resolvable limit")
    times = [0.0]
    samples = [y0]
    y = y0
    for i in range(1, steps + 1):
        y = _midpoint_step(rhs, (i - 1) * dt, y, dt, config)
        if i % stride == 0:
            times.append(i * dt)
            samples.append(y)
    return _RawSolution(times=np.asarray(times), ys=np.asarray(samples), steps=steps)


def _integrate_dop853(
    rhs: Callable[[float, FloatArray], FloatArray],
    y0: FloatArray,
    duration: float,
    step: float | None,
    config: IntegratorConfig,
) -> _RawSolution:
    solution = solve_ivp(
        rhs,
        (0.0, duration),
        y0,
        method="DOP853",
        rtol=config.rtol,
        atol=config.atol,
        max_step=step if step is not None else np.inf,
        dense_output=True,
    )
    if solution.status != 0:
        if "step size" in solution.message.lower():
            raise StepSizeUnderflowError(solution.message)
        raise IntegrationError(solution.message)
    steps = len(solution.t) - 1
    if steps > config.max_steps:
        raise MaxStepsExceededError(f"{steps} steps taken, {config.max_steps} allowed")
    times = np.linspace(0.0, duration, config.output_samples + 1)
    return _RawSolution(times=times, ys=solution.sol(times).T, steps=steps)


def _relative_drift(energies: FloatArray) -> FloatArray:
    return np.abs(energies - energies[0]) / max(1.0, abs(float(energies[0])))


def _integrate_controlled(
    rhs: Callable[[float, FloatArray], FloatArray],
    energy: Callable[[FloatArray], FloatArray],
    y0: FloatArray,
    duration: float,
    step: float | None,
    config: IntegratorConfig,
) -> tuple[_RawSolution, FloatArray, IntegratorStats]:
    """Integrate, shrinking the step until the relative energy drift is within tolerance."""
    if not duration > 0:
        raise ValueError(f"integration time must be positive, got {duration!r}")
    counter = _CountingField(rhs)
    rejected = 0
    for refinement in range(config.max_refinements + 1):
        if config.scheme == "implicit-midpoint":
            assert step is not None
            raw = _integrate_midpoint(counter, y0, duration, step, config)
        else:
            raw = _integrate_dop853(counter, y0, duration, step, config)
        energies = energy(raw.ys)
        drift = float(np.max(_relative_drift(energies)))
        if drift <= config.energy_tolerance:
            stats = IntegratorStats(
                steps=raw.steps,
                rejected_steps=rejected,
                refinements=refinement,
                step=duration / raw.steps if raw.steps else 0.0,
                function_evaluations=counter.calls,
                max_energy_drift=drift,
            )
            return raw, energies, stats
        rejected += raw.steps
        if refinement == config.max_refinements:
            break
        factor = min(0.5, max(0.05, 0.7 * math.sqrt(config.energy_tolerance / drift)))
        current = step if step is not None else duration / max(raw.steps, 1)
        step = current * factor
        logger.debug(f"Energy drift {drift:.3e} above tolerance, retrying with step {step:.3e}")
    raise EnergyDriftError(f"energy drift {drift:.3e} exceeds {config.energy_tolerance:.1e}")


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """A sampled extended-phase-space trajectory with its guiding-center decomposition."""

    hbar: float
    times: FloatArray
    xi: FloatArray
    p: FloatArray
    X: FloatArray
    Pi: FloatArray
    J: FloatArray
    energy: FloatArray
    stats: IntegratorStats

    @property
    def energy_drift(self) -> FloatArray:
        return _relative_drift(self.energy)

    def state(self, index: int) -> ExtendedState:
        return ExtendedState(xi=self.xi[index], p=self.p[index], t=float(self.times[index]))


def auto_step(model: PhaseModel, xi0: ArrayLike, hbar: float) -> float:
    """A fixed fraction of the local cyclotron period ``2πℏ/h(ξ0)``."""
    h0 = float(model.hamiltonian.check_domain(xi0))
    return 2.0 * math.pi * hbar / h0 / STEPS_PER_CYCLOTRON_PERIOD


def integrate_extended(
    state: ExtendedState, duration: float, model: PhaseModel, hbar: float, config: IntegratorConfig | None = None
) -> TrajectoryRecord:
    """
    Integrate the extended flow from ``state`` over ``duration``.

    Errors are reported through the `IntegrationError` hierarchy; the energy drift of the returned record is within
    ``config.energy_tolerance``.
    """
    _check_hbar(hbar)
    config = config or IntegratorConfig()
    model.hamiltonian.check_domain(state.xi)
    step = config.step
    if step is None and config.scheme == "implicit-midpoint":
        step = auto_step(model, state.xi, hbar)
    raw, energies, stats = _integrate_controlled(
        extended_vector_field(model, hbar), _extended_energy(model, hbar), state.as_vector(), duration, step, config
    )
    dim = model.chart.dimension
    xi, p = raw.ys[:, :dim], raw.ys[:, dim:]
    guiding = _guiding_arrays(xi, p, model, hbar)
    return TrajectoryRecord(
        hbar=hbar,
        times=raw.times + state.t,
        xi=xi,
        p=p,
        X=guiding.X,
        Pi=guiding.Pi,
        J=guiding.J,
        energy=energies,
        stats=stats,
    )


@dataclass(frozen=True, eq=False)
class ReferenceTrajectory:
    """The flow of ``h`` itself, sampled uniformly."""

    times: FloatArray
    xi: FloatArray
    energy: FloatArray
    stats: IntegratorStats


def reference_flow(
    xi0: ArrayLike,
    duration: float,
    model: PhaseModel,
    config: IntegratorConfig | None = None,
    rate: float = 1.0,
) -> ReferenceTrajectory:
    """
    Integrate ``ξ̇ = rate·ω̄∇h`` from ``xi0`` (DOP853 unless configured otherwise).

    ``rate`` is the fast action the guiding center carries; ``rate = 1`` is the bare flow of ``h``.
    """
    if not (math.isfinite(rate) and rate > 0):
        raise ValueError(f"reference rate must be positive and finite, got {rate}")
    config = config or IntegratorConfig(scheme="dop853")
    xi0 = model.chart.validate(xi0)
    step = config.step
    if step is None and config.scheme == "implicit-midpoint":
        step = REFERENCE_AUTO_STEP / rate

    def rhs(t: float, y: FloatArray) -> FloatArray:
        return rate * hamiltonian_vector_field(model.hamiltonian, y)

    raw, energies, stats = _integrate_controlled(
        rhs, lambda ys: model.hamiltonian.check_domain(ys), xi0, duration, step, config
    )
    return ReferenceTrajectory(times=raw.times, xi=raw.ys, energy=energies, stats=stats)


@dataclass(frozen=True)
class DeviationMetrics:
    """Sup-norm deviations over the common time window."""

    xi_ref: float
    """``sup|ξ − ξ_ref|``"""
    guiding_ref: float
    """``sup|X − ξ_ref|``"""
    radius: float
    """``sup|ξ − X|``"""
    action_drift: float
    """``sup|J − J(0)| / J(0)``"""
    guiding_drift: float
    """``sup|X − X(0)|``"""

    def as_dict(self) -> dict[str, float]:
        return {
            "xi_ref": self.xi_ref,
            "guiding_ref": self.guiding_ref,
            "radius": self.radius,
            "action_drift": self.action_drift,
            "guiding_drift": self.guiding_drift,
        }


def _resample(times: FloatArray, values: FloatArray, target: FloatArray) -> FloatArray:
    if times.shape == target.shape and np.allclose(times, target, rtol=0.0, atol=1e-12):
        return values
    return CubicSpline(times, values, axis=0)(target)


def deviation_metrics(trajectory: TrajectoryRecord, reference: ReferenceTrajectory) -> DeviationMetrics:
    """Compare an extended trajectory against the reference flow, resampling onto the coarser grid if needed."""
    start = max(trajectory.times[0], reference.times[0])
    end = min(trajectory.times[-1], reference.times[-1])
    if not end > start:
        raise EmptyOverlapError(f"no common time window ([{start:g}, {end:g}])")

    def window(times: FloatArray) -> FloatArray:
        return times[(times >= start - 1e-12) & (times <= end + 1e-12)]

    candidates = [window(trajectory.times), window(reference.times)]
    target = min(candidates, key=len)
    xi = _resample(trajectory.times, trajectory.xi, target)
    guiding = _resample(trajectory.times, trajectory.X, target)
    action = _resample(trajectory.times, trajectory.J, target)
    xi_ref = _resample(reference.times, reference.xi, target)

    def sup(values: FloatArray) -> float:
        return float(np.max(np.linalg.norm(values, axis=-1)))

    j0 = float(trajectory.J[0])
    if j0 > 0:
        action_drift = float(np.max(np.abs(action - j0))) / j0
    else:
        logger.warning("Initial fast action is zero; reporting absolute action drift.")
        action_drift = float(np.max(np.abs(action - j0)))
    return DeviationMetrics(
        xi_ref=sup(xi - xi_ref),
        guiding_ref=sup(guiding - xi_ref),
        radius=sup(xi - guiding),
        action_drift=action_drift,
        guiding_drift=sup(trajectory.X - trajectory.X[0]),
    )


@dataclass(frozen=True, eq=False)
class ScalingScenario:
    """Everything a single scaling-study point needs; picklable for worker processes."""

    model: PhaseModel
    xi0: FloatArray
    duration: float
    j0: float = 1.0
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    reference: IntegratorConfig = field(default_factory=lambda: IntegratorConfig(scheme="dop853"))


@dataclass(frozen=True, eq=False)
class ScalingPoint:
    hbar: float
    metrics: DeviationMetrics | None
    trajectory: TrajectoryRecord | None
    error: str | None = None
    error_type: str | None = None
    reference_rate: float | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class ExponentFit:
    """A least-squares fit ``log m = a log ℏ + b``; ``degenerate`` fits carry no exponent."""

    metric: str
    exponent: float | None
    intercept: float | None
    residual: float | None
    degenerate: bool
    reason: str | None = None


@dataclass(frozen=True, eq=False)
class ScalingReport:
    points: list[ScalingPoint]
    fits: dict[str, ExponentFit]

    @property
    def failed_points(self) -> list[ScalingPoint]:
        return [point for point in self.points if not point.ok]


def guiding_rate(trajectory: TrajectoryRecord, model: PhaseModel) -> float:
    """
    The averaged fast action ``⟨J⟩ ≈ H/h(X)`` at the initial guiding center.

    ``J`` oscillates by ``O(√ℏ)`` around this value, which sets the speed of the guiding center along the flow of
    ``h``; the estimate is accurate to ``O(ℏ)``.
    """
    return float(trajectory.energy[0] / model.hamiltonian.check_domain(trajectory.X[0]))


def run_scaling_point(scenario: ScalingScenario, hbar: float) -> ScalingPoint:
    """
    Integrate one ℏ value and compare against the reference flow started at the initial guiding center.

    The reference runs at `guiding_rate`. Integration failures are captured in the returned point rather than raised.
    """
    try:
        state = initial_state(scenario.model, scenario.xi0, hbar, scenario.j0)
        trajectory = integrate_extended(state, scenario.duration, scenario.model, hbar, scenario.integrator)
        rate = guiding_rate(trajectory, scenario.model)
        logger.debug(f"hbar={hbar:g}: reference rate {rate:.6g}")
        reference = reference_flow(trajectory.X[0], scenario.duration, scenario.model, scenario.reference, rate=rate)
        metrics = deviation_metrics(trajectory, reference)
    except (IntegrationError, PhaseSpaceError) as e:
        logger.warning(f"Scaling point hbar={hbar:g} failed: {e}")
        return ScalingPoint(hbar=hbar, metrics=None, trajectory=None, error=str(e), error_type=type(e).__name__)
    return ScalingPoint(hbar=hbar, metrics=metrics, trajectory=trajectory, reference_rate=rate)


def fit_exponent(metric: str, hbars: Sequence[float], values: Sequence[float]) -> ExponentFit:
    """Fit a power law ``value ∝ ℏ^a`` on log-log axes."""
    x = np.asarray(hbars, dtype=float)
    y = np.asarray(values, dtype=float)
    if len(y) < 3:
        return ExponentFit(metric, None, None, None, degenerate=True, reason="fewer than 3 points")
    if np.max(y) < NOISE_FLOOR or np.any(y <= 0):
        return ExponentFit(metric, None, None, None, degenerate=True, reason="values at numerical noise")
    log_x, log_y = np.log(x), np.log(y)
    if np.ptp(log_x) == 0 or np.ptp(log_y) == 0:
        return ExponentFit(metric, None, None, None, degenerate=True, reason="zero variance")
    slope, intercept = np.polyfit(log_x, log_y, 1)
    residual = float(np.sqrt(np.mean((log_y - (slope * log_x + intercept)) ** 2)))
    return ExponentFit(metric, float(slope), float(intercept), residual, degenerate=False)


def _validate_hbars(hbars: Sequence[float]) -> list[float]:
    values = [float(h) for h in hbars]
    if len(values) < 3:
        raise ScalingStudyError(f"a scaling study needs at least 3 hbar values, got {len(values)}")
    if any(not h > 0 for h in values):
        raise ScalingStudyError("hbar values must be positive")
    if any(a <= b for a, b in zip(values, values[1:])):
        raise ScalingStudyError("hbar values must be strictly decreasing")
    if values[0] / values[-1] < 10.0:
        raise ScalingStudyError("hbar values must span at least one decade")
    return values


def scaling_study(scenario: ScalingScenario, hbars: Iterable[float], jobs: int = 1) -> ScalingReport:
    """
    Run every ℏ value and fit deviation exponents.

    Points are independent; with ``jobs > 1`` they run in worker processes. Failed points are reported and excluded
    from the fits.
    """
    values = _validate_hbars(list(hbars))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            points = list(executor.map(run_scaling_point, [scenario] * len(values), values))
    else:
        points = [run_scaling_point(scenario, hbar) for hbar in values]
    good = [point for point in points if point.ok and point.metrics is not None]
    fits = {
        metric: fit_exponent(
            metric,
            [point.hbar for point in good],
            [point.metrics.as_dict()[metric] for point in good if point.metrics is not None],
        )
        for metric in SCALING_METRICS
    }
    return ScalingReport(points=points, fits=fits)
