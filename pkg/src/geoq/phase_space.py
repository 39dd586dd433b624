"""
Symplectic-geometry primitives on a canonical chart of the phase space.

Coordinates are ordered ``ξ = (q¹..qⁿ, p₁..pₙ)``. The symplectic form is the constant block matrix
``ω = [[0, -I], [I, 0]]`` and the Poisson tensor is its inverse ``ω̄``. Brackets are oriented so that
``{q, p} = +1`` and the bracket flow ``ξ̇ = ω̄ ∇h`` is Hamilton's flow (``q̇ = ∂h/∂p``).

All fields and potentials are vectorized over leading axes: a point is an array whose last axis has length ``2n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import itertools
import logging
import math
from typing import Any, Callable, ClassVar, NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

DEFAULT_RELATIVE_STEP = 1e-4
FLUX_TOLERANCE = 1e-8
MAX_FLUX_REFINEMENTS = 6
MODEL_IDS = ("constant", "shifted-harmonic", "quartic")
GAUGE_IDS = ("canonical", "symmetric")


class PhaseSpaceError(Exception):
    """Base class for phase-space errors."""


class InvalidDimensionError(PhaseSpaceError, ValueError):
    """Raised when the number of degrees of freedom or a point's shape is invalid."""


class InvalidParameterError(PhaseSpaceError, ValueError):
    """Raised when a model parameter is outside its allowed range."""


class DomainViolationError(PhaseSpaceError):
    """Raised when the Hamiltonian drops below its positivity floor (the metric is undefined there)."""


class EvaluationError(PhaseSpaceError):
    """Raised when a field, gradient or bracket evaluates to a non-finite value."""


class OpenSurfaceError(PhaseSpaceError):
    """Raised when a flux integral is requested over a surface that is not closed."""


def _check_dimension(n: int) -> int:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidDimensionError(f"invalid number of degrees of freedom: {n!r}")
    return int(n)


@dataclass(frozen=True)
class CanonicalChart:
    """A canonical coordinate frame with ``n`` degrees of freedom (phase-space dimension ``2n``)."""

    n: int

    def __post_init__(self) -> None:
        _check_dimension(self.n)

    @property
    def dimension(self) -> int:
        """The phase-space dimension ``2n``."""
        return 2 * self.n

    def positions(self, xi: ArrayLike) -> FloatArray:
        """The ``q`` block of a point (or array of points)."""
        return np.asarray(xi, dtype=float)[..., : self.n]

    def momenta(self, xi: ArrayLike) -> FloatArray:
        """The ``p`` block of a point (or array of points)."""
        return np.asarray(xi, dtype=float)[..., self.n :]

    def validate(self, xi: ArrayLike) -> FloatArray:
        """Return ``xi`` as a float array, checking the last axis and finiteness."""
        array = np.asarray(xi, dtype=float)
        if array.ndim == 0 or array.shape[-1] != self.dimension:
            raise InvalidDimensionError(f"expected points with {self.dimension} coordinates, got shape {array.shape}")
        if not np.all(np.isfinite(array)):
            raise EvaluationError("non-finite phase-space coordinates")
        return array


def omega_matrix(n: int) -> FloatArray:
    """The canonical symplectic form ``[[0, -I], [I, 0]]``."""
    n = _check_dimension(n)
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


def omega_bar(n: int) -> FloatArray:
    """The Poisson tensor, defined by ``ω·ω̄ = I`` (closed form ``[[0, I], [-I, 0]]``)."""
    n = _check_dimension(n)
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def _steps(xi: FloatArray, relative_step: float) -> FloatArray:
    norms = np.linalg.norm(xi, axis=-1, keepdims=True)
    return relative_step * np.maximum(1.0, norms)


def central_derivatives(
    func: Callable[[FloatArray], Any],
    xi: ArrayLike,
    relative_step: float = DEFAULT_RELATIVE_STEP,
) -> FloatArray:
    """
    Fourth-order central differences of ``func`` with respect to each coordinate.

    The step is ``relative_step * max(1, |ξ|)``, chosen per point. For a scalar function the result has the shape of
    ``xi``; for a function returning ``m`` values per point the result has shape ``(..., 2n, m)`` with
    ``result[..., i, j] = ∂_i func_j``.
    """
    xi = np.asarray(xi, dtype=float)
    steps = _steps(xi, relative_step)
    leading = xi.shape[:-1]
    columns = []
    for i in range(xi.shape[-1]):
        offset = np.zeros_like(xi)
        offset[..., i] = steps[..., 0]
        values = [np.asarray(func(xi + k * offset), dtype=float) for k in (-2, -1, 1, 2)]
        numerator = values[0] - 8.0 * values[1] + 8.0 * values[2] - values[3]
        trailing = numerator.ndim - len(leading)
        scale = (12.0 * steps[..., 0]).reshape(leading + (1,) * trailing)
        columns.append(numerator / scale)
    result = np.stack(columns, axis=len(leading))
    if not np.all(np.isfinite(result)):
        raise EvaluationError("non-finite finite-difference derivative")
    return result


class ScalarField:
    """
    A smooth real function on phase space.

    Subclasses implement ``evaluate``; ``gradient`` and ``hessian`` fall back to fourth-order central differences.
    """

    identifier: ClassVar[str] = "field"

    def evaluate(self, xi: ArrayLike) -> FloatArray:
        """The field value at each point."""
        raise NotImplementedError

    def gradient(self, xi: ArrayLike) -> FloatArray:
        """The gradient ``∂_i f`` at each point."""
        return central_derivatives(self.evaluate, xi)

    def hessian(self, xi: ArrayLike) -> FloatArray:
        """The (symmetrized) Hessian ``∂_i∂_j f`` at each point."""
        hess = central_derivatives(self.gradient, xi)
        return 0.5 * (hess + np.swapaxes(hess, -1, -2))

    def __call__(self, xi: ArrayLike) -> FloatArray:
        return self.evaluate(xi)


@dataclass(frozen=True)
class FunctionField(ScalarField):
    """A user-supplied field; missing derivatives are computed by finite differences."""

    function: Callable[[FloatArray], Any]
    gradient_function: Callable[[FloatArray], Any] | None = None
    hessian_function: Callable[[FloatArray], Any] | None = None

    identifier: ClassVar[str] = "user"

    def evaluate(self, xi: ArrayLike) -> FloatArray:
        return np.asarray(self.function(np.asarray(xi, dtype=float)), dtype=float)

    def gradient(self, xi: ArrayLike) -> FloatArray:
        if self.gradient_function is None:
            return super().gradient(xi)
        return np.asarray(self.gradient_function(np.asarray(xi, dtype=float)), dtype=float)

    def hessian(self, xi: ArrayLike) -> FloatArray:
        if self.hessian_function is None:
            return super().hessian(xi)
        return np.asarray(self.hessian_function(np.asarray(xi, dtype=float)), dtype=float)


@dataclass(frozen=True)
class PolynomialField(ScalarField):
    """A polynomial ``Σ c_m Π_i ξ_i^{e_mi}`` with analytic gradient."""

    exponents: tuple[tuple[int, ...], ...]
    coefficients: tuple[float, ...]

    identifier: ClassVar[str] = "polynomial"

    @classmethod
    def random(cls, dimension: int, degree: int, rng: np.random.Generator) -> PolynomialField:
        """All monomials up to ``degree`` with coefficients drawn uniformly from [-1, 1]."""
        exponents = tuple(e for e in itertools.product(range(degree + 1), repeat=dimension) if sum(e) <= degree)
        coefficients = tuple(float(x) for x in rng.uniform(-1.0, 1.0, size=len(exponents)))
        return cls(exponents=exponents, coefficients=coefficients)

    def evaluate(self, xi: ArrayLike) -> FloatArray:
        xi = np.asarray(xi, dtype=float)
        powers = np.asarray(self.exponents)
        terms = np.prod(xi[..., None, :] ** powers, axis=-1)
        return terms @ np.asarray(self.coefficients)

    def gradient(self, xi: ArrayLike) -> FloatArray:
        xi = np.asarray(xi, dtype=float)
        powers = np.asarray(self.exponents)
        coefficients = np.asarray(self.coefficients)
        columns = []
        for i in range(xi.shape[-1]):
            lowered = powers.copy()
            lowered[:, i] = np.maximum(lowered[:, i] - 1, 0)
            terms = powers[:, i] * np.prod(xi[..., None, :] ** lowered, axis=-1)
            columns.append(terms @ coefficients)
        return np.stack(columns, axis=-1)


@dataclass(frozen=True)
class CoordinateProductField(ScalarField):
    """The gauge function ``χ = scale · Σ_μ q^μ p_μ`` with analytic derivatives."""

    n: int = 1
    scale: float = 1.0

    identifier: ClassVar[str] = "coordinate-product"

    def evaluate(self, xi: ArrayLike) -> FloatArray:
        xi = np.asarray(xi, dtype=float)
        return self.scale * np.sum(xi[..., : self.n] * xi[..., self.n :], axis=-1)

    def gradient(self, xi: ArrayLike) -> FloatArray:
        xi = np.asarray(xi, dtype=float)
        return self.scale * np.concatenate([xi[..., self.n :], xi[..., : self.n]], axis=-1)

    def hessian(self, xi: ArrayLike) -> FloatArray:
        xi = np.asarray(xi, dtype=float)
        eye = np.eye(self.n)
        zero = np.zeros((self.n, self.n))
        block = self.scale * np.block([[zero, eye], [eye, zero]])
        return np.broadcast_to(block, xi.shape[:-1] + block.shape).copy()


class HamiltonianField(ScalarField):
    """An energy function ``h(ξ)`` bounded below by a positive floor ``h_min``."""

    n: int

    @property
    def h_min(self) -> float:
        """The positivity floor."""
        raise NotImplementedError

    def potential(self, q: ArrayLike) -> FloatArray | None:
        """``V(q)`` when ``h = c + ½p² + V(q)`` (mechanical form, n = 1), otherwise ``None``."""
        return None

    @property
    def is_mechanical(self) -> bool:
        """True when the field has the mechanical form ``c + ½p² + V(q)``."""
        return False

    def check_domain(self, xi: ArrayLike) -> FloatArray:
        """Evaluate ``h``, raising `DomainViolationError` where it falls below the floor."""
        values = np.asarray(self.evaluate(xi), dtype=float)
        floor = self.h_min * (1.0 - 1e-12)
        if np.any(values < floor) or not np.all(np.isfinite(values)):
            raise DomainViolationError(f"h = {np.min(values)!r} below positivity floor {self.h_min!r}")
        return values


def _check_offset(c: float) -> None:
    if not c > 0:
        raise InvalidParameterError(f"the energy offset c must be positive, got {c!r}")


@dataclass(frozen=True)
class ConstantHamiltonian(HamiltonianField):
    """``h ≡ c`` (flat metric, homogeneous field)."""

    n: int = 1
    c: float = 1.0

    identifier: ClassVar[str] = "constant"

    def __post_init__(self) -> None:
        _check_dimension(self.n)
        _check_offset(self.c)

    @property
    def h_min(self) -> float:
        return self.c

    def evaluate(self, xi: ArrayLike) -> FloatArray:
        xi = np.asarray(xi, dtype=float)
        return np.full(xi.shape[:-1], self.c)

    def gradient(self, xi: ArrayLike) -> FloatArray:
        return np.zeros_like(np.asarray(xi, dtype=float))

    def hessian(self, xi: ArrayLike) -> FloatArray:
        xi = np.asarray(xi, dtype=float)
        return np.zeros(xi.shape + (xi.shape[-1],))


@dataclass(frozen=True)
class ShiftedHarmonicHamiltonian(HamiltonianField):
    """``h = c + ½Σ(q² + p²)``."""

    n: int = 1
    c: float = 1.0

    identifier: ClassVar[str] = "shifted-harmonic"

    def __post_init__(self) -> None:
        _check_dimension(self.n)
        _check_offset(self.c)

    @property
    def h_min(self) -> float:
        return self.c

    @property
    def is_mechanical(self) -> bool:
        return self.n == 1

    def potential(self, q: ArrayLike) -> FloatArray | None:
        q = np.asarray(q, dtype=float)
        return 0.5 * q**2

    def evaluate(self, xi: ArrayLike) -> FloatArray:
        xi = np.asarray(xi, dtype=float)
        return self.c + 0.5 * np.sum(xi**2, axis=-1)

    def gradient(self, xi: ArrayLike) -> FloatArray:
        return np.array(xi, dtype=float)

    def hessian(self, xi: ArrayLike) -> FloatArray:
        xi = np.asarray(xi, dtype=float)
        eye = np.eye(xi.shape[-1])
        return np.broadcast_to(eye, xi.shape + (xi.shape[-1],)).copy()


@dataclass(frozen=True)
class QuarticHamiltonian(HamiltonianField):
    """``h = c + ½Σ(q² + p²) + λΣq⁴``; the anharmonic term makes the reference and extended flows differ."""

    n: int = 1
    c: float = 1.0
    lam: float = 0.1

    identifier: ClassVar[str] = "quartic"

    def __post_init__(self) -> None:
        _check_dimension(self.n)
        _check_offset(self.c)
        if self.lam < 0:
            raise InvalidParameterError(f"the quartic coupling must be non-negative, got {self.lam!r}")

    @property
    def h_min(self) -> float:
        return self.c

    @property
    def is_mechanical(self) -> bool:
        return self.n == 1

    def potential(self, q: ArrayLike) -> FloatArray | None:
        q = np.asarray(q, dtype=float)
        return 0.5 * q**2 + self.lam * q**4

    def evaluate(self, xi: ArrayLike) -> FloatArray:
        xi = np.asarray(xi, dtype=float)
        q = xi[..., : self.n]
        return self.c + 0.5 * np.sum(xi**2, axis=-1) + self.lam * np.sum(q**4, axis=-1)

    def gradient(self, xi: ArrayLike) -> FloatArray:
        grad = np.array(xi, dtype=float)
        grad[..., : self.n] += 4.0 * self.lam * grad[..., : self.n] ** 3
        return grad

    def hessian(self, xi: ArrayLike) -> FloatArray:
        xi = np.asarray(xi, dtype=float)
        diagonal = np.ones(xi.shape)
        diagonal[..., : self.n] += 12.0 * self.lam * xi[..., : self.n] ** 2
        return diagonal[..., :, None] * np.eye(xi.shape[-1])


class GaugePotential:
    """
    A canonical one-form ``θ`` with ``∂_iθ_j − ∂_jθ_i = ω_ij``.

    ``evaluate`` is vectorized over leading axes; ``jacobian`` returns ``J[..., i, j] = ∂_iθ_j`` and falls back to
    fourth-order central differences.
    """

    n: int
    label: str = "gauge"

    def evaluate(self, xi: ArrayLike) -> FloatArray:
        """The covector ``θ_i`` at each point."""
        raise NotImplementedError

    def jacobian(self, xi: ArrayLike) -> FloatArray:
        """``∂_iθ_j`` at each point."""
        return central_derivatives(self.evaluate, xi)

    def curl(self, xi: ArrayLike) -> FloatArray:
        """``∂_iθ_j − ∂_jθ_i`` at each point."""
        jac = self.jacobian(xi)
        return jac - np.swapaxes(jac, -1, -2)

    def line_integral(self, start: ArrayLike, end: ArrayLike) -> FloatArray:
        """``∫θ·dl`` along straight segments, by three-point Gauss-Legendre quadrature (exact for quadratic θ)."""
        start = np.asarray(start, dtype=float)
        delta = np.asarray(end, dtype=float) - start
        nodes, weights = np.polynomial.legendre.leggauss(3)
        total = np.zeros(start.shape[:-1])
        for node, weight in zip(nodes, weights):
            s = 0.5 * (node + 1.0)
            total += 0.5 * weight * np.sum(self.evaluate(start + s * delta) * delta, axis=-1)
        return total


@dataclass(frozen=True, eq=False)
class LinearGauge(GaugePotential):
    """``θ(ξ) = A ξ`` for a constant matrix ``A``."""

    matrix: FloatArray
    label: str = "linear"

    @property
    def n(self) -> int:  # type: ignore[override]
        return self.matrix.shape[0] // 2

    def evaluate(self, xi: ArrayLike) -> FloatArray:
        return np.asarray(xi, dtype=float) @ self.matrix.T

    def jacobian(self, xi: ArrayLike) -> FloatArray:
        xi = np.asarray(xi, dtype=float)
        return np.broadcast_to(self.matrix.T, xi.shape[:-1] + self.matrix.shape).copy()


def canonical_gauge(n: int, scale: float = 1.0) -> LinearGauge:
    """``θ = (0, …, 0, −q¹, …, −qⁿ)``; ``scale`` ≠ 1 gives a deliberately wrong potential (curl = scale·ω)."""
    n = _check_dimension(n)
    matrix = np.zeros((2 * n, 2 * n))
    matrix[n:, :n] = -scale * np.eye(n)
    label = "canonical" if scale == 1.0 else f"canonical×{scale:g}"
    return LinearGauge(matrix=matrix, label=label)


def symmetric_gauge(n: int) -> LinearGauge:
    """``θ = (p/2, −q/2)``."""
    n = _check_dimension(n)
    matrix = np.zeros((2 * n, 2 * n))
    matrix[:n, n:] = 0.5 * np.eye(n)
    matrix[n:, :n] = -0.5 * np.eye(n)
    return LinearGauge(matrix=matrix, label="symmetric")


@dataclass(frozen=True, eq=False)
class TransformedGauge(GaugePotential):
    """``θ + ∂χ``."""

    base: GaugePotential
    chi: ScalarField

    @property
    def n(self) -> int:  # type: ignore[override]
        return self.base.n

    @property
    def label(self) -> str:  # type: ignore[override]
        return f"{self.base.label}+d({self.chi.identifier})"

    def evaluate(self, xi: ArrayLike) -> FloatArray:
        return self.base.evaluate(xi) + self.chi.gradient(xi)

    def jacobian(self, xi: ArrayLike) -> FloatArray:
        return self.base.jacobian(xi) + self.chi.hessian(xi)


def gauge_transform(theta: GaugePotential, chi: ScalarField) -> GaugePotential:
    """``θ_i → θ_i + ∂_iχ``; the curl is unchanged."""
    return TransformedGauge(base=theta, chi=chi)


@dataclass(frozen=True)
class GaugeCheckResult:
    """Outcome of a curl check; exceeding the tolerance is reported, not raised."""

    max_residual: float
    tolerance: float
    point_count: int

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance


def gauge_check(theta: GaugePotential, points: ArrayLike, tol: float) -> GaugeCheckResult:
    """Max over points of ``max|∂_iθ_j − ∂_jθ_i − ω_ij|``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] == 0:
        raise PhaseSpaceError("gauge_check needs at least one sample point")
    residual = theta.curl(points) - omega_matrix(theta.n)
    max_residual = float(np.max(np.abs(residual)))
    result = GaugeCheckResult(max_residual=max_residual, tolerance=tol, point_count=points.shape[0])
    if not result.passed:
        logger.debug(f"Gauge {theta.label} fails the curl check: residual {max_residual:.3e} > {tol:.1e}")
    return result


def _as_field(f: ScalarField | Callable[[FloatArray], Any]) -> ScalarField:
    if isinstance(f, ScalarField):
        return f
    return FunctionField(function=f)


def poisson_bracket(
    f: ScalarField | Callable[[FloatArray], Any],
    g: ScalarField | Callable[[FloatArray], Any],
    xi: ArrayLike,
) -> FloatArray:
    """``{f, g} = ∂_i f ω̄^{ij} ∂_j g`` (so that ``{q, p} = +1``)."""
    f, g = _as_field(f), _as_field(g)
    xi = np.asarray(xi, dtype=float)
    n = xi.shape[-1] // 2
    result = np.einsum("...i,ij,...j->...", f.gradient(xi), omega_bar(n), g.gradient(xi))
    if not np.all(np.isfinite(result)):
        raise EvaluationError("non-finite Poisson bracket")
    return result


@dataclass(frozen=True)
class BracketField(ScalarField):
    """The bracket ``{f, g}`` as a scalar field; its gradient uses finite differences."""

    f: ScalarField
    g: ScalarField
    relative_step: float = DEFAULT_RELATIVE_STEP

    identifier: ClassVar[str] = "bracket"

    def evaluate(self, xi: ArrayLike) -> FloatArray:
        return poisson_bracket(self.f, self.g, xi)

    def gradient(self, xi: ArrayLike) -> FloatArray:
        return central_derivatives(self.evaluate, xi, relative_step=self.relative_step)


def bracket_field(f: ScalarField, g: ScalarField, relative_step: float = DEFAULT_RELATIVE_STEP) -> BracketField:
    """``{f, g}`` as a field, so brackets can be nested."""
    return BracketField(f=f, g=g, relative_step=relative_step)


def jacobi_residual(
    f: ScalarField, g: ScalarField, k: ScalarField, xi: ArrayLike, relative_step: float = 1e-5
) -> float:
    """``|{f,{g,k}} + {g,{k,f}} + {k,{f,g}}|`` at ``xi``."""
    total = (
        poisson_bracket(f, bracket_field(g, k, relative_step), xi)
        + poisson_bracket(g, bracket_field(k, f, relative_step), xi)
        + poisson_bracket(k, bracket_field(f, g, relative_step), xi)
    )
    return float(np.max(np.abs(total)))


def hamiltonian_vector_field(h: ScalarField, xi: ArrayLike) -> FloatArray:
    """``ω̄^{ij} ∂_j h``: the flow of Hamilton's principle."""
    xi = np.asarray(xi, dtype=float)
    return np.einsum("ij,...j->...i", omega_bar(xi.shape[-1] // 2), h.gradient(xi))


class MetricValues(NamedTuple):
    lower: FloatArray
    upper: FloatArray
    determinant: FloatArray


@dataclass(frozen=True)
class ConformalMetric:
    """``g_ij = h⁻¹δ_ij`` in every canonical chart, so that ``det g = h^{-2n}``."""

    hamiltonian: HamiltonianField

    @property
    def n(self) -> int:
        return self.hamiltonian.n

    def lower(self, xi: ArrayLike) -> FloatArray:
        h = self.hamiltonian.check_domain(xi)
        return (1.0 / h)[..., None, None] * np.eye(2 * self.n)

    def upper(self, xi: ArrayLike) -> FloatArray:
        h = self.hamiltonian.check_domain(xi)
        return h[..., None, None] * np.eye(2 * self.n)

    def determinant(self, xi: ArrayLike) -> FloatArray:
        h = self.hamiltonian.check_domain(xi)
        return h ** (-2.0 * self.n)


def metric_eval(model: ConformalMetric, xi: ArrayLike) -> MetricValues:
    """``(g_ij, g^{ij}, det g)`` at ``xi``; raises `DomainViolationError` below the positivity floor."""
    return MetricValues(lower=model.lower(xi), upper=model.upper(xi), determinant=model.determinant(xi))


@dataclass(frozen=True, eq=False)
class PhaseModel:
    """A Hamiltonian system on a canonical chart together with a choice of gauge."""

    chart: CanonicalChart
    hamiltonian: HamiltonianField
    gauge: GaugePotential

    def __post_init__(self) -> None:
        if self.hamiltonian.n != self.chart.n or self.gauge.n != self.chart.n:
            raise InvalidDimensionError("chart, Hamiltonian and gauge disagree on the number of degrees of freedom")

    @property
    def metric(self) -> ConformalMetric:
        return ConformalMetric(self.hamiltonian)

    @property
    def identifier(self) -> str:
        return self.hamiltonian.identifier

    def with_gauge(self, gauge: GaugePotential) -> PhaseModel:
        return PhaseModel(chart=self.chart, hamiltonian=self.hamiltonian, gauge=gauge)


def build_hamiltonian(model_id: str, n: int = 1, c: float = 1.0, lam: float = 0.1) -> HamiltonianField:
    """One of the built-in Hamiltonians by identifier."""
    if model_id == ConstantHamiltonian.identifier:
        return ConstantHamiltonian(n=n, c=c)
    if model_id == ShiftedHarmonicHamiltonian.identifier:
        return ShiftedHarmonicHamiltonian(n=n, c=c)
    if model_id == QuarticHamiltonian.identifier:
        return QuarticHamiltonian(n=n, c=c, lam=lam)
    raise InvalidParameterError(f"unknown model {model_id!r}; expected one of {MODEL_IDS}")


def build_gauge(gauge_id: str, n: int = 1) -> LinearGauge:
    """One of the built-in gauges by identifier."""
    if gauge_id == "canonical":
        return canonical_gauge(n)
    if gauge_id == "symmetric":
        return symmetric_gauge(n)
    raise InvalidParameterError(f"unknown gauge {gauge_id!r}; expected one of {GAUGE_IDS}")


def build_model(model_id: str, n: int = 1, c: float = 1.0, lam: float = 0.1, gauge: str = "canonical") -> PhaseModel:
    """Assemble a `PhaseModel` from configuration identifiers."""
    return PhaseModel(
        chart=CanonicalChart(n),
        hamiltonian=build_hamiltonian(model_id, n=n, c=c, lam=lam),
        gauge=build_gauge(gauge, n=n),
    )


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """
    A 2-surface in phase space as oriented quadrature cells.

    Each cell has a base point, the two parameter-derivative tangent vectors at that point and a parameter-area
    weight. ``builder`` (when present) rebuilds the same surface at another resolution for refinement.
    """

    base_points: FloatArray
    tangents_u: FloatArray
    tangents_v: FloatArray
    weights: FloatArray
    closed: bool
    variant: str
    resolution: int = 0
    builder: Callable[[int], SurfaceMesh] | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.base_points.shape[-1] // 2

    def refined(self) -> SurfaceMesh | None:
        """The same surface at twice the resolution, if it can be rebuilt."""
        if self.builder is None:
            return None
        return self.builder(2 * self.resolution)


def _parameter_grid(resolution: int, u_range: tuple[float, float], v_range: tuple[float, float]) -> tuple:
    du = (u_range[1] - u_range[0]) / resolution
    dv = (v_range[1] - v_range[0]) / resolution
    u = u_range[0] + (np.arange(resolution) + 0.5) * du
    v = v_range[0] + (np.arange(resolution) + 0.5) * dv
    uu, vv = np.meshgrid(u, v, indexing="ij")
    return uu.ravel(), vv.ravel(), du * dv


def flat_torus(side: float, resolution: int = 8) -> SurfaceMesh:
    """
    The phase space itself taken as a flat torus of the given side (n = 1), periodic in q and p.

    Cells are parameterized by ``(p, q)`` so the symplectic area ``ω(∂_u, ∂_v)`` is positive.
    """
    a, b, weight = _parameter_grid(resolution, (0.0, side), (0.0, side))
    points = np.stack([b, a], axis=-1)
    count = points.shape[0]
    return SurfaceMesh(
        base_points=points,
        tangents_u=np.tile([0.0, 1.0], (count, 1)),
        tangents_v=np.tile([1.0, 0.0], (count, 1)),
        weights=np.full(count, weight),
        closed=True,
        variant="analytic-torus",
        resolution=resolution,
        builder=lambda r: flat_torus(side, r),
    )


def clifford_torus(radius: float = 1.0, resolution: int = 16) -> SurfaceMesh:
    """The torus ``r(cos a, sin a, cos b, sin b)`` immersed in ℝ⁴ (n = 2)."""
    a, b, weight = _parameter_grid(resolution, (0.0, 2 * math.pi), (0.0, 2 * math.pi))
    zero = np.zeros_like(a)
    points = radius * np.stack([np.cos(a), np.sin(a), np.cos(b), np.sin(b)], axis=-1)
    tangents_u = radius * np.stack([-np.sin(a), np.cos(a), zero, zero], axis=-1)
    tangents_v = radius * np.stack([zero, zero, -np.sin(b), np.cos(b)], axis=-1)
    return SurfaceMesh(
        base_points=points,
        tangents_u=tangents_u,
        tangents_v=tangents_v,
        weights=np.full(a.shape, weight),
        closed=True,
        variant="immersed-torus",
        resolution=resolution,
        builder=lambda r: clifford_torus(radius, r),
    )


def embedded_sphere(radius: float = 1.0, resolution: int = 16) -> SurfaceMesh:
    """A round sphere spanning the ``(q¹, p₁, p₂)`` directions of ℝ⁴ (n = 2)."""
    theta, phi, weight = _parameter_grid(resolution, (0.0, math.pi), (0.0, 2 * math.pi))
    zero = np.zeros_like(theta)
    sin_t, cos_t, sin_p, cos_p = np.sin(theta), np.cos(theta), np.sin(phi), np.cos(phi)
    points = radius * np.stack([sin_t * cos_p, zero, cos_t, sin_t * sin_p], axis=-1)
    tangents_u = radius * np.stack([cos_t * cos_p, zero, -sin_t, cos_t * sin_p], axis=-1)
    tangents_v = radius * np.stack([-sin_t * sin_p, zero, zero, sin_t * cos_p], axis=-1)
    return SurfaceMesh(
        base_points=points,
        tangents_u=tangents_u,
        tangents_v=tangents_v,
        weights=np.full(theta.shape, weight),
        closed=True,
        variant="immersed-sphere",
        resolution=resolution,
        builder=lambda r: embedded_sphere(radius, r),
    )


def degenerate_surface(n: int = 1, cells: int = 4) -> SurfaceMesh:
    """A zero-area closed surface (all tangents vanish)."""
    n = _check_dimension(n)
    zeros = np.zeros((cells, 2 * n))
    return SurfaceMesh(
        base_points=zeros,
        tangents_u=zeros,
        tangents_v=zeros,
        weights=np.ones(cells),
        closed=True,
        variant="degenerate",
    )


def planar_patch(side: float = 1.0, resolution: int = 4) -> SurfaceMesh:
    """An open square in the (q, p) plane (n = 1)."""
    a, b, weight = _parameter_grid(resolution, (0.0, side), (0.0, side))
    count = a.shape[0]
    return SurfaceMesh(
        base_points=np.stack([b, a], axis=-1),
        tangents_u=np.tile([0.0, 1.0], (count, 1)),
        tangents_v=np.tile([1.0, 0.0], (count, 1)),
        weights=np.full(count, weight),
        closed=False,
        variant="open-patch",
    )


@dataclass(frozen=True)
class FluxResult:
    """``∫_Σ ω / 2π`` with its distance to the nearest integer."""

    flux: float
    nearest_integer: int
    integrality_residual: float
    refinements: int
    converged: bool


def _mesh_flux(mesh: SurfaceMesh) -> float:
    omega = omega_matrix(mesh.n)
    densities = np.einsum("...i,ij,...j->...", mesh.tangents_u, omega, mesh.tangents_v)
    return float(np.sum(densities * mesh.weights) / (2 * math.pi))


def kostant_flux(
    mesh: SurfaceMesh, tolerance: float = FLUX_TOLERANCE, max_refinements: int = MAX_FLUX_REFINEMENTS
) -> FluxResult:
    """
    The symplectic flux through a closed surface in units of 2π.

    Refinable meshes are doubled until the value changes by less than ``tolerance``.
    """
    if not mesh.closed:
        raise OpenSurfaceError(f"the {mesh.variant} surface is not closed")
    value = _mesh_flux(mesh)
    refinements = 0
    converged = mesh.builder is None
    current = mesh
    while not converged and refinements < max_refinements:
        finer = current.refined()
        assert finer is not None
        finer_value = _mesh_flux(finer)
        refinements += 1
        converged = abs(finer_value - value) < tolerance
        value, current = finer_value, finer
    if not converged:
        logger.warning(f"Flux through the {mesh.variant} surface did not converge after {refinements} refinements.")
    nearest = int(round(value))
    return FluxResult(
        flux=value,
        nearest_integer=nearest,
        integrality_residual=abs(value - nearest),
        refinements=refinements,
        converged=converged,
    )
