import math

import numpy as np
import pytest

from geoq.phase_space import (
    CanonicalChart,
    ConformalMetric,
    ConstantHamiltonian,
    CoordinateProductField,
    DomainViolationError,
    FunctionField,
    HamiltonianField,
    InvalidDimensionError,
    InvalidParameterError,
    OpenSurfaceError,
    PolynomialField,
    QuarticHamiltonian,
    ShiftedHarmonicHamiltonian,
    bracket_field,
    build_model,
    canonical_gauge,
    central_derivatives,
    clifford_torus,
    degenerate_surface,
    embedded_sphere,
    flat_torus,
    gauge_check,
    gauge_transform,
    hamiltonian_vector_field,
    jacobi_residual,
    kostant_flux,
    metric_eval,
    omega_bar,
    omega_matrix,
    planar_patch,
    poisson_bracket,
    symmetric_gauge,
)
from tests.common import random_points


def _coordinate(n: int, index: int) -> FunctionField:
    return FunctionField(function=lambda xi: xi[..., index], gradient_function=lambda xi: np.eye(2 * n)[index] + 0 * xi)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_omega_bar_inverts_omega(n: int):
    assert np.array_equal(omega_matrix(n) @ omega_bar(n), np.eye(2 * n))
    assert np.array_equal(omega_matrix(n).T, -omega_matrix(n))


@pytest.mark.parametrize("n", [0, -1, 1.5, True])
def test_invalid_dimension(n):
    with pytest.raises(InvalidDimensionError):
        CanonicalChart(n)


def test_chart_validates_shape():
    chart = CanonicalChart(2)
    assert chart.dimension == 4
    assert np.array_equal(chart.positions([1, 2, 3, 4]), [1, 2])
    assert np.array_equal(chart.momenta([1, 2, 3, 4]), [3, 4])
    with pytest.raises(InvalidDimensionError):
        chart.validate([1.0, 2.0])


def test_central_derivatives_of_polynomial():
    xi = np.array([[0.3, -1.2], [2.0, 0.5]])
    gradient = central_derivatives(lambda x: x[..., 0] ** 3 * x[..., 1], xi)
    expected = np.stack([3 * xi[:, 0] ** 2 * xi[:, 1], xi[:, 0] ** 3], axis=-1)
    assert gradient.shape == xi.shape
    assert np.allclose(gradient, expected, atol=1e-9)


@pytest.mark.parametrize("n", [1, 2])
def test_canonical_bracket(n: int):
    point = random_points(1, 2 * n, seed=3)[0]
    for mu in range(n):
        for nu in range(n):
            q, p = _coordinate(n, mu), _coordinate(n, n + nu)
            assert float(poisson_bracket(q, p, point)) == pytest.approx(float(mu == nu), abs=1e-12)
            assert float(poisson_bracket(q, _coordinate(n, nu), point)) == pytest.approx(0.0, abs=1e-12)


def test_bracket_is_antisymmetric_and_leibniz():
    rng = np.random.default_rng(1)
    f, g, k = (PolynomialField.random(2, 3, rng) for _ in range(3))
    points = random_points(5, 2, seed=2, scale=1.0)
    assert np.allclose(poisson_bracket(f, g, points), -poisson_bracket(g, f, points), atol=1e-12)
    product = FunctionField(function=lambda xi: f(xi) * k(xi))
    leibniz = f(points) * poisson_bracket(k, g, points) + k(points) * poisson_bracket(f, g, points)
    assert np.allclose(poisson_bracket(product, g, points), leibniz, atol=1e-7)


@pytest.mark.parametrize("n", [1, 2])
def test_jacobi_identity_random_cubics(n: int):
    rng = np.random.default_rng(7)
    for _ in range(5):
        f, g, k = (PolynomialField.random(2 * n, 3, rng) for _ in range(3))
        assert jacobi_residual(f, g, k, rng.uniform(-1.0, 1.0, size=2 * n)) < 1e-7


def test_nested_bracket_of_coordinates():
    # {q, {q, p²/2}} = {q, p} = 1
    q = _coordinate(1, 0)
    kinetic = FunctionField(function=lambda xi: 0.5 * xi[..., 1] ** 2)
    value = poisson_bracket(q, bracket_field(q, kinetic), np.array([0.4, 0.7]))
    assert float(value) == pytest.approx(1.0, abs=1e-8)


def test_bracket_of_square_with_momentum():
    # {q², p} = 2q
    square = PolynomialField(exponents=((2, 0),), coefficients=(1.0,))
    assert float(poisson_bracket(square, _coordinate(1, 1), np.array([3.0, -0.5]))) == pytest.approx(6.0, abs=1e-12)


def test_hamiltonian_vector_field_of_harmonic_oscillator():
    h = ShiftedHarmonicHamiltonian(n=1, c=2.0)
    assert np.allclose(hamiltonian_vector_field(h, np.array([0.5, -0.25])), [-0.25, -0.5])


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize(
    "gauge_factory",
    [
        pytest.param(canonical_gauge, id="canonical"),
        pytest.param(symmetric_gauge, id="symmetric"),
        pytest.param(lambda n: gauge_transform(canonical_gauge(n), CoordinateProductField(n)), id="transformed"),
    ],
)
def test_gauge_curls_equal_omega(n: int, gauge_factory):
    result = gauge_check(gauge_factory(n), random_points(100, 2 * n, seed=n), 1e-8)
    assert result.passed
    assert result.point_count == 100
    assert result.max_residual < 1e-12


def test_wrong_potential_fails_the_curl_check():
    result = gauge_check(canonical_gauge(1, scale=2.0), random_points(10, 2), 1e-8)
    assert not result.passed
    assert result.max_residual == pytest.approx(1.0)


def test_finite_difference_curl_of_nonlinear_gauge_transform():
    chi = FunctionField(function=lambda xi: np.sin(xi[..., 0]) * np.cos(xi[..., 1]))
    result = gauge_check(gauge_transform(symmetric_gauge(1), chi), random_points(20, 2, seed=5), 1e-8)
    assert result.passed


def test_gauge_transform_changes_potential_by_gradient():
    points = random_points(4, 2)
    base = canonical_gauge(1)
    transformed = gauge_transform(base, CoordinateProductField(1))
    assert np.allclose(transformed.evaluate(points) - base.evaluate(points), points[:, ::-1])
    assert transformed.label == "canonical+d(coordinate-product)"


def test_zero_gauge_function_is_the_identity():
    points = random_points(50, 2, seed=3)
    base = symmetric_gauge(1)
    transformed = gauge_transform(base, CoordinateProductField(1, scale=0.0))
    assert np.array_equal(transformed.evaluate(points), base.evaluate(points))
    assert np.array_equal(transformed.jacobian(points), base.jacobian(points))


@pytest.mark.parametrize(
    "chi, inverse",
    [
        pytest.param(CoordinateProductField(1, scale=0.7), CoordinateProductField(1, scale=-0.7), id="product"),
        pytest.param(
            PolynomialField(exponents=((3, 0), (1, 2)), coefficients=(0.5, -1.25)),
            PolynomialField(exponents=((3, 0), (1, 2)), coefficients=(-0.5, 1.25)),
            id="cubic",
        ),
    ],
)
def test_gauge_transform_round_trip(chi, inverse):
    points = random_points(50, 2, seed=4)
    base = canonical_gauge(1)
    there = gauge_transform(base, chi)
    back = gauge_transform(there, inverse)
    assert not np.allclose(there.evaluate(points), base.evaluate(points))
    assert np.allclose(back.evaluate(points), base.evaluate(points), atol=1e-12)


def test_line_integral_of_symmetric_gauge_around_square():
    gauge = symmetric_gauge(1)
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    total = sum(float(gauge.line_integral(corners[i], corners[(i + 1) % 4])) for i in range(4))
    # ∮θ = ∫ω over the enclosed square, oriented (q, p)
    assert total == pytest.approx(-1.0, abs=1e-14)


@pytest.mark.parametrize(
    "hamiltonian",
    [
        pytest.param(ConstantHamiltonian(n=1, c=1.5), id="constant"),
        pytest.param(ShiftedHarmonicHamiltonian(n=2, c=1.0), id="harmonic"),
        pytest.param(QuarticHamiltonian(n=1, c=1.0, lam=0.3), id="quartic"),
    ],
)
def test_analytic_gradients_match_finite_differences(hamiltonian):
    points = random_points(6, 2 * hamiltonian.n, seed=11, scale=1.5)
    assert np.allclose(hamiltonian.gradient(points), central_derivatives(hamiltonian.evaluate, points), atol=1e-8)
    hessian = central_derivatives(hamiltonian.gradient, points)
    assert np.allclose(hamiltonian.hessian(points), hessian, atol=1e-7)


def test_hamiltonian_parameters_are_validated():
    with pytest.raises(InvalidParameterError):
        ConstantHamiltonian(n=1, c=0.0)
    with pytest.raises(InvalidParameterError):
        QuarticHamiltonian(n=1, c=1.0, lam=-0.1)
    with pytest.raises(InvalidParameterError):
        build_model("cubic")
    with pytest.raises(InvalidParameterError):
        build_model("constant", gauge="coulomb")


@pytest.mark.parametrize("n", [1, 2])
def test_conformal_metric(n: int):
    model = build_model("shifted-harmonic", n=n, c=1.0)
    point = np.array([1.0] + [0.0] * (2 * n - 1))
    values = metric_eval(model.metric, point)
    assert np.allclose(values.lower @ values.upper, np.eye(2 * n))
    assert np.allclose(values.upper, 1.5 * np.eye(2 * n))
    assert float(values.determinant) == pytest.approx(1.5 ** (-2 * n))


@pytest.mark.parametrize("n", [1, 2])
def test_metric_determinant_identity_for_quartic(n: int):
    model = build_model("quartic", n=n)
    points = random_points(1000, 2 * n, seed=17, scale=3.0)
    values = metric_eval(model.metric, points)
    h = model.hamiltonian.evaluate(points)
    assert values.determinant.shape == (1000,)
    assert np.allclose(values.determinant * h ** (2 * n), 1.0, rtol=1e-12, atol=0.0)


class _DippingHamiltonian(HamiltonianField):
    """``1 − q²``, which falls below its floor away from the origin."""

    n = 1

    @property
    def h_min(self) -> float:
        return 0.5

    def evaluate(self, xi):
        xi = np.asarray(xi, dtype=float)
        return 1.0 - xi[..., 0] ** 2


def test_metric_below_floor_raises():
    metric = ConformalMetric(_DippingHamiltonian())
    assert float(metric.determinant(np.array([0.5, 0.0]))) == pytest.approx(0.75**-2)
    with pytest.raises(DomainViolationError):
        metric.upper(np.array([1.0, 0.0]))


def test_mechanical_form():
    assert QuarticHamiltonian(n=1).is_mechanical
    assert not QuarticHamiltonian(n=2).is_mechanical
    assert not ConstantHamiltonian(n=1).is_mechanical
    assert np.allclose(QuarticHamiltonian(n=1, lam=0.5).potential(np.array([2.0])), [2.0 + 8.0])


def test_flat_torus_flux_is_integer():
    result = kostant_flux(flat_torus(math.sqrt(4 * math.pi)))
    assert result.nearest_integer == 2
    assert result.integrality_residual < 1e-8
    assert result.converged


@pytest.mark.parametrize("mesh_factory", [clifford_torus, embedded_sphere], ids=["torus", "sphere"])
def test_immersed_surfaces_have_zero_flux(mesh_factory):
    result = kostant_flux(mesh_factory())
    assert result.nearest_integer == 0
    assert abs(result.flux) < 1e-8


def test_degenerate_surface_has_zero_flux():
    result = kostant_flux(degenerate_surface(2))
    assert result.flux == 0.0
    assert result.refinements == 0


def test_open_surface_is_rejected():
    with pytest.raises(OpenSurfaceError):
        kostant_flux(planar_patch())
