import math

import numpy as np
import pytest

from geoq.prequantum import (
    GridTooSmallError,
    PrequantumOperator,
    SectionGrid,
    ZeroNormError,
    apply_P,
    apply_prequantum_h,
    apply_Q,
    ccr_residual,
    derivative,
    evolve_prequantum,
    gaussian_section,
    inner_product,
    plane_wave_section,
    polarization_residual,
    polarized_section,
)

HBAR = 0.1


def _stencil_wave_number(k: float, spacing: float) -> float:
    """What the fourth-order central difference makes of ``exp(ikx)``."""
    return (8.0 * math.sin(k * spacing) - math.sin(2.0 * k * spacing)) / (6.0 * spacing)


def test_grid_geometry():
    section = gaussian_section(6.0, 64)
    assert section.shape == (64, 64)
    assert section.dq == pytest.approx(12.0 / 64)
    assert section.q[0] == pytest.approx(-6.0)
    assert section.p[-1] == pytest.approx(6.0 - 12.0 / 64)
    mask = section.interior_mask()
    assert mask.sum() == (64 - 8) ** 2


def test_grid_too_small():
    with pytest.raises(GridTooSmallError):
        gaussian_section(1.0, 8)
    with pytest.raises(GridTooSmallError):
        gaussian_section(1.0, 16).interior_mask(margin=8)


def test_P_on_plane_wave():
    half_width = math.pi
    section = plane_wave_section(half_width, 64, wave_numbers=(2.0, 0.0))
    result = apply_P(section, HBAR)
    expected = HBAR * _stencil_wave_number(2.0, section.dq) * section.values
    assert np.allclose(result.values, expected, atol=1e-12)
    assert np.allclose(result.values, HBAR * 2.0 * section.values, rtol=1e-3)


def test_Q_on_momentum_plane_wave():
    section = plane_wave_section(math.pi, 64, wave_numbers=(0.0, 3.0))
    qq, _ = section.mesh()
    result = apply_Q(section, HBAR)
    expected = (-HBAR * _stencil_wave_number(3.0, section.dp) + qq) * section.values
    assert np.allclose(result.values, expected, atol=1e-12)


@pytest.mark.parametrize("identifier, function", [("P", apply_P), ("Q", apply_Q), ("h", apply_prequantum_h)])
def test_operator_dispatch(identifier: str, function):
    section = gaussian_section(6.0, 32, width=1.5, wave_numbers=(1.0, -0.5))
    assert np.array_equal(PrequantumOperator(identifier, HBAR).apply(section).values, function(section, HBAR).values)


def test_operator_needs_positive_hbar():
    with pytest.raises(ValueError):
        PrequantumOperator("P", 0.0)


def test_ccr_converges_at_fourth_order():
    coarse, fine = (ccr_residual(gaussian_section(6.0, points, width=1.5), HBAR) for points in (64, 128))
    assert fine < 1e-6
    assert coarse / fine == pytest.approx(16.0, rel=0.3)


def test_polarized_sections_are_annihilated_by_vertical_derivative():
    section = polarized_section(10.0, 128, wave_number=2 * math.pi / 20.0, width=1.5)
    assert polarization_residual(section) < 1e-10
    assert polarization_residual(gaussian_section(10.0, 128, width=1.5)) > 0.1


def test_prequantum_h_is_hermitian():
    phi = gaussian_section(6.0, 64, width=1.0, center=(0.5, -0.5), wave_numbers=(1.0, 0.0))
    psi = gaussian_section(6.0, 64, width=1.2, center=(-0.3, 0.2), wave_numbers=(0.0, 2.0))
    left = inner_product(phi, apply_prequantum_h(psi, HBAR))
    right = inner_product(apply_prequantum_h(phi, HBAR), psi)
    assert left == pytest.approx(right, abs=1e-12)


def test_prequantum_h_breaks_vertical_polarization():
    section = polarized_section(10.0, 128, width=1.5)
    assert polarization_residual(apply_prequantum_h(section, HBAR)) > 1e-3


def test_evolution_preserves_norm():
    section = gaussian_section(6.0, 64, width=1.0, center=(1.0, 0.0))
    evolved = evolve_prequantum(section, HBAR, dt=1e-3, steps=10)
    assert evolved.norm() == pytest.approx(section.norm(), rel=1e-6)
    assert not np.allclose(evolved.values, section.values)


def test_zero_boundary_derivative():
    section = gaussian_section(6.0, 128, width=1.0, boundary="zero")
    qq, _ = section.mesh()
    expected = -qq * section.values
    assert np.allclose(derivative(section, 0), expected, atol=1e-4)


def test_inner_product_and_norm_agree():
    section = gaussian_section(6.0, 64, width=1.0)
    assert inner_product(section, section).real == pytest.approx(section.norm() ** 2)
    # ∫∫ exp(−(q² + p²)) = π
    assert section.norm() ** 2 == pytest.approx(math.pi, rel=1e-8)
    with pytest.raises(ValueError):
        inner_product(section, gaussian_section(6.0, 32))


def test_zero_section_has_no_residual():
    section = SectionGrid(values=np.zeros((32, 32)), q_range=(-1.0, 1.0), p_range=(-1.0, 1.0))
    with pytest.raises(ZeroNormError):
        ccr_residual(section, HBAR)
    with pytest.raises(ZeroNormError):
        polarization_residual(section)
