import math

import numpy as np
import pytest
from scipy.sparse.linalg import eigsh

from geoq.phase_space import build_model, canonical_gauge, symmetric_gauge
from geoq.quantum_reduction import (
    BandAnalysisError,
    EigensolverConvergenceError,
    EigensolverError,
    GridResolutionError,
    GridSpec,
    NonMechanicalModelError,
    OutOfScopeError,
    SpectrumResult,
    band_analysis,
    banded_spectrum,
    build_laplacian,
    build_operator,
    compare_bands,
    effective_prediction,
    eigensolve,
    lowest_spectrum,
    oracle_h_spectrum,
)

HBAR = 0.1
SMALL_GRID = GridSpec(half_width=2.0, points=60)


def test_grid_spec():
    grid = GridSpec(half_width=1.0, points=9)
    assert grid.spacing == pytest.approx(0.2)
    assert grid.coordinate(-1) == pytest.approx(-1.0)
    assert grid.coordinate(9) == pytest.approx(1.0)
    nodes = grid.nodes()
    assert nodes.shape == (81, 2)
    # site = i_q·N + i_p
    assert np.allclose(nodes[1], [-0.8, -0.6])


def test_grid_must_resolve_magnetic_length():
    with pytest.raises(GridResolutionError):
        GridSpec(half_width=6.0, points=64).check_resolution(0.01)
    GridSpec(half_width=6.0, points=256).check_resolution(0.1)


def test_operator_scope():
    with pytest.raises(OutOfScopeError):
        build_operator(build_model("constant", n=2), HBAR, SMALL_GRID)
    with pytest.raises(OutOfScopeError):
        build_operator(build_model("constant"), HBAR, SMALL_GRID, stencil_order=6)
    with pytest.raises(OutOfScopeError):
        build_operator(build_model("constant"), HBAR, SMALL_GRID, ordering="weyl")
    with pytest.raises(GridResolutionError):
        build_operator(build_model("constant"), 0.01, SMALL_GRID)


@pytest.mark.parametrize("model_id", ["constant", "shifted-harmonic", "quartic"])
def test_operator_is_hermitian(model_id: str):
    operator = build_operator(build_model(model_id, gauge="symmetric"), HBAR, SMALL_GRID)
    assert operator.matrix.shape == (3600, 3600)
    assert operator.hermiticity_residual < 1e-10
    assert operator.gauge_label == "symmetric"
    assert operator.model_id == model_id


def test_flat_landau_levels():
    operator = build_operator(build_model("constant", c=1.0, gauge="symmetric"), HBAR, SMALL_GRID)
    spectrum = lowest_spectrum(operator, 6, seed=0).require_converged()
    assert np.allclose(spectrum.eigenvalues, 0.5, atol=0.01)
    assert spectrum.residual_ok
    assert np.allclose(spectrum.fast_action, 0.5, atol=0.05)
    assert all(label in (0, None) for label in spectrum.band_labels)


def test_spectrum_is_gauge_invariant():
    model = build_model("quartic")
    spectra = [
        lowest_spectrum(build_operator(model.with_gauge(gauge), HBAR, SMALL_GRID), 6, seed=1).eigenvalues
        for gauge in (canonical_gauge(1), symmetric_gauge(1))
    ]
    assert np.max(np.abs(spectra[0] - spectra[1])) < 1e-8


def test_eigensolve_is_seeded():
    operator = build_operator(build_model("shifted-harmonic"), HBAR, SMALL_GRID)
    first = eigensolve(operator.matrix, 4, seed=3)
    second = eigensolve(operator.matrix, 4, seed=3)
    assert np.allclose(first[0], second[0], rtol=0.0, atol=1e-12)
    assert first[3]
    with pytest.raises(EigensolverError):
        eigensolve(operator.matrix, operator.matrix.shape[0])


def test_eigensolve_resolves_degenerate_landau_band():
    operator = build_operator(build_model("constant", gauge="symmetric"), HBAR, SMALL_GRID)
    values, _, residuals, converged = eigensolve(operator.matrix, 10, seed=0)
    assert converged
    assert np.max(residuals) <= 1e-8
    assert values[0] == pytest.approx(0.5, abs=0.01)
    assert np.all((values > 0.49) & (values < 1.5))
    with pytest.raises(ValueError):
        eigensolve(operator.matrix, 4, tol=0.0)


def test_unconverged_spectrum_is_refused():
    spectrum = SpectrumResult(
        eigenvalues=np.array([0.5]), residuals=np.array([0.0]), fast_action=None, boundary_weight=None, converged=False
    )
    with pytest.raises(EigensolverConvergenceError):
        spectrum.require_converged()


def test_dirichlet_laplacian():
    grid = GridSpec(half_width=1.0, points=40)
    laplacian = build_laplacian(grid)
    assert abs(laplacian - laplacian.T).max() == 0.0
    lowest = eigsh(laplacian, k=1, sigma=0.0, which="LM", return_eigenvectors=False)[0]
    # walls at ±1: 2·(π/2)²
    assert lowest == pytest.approx(2 * (math.pi / 2) ** 2, rel=2e-2)


def test_spectrum_merge_drops_duplicates():
    def result(values: list[float]) -> SpectrumResult:
        count = len(values)
        return SpectrumResult(
            eigenvalues=np.array(values),
            residuals=np.zeros(count),
            fast_action=np.full(count, 0.5),
            boundary_weight=np.zeros(count),
            converged=True,
            sigmas=(0.0,),
        )

    merged = result([0.5, 0.6, 0.7]).merged(result([0.7, 1.5, 0.65]))
    assert np.array_equal(merged.eigenvalues, [0.5, 0.6, 0.65, 0.7, 1.5])
    assert merged.sigmas == (0.0, 0.0)


def test_band_analysis_by_gap_clustering():
    levels = [0.525, 0.575, 0.625, 0.675, 1.575, 1.725]
    report = band_analysis(levels, "shifted-harmonic", HBAR)
    assert report.method == "gap-clustering"
    assert report.clustered
    assert [len(band.levels) for band in report.bands] == [4, 2]
    assert report.first_gap == pytest.approx(1.05)
    assert report.max_splitting == pytest.approx(0.05)
    assert report.gap_ratio == pytest.approx(21.0)
    assert report.separation_threshold == pytest.approx(3.5)
    assert report.separation_ok


@pytest.mark.ignore_warnings("No band clustering detected")
def test_band_analysis_without_gaps():
    report = band_analysis([1.0, 1.1, 1.2, 1.3, 1.4], "quartic", HBAR)
    assert not report.clustered
    assert report.first_gap is None
    assert not report.separation_ok


def test_band_analysis_needs_levels():
    with pytest.raises(BandAnalysisError):
        band_analysis([0.5, 0.6, 0.7], "quartic", HBAR)


def test_oracle_closed_forms():
    harmonic = oracle_h_spectrum(build_model("shifted-harmonic", c=2.0), HBAR, 3)
    assert harmonic.method == "analytic"
    assert np.allclose(harmonic.eigenvalues, [2.05, 2.15, 2.25])
    flat = oracle_h_spectrum(build_model("constant", c=1.5), HBAR, 2)
    assert np.allclose(flat.eigenvalues, [1.5, 1.5])
    assert np.allclose(effective_prediction(harmonic, 1), 1.5 * harmonic.eigenvalues)


def test_oracle_grid_matches_harmonic_limit():
    # λ = 0 reduces the quartic model to the shifted oscillator
    oracle = oracle_h_spectrum(build_model("quartic", c=1.0, lam=0.0), HBAR, 4)
    assert oracle.method == "grid"
    assert oracle.stable
    assert np.allclose(oracle.eigenvalues, 1.0 + HBAR * (np.arange(4) + 0.5), atol=1e-7)


def test_oracle_quartic_shift_is_positive():
    quartic = oracle_h_spectrum(build_model("quartic", c=1.0, lam=0.1), HBAR, 3)
    harmonic = 1.0 + HBAR * (np.arange(3) + 0.5)
    assert np.all(quartic.eigenvalues > harmonic)
    # first-order perturbation: λ⟨q⁴⟩₀ = 3λℏ²/4
    assert quartic.eigenvalues[0] - harmonic[0] == pytest.approx(0.75 * 0.1 * HBAR**2, rel=0.1)


def test_oracle_needs_mechanical_form():
    with pytest.raises(NonMechanicalModelError):
        oracle_h_spectrum(build_model("quartic", n=2), HBAR, 3)


def test_compare_bands():
    report = band_analysis([0.525, 0.575, 0.625, 0.675, 1.575, 1.725], "shifted-harmonic", HBAR)
    oracle = oracle_h_spectrum(build_model("shifted-harmonic"), HBAR, 4)
    predictions = {k: list(effective_prediction(oracle, k)) for k in (0, 1)}
    comparison = compare_bands(report, predictions)
    assert comparison.level_error == pytest.approx(0.0, abs=1e-12)
    assert comparison.gap_error == pytest.approx(0.0, abs=1e-12)
    assert comparison.passed
    kinds = {row.kind for row in comparison.rows}
    assert kinds == {"level", "splitting", "gap"}


def test_compare_bands_detects_wrong_levels():
    report = band_analysis([0.6, 0.7, 0.8, 0.9, 2.0, 2.2], "shifted-harmonic", HBAR)
    oracle = oracle_h_spectrum(build_model("shifted-harmonic"), HBAR, 4)
    comparison = compare_bands(report, {k: list(effective_prediction(oracle, k)) for k in (0, 1)})
    assert not comparison.passed
    assert comparison.level_error > 0.05


def test_compare_bands_checks_the_lowest_band():
    report = band_analysis([0.525, 0.575, 0.625, 0.675, 1.7, 1.8], "shifted-harmonic", HBAR)
    oracle = oracle_h_spectrum(build_model("shifted-harmonic"), HBAR, 4)
    predictions = {k: list(effective_prediction(oracle, k)) for k in (0, 1)}
    comparison = compare_bands(report, predictions)
    band_one = [row.relative_error for row in comparison.rows if row.kind == "level" and row.band == 1]
    assert max(band_one) > 0.05
    assert comparison.level_error == pytest.approx(0.0, abs=1e-12)
    assert comparison.passed
    assert not compare_bands(report, predictions, checked_bands=(0, 1)).passed


def test_harmonic_bands_follow_effective_prediction():
    model = build_model("shifted-harmonic", gauge="symmetric")
    operator = build_operator(model, HBAR, GridSpec(half_width=3.0, points=80))
    spectrum = banded_spectrum(operator, 6, probe_bands=1, probe_count=16, seed=0).require_converged()
    report = band_analysis(spectrum, model, HBAR)
    assert report.method == "fast-action"
    assert [band.index for band in report.bands[:2]] == [0, 1]
    assert report.band(0).levels[0] == pytest.approx(0.525, rel=0.05)
    assert report.band(1).levels[0] == pytest.approx(1.575, rel=0.05)
    assert report.separation_ok
    size = max(len(band.levels) for band in report.bands)
    oracle = oracle_h_spectrum(model, HBAR, size)
    predictions = {band.index: list(effective_prediction(oracle, band.index)) for band in report.bands}
    comparison = compare_bands(report, predictions)
    band_zero = [row.relative_error for row in comparison.rows if row.kind == "level" and row.band == 0]
    assert len(band_zero) == 6
    assert max(band_zero) < 0.05
