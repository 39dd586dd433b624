"""
Quantization of the extended system: a magnetic Laplace-type operator on phase space (n = 1).

The operator is ``Ĥ = ½ g^{-1/2} Π_i g^{ij} g^{1/2} Π_j`` with ``Π = −i√ℏ ∇`` and ``∇ = ∂ − iθ/ℏ``. It is discretized on
the interior nodes of ``[−R, R]²`` with Dirichlet walls, using Peierls link phases for the gauge potential and a
``g^{1/4}`` similarity transform so that the assembled matrix is Hermitian. Eigenvectors ``v`` of the matrix map back to
wavefunctions as ``ψ = g^{-1/4} v``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
import logging
import math
from typing import Literal, Mapping, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy import sparse
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .phase_space import (
    ConstantHamiltonian,
    FloatArray,
    GaugePotential,
    PhaseModel,
    ShiftedHarmonicHamiltonian,
)

logger = logging.getLogger(__name__)

ComplexArray = NDArray[np.complex128]
StencilOrder = Literal[2, 4]

# (link length, weight) pairs; single terms may be negative, the weighted sum of ``D‡D`` terms is positive semidefinite
STENCILS: dict[int, tuple[tuple[int, float], ...]] = {
    2: ((1, 1.0),),
    4: ((1, 4.0 / 3.0), (2, -1.0 / 3.0)),
}
RESOLUTION_FACTOR = 0.25
RESIDUAL_TOLERANCE = 1e-8
BOUNDARY_DECAY = 1e-8
EDGE_TOLERANCE = 1e-3
BOUNDARY_FRAME = 2
MAX_PROBE_DOUBLINGS = 3
ORACLE_GRID_POINTS = 1000
ORACLE_HALF_WIDTH = 6.0
ORACLE_STABILITY = 1e-6
# Ritz tolerance on the shift-inverted operator, well inside RESIDUAL_TOLERANCE
ARPACK_TOLERANCE = 1e-12
MIN_LANCZOS_VECTORS = 64
MAX_ARPACK_RESTARTS = 300
ORDERING = "I1=I2=0"


class QuantumReductionError(Exception):
    """Base class for quantum-spectrum errors."""


class OutOfScopeError(QuantumReductionError, ValueError):
    """Raised for configurations the solver does not support (n ≠ 1, unknown orderings)."""


class GridResolutionError(QuantumReductionError, ValueError):
    """Raised when the grid spacing does not resolve the magnetic length ``√ℏ``."""


class EigensolverError(QuantumReductionError):
    """Raised when the eigensolver fails outright."""


class EigensolverConvergenceError(EigensolverError):
    """Raised when a spectrum must be complete but the eigensolver returned only part of it."""


class BandAnalysisError(QuantumReductionError):
    """Raised when a spectrum is too short to analyse."""


class NonMechanicalModelError(QuantumReductionError):
    """Raised when the reference spectrum is requested for a Hamiltonian without the form ``c + ½p² + V(q)``."""


@dataclass(frozen=True)
class GridSpec:
    """``N × N`` interior nodes of ``[−R, R]²``, spacing ``2R/(N+1)``, wavefunction zero on the walls."""

    half_width: float = 6.0
    points: int = 256

    def __post_init__(self) -> None:
        if not self.half_width > 0:
            raise ValueError(f"half width must be positive, got {self.half_width!r}")
        if self.points < 8:
            raise ValueError(f"need at least 8 points per axis, got {self.points}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.points + 1)

    def coordinate(self, index: NDArray[np.int_] | int) -> NDArray[np.float64]:
        """Node coordinate for any integer index; indices ``−1`` and ``N`` lie on the walls."""
        return -self.half_width + (np.asarray(index) + 1) * self.spacing

    def nodes(self) -> FloatArray:
        """All nodes as ``(N², 2)`` with ``site = i_q·N + i_p``."""
        axis = self.coordinate(np.arange(self.points))
        qq, pp = np.meshgrid(axis, axis, indexing="ij")
        return np.stack([qq.ravel(), pp.ravel()], axis=-1)

    def check_resolution(self, hbar: float) -> None:
        limit = RESOLUTION_FACTOR * math.sqrt(hbar)
        if self.spacing > limit:
            raise GridResolutionError(
                f"grid spacing {self.spacing:.4g} exceeds {limit:.4g} = √ℏ/4 for ℏ = {hbar:g}; increase N or decrease R"
            )


@dataclass(frozen=True, eq=False)
class MagneticOperator:
    """The assembled Hermitian matrix with what is needed to interpret its eigenvectors."""

    matrix: sparse.csr_matrix
    fast_action: sparse.csr_matrix
    """Flat ``½ΣΠ‡Π`` in the wavefunction representation."""
    site_weight: FloatArray
    """``g^{-1/4}`` at each node."""
    grid: GridSpec
    hbar: float
    model_id: str
    gauge_label: str
    stencil_order: int
    ordering: str = ORDERING

    @property
    def hermiticity_residual(self) -> float:
        difference = self.matrix - self.matrix.conj().T
        return float(abs(difference).max()) if difference.nnz else 0.0


def _covariant_difference(
    grid: GridSpec, gauge: GaugePotential, hbar: float, axis: int, length: int
) -> tuple[sparse.csr_matrix, FloatArray]:
    """Forward covariant differences along one axis over all links touching the interior, and link midpoints."""
    size = grid.points
    starts, others = np.meshgrid(np.arange(-length, size), np.arange(size), indexing="ij")
    s, o = starts.ravel(), others.ravel()
    t = s + length
    if axis == 0:
        start_points = np.stack([grid.coordinate(s), grid.coordinate(o)], axis=-1)
        end_points = np.stack([grid.coordinate(t), grid.coordinate(o)], axis=-1)
        start_sites, end_sites = s * size + o, t * size + o
    else:
        start_points = np.stack([grid.coordinate(o), grid.coordinate(s)], axis=-1)
        end_points = np.stack([grid.coordinate(o), grid.coordinate(t)], axis=-1)
        start_sites, end_sites = o * size + s, o * size + t
    phases = gauge.line_integral(start_points, end_points) / hbar
    links = np.arange(s.size)
    start_inside = s >= 0
    end_inside = t < size
    scale = 1.0 / (length * grid.spacing)
    rows = np.concatenate([links[start_inside], links[end_inside]])
    cols = np.concatenate([start_sites[start_inside], end_sites[end_inside]])
    data = np.concatenate(
        [np.full(int(start_inside.sum()), -scale, dtype=complex), scale * np.exp(-1j * phases[end_inside])]
    )
    matrix = sparse.coo_matrix((data, (rows, cols)), shape=(s.size, size * size)).tocsr()
    return matrix, 0.5 * (start_points + end_points)


def build_operator(
    model: PhaseModel, hbar: float, grid: GridSpec, stencil_order: int = 4, ordering: str = ORDERING
) -> MagneticOperator:
    """
    Assemble ``g^{1/4} Ĥ g^{-1/4}`` as a sparse Hermitian matrix.

    Each term is ``½ℏ (D G)‡ W (D G)`` with ``D`` a covariant link difference, ``G = g^{-1/4}`` at the nodes and
    ``W = g^{aa} g^{1/2}`` at the link midpoints.
    """
    if model.chart.n != 1:
        raise OutOfScopeError(f"the quantum solver supports n = 1 only, got n = {model.chart.n}")
    if ordering != ORDERING:
        raise OutOfScopeError(f"unsupported operator ordering {ordering!r}")
    if stencil_order not in STENCILS:
        raise OutOfScopeError(f"unsupported stencil order {stencil_order!r}")
    if not hbar > 0:
        raise ValueError(f"hbar must be positive, got {hbar!r}")
    grid.check_resolution(hbar)
    n = model.chart.n
    metric = model.metric
    site_weight = model.hamiltonian.check_domain(grid.nodes()) ** (n / 2.0)
    weight_matrix = sparse.diags(site_weight)
    dimension = grid.points**2
    matrix = sparse.csr_matrix((dimension, dimension), dtype=complex)
    fast = sparse.csr_matrix((dimension, dimension), dtype=complex)
    for axis in (0, 1):
        for length, coefficient in STENCILS[stencil_order]:
            difference, midpoints = _covariant_difference(grid, model.gauge, hbar, axis, length)
            link_weight = metric.upper(midpoints)[:, axis, axis] * np.sqrt(metric.determinant(midpoints))
            weighted = difference @ weight_matrix
            matrix = matrix + coefficient * (weighted.conj().T @ sparse.diags(link_weight) @ weighted)
            fast = fast + coefficient * (difference.conj().T @ difference)
    operator = MagneticOperator(
        matrix=(0.5 * hbar * matrix).tocsr(),
        fast_action=(0.5 * hbar * fast).tocsr(),
        site_weight=site_weight,
        grid=grid,
        hbar=hbar,
        model_id=model.identifier,
        gauge_label=model.gauge.label,
        stencil_order=stencil_order,
        ordering=ordering,
    )
    logger.debug(
        f"Assembled {dimension}×{dimension} operator for ℏ={hbar:g} ({operator.matrix.nnz} non-zeros, "
        f"hermiticity residual {operator.hermiticity_residual:.2e})"
    )
    return operator


def build_laplacian(grid: GridSpec, stencil_order: int = 4) -> sparse.csr_matrix:
    """The Dirichlet ``−∇²`` on the same grid (no gauge, flat metric)."""
    size = grid.points
    total = sparse.csr_matrix((size * size, size * size))
    for axis in (0, 1):
        for length, coefficient in STENCILS[stencil_order]:
            one_axis = sparse.diags(
                [2.0 * np.ones(size), -np.ones(size - length), -np.ones(size - length)], [0, length, -length]
            ) / (length * grid.spacing) ** 2
            eye = sparse.identity(size)
            total = total + coefficient * (sparse.kron(one_axis, eye) if axis == 0 else sparse.kron(eye, one_axis))
    return total.tocsr()


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """Eigenvalues (ascending) with per-state diagnostics."""

    eigenvalues: FloatArray
    residuals: FloatArray
    fast_action: FloatArray | None
    boundary_weight: FloatArray | None
    converged: bool
    residual_tolerance: float = RESIDUAL_TOLERANCE
    sigmas: tuple[float, ...] = ()
    vectors: ComplexArray | None = field(default=None, repr=False)
    """Wavefunctions ``ψ`` as columns, kept on request."""

    def __len__(self) -> int:
        return int(self.eigenvalues.shape[0])

    @property
    def residual_ok(self) -> bool:
        return bool(np.all(self.residuals <= self.residual_tolerance))

    @property
    def edge_states(self) -> NDArray[np.bool_]:
        if self.boundary_weight is None:
            return np.zeros(len(self), dtype=bool)
        return self.boundary_weight > EDGE_TOLERANCE

    @property
    def boundary_decayed(self) -> NDArray[np.bool_]:
        if self.boundary_weight is None:
            return np.ones(len(self), dtype=bool)
        return self.boundary_weight <= BOUNDARY_DECAY

    @property
    def band_labels(self) -> list[int | None]:
        """Landau band index ``round(⟨K⟩ − ½)``; ``None`` for edge states or unlabelled spectra."""
        if self.fast_action is None:
            return [None] * len(self)
        edges = self.edge_states
        return [None if edge else int(np.rint(action - 0.5)) for action, edge in zip(self.fast_action, edges)]

    def require_converged(self) -> SpectrumResult:
        if not self.converged:
            raise EigensolverConvergenceError(f"only {len(self)} eigenpairs converged")
        return self

    def select(self, mask: NDArray[np.bool_]) -> SpectrumResult:
        def pick(values: NDArray | None) -> NDArray | None:
            return None if values is None else values[mask]

        return replace(
            self,
            eigenvalues=self.eigenvalues[mask],
            residuals=self.residuals[mask],
            fast_action=pick(self.fast_action),
            boundary_weight=pick(self.boundary_weight),
            vectors=None if self.vectors is None else self.vectors[:, mask],
        )

    def merged(self, other: SpectrumResult) -> SpectrumResult:
        """Union of two results, dropping states of ``other`` whose eigenvalue is already present."""
        scale = np.maximum(1.0, np.abs(other.eigenvalues))
        known = np.array(
            [np.any(np.abs(self.eigenvalues - value) <= 1e-9 * s) for value, s in zip(other.eigenvalues, scale)],
            dtype=bool,
        )
        extra = other.select(~known)

        def join(a: NDArray | None, b: NDArray | None) -> NDArray | None:
            return None if a is None or b is None else np.concatenate([a, b])

        eigenvalues = np.concatenate([self.eigenvalues, extra.eigenvalues])
        order = np.argsort(eigenvalues, kind="stable")
        combined = SpectrumResult(
            eigenvalues=eigenvalues,
            residuals=np.concatenate([self.residuals, extra.residuals]),
            fast_action=join(self.fast_action, extra.fast_action),
            boundary_weight=join(self.boundary_weight, extra.boundary_weight),
            converged=self.converged and other.converged,
            residual_tolerance=self.residual_tolerance,
            sigmas=self.sigmas + other.sigmas,
            vectors=None if self.vectors is None or extra.vectors is None else np.hstack([self.vectors, extra.vectors]),
        )
        return combined.select(order)


def _start_vector(dimension: int, seed: int, complex_valued: bool) -> NDArray:
    rng = np.random.default_rng(seed)
    real = rng.standard_normal(dimension)
    if not complex_valued:
        return real
    return real + 1j * rng.standard_normal(dimension)


def _boundary_weights(psi: ComplexArray, points: int) -> FloatArray:
    frame = np.zeros((points, points), dtype=bool)
    frame[:BOUNDARY_FRAME, :] = frame[-BOUNDARY_FRAME:, :] = True
    frame[:, :BOUNDARY_FRAME] = frame[:, -BOUNDARY_FRAME:] = True
    magnitudes = np.abs(psi).reshape(points, points, -1)
    return np.max(magnitudes[frame], axis=0) / np.max(magnitudes.reshape(points * points, -1), axis=0)


def eigensolve(
    matrix: sparse.spmatrix,
    count: int,
    sigma: float = 0.0,
    seed: int = 0,
    residual_tolerance: float = RESIDUAL_TOLERANCE,
    maxiter: int = MAX_ARPACK_RESTARTS,
    tol: float = ARPACK_TOLERANCE,
) -> tuple[FloatArray, NDArray, FloatArray, bool]:
    """
    The ``count`` eigenpairs closest to ``sigma`` by shift-invert Lanczos, sorted ascending.

    The start vector is drawn from ``seed`` so repeated runs are identical. The Lanczos basis holds at least
    `MIN_LANCZOS_VECTORS` vectors so that nearly degenerate Landau bands resolve, and restarts are bounded by
    ``maxiter``. Non-convergence returns the converged part with the last flag set to False.
    """
    dimension = matrix.shape[0]
    if not 0 < count < dimension - 1:
        raise EigensolverError(f"cannot compute {count} eigenpairs of a {dimension}-dimensional matrix")
    if not tol > 0:
        raise ValueError(f"eigensolver tolerance must be positive, got {tol!r}")
    start = _start_vector(dimension, seed, np.iscomplexobj(matrix.data))
    ncv = min(max(2 * count + 1, MIN_LANCZOS_VECTORS), dimension - 1)
    converged = True
    try:
        values, vectors = eigsh(
            matrix, k=count, sigma=sigma, which="LM", v0=start, ncv=ncv, maxiter=maxiter, tol=tol
        )
    except ArpackNoConvergence as e:
        logger.warning(f"Eigensolver did not converge: {len(e.eigenvalues)} of {count} pairs available.")
        values, vectors, converged = e.eigenvalues, e.eigenvectors, False
    except RuntimeError as e:
        raise EigensolverError(str(e)) from e
    values = np.real(values)
    order = np.argsort(values, kind="stable")
    values, vectors = values[order], vectors[:, order]
    norms = np.linalg.norm(vectors, axis=0)
    residuals = np.linalg.norm(matrix @ vectors - vectors * values, axis=0) / np.where(norms > 0, norms, 1.0)
    if np.any(residuals > residual_tolerance):
        logger.warning(f"Eigenpair residual {np.max(residuals):.2e} exceeds {residual_tolerance:.0e}.")
    return values, vectors, residuals, converged


def _spectrum(
    operator: MagneticOperator, count: int, sigma: float, seed: int, keep_vectors: bool
) -> SpectrumResult:
    values, vectors, residuals, converged = eigensolve(operator.matrix, count, sigma=sigma, seed=seed)
    psi = operator.site_weight[:, None] * vectors
    norms = np.real(np.sum(np.conj(psi) * psi, axis=0))
    action = np.real(np.sum(np.conj(psi) * (operator.fast_action @ psi), axis=0)) / norms
    return SpectrumResult(
        eigenvalues=values,
        residuals=residuals,
        fast_action=action,
        boundary_weight=_boundary_weights(psi, operator.grid.points),
        converged=converged,
        sigmas=(sigma,),
        vectors=psi if keep_vectors else None,
    )


def lowest_spectrum(operator: MagneticOperator, m: int, seed: int = 0, keep_vectors: bool = False) -> SpectrumResult:
    """The ``m`` lowest eigenpairs (shift-invert about zero; the operator is positive definite)."""
    return _spectrum(operator, m, 0.0, seed, keep_vectors)


def probe_spectrum(
    operator: MagneticOperator, sigma: float, count: int, seed: int = 0, keep_vectors: bool = False
) -> SpectrumResult:
    """The ``count`` eigenpairs nearest ``sigma``."""
    return _spectrum(operator, count, sigma, seed, keep_vectors)


def banded_spectrum(
    operator: MagneticOperator, m: int, probe_bands: int = 1, probe_count: int = 16, seed: int = 0
) -> SpectrumResult:
    """
    The lowest ``m`` levels plus windows around each higher Landau band ``k ≤ probe_bands``.

    Band ``k`` is probed at ``(2k+1)·E_min``; the window is widened until a state labelled ``k`` appears, and only
    states labelled ``k`` are kept from it.
    """
    result = lowest_spectrum(operator, m, seed)
    if len(result) == 0:
        return result
    base = float(result.eigenvalues[0])
    for band in range(1, probe_bands + 1):
        sigma = (2 * band + 1) * base
        count = probe_count
        found = None
        for _ in range(MAX_PROBE_DOUBLINGS + 1):
            probe = probe_spectrum(operator, sigma, count, seed)
            mask = np.array([label == band for label in probe.band_labels], dtype=bool)
            if mask.any() or not probe.converged:
                found = probe.select(mask)
                break
            count *= 2
        if found is None or len(found) == 0:
            logger.warning(f"No state of band {band} found near E = {sigma:.4g}.")
            continue
        result = result.merged(found)
    return result


@dataclass(frozen=True)
class Band:
    index: int
    levels: tuple[float, ...]

    @property
    def splittings(self) -> tuple[float, ...]:
        return tuple(float(d) for d in np.diff(self.levels))

    @property
    def max_splitting(self) -> float | None:
        return max(self.splittings) if self.splittings else None

    @property
    def mean_splitting(self) -> float | None:
        return float(np.mean(self.splittings)) if self.splittings else None


@dataclass(frozen=True)
class BandReport:
    """Landau-band structure of a spectrum."""

    hbar: float
    model_id: str
    method: str
    bands: tuple[Band, ...]
    first_gap: float | None
    max_splitting: float | None
    gap_ratio: float | None
    separation_threshold: float
    clustered: bool
    edge_states: int = 0

    @property
    def separation_ok(self) -> bool:
        return self.gap_ratio is not None and self.gap_ratio >= self.separation_threshold

    def band(self, index: int) -> Band | None:
        for band in self.bands:
            if band.index == index:
                return band
        return None

    def as_dict(self) -> dict:
        return {
            "hbar": self.hbar,
            "model": self.model_id,
            "method": self.method,
            "clustered": self.clustered,
            "edge_states": self.edge_states,
            "first_gap": self.first_gap,
            "max_splitting": self.max_splitting,
            "gap_ratio": self.gap_ratio,
            "separation_threshold": self.separation_threshold,
            "separation_ok": self.separation_ok,
            "bands": [
                {
                    "index": band.index,
                    "levels": list(band.levels),
                    "splittings": list(band.splittings),
                    "max_splitting": band.max_splitting,
                    "mean_splitting": band.mean_splitting,
                }
                for band in self.bands
            ],
        }


def _cluster_by_gaps(levels: FloatArray) -> list[FloatArray]:
    """Split sorted levels wherever the gap exceeds ten times the median spacing within clusters."""
    gaps = np.diff(levels)
    floor = 1e-9 * max(1.0, float(np.max(np.abs(levels))))
    threshold = max(10.0 * float(np.median(gaps)), floor)
    for _ in range(10):
        splits = gaps > threshold
        inner = gaps[~splits]
        updated = max(10.0 * float(np.median(inner)), floor) if inner.size else threshold
        if updated == threshold:
            break
        threshold = updated
    cuts = np.flatnonzero(gaps > threshold) + 1
    return np.split(levels, cuts)


def band_analysis(spectrum: SpectrumResult | Sequence[float], model: PhaseModel | str, hbar: float) -> BandReport:
    """
    Group levels into Landau bands and measure the first gap against the intra-band splitting.

    Spectra carrying fast-action labels are grouped by label (edge states excluded); plain level lists are clustered
    by gaps.
    """
    model_id = model if isinstance(model, str) else model.identifier
    if isinstance(spectrum, SpectrumResult):
        levels = spectrum.eigenvalues
        labels = spectrum.band_labels
        edge_count = int(np.sum(spectrum.edge_states))
    else:
        levels = np.sort(np.asarray(spectrum, dtype=float))
        labels = [None] * len(levels)
        edge_count = 0
    if len(levels) < 4:
        raise BandAnalysisError(f"need at least 4 levels, got {len(levels)}")
    if any(label is not None for label in labels):
        method = "fast-action"
        clustered = True
        indices = sorted({label for label in labels if label is not None})
        bands = tuple(
            Band(index=k, levels=tuple(float(v) for v, label in zip(levels, labels) if label == k)) for k in indices
        )
    else:
        method = "gap-clustering"
        clusters = _cluster_by_gaps(np.asarray(levels, dtype=float))
        clustered = len(clusters) > 1
        if not clustered:
            logger.warning(f"No band clustering detected in {len(levels)} levels at ℏ={hbar:g}.")
        bands = tuple(Band(index=k, levels=tuple(float(v) for v in c)) for k, c in enumerate(clusters))
    lowest = bands[0] if bands else None
    max_splitting = lowest.max_splitting if lowest is not None else None
    first_gap = bands[1].levels[0] - bands[0].levels[0] if len(bands) > 1 else None
    gap_ratio = None
    if first_gap is not None and max_splitting is not None:
        gap_ratio = math.inf if max_splitting == 0 else first_gap / max_splitting
    return BandReport(
        hbar=hbar,
        model_id=model_id,
        method=method,
        bands=bands,
        first_gap=first_gap,
        max_splitting=max_splitting,
        gap_ratio=gap_ratio,
        separation_threshold=0.7 * 0.5 / hbar,
        clustered=clustered,
        edge_states=edge_count,
    )


@dataclass(frozen=True)
class OracleSpectrum:
    """Reference levels of ``ĥ = c + ½P² + V(q)`` on the line."""

    eigenvalues: FloatArray
    method: str
    richardson_change: float = 0.0

    @property
    def stable(self) -> bool:
        return self.richardson_change <= ORACLE_STABILITY


def _line_levels(potential: FloatArray, spacing: float, hbar: float, count: int) -> FloatArray:
    kinetic = hbar**2 / (2.0 * spacing**2)
    diagonal = 2.0 * kinetic + potential
    off = -kinetic * np.ones(potential.shape[0] - 1)
    return eigh_tridiagonal(diagonal, off, select="i", select_range=(0, count - 1), eigvals_only=True)


def oracle_h_spectrum(
    model: PhaseModel,
    hbar: float,
    m: int,
    grid_points: int = ORACLE_GRID_POINTS,
    half_width: float = ORACLE_HALF_WIDTH,
) -> OracleSpectrum:
    """
    The ``m`` lowest eigenvalues of the one-dimensional quantization of ``h``.

    Constant and harmonic models use closed forms; other mechanical models are solved by finite differences on
    ``[−L, L]`` with Richardson extrapolation over three grids.
    """
    hamiltonian = model.hamiltonian
    if m < 1:
        raise ValueError(f"need at least one level, got {m}")
    if isinstance(hamiltonian, ConstantHamiltonian):
        return OracleSpectrum(eigenvalues=np.full(m, hamiltonian.c), method="analytic")
    if isinstance(hamiltonian, ShiftedHarmonicHamiltonian):
        return OracleSpectrum(eigenvalues=hamiltonian.c + hbar * (np.arange(m) + 0.5), method="analytic")
    if not hamiltonian.is_mechanical:
        raise NonMechanicalModelError(f"model {model.identifier!r} does not have the form c + ½p² + V(q)")
    estimates = []
    points = grid_points
    for _ in range(3):
        spacing = 2.0 * half_width / (points + 1)
        q = -half_width + spacing * np.arange(1, points + 1)
        potential = hamiltonian.potential(q)
        assert potential is not None
        estimates.append(_line_levels(potential, spacing, hbar, m))
        points = 2 * points + 1
    first = (4.0 * estimates[1] - estimates[0]) / 3.0
    second = (4.0 * estimates[2] - estimates[1]) / 3.0
    change = float(np.max(np.abs(second - first)))
    if change > ORACLE_STABILITY:
        logger.warning(f"Reference spectrum changed by {change:.2e} under refinement.")
    c = float(hamiltonian.evaluate(np.zeros(2))) - float(hamiltonian.potential(np.zeros(1))[0])  # type: ignore[index]
    return OracleSpectrum(eigenvalues=c + second, method="grid", richardson_change=change)


def effective_prediction(oracle: OracleSpectrum, k: int) -> FloatArray:
    """Levels of band ``k`` predicted by the reduced operator: ``(k + ½)·E_m``."""
    return (k + 0.5) * np.asarray(oracle.eigenvalues)


@dataclass(frozen=True)
class ComparisonRow:
    kind: str
    band: int
    index: int
    computed: float
    predicted: float

    @property
    def relative_error(self) -> float:
        if self.predicted == 0:
            return abs(self.computed)
        return abs(self.computed - self.predicted) / abs(self.predicted)


@dataclass(frozen=True)
class BandComparison:
    """
    Computed band data against the effective prediction, with pass/fail per quantity.

    All bands are tabulated in ``rows``; only ``checked_bands`` enter the errors and ``passed``. Higher bands carry
    ``O(ℏ)`` corrections the effective formula leaves out.
    """

    rows: tuple[ComparisonRow, ...]
    level_tolerance: float
    splitting_tolerance: float
    gap_tolerance: float
    checked_bands: tuple[int, ...] = (0,)

    def _max_error(self, kind: str) -> float | None:
        errors = [row.relative_error for row in self.rows if row.kind == kind and row.band in self.checked_bands]
        return max(errors) if errors else None

    @property
    def level_error(self) -> float | None:
        return self._max_error("level")

    @property
    def splitting_error(self) -> float | None:
        return self._max_error("splitting")

    @property
    def gap_error(self) -> float | None:
        return self._max_error("gap")

    @property
    def passed(self) -> bool:
        checks = (
            (self.level_error, self.level_tolerance),
            (self.splitting_error, self.splitting_tolerance),
            (self.gap_error, self.gap_tolerance),
        )
        return all(error <= tolerance for error, tolerance in checks if error is not None)


def compare_bands(
    report: BandReport,
    predictions: Mapping[int, Sequence[float]],
    level_tolerance: float = 0.05,
    splitting_tolerance: float = 0.25,
    gap_tolerance: float = 0.25,
    checked_bands: Sequence[int] = (0,),
) -> BandComparison:
    """
    Compare levels, mean intra-band splittings and the first gap against predicted band levels.

    The first gap is filed under band 0.
    """
    rows: list[ComparisonRow] = []
    for band in report.bands:
        if band.index not in predictions:
            continue
        predicted = list(predictions[band.index])
        if len(predicted) < len(band.levels):
            logger.warning(
                f"Band {band.index}: {len(band.levels)} computed levels but {len(predicted)} predicted; truncating."
            )
        count = min(len(predicted), len(band.levels))
        rows.extend(ComparisonRow("level", band.index, i, band.levels[i], predicted[i]) for i in range(count))
        if count > 1:
            computed_splitting = float(np.mean(np.diff(band.levels[:count])))
            predicted_splitting = float(np.mean(np.diff(predicted[:count])))
            if predicted_splitting != 0:
                rows.append(ComparisonRow("splitting", band.index, 0, computed_splitting, predicted_splitting))
    lower, upper = report.band(0), report.band(1)
    if lower is not None and upper is not None and 0 in predictions and 1 in predictions:
        rows.append(
            ComparisonRow(
                "gap", 0, 0, upper.levels[0] - lower.levels[0], predictions[1][0] - predictions[0][0]
            )
        )
    return BandComparison(
        rows=tuple(rows),
        level_tolerance=level_tolerance,
        splitting_tolerance=splitting_tolerance,
        gap_tolerance=gap_tolerance,
        checked_bands=tuple(checked_bands),
    )
