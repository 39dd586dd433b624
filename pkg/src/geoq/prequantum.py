"""
Prequantum operators on sections sampled on a (q, p) grid (n = 1).

Sections are complex arrays indexed ``[i_q, i_p]``. Derivatives use the fourth-order central stencil, either on a
periodic box or with zero padding outside the grid.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
import logging
import math
from typing import Callable, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

logger = logging.getLogger(__name__)

ComplexArray = NDArray[np.complex128]
Boundary = Literal["periodic", "zero"]
OperatorId = Literal["P", "Q", "h"]

MIN_GRID_POINTS = 16
INTERIOR_MARGIN = 4


class PrequantumError(Exception):
    """Base class for prequantum-operator errors."""


class GridTooSmallError(PrequantumError, ValueError):
    """Raised when a grid has fewer points than the stencil needs."""


class ZeroNormError(PrequantumError):
    """Raised when a residual is requested for a vanishing section."""


@dataclass(frozen=True, eq=False)
class SectionGrid:
    """A section sampled at ``q_min + i·Δq`` and ``p_min + j·Δp`` with ``Δ = (max − min)/N``."""

    values: ComplexArray
    q_range: tuple[float, float]
    p_range: tuple[float, float]
    boundary: Boundary = "periodic"

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=complex)
        if values.ndim != 2 or min(values.shape) < MIN_GRID_POINTS:
            raise GridTooSmallError(f"need at least {MIN_GRID_POINTS} points per axis, got shape {values.shape}")
        if self.boundary not in ("periodic", "zero"):
            raise ValueError(f"unknown boundary treatment {self.boundary!r}")
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape  # type: ignore[return-value]

    @property
    def dq(self) -> float:
        return (self.q_range[1] - self.q_range[0]) / self.shape[0]

    @property
    def dp(self) -> float:
        return (self.p_range[1] - self.p_range[0]) / self.shape[1]

    @property
    def q(self) -> NDArray[np.float64]:
        return self.q_range[0] + np.arange(self.shape[0]) * self.dq

    @property
    def p(self) -> NDArray[np.float64]:
        return self.p_range[0] + np.arange(self.shape[1]) * self.dp

    def mesh(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        return np.meshgrid(self.q, self.p, indexing="ij")

    def with_values(self, values: ArrayLike) -> SectionGrid:
        return replace(self, values=np.asarray(values, dtype=complex))

    def interior_mask(self, margin: int = INTERIOR_MARGIN) -> NDArray[np.bool_]:
        if min(self.shape) <= 2 * margin:
            raise GridTooSmallError(f"grid {self.shape} has no interior with margin {margin}")
        mask = np.zeros(self.shape, dtype=bool)
        mask[margin:-margin, margin:-margin] = True
        return mask

    def norm(self, mask: NDArray[np.bool_] | None = None) -> float:
        values = self.values if mask is None else self.values[mask]
        return math.sqrt(float(np.sum(np.abs(values) ** 2)) * self.dq * self.dp)


def section_from_function(
    func: Callable[[NDArray[np.float64], NDArray[np.float64]], ArrayLike],
    q_range: tuple[float, float],
    p_range: tuple[float, float],
    points: int | tuple[int, int],
    boundary: Boundary = "periodic",
) -> SectionGrid:
    """Sample ``func(q, p)`` on a grid."""
    shape = (points, points) if isinstance(points, int) else points
    if min(shape) < MIN_GRID_POINTS:
        raise GridTooSmallError(f"need at least {MIN_GRID_POINTS} points per axis, got {shape}")
    q = q_range[0] + np.arange(shape[0]) * (q_range[1] - q_range[0]) / shape[0]
    p = p_range[0] + np.arange(shape[1]) * (p_range[1] - p_range[0]) / shape[1]
    qq, pp = np.meshgrid(q, p, indexing="ij")
    return SectionGrid(values=np.asarray(func(qq, pp), dtype=complex), q_range=q_range, p_range=p_range,
                       boundary=boundary)


def gaussian_section(
    half_width: float,
    points: int,
    width: float = 1.0,
    center: tuple[float, float] = (0.0, 0.0),
    wave_numbers: tuple[float, float] = (0.0, 0.0),
    boundary: Boundary = "periodic",
) -> SectionGrid:
    """A Gaussian wave packet on the square box ``[−half_width, half_width]²``."""

    def packet(q: NDArray[np.float64], p: NDArray[np.float64]) -> ComplexArray:
        envelope = np.exp(-((q - center[0]) ** 2 + (p - center[1]) ** 2) / (2.0 * width**2))
        return envelope * np.exp(1j * (wave_numbers[0] * q + wave_numbers[1] * p))

    box = (-half_width, half_width)
    return section_from_function(packet, box, box, points, boundary)


def polarized_section(
    half_width: float, points: int, wave_number: float = 0.0, width: float | None = None,
    boundary: Boundary = "periodic",
) -> SectionGrid:
    """A section independent of p: a plane wave in q, optionally with a Gaussian envelope."""

    def profile(q: NDArray[np.float64], p: NDArray[np.float64]) -> ComplexArray:
        values = np.exp(1j * wave_number * q) * np.ones_like(p)
        if width is not None:
            values = values * np.exp(-(q**2) / (2.0 * width**2))
        return values

    box = (-half_width, half_width)
    return section_from_function(profile, box, box, points, boundary)


def derivative(section: SectionGrid, axis: int) -> ComplexArray:
    """Fourth-order central derivative along ``axis`` (0 for q, 1 for p)."""
    spacing = section.dq if axis == 0 else section.dp
    values = section.values
    if section.boundary == "periodic":

        def shifted(s: int) -> ComplexArray:
            return np.roll(values, -s, axis=axis)

    else:
        pad = [(2, 2) if a == axis else (0, 0) for a in range(2)]
        padded = np.pad(values, pad)
        size = values.shape[axis]

        def shifted(s: int) -> ComplexArray:
            return np.take(padded, np.arange(2 + s, 2 + s + size), axis=axis)

    return (-shifted(2) + 8.0 * shifted(1) - 8.0 * shifted(-1) + shifted(-2)) / (12.0 * spacing)


def apply_P(section: SectionGrid, hbar: float) -> SectionGrid:
    """``P̂ψ = −iℏ ∂ψ/∂q``."""
    return section.with_values(-1j * hbar * derivative(section, 0))


def apply_Q(section: SectionGrid, hbar: float) -> SectionGrid:
    """``Q̂ψ = iℏ ∂ψ/∂p + qψ``."""
    qq, _ = section.mesh()
    return section.with_values(1j * hbar * derivative(section, 1) + qq * section.values)


def apply_prequantum_h(section: SectionGrid, hbar: float) -> SectionGrid:
    """
    Prequantum operator of the harmonic Hamiltonian ``½(q² + p²)`` in the potential ``θ = p dq``.

    ``ĥψ = −iℏ(p ∂_q − q ∂_p)ψ + ½(q² − p²)ψ``; it does not preserve the vertical polarization.
    """
    qq, pp = section.mesh()
    flow = pp * derivative(section, 0) - qq * derivative(section, 1)
    return section.with_values(-1j * hbar * flow + 0.5 * (qq**2 - pp**2) * section.values)


@dataclass(frozen=True)
class PrequantumOperator:
    """One of the prequantum operators ``P̂``, ``Q̂`` or ``ĥ`` at a fixed ℏ."""

    identifier: OperatorId
    hbar: float

    def __post_init__(self) -> None:
        if not self.hbar > 0:
            raise ValueError(f"hbar must be positive, got {self.hbar!r}")

    def apply(self, section: SectionGrid) -> SectionGrid:
        if self.identifier == "P":
            return apply_P(section, self.hbar)
        if self.identifier == "Q":
            return apply_Q(section, self.hbar)
        if self.identifier == "h":
            return apply_prequantum_h(section, self.hbar)
        raise ValueError(f"unknown prequantum operator {self.identifier!r}")


def ccr_residual(section: SectionGrid, hbar: float, margin: int = INTERIOR_MARGIN) -> float:
    """``‖[Q̂, P̂]ψ − iℏψ‖ / ‖ψ‖`` over the grid interior."""
    commutator = apply_Q(apply_P(section, hbar), hbar).values - apply_P(apply_Q(section, hbar), hbar).values
    residual = section.with_values(commutator - 1j * hbar * section.values)
    mask = section.interior_mask(margin)
    norm = section.norm(mask)
    if norm == 0:
        raise ZeroNormError("the section vanishes on the grid interior")
    return residual.norm(mask) / norm


def polarization_residual(section: SectionGrid) -> float:
    """``‖∂ψ/∂p‖ / ‖ψ‖``: zero for vertically polarized sections."""
    norm = section.norm()
    if norm == 0:
        raise ZeroNormError("the section vanishes")
    return section.with_values(derivative(section, 1)).norm() / norm


def evolve_prequantum(section: SectionGrid, hbar: float, dt: float, steps: int = 1) -> SectionGrid:
    """Advance ``iℏ ∂ψ/∂t = ĥψ`` with classical fourth-order Runge-Kutta steps."""

    def rate(values: ComplexArray) -> ComplexArray:
        return -1j / hbar * apply_prequantum_h(section.with_values(values), hbar).values

    values = section.values
    for _ in range(steps):
        k1 = rate(values)
        k2 = rate(values + 0.5 * dt * k1)
        k3 = rate(values + 0.5 * dt * k2)
        k4 = rate(values + dt * k3)
        values = values + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return section.with_values(values)


def plane_wave_section(
    half_width: float, points: int, wave_numbers: tuple[float, float], boundary: Boundary = "periodic"
) -> SectionGrid:
    """``exp(i(k_q q + k_p p))``; commensurate wave numbers are ``2πm/(2·half_width)``."""

    def wave(q: NDArray[np.float64], p: NDArray[np.float64]) -> ComplexArray:
        return np.exp(1j * (wave_numbers[0] * q + wave_numbers[1] * p))

    box = (-half_width, half_width)
    return section_from_function(wave, box, box, points, boundary)


def inner_product(left: SectionGrid, right: SectionGrid) -> complex:
    """``Σ conj(φ)ψ Δq Δp``."""
    if left.shape != right.shape:
        raise ValueError(f"grid shapes differ: {left.shape} vs {right.shape}")
    return complex(np.sum(np.conj(left.values) * right.values) * left.dq * left.dp)
