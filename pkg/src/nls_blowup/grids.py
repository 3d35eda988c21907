"""Uniform periodic grids and immutable complex field containers.

The real line is truncated to a periodic box [-L/2, L/2).  All fields used
in this package are Schwartz-class at desk scale, so box truncation errors
sit far below the scheme tolerances as long as the support-escape monitor
stays quiet.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_TWO_PI = 2.0 * np.pi


class SupportEscapeError(ValueError):
    """Raised when significant mass is requested outside the represented box."""


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform grid with n_points samples on the box [-L/2, L/2)."""

    n_points: int
    box_length: float

    def __post_init__(self):
        if self.n_points < 8 or not _is_power_of_two(self.n_points):
            raise ValueError(f"n_points must be a power of two >= 8, got {self.n_points}")
        if not self.box_length > 0:
            raise ValueError(f"box_length must be positive, got {self.box_length}")

    @property
    def dx(self) -> float:
        return self.box_length / self.n_points

    @property
    def dk(self) -> float:
        """Spacing of the dual (frequency) grid."""
        return _TWO_PI / self.box_length

    def points(self) -> np.ndarray:
        return -0.5 * self.box_length + self.dx * np.arange(self.n_points)

    def wavenumbers(self) -> np.ndarray:
        """Symmetric discrete wavenumber set, in FFT storage order."""
        return self.dk * self.n_points * np.fft.fftfreq(self.n_points)

    def shifted_wavenumbers(self) -> np.ndarray:
        """Wavenumbers in monotonically increasing order."""
        return np.fft.fftshift(self.wavenumbers())

    def dual(self, m: float = 1.0) -> "Grid":
        """Grid carrying the scaled transform image (frequency variable eta/m)."""
        if not m > 0:
            raise ValueError(f"scale m must be positive, got {m}")
        return Grid(self.n_points, self.n_points * self.dk / m)

    def compatible(self, other: "Grid", rtol: float = 1e-12) -> bool:
        return self.n_points == other.n_points and abs(
            self.box_length - other.box_length
        ) <= rtol * self.box_length


PHYSICAL = "physical"
FREQUENCY = "frequency"


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples of a function on a Grid.

    ``side`` records whether the samples live on the physical line or on a
    frequency-side grid; it is bookkeeping only, the storage is identical.
    """

    grid: Grid
    values: np.ndarray
    side: str = PHYSICAL

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.complex128)
        if values.shape != (self.grid.n_points,):
            raise ValueError(
                f"values shape {values.shape} does not match grid size {self.grid.n_points}"
            )
        if not np.all(np.isfinite(values.view(np.float64))):
            raise ValueError("field contains NaN or Inf samples")
        if self.side not in (PHYSICAL, FREQUENCY):
            raise ValueError(f"unknown side {self.side!r}")
        object.__setattr__(self, "values", values)

    def with_values(self, values: np.ndarray, side: str | None = None) -> "Field":
        return Field(self.grid, values, self.side if side is None else side)

    def l2_norm(self) -> float:
        return float(np.sqrt(self.grid.dx * np.sum(np.abs(self.values) ** 2)))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def gaussian_field(grid: Grid, width: float = 1.0, center: float = 0.0,
                   momentum: float = 0.0, side: str = PHYSICAL) -> Field:
    """Gaussian test field exp(-(x-c)^2/(2 w^2)) exp(i p x)."""
    x = grid.points()
    vals = np.exp(-((x - center) ** 2) / (2.0 * width**2) + 1j * momentum * x)
    return Field(grid, vals.astype(np.complex128), side)


def trig_interpolate(field: Field, targets: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """Evaluate the band-limited (trigonometric) interpolant at arbitrary points.

    Exact for functions whose spectrum is supported on the grid's wavenumber
    set; the periodic extension is used for out-of-box targets.
    """
    targets = np.atleast_1d(np.asarray(targets, dtype=np.float64))
    coeffs = np.fft.fft(field.values) / field.grid.n_points
    k = field.grid.wavenumbers()
    x0 = field.grid.points()[0]
    out = np.empty(targets.shape, dtype=np.complex128)
    for start in range(0, targets.size, chunk):
        block = targets[start:start + chunk]
        phase = np.exp(1j * np.outer(block - x0, k))
        out[start:start + chunk] = phase @ coeffs
    return out


def outer_mass_fraction(field: Field, outer_fraction: float = 0.1) -> float:
    """Fraction of squared L2 mass sitting in the outer band of the box."""
    n = field.grid.n_points
    edge = max(1, int(round(0.5 * outer_fraction * n)))
    mass = np.abs(field.values) ** 2
    total = float(np.sum(mass))
    if total == 0.0:
        return 0.0
    return float((np.sum(mass[:edge]) + np.sum(mass[-edge:])) / total)


def check_support(field: Field, tol: float = 1e-8, outer_fraction: float = 0.1) -> None:
    frac = outer_mass_fraction(field, outer_fraction)
    if frac > tol:
        raise SupportEscapeError(
            f"{frac:.3e} of the L2 mass sits in the outer {outer_fraction:.0%} of the box"
        )
