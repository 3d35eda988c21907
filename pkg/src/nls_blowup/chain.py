"""Physical-space oracle for the triangular chain.

Solves

    L_{m1} v1 = 0,   L_{m2} v2 = v1^2,   L_{m3} v3 = Q(v1, v2)

with data v1(0) = eps F_{m1}^{-1} psi, v2(0) = v3(0) = 0, by Duhamel
quadrature with exact free propagators:

    v2(t) = U_{m2}(t) w2(t),  w2(t) = -i int_0^t U_{m2}(-tau) [v1(tau)^2] dtau

and analogously for v3 with source Q(v1, v2).  The integrals accumulate on
composite Gauss-Legendre panels; w2 is stored densely in the interaction
picture (where it varies slowly) and evaluated at the nested quadrature
nodes by cubic spline.  This module is the slow, trusted reference: the
only scheme errors are panel quadrature and spline interpolation, both of
which are reported by the refinement diagnostic.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .cases import NonlinearityCase
from .grids import FREQUENCY, Field, Grid
from .operators import rho_norm, scaled_inverse_dft, sobolev_norm


class QuadratureError(RuntimeError):
    """Panel refinement failed to converge to the requested tolerance."""


def initial_data(psi: Field, eps: float, m1: float, grid: Grid,
                 s: int = 1, norm_tol: float = 1e-8):
    """Chain initial data (eps F_{m1}^{-1} psi, 0, 0) on a physical grid.

    ``psi`` must be normalized so that F_{m1}^{-1} psi has unit H^s norm;
    unnormalized input is rejected.
    """
    if psi.side != FREQUENCY:
        raise ValueError("psi must be a frequency-side field")
    base = Field(grid, scaled_inverse_dft(psi, m1, grid.points()))
    norm = sobolev_norm(base, s)
    if eps != 0.0 and abs(norm - 1.0) > norm_tol:
        raise ValueError(
            f"psi is not normalized: ||F^-1 psi||_H^{s} = {norm:.12f} (expected 1)"
        )
    zero = Field(grid, np.zeros(grid.n_points, dtype=np.complex128))
    return Field(grid, eps * base.values), zero, zero


@dataclass(frozen=True)
class ChainSolution:
    times: np.ndarray
    v1: list
    v2: list
    v3: list
    refinement_error: float


class ChainEvaluator:
    """Dense-in-time Duhamel solution of the chain on [0, t_max]."""

    def __init__(self, psi: Field, eps: float, case: NonlinearityCase, grid: Grid,
                 t_max: float, panels_per_unit: float = 16.0, gl_nodes: int = 6,
                 s: int = 1):
        if t_max <= 0:
            raise ValueError("t_max must be positive")
        self.case = case
        self.grid = grid
        self.eps = eps
        self.s = s
        self.t_max = float(t_max)
        m = case.masses
        v10, _, _ = initial_data(psi, eps, m.m1, grid, s=s)
        self._v10_hat = np.fft.fft(v10.values)
        k = grid.wavenumbers()
        self._k2 = k**2
        n_panels = max(4, int(np.ceil(panels_per_unit * t_max)))
        self.knots = np.linspace(0.0, t_max, n_panels + 1)
        nodes, weights = np.polynomial.legendre.leggauss(gl_nodes)
        self._gl = (nodes, weights)
        w2 = self._accumulate(self._source_v2, m.m2)
        self._w2_spline = CubicSpline(self.knots, w2, axis=0)
        w3 = self._accumulate(self._source_v3, m.m3)
        self._w3_spline = CubicSpline(self.knots, w3, axis=0)

    # -- free propagator on raw spectra -------------------------------------
    def _propagate(self, values: np.ndarray, m: float, t: float) -> np.ndarray:
        return np.fft.ifft(np.exp(-1j * t * self._k2 / (2.0 * m)) * np.fft.fft(values))

    def _v1_values(self, t: float) -> np.ndarray:
        return np.fft.ifft(np.exp(-1j * t * self._k2 / (2.0 * self.case.masses.m1))
                           * self._v10_hat)

    # -- Duhamel integrands, in the interaction picture of the target mass --
    def _source_v2(self, tau: float) -> np.ndarray:
        v1 = self._v1_values(tau)
        return -1j * self._propagate(v1 * v1, self.case.masses.m2, -tau)

    def _source_v3(self, tau: float) -> np.ndarray:
        v1 = self._v1_values(tau)
        v2 = self._propagate(self._w2_spline(tau), self.case.masses.m2, tau)
        return -1j * self._propagate(self.case.q(v1, v2), self.case.masses.m3, -tau)

    def _accumulate(self, source, m: float) -> np.ndarray:
        nodes, weights = self._gl
        out = np.zeros((self.knots.size, self.grid.n_points), dtype=np.complex128)
        for i in range(self.knots.size - 1):
            a, b = self.knots[i], self.knots[i + 1]
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            panel = np.zeros(self.grid.n_points, dtype=np.complex128)
            for x, w in zip(nodes, weights):
                panel += w * source(mid + half * x)
            out[i + 1] = out[i] + half * panel
        return out

    # -- public evaluation ---------------------------------------------------
    def v1(self, t: float) -> Field:
        return Field(self.grid, self._v1_values(t))

    def v2(self, t: float) -> Field:
        self._check_time(t)
        return Field(self.grid, self._propagate(self._w2_spline(t),
                                                self.case.masses.m2, t))

    def v3(self, t: float) -> Field:
        self._check_time(t)
        return Field(self.grid, self._propagate(self._w3_spline(t),
                                                self.case.masses.m3, t))

    def rho(self, j: int, t: float, s: int | None = None) -> float:
        s = self.s if s is None else s
        field = (self.v1, self.v2, self.v3)[j - 1](t)
        m = (self.case.masses.m1, self.case.masses.m2, self.case.masses.m3)[j - 1]
        return rho_norm(field, m, s, t)

    def _check_time(self, t: float) -> None:
        if t < 0 or t > self.t_max * (1 + 1e-12):
            raise ValueError(f"time {t} outside the solved range [0, {self.t_max}]")


def solve_chain(psi: Field, eps: float, case: NonlinearityCase, times,
                grid: Grid, panels_per_unit: float = 16.0, gl_nodes: int = 6,
                s: int = 1, refine_tol: float | None = None) -> ChainSolution:
    """Solve the chain and report a panel-refinement convergence diagnostic.

    The refinement error is the max relative L2 distance between v2, v3 at
    the coarse resolution and at doubled panel density; exceeding
    ``refine_tol`` raises QuadratureError.
    """
    times = np.atleast_1d(np.asarray(times, dtype=np.float64))
    t_max = float(np.max(times))
    coarse = ChainEvaluator(psi, eps, case, grid, t_max, panels_per_unit, gl_nodes, s)
    fine = ChainEvaluator(psi, eps, case, grid, t_max, 2 * panels_per_unit, gl_nodes, s)
    err = 0.0
    v1s, v2s, v3s = [], [], []
    for t in times:
        v1s.append(coarse.v1(t))
        v2s.append(coarse.v2(t))
        v3s.append(coarse.v3(t))
        for va, vb in ((v2s[-1], fine.v2(t)), (v3s[-1], fine.v3(t))):
            scale = max(vb.l2_norm(), 1e-300)
            err = max(err, float(np.sqrt(grid.dx * np.sum(
                np.abs(va.values - vb.values) ** 2))) / scale)
    if refine_tol is not None and err > refine_tol and eps != 0.0:
        raise QuadratureError(
            f"panel refinement disagreement {err:.3e} exceeds tolerance {refine_tol:.3e}"
        )
    return ChainSolution(times, v1s, v2s, v3s, err)
