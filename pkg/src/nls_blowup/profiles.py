"""Exact evolution of the spectral profiles alpha_j on a fixed xi grid.

The chain is transported to frequency side by alpha_j(t) = A_{m_j}(t) v_j(t).
With B_m(t) = W_m(t) the chirp deformation, the evolution is exactly

    d alpha_2 / dt = -i t^{-1/2} W_{m2}^{-1} [ C_2(t) e^{-i pi/4} (W_{m1} alpha_1)^2 ]
    d alpha_3 / dt = -i t^{-1/2} W_{m3}^{-1} [ C_3(t) Qt(W_{m1} alpha_1, W_{m2} alpha_2) ]

where Qt is the pi/4-rotated coupling and the chirps

    C_2 = e^{i (2 m1 - m2) t xi^2 / 2},   C_3 = e^{i (mu - m3) t xi^2 / 2}

collapse to 1 exactly at the resonant mass ratios (mu is the coupling's
phase weight).  Nothing is dropped: the deformation remainder is kept, so
the closed-form asymptotics become measurable outputs, and mass detuning
enters only through the explicit chirps.

alpha_1 = eps psi is constant and never integrated.  The interval (0, 1],
where the deformation operators are singular, is covered by the physical
Duhamel bootstrap.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import solve_ivp

from .cases import NonlinearityCase, Quadratic
from .chain import ChainEvaluator
from .grids import FREQUENCY, Field, Grid, trig_interpolate
from .operators import profile_A_on, scaled_dft

_SQRT_2PI = np.sqrt(2.0 * np.pi)


class ProfileOperators:
    """Cached chirp-deformation applications W_m(t)^{+-1} on one xi grid."""

    def __init__(self, grid: Grid):
        self.grid = grid
        self.xi = grid.points()
        self.xi_sq = self.xi**2
        self._dxi = grid.dx
        self._cache: dict[float, tuple] = {}

    def _tables(self, m: float):
        tab = self._cache.get(m)
        if tab is None:
            n = self.grid.n_points
            eta = m * self.xi
            dual = self.grid.dual(m)
            y = dual.points()
            y0 = y[0]
            inv_pre = np.exp(1j * eta * y0)
            inv_scale = m * self._dxi * n / (np.sqrt(m) * _SQRT_2PI)
            fwd_post = np.exp(-1j * eta * y0)
            fwd_scale = np.sqrt(m) / _SQRT_2PI * dual.dx
            tab = (y**2, inv_pre, inv_scale, fwd_post, fwd_scale)
            self._cache[m] = tab
        return tab

    def w_apply(self, values: np.ndarray, m: float, t: float,
                inverse: bool = False) -> np.ndarray:
        if not t > 0:
            raise ValueError(f"W_m requires t > 0, got {t}")
        y_sq, inv_pre, inv_scale, fwd_post, fwd_scale = self._tables(m)
        g = inv_scale * np.fft.ifft(np.fft.ifftshift(values * inv_pre))
        sign = -1.0 if inverse else 1.0
        g *= np.exp(sign * 1j * m * y_sq / (2.0 * t))
        return fwd_scale * fwd_post * np.fft.fftshift(np.fft.fft(g))


@dataclass(frozen=True, eq=False)
class ChainState:
    """Profiles at one time; alpha1 equals eps * psi by free-flow constancy."""

    t: float
    alpha1: np.ndarray
    alpha2: np.ndarray
    alpha3: np.ndarray
    eps: float
    psi: Field
    grid: Grid

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("profile states exist for t > 0 only")
        for a in (self.alpha1, self.alpha2, self.alpha3):
            if a.shape != (self.grid.n_points,):
                raise ValueError("profile arrays must match the xi grid")


def rhs_profile(state: ChainState, case: NonlinearityCase,
                ops: ProfileOperators | None = None):
    """Exact time derivatives (d alpha2/dt, d alpha3/dt) at the state's time."""
    ops = ops or ProfileOperators(state.grid)
    da2, da3 = _rhs_arrays(state.t, state.alpha1, state.alpha2, case, ops)
    return da2, da3


def _rhs_arrays(t: float, a1: np.ndarray, a2: np.ndarray,
                case: NonlinearityCase, ops: ProfileOperators):
    if not t > 0:
        raise ValueError(f"profile evolution requires t > 0, got {t}")
    m = case.masses
    amp = -1j / np.sqrt(t)
    b1 = ops.w_apply(a1, m.m1, t)
    src2 = np.exp(-1j * np.pi / 4) * b1 * b1
    delta2 = 2.0 * m.m1 - m.m2
    if delta2 != 0.0:
        src2 = src2 * np.exp(0.5j * delta2 * t * ops.xi_sq)
    da2 = amp * ops.w_apply(src2, m.m2, t, inverse=True)
    b2 = ops.w_apply(a2, m.m2, t)
    src3 = case.q_tilde(b1, b2)
    delta3 = case.phase_weight() - m.m3
    if delta3 != 0.0:
        src3 = src3 * np.exp(0.5j * delta3 * t * ops.xi_sq)
    da3 = amp * ops.w_apply(src3, m.m3, t, inverse=True)
    return da2, da3


def bootstrap(psi: Field, eps: float, case: NonlinearityCase, t0: float = 1.0,
              xi_grid: Grid | None = None, chain_grid: Grid | None = None,
              panels_per_unit: float = 48.0, gl_nodes: int = 6,
              refine_tol: float = 1e-9) -> ChainState:
    """Profiles at t0, from Duhamel quadrature of the chain over [0, t0].

    Covers the interval where the deformation operators are singular.  The
    quadrature is checked by panel doubling and the panel count is doubled
    (a few times) until consecutive refinements agree; alpha1 is pinned to
    eps * psi, its exact free-flow value.
    """
    if not t0 > 0:
        raise ValueError("t0 must be positive")
    xi_grid = xi_grid or psi.grid
    chain_grid = chain_grid or Grid(1024, 60.0)
    if eps == 0.0:
        zero = np.zeros(xi_grid.n_points, dtype=np.complex128)
        return ChainState(t0, zero.copy(), zero.copy(), zero.copy(), 0.0,
                          Field(xi_grid, _resample(psi, xi_grid), FREQUENCY), xi_grid)
    m = case.masses

    def profiles_at(panels):
        ev = ChainEvaluator(psi, eps, case, chain_grid, t0, panels, gl_nodes)
        return (profile_A_on(ev.v2(t0), m.m2, t0, xi_grid).values,
                profile_A_on(ev.v3(t0), m.m3, t0, xi_grid).values)

    a2, a3 = profiles_at(panels_per_unit)
    err = np.inf
    for doubling in range(1, 4):
        a2_fine, a3_fine = profiles_at(2**doubling * panels_per_unit)
        scale = max(float(np.max(np.abs(a2_fine))),
                    float(np.max(np.abs(a3_fine))), 1e-300)
        err = max(float(np.max(np.abs(a2 - a2_fine))),
                  float(np.max(np.abs(a3 - a3_fine)))) / scale
        if err <= refine_tol:
            break
        a2, a3 = a2_fine, a3_fine
    if err > refine_tol:
        from .chain import QuadratureError

        raise QuadratureError(
            f"bootstrap refinement disagreement {err:.3e} exceeds {refine_tol:.3e}")
    psi_local = Field(xi_grid, _resample(psi, xi_grid), FREQUENCY)
    a1 = eps * psi_local.values
    return ChainState(t0, a1, a2_fine, a3_fine, eps, psi_local, xi_grid)


def _resample(psi: Field, xi_grid: Grid) -> np.ndarray:
    if psi.grid.compatible(xi_grid):
        return psi.values.copy()
    return trig_interpolate(psi, xi_grid.points())


@dataclass
class IntegrationControls:
    rtol: float = 1e-8
    atol: float = 1e-10
    checkpoints_per_decade: int = 64
    method: str = "RK45"
    max_step: float = np.inf


class ProfileTrajectory:
    """Dense trajectory of the profile evolution with derived observables."""

    def __init__(self, state0: ChainState, case: NonlinearityCase, sol,
                 checkpoints: np.ndarray):
        self.case = case
        self.grid = state0.grid
        self.eps = state0.eps
        self.psi = state0.psi
        self.t0 = state0.t
        self.t_end = float(sol.t[-1]) if sol.t.size else self.t0
        self._alpha1 = state0.alpha1
        self._sol = sol
        self.checkpoints = checkpoints[checkpoints <= self.t_end + 1e-12]
        self.ops = ProfileOperators(self.grid)

    def state(self, t: float) -> ChainState:
        a2, a3 = self._unpack(t)
        return ChainState(t, self._alpha1.copy(), a2, a3, self.eps, self.psi, self.grid)

    def _unpack(self, t: float):
        if t < self.t0 - 1e-12 or t > self.t_end * (1 + 1e-12):
            raise ValueError(f"time {t} outside trajectory range "
                             f"[{self.t0}, {self.t_end}]")
        y = self._sol.sol(t).view(np.complex128)
        n = self.grid.n_points
        return y[:n], y[n:]

    def alpha(self, j: int, t: float) -> np.ndarray:
        if j == 1:
            return self._alpha1.copy()
        return self._unpack(t)[j - 2]

    def sup_alpha(self, j: int, t: float) -> float:
        return float(np.max(np.abs(self.alpha(j, t))))

    def w_alpha(self, j: int, t: float) -> np.ndarray:
        m = (self.case.masses.m1, self.case.masses.m2, self.case.masses.m3)[j - 1]
        return self.ops.w_apply(self.alpha(j, t), m, t)

    def sup_v(self, j: int, t: float) -> float:
        """Grid sup norm of the physical field v_j, via |v_j| = t^{-1/2} |W alpha_j| o dilation."""
        return float(np.max(np.abs(self.w_alpha(j, t)))) / np.sqrt(t)

    def sup_v3(self, t: float) -> float:
        return self.sup_v(3, t)

    def reconstruct_values(self, j: int, t: float, x_points: np.ndarray) -> np.ndarray:
        """Physical samples v_j(t, x) = M_m D(t) W_m alpha_j, at arbitrary x."""
        m = (self.case.masses.m1, self.case.masses.m2, self.case.masses.m3)[j - 1]
        w = Field(self.grid, self.w_alpha(j, t), FREQUENCY)
        x_points = np.atleast_1d(np.asarray(x_points, dtype=np.float64))
        vals = trig_interpolate(w, x_points / t)
        chirp = np.exp(1j * m * x_points**2 / (2.0 * t))
        return np.exp(-1j * np.pi / 4) / np.sqrt(t) * chirp * vals

    def rho(self, j: int, t: float, s: int = 1) -> float:
        """rho_{m_j,s}[v_j](t) computed entirely on the xi grid.

        Writing v = M D w with w = W_m alpha, conjugation moves every x
        derivative to B = t^{-1} d_xi + i m xi and the J factor to
        (i/m) d_xi w, so no physical-space chirp ever has to be resolved.
        """
        if s < 1:
            raise ValueError("rho requires s >= 1")
        m = (self.case.masses.m1, self.case.masses.m2, self.case.masses.m3)[j - 1]
        w = self.w_alpha(j, t)
        dxi = self.grid.dx
        k = self.grid.wavenumbers()

        def deriv(vals):
            return np.fft.ifft(1j * k * np.fft.fft(vals))

        def b_op(vals):
            return deriv(vals) / t + 1j * m * self.grid.points() * vals

        def l2(vals):
            return float(np.sqrt(dxi * np.sum(np.abs(vals) ** 2)))

        total, cur = 0.0, w
        for _ in range(s + 1):
            total += l2(cur)
            cur = b_op(cur)
        cur = (1j / m) * deriv(w)
        for _ in range(s):
            total += l2(cur)
            cur = b_op(cur)
        return total

    def checkpoint_table(self, s: int = 1) -> list[dict]:
        rows = []
        for t in self.checkpoints:
            row = {"t": float(t)}
            for j in (1, 2, 3):
                row[f"sup_alpha{j}"] = self.sup_alpha(j, t)
                row[f"rho{j}"] = self.rho(j, t, s)
            row["sup_v3"] = self.sup_v3(t)
            rows.append(row)
        return rows


def integrate(state: ChainState, case: NonlinearityCase, t_end: float,
              controls: IntegrationControls | None = None,
              events=None) -> ProfileTrajectory:
    """Adaptive embedded Runge-Kutta integration of the profile evolution."""
    controls = controls or IntegrationControls()
    if not t_end > state.t:
        raise ValueError("t_end must exceed the state's time")
    ops = ProfileOperators(state.grid)
    n = state.grid.n_points
    a1 = state.alpha1

    def fun(t, y):
        z = y.view(np.complex128)
        da2, da3 = _rhs_arrays(t, a1, z[:n], case, ops)
        return np.concatenate((da2, da3)).view(np.float64)

    y0 = np.concatenate((state.alpha2, state.alpha3)).astype(np.complex128)
    sol = solve_ivp(fun, (state.t, t_end), y0.view(np.float64),
                    method=controls.method, rtol=controls.rtol, atol=controls.atol,
                    max_step=controls.max_step, dense_output=True, events=events)
    if not sol.success and sol.status != 1:
        raise RuntimeError(f"profile integration failed: {sol.message}")
    n_decades = np.log10(sol.t[-1] / state.t)
    n_checkpoints = max(2, int(np.ceil(controls.checkpoints_per_decade
                                       * max(n_decades, 1e-9))))
    checkpoints = np.geomspace(state.t, sol.t[-1], n_checkpoints)
    return ProfileTrajectory(state, case, sol, checkpoints)


def asymptotic_profile(case: NonlinearityCase, j: int, t: float, eps: float,
                       psi: Field):
    """Closed-form leading term of alpha_j at the resonant mass ratio.

    Returns a Field for the components with a stated pointwise profile and a
    scalar sup-norm envelope for (U1_U2, j=3).  For the conjugate and
    modulus couplings with j = 3 only an empirical envelope exists; those
    raise ValueError.
    """
    if j not in (1, 2, 3):
        raise ValueError(f"component index must be 1, 2 or 3, got {j}")
    if t < 1:
        raise ValueError("asymptotics apply for t >= 1")
    if j == 1:
        return psi.with_values(eps * psi.values)
    if j == 2:
        vals = 2.0 * np.exp(-3j * np.pi / 4) * eps**2 * psi.values**2 * np.sqrt(t)
        return psi.with_values(vals)
    if case.kind is Quadratic.U2_SQUARED:
        vals = (8.0 / 3.0) * np.exp(-9j * np.pi / 4) * eps**4 * psi.values**4 * t**1.5
        return psi.with_values(vals)
    if case.kind is Quadratic.U1_U2:
        sup_psi = float(np.max(np.abs(psi.values)))
        return 2.0 * eps**3 * sup_psi**3 * t
    raise ValueError(
        f"no closed-form third-component coefficient for {case.kind}: envelope only")


@dataclass(frozen=True)
class GrowthFit:
    exponent: float
    coefficient: float
    window: tuple
    residual: float


def fit_growth_exponent(times, values, window=None) -> GrowthFit:
    """Least-squares power-law fit value ~ coefficient * t^exponent."""
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if window is None:
        window = (float(np.min(times)), float(np.max(times)))
    lo, hi = window
    if not hi > lo:
        raise ValueError(f"degenerate window {window}")
    mask = (times >= lo) & (times <= hi)
    if int(np.sum(mask)) < 8:
        raise ValueError("need at least 8 samples inside the window")
    if np.any(values[mask] <= 0):
        raise ValueError("growth fit requires strictly positive values")
    lt, lv = np.log(times[mask]), np.log(values[mask])
    slope, intercept = np.polyfit(lt, lv, 1)
    resid = float(np.sqrt(np.mean((lv - (slope * lt + intercept)) ** 2)))
    return GrowthFit(float(slope), float(np.exp(intercept)), (lo, hi), resid)
