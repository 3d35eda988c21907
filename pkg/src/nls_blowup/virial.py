"""Energy, virial and variance identities for the symmetric 3-wave system.

The system here is the fully coupled one
    (i d_t + (1/2m1) Lap) u1 = conj(u2) u3,
    (i d_t + (1/2m2) Lap) u2 = conj(u1) u3,
    (i d_t + (1/2m3) Lap) u3 = u1 u2,
in dimension n in {1, 2}.  Along any solution,
    dE/dt = 0,
    d/dt sum_j m_j ||x u_j||^2 = 2V - 2(m1+m2-m3) Im int |x|^2 u1 u2 conj(u3),
    dV/dt = (n/2) E + ((4-n)/2) sum_j (1/2m_j) ||grad u_j||^2,
with E the kinetic + interaction energy and V the dilation functional.
The cross term in the variance identity vanishes identically at the mass
resonance m3 = m1 + m2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cases import MassTriple
from .grids import Grid


@dataclass(frozen=True)
class FieldND:
    """Complex field on an isotropic tensor grid in dimension 1 or 2."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        n = self.grid.n_points
        if self.values.ndim not in (1, 2):
            raise ValueError("only dimensions 1 and 2 are supported")
        if self.values.shape != (n,) * self.values.ndim:
            raise ValueError(f"values shape {self.values.shape} does not match "
                             f"the tensor grid ({n},)*{self.values.ndim}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values contain NaN or Inf")
        object.__setattr__(self, "values",
                           np.ascontiguousarray(self.values, dtype=np.complex128))

    @property
    def dimension(self) -> int:
        return self.values.ndim

    @property
    def cell(self) -> float:
        return self.grid.dx ** self.dimension

    def with_values(self, values: np.ndarray) -> "FieldND":
        return FieldND(self.grid, values)

    def l2_norm(self) -> float:
        return float(np.sqrt(self.cell * np.sum(np.abs(self.values) ** 2)))


def _axis_wavenumbers(field: FieldND):
    k = field.grid.wavenumbers()
    if field.dimension == 1:
        return (k,)
    return (k[:, None], k[None, :])


def gradient(field: FieldND):
    """Tuple of spectral partial derivatives."""
    spec = np.fft.fftn(field.values)
    out = []
    for axis, k in enumerate(_axis_wavenumbers(field)):
        out.append(field.with_values(np.fft.ifftn(1j * k * spec)))
    return tuple(out)


def _coordinates(field: FieldND):
    x = field.grid.points()
    if field.dimension == 1:
        return (x,)
    return (x[:, None], x[None, :])


def _check_triple(psi):
    g, d = psi[0].grid, psi[0].dimension
    for f in psi:
        if not f.grid.compatible(g) or f.dimension != d:
            raise ValueError("fields must share one tensor grid")


def kinetic_sum(psi, masses: MassTriple) -> float:
    _check_triple(psi)
    ms = (masses.m1, masses.m2, masses.m3)
    total = 0.0
    for f, m in zip(psi, ms):
        total += sum(g.l2_norm() ** 2 for g in gradient(f)) / (2.0 * m)
    return float(total)


def interaction_integral(psi) -> float:
    _check_triple(psi)
    p1, p2, p3 = psi
    val = np.sum(p1.values * p2.values * np.conj(p3.values)) * p1.cell
    return float(2.0 * np.real(val))


def energy_E(psi, masses: MassTriple) -> float:
    """E = sum_j (1/2m_j) ||grad psi_j||^2 + 2 Re int psi1 psi2 conj(psi3)."""
    return kinetic_sum(psi, masses) + interaction_integral(psi)


def virial_V(psi) -> float:
    """V = sum_j Im int conj(psi_j) x . grad psi_j."""
    _check_triple(psi)
    total = 0.0
    for f in psi:
        xs = _coordinates(f)
        grads = gradient(f)
        acc = np.zeros_like(f.values)
        for x, g in zip(xs, grads):
            acc = acc + x * g.values
        total += float(np.imag(np.sum(np.conj(f.values) * acc) * f.cell))
    return total


def weighted_variance(psi, masses: MassTriple) -> float:
    """sum_j m_j || |x| u_j ||_{L^2}^2 in box-centered coordinates."""
    _check_triple(psi)
    ms = (masses.m1, masses.m2, masses.m3)
    total = 0.0
    for f, m in zip(psi, ms):
        r2 = sum(x ** 2 for x in _coordinates(f))
        total += m * float(np.sum(r2 * np.abs(f.values) ** 2) * f.cell)
    return total


def cross_term(psi) -> float:
    """Im int |x|^2 u1 u2 conj(u3)."""
    _check_triple(psi)
    p1, p2, p3 = psi
    r2 = sum(x ** 2 for x in _coordinates(p1))
    val = np.sum(r2 * p1.values * p2.values * np.conj(p3.values)) * p1.cell
    return float(np.imag(val))


@dataclass(frozen=True)
class VirialState:
    E: float
    V: float
    variance: float
    cross_term: float


def virial_state(psi, masses: MassTriple) -> VirialState:
    return VirialState(energy_E(psi, masses), virial_V(psi),
                       weighted_variance(psi, masses), cross_term(psi))


def energy_sign_threshold(psi, masses: MassTriple) -> float:
    """The eps* below which E[eps psi] > 0 is guaranteed.

    E[eps psi] = eps^2 (kinetic + 2 eps Re int ...); when the interaction
    is negative the bracket stays positive for eps < kinetic/(2|interaction|),
    otherwise for every eps.
    """
    kin = kinetic_sum(psi, masses)
    if kin == 0.0:
        raise ValueError("zero input profile")
    inter = interaction_integral(psi) / 2.0  # Re int psi1 psi2 conj(psi3)
    if inter >= 0.0:
        return np.inf
    return kin / (2.0 * abs(inter))


# --- time evolution -----------------------------------------------------


@dataclass(frozen=True)
class WaveControls:
    t_max: float
    dt: float = 2e-3
    n_snapshots: int = 65
    support_tol: float = 1e-6


@dataclass
class WaveTrajectory:
    times: np.ndarray
    snapshots: list  # list of FieldND triples
    dimension: int


class _WaveStepper:
    """Integrating-factor RK4 for the 3-wave right sides."""

    def __init__(self, template: FieldND, masses: MassTriple, dt: float):
        k2 = sum(k ** 2 for k in _axis_wavenumbers(template))
        ms = (masses.m1, masses.m2, masses.m3)
        self.lam = [-0.5j * k2 / m for m in ms]
        self.e_half = [np.exp(0.5 * dt * l) for l in self.lam]
        self.e_full = [e * e for e in self.e_half]
        self.dt = dt

    @staticmethod
    def _rhs(spec):
        u = [np.fft.ifftn(s) for s in spec]
        n = (np.conj(u[1]) * u[2], np.conj(u[0]) * u[2], u[0] * u[1])
        return [-1j * np.fft.fftn(f) for f in n]

    def step(self, spec):
        dt, eh, ef = self.dt, self.e_half, self.e_full
        k1 = self._rhs(spec)
        k2 = self._rhs([e * (s + 0.5 * dt * a) for e, s, a in zip(eh, spec, k1)])
        k3 = self._rhs([e * s + 0.5 * dt * b for e, s, b in zip(eh, spec, k2)])
        k4 = self._rhs([e * s + dt * eh[i] * c
                        for i, (e, s, c) in enumerate(zip(ef, spec, k3))])
        return [ef[i] * (spec[i] + dt / 6.0 * k1[i])
                + dt / 3.0 * eh[i] * (k2[i] + k3[i])
                + dt / 6.0 * k4[i] for i in range(3)]


def evolve_3wave(phi, masses: MassTriple, controls: WaveControls) -> WaveTrajectory:
    """Fixed-step pseudo-spectral evolution with uniform snapshots."""
    _check_triple(phi)
    times = np.linspace(0.0, controls.t_max, controls.n_snapshots)
    snap_dt = times[1] - times[0]
    per_snap = max(1, int(np.ceil(snap_dt / controls.dt)))
    stepper = _WaveStepper(phi[0], masses, snap_dt / per_snap)
    spec = [np.fft.fftn(f.values) for f in phi]
    snapshots = [tuple(phi)]
    for _ in times[1:]:
        for _ in range(per_snap):
            spec = stepper.step(spec)
        snapshots.append(tuple(phi[j].with_values(np.fft.ifftn(spec[j]))
                               for j in range(3)))
    _monitor_support(snapshots[-1], controls.support_tol)
    return WaveTrajectory(times, snapshots, phi[0].dimension)


def _monitor_support(psi, tol: float) -> None:
    from .grids import SupportEscapeError

    for f in psi:
        x2 = sum(x ** 2 for x in _coordinates(f))
        half = 0.45 * f.grid.box_length
        outer = float(np.sum((x2 > half ** 2) * np.abs(f.values) ** 2))
        total = float(np.sum(np.abs(f.values) ** 2))
        if total > 0 and outer / total > tol:
            raise SupportEscapeError(
                f"outer mass fraction {outer / total:.2e} exceeds {tol:.2e}; "
                "weighted identities would be contaminated")


@dataclass(frozen=True)
class IdentityReport:
    times: np.ndarray
    dE_residual: float
    variance_residual: float
    dV_residual: float
    variance_residual_no_cross: float
    cross_coefficient: float
    rows: list


def _d4(series: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order centered first derivative at interior points [2:-2]."""
    return (-series[4:] + 8.0 * series[3:-1] - 8.0 * series[1:-3]
            + series[:-4]) / (12.0 * h)


def check_identities(traj: WaveTrajectory, masses: MassTriple) -> IdentityReport:
    """Residuals of the three evolution identities over a trajectory."""
    if traj.times.size < 5:
        raise ValueError("need at least 5 uniform snapshots for the differences")
    n = traj.dimension
    states = [virial_state(s, masses) for s in traj.snapshots]
    kin = np.array([kinetic_sum(s, masses) for s in traj.snapshots])
    E = np.array([s.E for s in states])
    V = np.array([s.V for s in states])
    var = np.array([s.variance for s in states])
    cross = np.array([s.cross_term for s in states])
    h = float(traj.times[1] - traj.times[0])
    coeff = 2.0 * (masses.m1 + masses.m2 - masses.m3)

    dE = _d4(E, h)
    dvar = _d4(var, h)
    dV = _d4(V, h)
    mid = slice(2, -2)

    def rel(lhs, rhs):
        scale = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)),
                           max(1e-12, 1e-6 * float(np.max(np.abs(rhs)))))
        return np.abs(lhs - rhs) / scale

    e_res = np.abs(dE) / max(float(np.max(np.abs(E))), 1e-12)
    var_rhs = 2.0 * V[mid] - coeff * cross[mid]
    var_res = rel(dvar, var_rhs)
    var_res_nc = rel(dvar, 2.0 * V[mid])
    dv_rhs = 0.5 * n * E[mid] + 0.5 * (4 - n) * kin[mid]
    dv_res = rel(dV, dv_rhs)

    rows = [{"t": float(traj.times[mid][i]), "dE_residual": float(e_res[i]),
             "variance_residual": float(var_res[i]), "dV_residual": float(dv_res[i]),
             "cross_term": float(cross[mid][i])} for i in range(e_res.size)]
    return IdentityReport(traj.times[mid], float(np.max(e_res)),
                          float(np.max(var_res)), float(np.max(dv_res)),
                          float(np.max(var_res_nc)), coeff, rows)


def gaussian_triple(grid: Grid, dimension: int, widths=(1.0, 1.2, 0.9),
                    amps=(1.0, 1.0, 1.0), chirps=(0.0, 0.0, 0.0)):
    """Concentric Gaussians, the standard smoke-test data."""
    if dimension not in (1, 2):
        raise ValueError("dimension must be 1 or 2")
    x = grid.points()
    r2 = x ** 2 if dimension == 1 else x[:, None] ** 2 + x[None, :] ** 2
    out = []
    for w, a, c in zip(widths, amps, chirps):
        out.append(FieldND(grid, a * np.exp(-(r2 / (2.0 * w ** 2)) + 1j * c * r2)))
    return tuple(out)
