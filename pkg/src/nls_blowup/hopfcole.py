"""Hopf-Cole transform, blow-up data construction and solution reconstruction.

The exponential substitution sigma = 1 - exp(-2 m3 u3) linearizes the
derivative-quadratic third equation; blow-up of u3 is the sigma field
touching 1.  Given the (globally smooth) chain v and the phase rotation
theta picked so that v3(T, x*) = e^{i m3 theta}, the blowing-up solution is

    u1 = e^{-i m1 theta} v1,  u2 = e^{-i m2 theta} v2,
    u3 = -(1/2m3) log(1 - e^{-i m3 theta} v3).

While |sigma| < 1 the argument of the logarithm stays in the right half
plane, so the principal branch is automatically the continuous one rooted
at log 1 = 0; the branch-jump detector simply enforces |sigma| < 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .cases import MassTriple, NonlinearityCase
from .grids import FREQUENCY, Field, check_support
from .operators import scaled_inverse_dft, sobolev_norm
from .profiles import ProfileTrajectory


class BlowupReachedError(RuntimeError):
    """The sigma field has touched the unit circle: past the lifespan."""


def normalize_profile(psi_raw: Field, m1: float, s: int = 1,
                      support_tol: float = 1e-8) -> Field:
    """Rescale psi so that F_{m1}^{-1} psi has unit H^s norm.

    Idempotent; rejects zero input and profiles whose weighted derivative
    leaks out of the represented box.
    """
    if psi_raw.side != FREQUENCY:
        raise ValueError("psi must be a frequency-side field")
    if float(np.max(np.abs(psi_raw.values))) == 0.0:
        raise ValueError("cannot normalize the zero profile")
    xi = psi_raw.grid.points()
    k = psi_raw.grid.wavenumbers()
    dpsi = np.fft.ifft(1j * k * np.fft.fft(psi_raw.values))
    weighted = Field(psi_raw.grid, (1.0 + np.abs(xi)) ** max(s - 1, 0) * dpsi, FREQUENCY)
    check_support(weighted, tol=support_tol)
    from .operators import fourier_m

    base = fourier_m(psi_raw, m1, inverse=True)
    norm = sobolev_norm(base, s)
    return psi_raw.with_values(psi_raw.values / norm)


def sigma_from_u3(u3: Field, m3: float, overflow: float = 200.0) -> Field:
    """sigma = 1 - exp(-2 m3 u3), with an overflow guard on the exponent."""
    z = -2.0 * m3 * u3.values
    if float(np.max(np.real(z))) > overflow:
        raise OverflowError("exp(-2 m3 u3) overflows: u3 far past any admissible state")
    return u3.with_values(1.0 - np.exp(z))


def u3_from_sigma(sigma: Field, m3: float, branch_tol: float = 1e-12) -> Field:
    """u3 = -(1/2m3) log(1 - sigma) on the branch rooted at log 1 = 0.

    Raises BlowupReachedError when sigma touches the unit circle within the
    branch tolerance; that error is the simulated blow-up signal.
    """
    w = 1.0 - sigma.values
    if float(np.min(np.abs(w))) < branch_tol:
        raise BlowupReachedError("sigma has reached 1: blow-up time attained")
    if float(np.max(np.abs(sigma.values))) >= 1.0:
        raise BlowupReachedError("||sigma||_inf >= 1: past the lifespan")
    return sigma.with_values(-np.log(w) / (2.0 * m3))


@dataclass(frozen=True)
class BlowupData:
    phi1: Field
    theta: float
    x_star: float
    T_eps: float
    eps: float
    case: NonlinearityCase


def _refine_argmax(xs: np.ndarray, ys: np.ndarray) -> float:
    """Three-point quadratic refinement of a grid argmax."""
    i = int(np.argmax(ys))
    if i == 0 or i == ys.size - 1:
        return float(xs[i])
    y0, y1, y2 = ys[i - 1], ys[i], ys[i + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom == 0.0:
        return float(xs[i])
    shift = 0.5 * (y0 - y2) / denom
    return float(xs[i] + shift * (xs[1] - xs[0]))


def find_crossing_time(traj: ProfileTrajectory, level: float = 1.0,
                       rtol: float = 1e-3):
    """First time the grid sup of v3 crosses ``level``, bisection refined."""
    ts = traj.checkpoints
    prev_t, prev_s = ts[0], traj.sup_v3(ts[0])
    if prev_s >= level:
        raise ValueError("sup ||v3|| already above the threshold at the start")
    for t in ts[1:]:
        s = traj.sup_v3(t)
        if s >= level:
            root = brentq(lambda u: traj.sup_v3(u) - level, prev_t, t,
                          rtol=rtol, xtol=rtol * t)
            return float(root)
        prev_t, prev_s = t, s
    # trajectories stopped by a terminal crossing event end exactly at the level
    if prev_s >= level * (1.0 - 1e-6):
        return float(prev_t)
    return None


def build_blowup_data(traj: ProfileTrajectory, eps: float, case: NonlinearityCase,
                      s: int = 1, level: float = 1.0, t_rtol: float = 1e-3,
                      x_grid=None) -> BlowupData:
    """Locate (T_eps, x*, theta) on a profile trajectory and build phi1.

    phi1 = eps e^{-i m1 theta} F_{m1}^{-1} psi carries H^s norm eps for any
    theta (the prefactor is unimodular).
    """
    T = find_crossing_time(traj, level=level, rtol=t_rtol)
    if T is None:
        raise ValueError("trajectory never crosses the blow-up threshold")
    m = case.masses
    # physical samples of v3(T) on the dilation image of the xi grid
    xi = traj.grid.points()
    w3 = traj.w_alpha(3, T)
    mod = np.abs(w3) / np.sqrt(T)
    xs = T * xi
    x_star = _refine_argmax(xs, mod)
    v3_star = traj.reconstruct_values(3, T, np.array([x_star]))[0]
    theta = float(np.angle(v3_star) / m.m3)
    grid = x_grid or traj.psi.grid.dual(m.m1)
    base = scaled_inverse_dft(traj.psi, m.m1, grid.points())
    phi1 = Field(grid, eps * np.exp(-1j * m.m1 * theta) * base)
    return BlowupData(phi1, theta, x_star, float(T), eps, case)


def reconstruct_u(chain, theta: float, masses: MassTriple, times,
                  upsample: int = 1):
    """Blowing-up solution (u1, u2, u3) from the smooth chain at given times.

    ``chain`` is a ChainEvaluator; ``upsample`` spectrally refines the grid
    before the logarithm so the near-singular peak of u3 is resolved.
    """
    out = []
    for t in times:
        v1, v2, v3 = chain.v1(t), chain.v2(t), chain.v3(t)
        if upsample > 1:
            v1, v2, v3 = (_spectral_upsample(v, upsample) for v in (v1, v2, v3))
        u1 = v1.with_values(np.exp(-1j * masses.m1 * theta) * v1.values)
        u2 = v2.with_values(np.exp(-1j * masses.m2 * theta) * v2.values)
        sigma = v3.with_values(np.exp(-1j * masses.m3 * theta) * v3.values)
        u3 = u3_from_sigma(sigma, masses.m3)
        out.append((u1, u2, u3))
    return out


def _spectral_upsample(field: Field, factor: int) -> Field:
    from .grids import Grid

    n = field.grid.n_points
    spec = np.fft.fftshift(np.fft.fft(field.values))
    pad = (factor - 1) * n // 2
    spec = np.pad(spec, (pad, pad)) * factor
    vals = np.fft.ifft(np.fft.ifftshift(spec))
    return Field(Grid(factor * n, field.grid.box_length), vals, field.side)
