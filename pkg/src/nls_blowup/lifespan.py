"""Lifespan detection, epsilon sweeps, scaling regression and detuning runs.

The lifespan T_eps is the first time the grid sup of v3 reaches 1.  The
profile integrator carries a terminal event on that threshold, so detection
costs one trajectory per (case, eps).  Sweeps parallelize over a process
pool and report the log-log slope together with the empirical bracketing
constants kappa_hat = min eps^p T_eps and K_hat = max eps^p T_eps.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cases import NonlinearityCase, gauge_condition_holds
from .grids import FREQUENCY, Field, Grid
from .hopfcole import build_blowup_data, normalize_profile
from .profiles import (GrowthFit, IntegrationControls, ProfileTrajectory,
                       bootstrap, integrate)

DEFAULT_XI_GRID = Grid(512, 40.0)
HORIZON_MARGIN = 40.0


class NoCrossingError(RuntimeError):
    """The threshold was not reached before the configured horizon."""


@dataclass(frozen=True)
class LifespanRecord:
    eps: float
    T_eps: float
    case: NonlinearityCase
    theta: float
    x_star: float
    detection_tol: float


@dataclass(frozen=True)
class SweepResult:
    records: tuple
    fit: GrowthFit
    case: NonlinearityCase
    kappa_hat: float
    K_hat: float


def gaussian_profile(xi_grid: Grid | None = None, m1: float = 1.0,
                     s: int = 1, width: float = 1.0, center: float = 0.0,
                     min_period: float = 0.0) -> Field:
    """The default frequency profile: a normalized Gaussian bump.

    ``center`` shifts the bump in frequency (data concentrated away from
    the always-resonant zero mode).  ``min_period``: physical fields built
    from a sampled frequency profile are periodic with period
    2 pi / (m1 dxi); pass the physical box length here to refine the
    sampling until no periodic image can leak in.
    """
    grid = xi_grid or DEFAULT_XI_GRID
    while 2.0 * np.pi / (m1 * grid.dx) <= min_period:
        grid = Grid(2 * grid.n_points, grid.box_length)
    xi = grid.points()
    raw = Field(grid, np.exp(-(((xi - center) / width) ** 2)).astype(np.complex128),
                FREQUENCY)
    return normalize_profile(raw, m1, s=s)


def threshold_event(case: NonlinearityCase, grid: Grid, level: float = 1.0):
    """Terminal solve_ivp event firing when sup |v3| crosses ``level``."""
    from .profiles import ProfileOperators

    ops = ProfileOperators(grid)
    n = grid.n_points
    m3 = case.masses.m3

    def event(t, y):
        a3 = y.view(np.complex128)[n:]
        return float(np.max(np.abs(ops.w_apply(a3, m3, t)))) / np.sqrt(t) - level

    event.terminal = True
    event.direction = 1.0
    return event


def run_to_threshold(case: NonlinearityCase, eps: float, psi: Field | None = None,
                     horizon: float | None = None,
                     controls: IntegrationControls | None = None,
                     level: float = 1.0) -> ProfileTrajectory:
    """Bootstrap and integrate until sup |v3| = level or the horizon."""
    psi = psi if psi is not None else gaussian_profile(m1=case.masses.m1)
    if horizon is None:
        horizon = HORIZON_MARGIN * eps ** (-float(case.lifespan_order()))
    state = bootstrap(psi, eps, case, xi_grid=psi.grid)
    event = threshold_event(case, psi.grid, level=level)
    return integrate(state, case, horizon, controls=controls, events=(event,))


def detect_lifespan(case: NonlinearityCase, eps: float, psi: Field | None = None,
                    horizon: float | None = None,
                    controls: IntegrationControls | None = None,
                    detection_tol: float = 1e-3) -> LifespanRecord:
    """First crossing of sup |v3| = 1, with the phase data (theta, x*)."""
    if not gauge_condition_holds(case):
        raise ValueError("lifespan detection requires a resonant (gauge-covariant) case")
    if eps <= 0:
        raise NoCrossingError("eps = 0 gives the zero chain: no crossing ever")
    traj = run_to_threshold(case, eps, psi=psi, horizon=horizon, controls=controls)
    if traj.sup_v3(traj.t_end) < 1.0 - 1e-6:
        raise NoCrossingError(
            f"no threshold crossing before horizon t = {traj.t_end:.6g}")
    data = build_blowup_data(traj, eps, case, t_rtol=detection_tol)
    return LifespanRecord(eps, data.T_eps, case, data.theta, data.x_star,
                          detection_tol)


def _sweep_member(job):
    case, eps, psi, horizon, controls = job
    return detect_lifespan(case, eps, psi=psi, horizon=horizon, controls=controls)


def sweep(case: NonlinearityCase, eps_list, psi: Field | None = None,
          controls: IntegrationControls | None = None,
          workers: int = 1, horizon_margin: float | None = None) -> SweepResult:
    """Parallel lifespan detections plus the log-log scaling regression.

    ``horizon_margin`` scales the per-member search horizon as
    margin * eps^(-p); the default margin suits order-one profile peaks,
    while low-amplitude profiles (larger scaled lifespans) need more room.
    """
    eps_list = sorted(float(e) for e in eps_list)
    if len(eps_list) < 4:
        raise ValueError("a sweep needs at least 4 epsilon values")
    p = float(case.lifespan_order())
    jobs = [(case, e, psi,
             None if horizon_margin is None else horizon_margin * e ** -p,
             controls)
            for e in eps_list]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_sweep_member, jobs))
    else:
        records = [_sweep_member(j) for j in jobs]
    records.sort(key=lambda r: r.eps)
    log_e = np.log([r.eps for r in records])
    log_t = np.log([r.T_eps for r in records])
    coeffs, ss = np.polyfit(log_e, log_t, 1, full=True)[:2]
    slope = float(coeffs[0])
    residual = float(np.sqrt(ss[0] / log_e.size)) if ss.size else 0.0
    fit = GrowthFit(slope, float(np.exp(coeffs[1])),
                    (records[0].eps, records[-1].eps), residual)
    scaled = [r.eps ** p * r.T_eps for r in records]
    return SweepResult(tuple(records), fit, case, float(min(scaled)),
                       float(max(scaled)))


@dataclass(frozen=True)
class DetuneRow:
    delta: float
    max_sup_v3: float
    crossed: bool
    crossing_time: float | None


def detune_experiment(case: NonlinearityCase, delta_list, eps: float,
                      horizon: float | None = None,
                      psi: Field | None = None,
                      controls: IntegrationControls | None = None,
                      horizon_margin: float | None = None) -> list:
    """Max sup |v3| within the resonant case's lifespan, per detuning."""
    if horizon is None:
        search = (None if horizon_margin is None
                  else horizon_margin * eps ** -float(case.lifespan_order()))
        horizon = detect_lifespan(case, eps, psi=psi, controls=controls,
                                  horizon=search).T_eps
    rows = []
    for delta in delta_list:
        run_case = case if delta == 0.0 else case.detuned(delta)
        traj = run_to_threshold(run_case, eps, psi=psi, horizon=horizon,
                                controls=controls)
        sup = max(traj.sup_v3(t) for t in traj.checkpoints)
        crossed = traj.sup_v3(traj.t_end) >= 1.0 - 1e-6
        rows.append(DetuneRow(float(delta), float(max(sup, traj.sup_v3(traj.t_end))),
                              crossed, traj.t_end if crossed else None))
    return rows


def general_data_lower_bound_probe(seed: int, eps: float, case: NonlinearityCase,
                                   n_samples: int = 8,
                                   xi_grid: Grid | None = None,
                                   controls: IntegrationControls | None = None) -> dict:
    """Exploratory: lifespans of random smooth profiles of the same size.

    Samples are Gaussians modulated by random low-order polynomials and
    random phases, renormalized to unit weighted norm; the report compares
    the observed crossings with the sweep-scale bracket.
    """
    rng = np.random.default_rng(seed)
    grid = xi_grid or DEFAULT_XI_GRID
    xi = grid.points()
    crossings = []
    for _ in range(n_samples):
        coeff = rng.normal(size=3) + 1j * rng.normal(size=3)
        poly = coeff[0] + coeff[1] * xi + coeff[2] * xi ** 2 / 4.0
        raw = Field(grid, poly * np.exp(-(xi ** 2)), FREQUENCY)
        psi = normalize_profile(raw, case.masses.m1)
        rec = detect_lifespan(case, eps, psi=psi, controls=controls)
        crossings.append(rec.T_eps)
    p = float(case.lifespan_order())
    return {
        "seed": int(seed),
        "eps": float(eps),
        "n_samples": int(n_samples),
        "crossing_times": [float(t) for t in crossings],
        "min_crossing": float(min(crossings)),
        "scaled_min": float(min(crossings)) * eps ** p,
        "scaled_max": float(max(crossings)) * eps ** p,
    }
