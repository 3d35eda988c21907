"""End-to-end acceptance suite.

The conftest terminal-summary hook prints exactly one PASS/FAIL line
per criterion, so the suite output doubles as the acceptance report.  The
numbered criteria cover: (1) operator identities, (2) deformation decay,
(3) profile asymptotics, (4) the dual-representation oracle, (5) lifespan
scaling laws, (6) the blow-up construction round trip, (7) direct-solver
cross-validation, (8) resonance necessity, (9) virial identities.
"""
import numpy as np
import pytest

from nls_blowup.cases import MassTriple, NonlinearityCase, Quadratic, \
    gauge_condition_holds
from nls_blowup.chain import ChainEvaluator
from nls_blowup.fullsolver import SolverControls, cross_validate, evolve_full
from nls_blowup.grids import FREQUENCY, Grid, gaussian_field
from nls_blowup.hopfcole import build_blowup_data, reconstruct_u
from nls_blowup.lifespan import (detune_experiment, gaussian_profile,
                                 run_to_threshold, sweep)
from nls_blowup.operators import (identity_suite, sobolev_norm,
                                  spectral_derivative, w_decay_statistic)
from nls_blowup.profiles import bootstrap, fit_growth_exponent, integrate
from nls_blowup.virial import (WaveControls, check_identities, energy_E,
                               energy_sign_threshold, evolve_3wave,
                               gaussian_triple)

ALL_KINDS = (Quadratic.U2_SQUARED, Quadratic.U1_U2, Quadratic.CONJ_U1_U2,
             Quadratic.ABS_U2_U2)


def test_criterion_1_operator_identities():
    report = identity_suite()
    factor = report.pop("factorization")
    assert factor < 1e-8
    for name, residual in report.items():
        assert residual < 1e-10, f"{name} residual {residual:.3e}"


def test_criterion_2_deformation_decay():
    grid = Grid(2048, 80.0)
    fields = (gaussian_field(grid, width=1.0, side=FREQUENCY),
              gaussian_field(grid, width=0.5, center=3.0, momentum=1.0,
                             side=FREQUENCY),
              gaussian_field(grid, width=2.0, momentum=-0.5, side=FREQUENCY))
    times = np.geomspace(1.0, 1e4, 9)
    for f in fields:
        stats = np.array([w_decay_statistic(f, 1.0, t) for t in times])
        assert np.all(np.isfinite(stats))
        # bounded, with no increasing trend over the time range
        slope = np.polyfit(np.log(times), np.log(stats), 1)[0]
        assert slope < 0.02
        assert stats[-1] <= stats[0]


def test_criterion_3_profile_asymptotics():
    psi = gaussian_profile()
    case = NonlinearityCase.resonant(Quadratic.U2_SQUARED)
    eps = 0.6
    traj = integrate(bootstrap(psi, eps, case, xi_grid=psi.grid), case, 1e4)
    ts = np.array([t for t in traj.checkpoints if 1e3 <= t <= 1e4])
    a2 = np.array([traj.sup_alpha(2, t) for t in ts])
    a3 = np.array([traj.sup_alpha(3, t) for t in ts])
    assert abs(fit_growth_exponent(ts, a2).exponent - 0.5) < 0.05
    assert abs(fit_growth_exponent(ts, a3).exponent - 1.5) < 0.05
    target = (8.0 / 3.0) * float(np.max(np.abs(psi.values))) ** 4 * eps ** 4
    assert np.max(np.abs(a3 / ts ** 1.5 / target - 1.0)) < 0.10


def test_criterion_4_dual_representation():
    grid = Grid(8192, 480.0)
    psi = gaussian_profile(min_period=grid.box_length)
    eps = 0.8
    xs = grid.points()
    for kind in ALL_KINDS:
        case = NonlinearityCase.resonant(kind)
        traj = integrate(bootstrap(psi, eps, case, xi_grid=psi.grid),
                         case, 50.0)
        chain = ChainEvaluator(psi, eps, case, grid, 50.0,
                               panels_per_unit=24)
        for t in np.geomspace(1.0, 50.0, 5):
            # the profile representation is valid on one dilation period
            half = min(0.5 * t * psi.grid.box_length,
                       0.5 * grid.box_length) * 0.999
            sel = np.abs(xs) <= half
            for j, vf in ((2, chain.v2), (3, chain.v3)):
                direct = vf(t).values
                total = float(np.sum(np.abs(direct) ** 2))
                outside = float(np.sum(np.abs(direct[~sel]) ** 2)) / total
                assert outside < 1e-12, f"{kind.name} t={t}: window leak"
                recon = traj.reconstruct_values(j, t, xs[sel])
                rel = np.sqrt(
                    float(np.sum(np.abs(direct[sel] - recon) ** 2)) / total)
                assert rel < 1e-6, f"{kind.name} t={t} v{j}: rel={rel:.3e}"


def test_criterion_5_lifespan_scaling():
    psi = gaussian_profile(width=4.0)
    eps_list = np.geomspace(0.4, 1.0, 5)
    for kind in ALL_KINDS:
        case = NonlinearityCase.resonant(kind)
        p = float(case.lifespan_order())
        tol = 0.15 if p == 4 else 0.2
        result = sweep(case, eps_list, psi=psi, workers=2,
                       horizon_margin=1e5)
        assert abs(result.fit.exponent + p) < tol, \
            f"{kind.name}: slope {result.fit.exponent:.3f}"
        assert result.fit.residual < 0.05
        ts = [r.T_eps for r in result.records]
        assert all(a > b for a, b in zip(ts, ts[1:]))
        assert result.K_hat / result.kappa_hat < 10.0


def test_criterion_6_blowup_round_trip():
    case = NonlinearityCase.resonant(Quadratic.U2_SQUARED)
    eps = 0.8
    grid = Grid(2048, 160.0)
    psi = gaussian_profile(min_period=grid.box_length)
    traj = run_to_threshold(case, eps, psi=psi)
    data = build_blowup_data(traj, eps, case)
    T = data.T_eps
    m = case.masses
    chain = ChainEvaluator(psi, eps, case, grid, T * (1.0 - 1e-6),
                           panels_per_unit=16)

    # H^1 blow-up signature along a ladder approaching T_eps
    ladder = [0.5 * T] + [T * (1.0 - 10.0 ** -k) for k in (1, 2, 3, 4, 5)]
    us = reconstruct_u(chain, data.theta, m, ladder, upsample=16)
    norms = [sobolev_norm(u[2], 1) for u in us]
    assert all(a < b for a, b in zip(norms, norms[1:]))
    assert norms[-1] > 10.0 * norms[0]

    # full-system residual from a 4th-order time stencil at sigma < 0.9
    tc, h = 0.8 * T, 1e-2
    us = reconstruct_u(chain, data.theta, m,
                       [tc + k * h for k in (-2, -1, 0, 1, 2)])
    u1, u2, u3 = (us[2][j].values for j in range(3))
    assert np.max(np.abs(1.0 - np.exp(-2.0 * m.m3 * u3))) <= 0.9
    for j, mass in ((0, m.m1), (1, m.m2), (2, m.m3)):
        vals = [u[j].values for u in us]
        dudt = (-vals[4] + 8 * vals[3] - 8 * vals[1] + vals[0]) / (12.0 * h)
        lap = spectral_derivative(spectral_derivative(us[2][j])).values
        if j == 0:
            nl = np.zeros_like(u1)
        elif j == 1:
            nl = u1 ** 2
        else:
            du3 = spectral_derivative(us[2][2]).values
            nl = du3 ** 2 + case.q(u1, u2) * np.exp(2 * m.m3 * u3) / (2 * m.m3)
        res = 1j * dudt + lap / (2.0 * mass) - nl
        scale = max(float(np.max(np.abs(dudt))),
                    float(np.max(np.abs(lap))) / (2.0 * mass),
                    float(np.max(np.abs(nl))), 1e-300)
        assert float(np.max(np.abs(res))) / scale < 1e-5


def test_criterion_7_full_solver_cross_validation():
    case = NonlinearityCase.resonant(Quadratic.U2_SQUARED)
    report = cross_validate(case, 0.8)
    assert report["halt_reason"] == "sigma_cap"
    assert report["max_rel_err"] < 1e-4

    # step halving on a fixed-step run shrinks the error at scheme order
    grid = Grid(256, 40.0)
    phi1 = gaussian_field(grid, width=1.0, momentum=0.3)
    zero = phi1.with_values(np.zeros_like(phi1.values))
    phi = (phi1, phi1.with_values(0.2 * phi1.values), zero)
    ref = evolve_full(phi, case, SolverControls(t_max=0.25, dt_init=6.25e-4,
                                                adaptive=False),
                      snapshot_times=[0.25]).at(0.25)
    errs = []
    for dt in (1e-2, 5e-3):
        u = evolve_full(phi, case, SolverControls(t_max=0.25, dt_init=dt,
                                                  adaptive=False),
                        snapshot_times=[0.25]).at(0.25)
        errs.append(max(float(np.max(np.abs(u[j].values - ref[j].values)))
                        for j in range(3)))
    assert np.log2(errs[0] / errs[1]) > 3.5


def test_criterion_8_resonance_necessity():
    # data concentrated away from frequency zero: detuning m3 removes
    # every resonant wave pair from the data's support
    case = NonlinearityCase.resonant(Quadratic.U2_SQUARED)
    psi = gaussian_profile(center=2.0)
    rows = detune_experiment(case, [-0.2, 0.0, 0.2], 0.8, psi=psi,
                             horizon_margin=4000.0)
    by_delta = {r.delta: r for r in rows}
    assert by_delta[0.0].crossed
    assert by_delta[-0.2].max_sup_v3 < 0.5
    assert by_delta[0.2].max_sup_v3 < 0.5

    # gauge predicate truth table: each kind passes exactly its own ratio
    ratios = {Quadratic.U2_SQUARED: (1.0, 2.0, 4.0),
              Quadratic.U1_U2: (1.0, 2.0, 3.0),
              Quadratic.CONJ_U1_U2: (1.0, 2.0, 1.0),
              Quadratic.ABS_U2_U2: (1.0, 2.0, 2.0)}
    for kind in ALL_KINDS:
        for other, (m1, m2, m3) in ratios.items():
            holds = gauge_condition_holds(
                NonlinearityCase(kind, MassTriple(m1, m2, m3)))
            assert holds == (other is kind), (kind, other)


def test_criterion_9_virial_identities():
    grid = Grid(128, 24.0)
    resonant = MassTriple(1.0, 2.0, 3.0)
    off = MassTriple(1.0, 2.0, 2.4)
    for dim in (1, 2):
        psi = gaussian_triple(grid, dim, chirps=(0.1, -0.05, 0.08))
        controls = WaveControls(t_max=1.0, dt=2e-3, n_snapshots=33)
        report = check_identities(evolve_3wave(psi, resonant, controls),
                                  resonant)
        assert report.cross_coefficient == 0.0
        assert report.dE_residual < 1e-6
        assert report.variance_residual < 1e-4
        assert report.dV_residual < 1e-4
        ablated = check_identities(evolve_3wave(psi, off, controls), off)
        assert ablated.variance_residual_no_cross > \
            10.0 * ablated.variance_residual

    psi = gaussian_triple(grid, 1, amps=(1.0, 1.0, -1.0))
    eps_star = energy_sign_threshold(psi, resonant)
    for eps in (0.25 * eps_star, 0.5 * eps_star, 0.99 * eps_star):
        scaled = tuple(f.with_values(eps * f.values) for f in psi)
        assert energy_E(scaled, resonant) > 0.0
