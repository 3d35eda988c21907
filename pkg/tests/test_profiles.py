import numpy as np
import pytest

from nls_blowup.cases import NonlinearityCase, Quadratic
from nls_blowup.chain import ChainEvaluator
from nls_blowup.grids import Grid
from nls_blowup.profiles import (IntegrationControls, asymptotic_profile,
                                 bootstrap, fit_growth_exponent, integrate)


@pytest.fixture(scope="module")
def traj(psi, case1):
    state = bootstrap(psi, 0.8, case1, xi_grid=psi.grid)
    return integrate(state, case1, t_end=50.0)


def test_bootstrap_alpha1_is_pinned(psi, case1):
    state = bootstrap(psi, 0.5, case1, xi_grid=psi.grid)
    assert np.array_equal(state.alpha1, 0.5 * psi.values)


def test_bootstrap_zero_data(psi, case1):
    state = bootstrap(psi, 0.0, case1, xi_grid=psi.grid)
    assert not np.any(state.alpha2) and not np.any(state.alpha3)


def test_dual_representation_short_times(psi, case1, traj):
    # profile reconstruction vs the Duhamel reference on the physical grid
    grid = Grid(1024, 60.0)
    chain = ChainEvaluator(psi, 0.8, case1, grid, t_max=5.0,
                           panels_per_unit=32)
    x = grid.points()
    mask = np.abs(x) < 24.0
    for t in (1.0, 2.0, 5.0):
        for j, ref in ((2, chain.v2(t)), (3, chain.v3(t))):
            rec = traj.reconstruct_values(j, t, x[mask])
            err = (np.linalg.norm(rec - ref.values[mask])
                   / np.linalg.norm(ref.values[mask]))
            assert err < 1e-6, (t, j, err)


def test_alpha2_approaches_closed_form(psi, case1, traj):
    # alpha2 -> 2 e^{-3 i pi/4} eps^2 psi^2 sqrt(t); relative error ~ t^{-1/2}
    errs = []
    for t in (10.0, 40.0):
        ref = asymptotic_profile(case1, 2, t, 0.8, psi)
        a2 = traj.alpha(2, t)
        errs.append(np.linalg.norm(a2 - ref.values) / np.linalg.norm(ref.values))
    assert errs[1] < errs[0]
    assert errs[1] < 0.5


def test_sup_v3_equals_reconstruction_sup(traj):
    t = 10.0
    xs = t * traj.grid.points()
    vals = traj.reconstruct_values(3, t, xs)
    assert abs(np.max(np.abs(vals)) - traj.sup_v3(t)) < 1e-10


def test_rho_matches_physical_computation(psi, case1, traj):
    # at small t the physical chirp is still resolvable on a fine grid, so
    # the xi-space rho evaluation can be checked against the direct one
    from nls_blowup.grids import Field
    from nls_blowup.operators import rho_norm

    t = 1.5
    grid = Grid(8192, 70.0)
    x = grid.points()
    v2 = Field(grid, traj.reconstruct_values(2, t, x))
    direct = rho_norm(v2, case1.masses.m2, 1, t)
    from_profile = traj.rho(2, t, 1)
    assert abs(direct - from_profile) / direct < 1e-6


def test_growth_fit_recovers_synthetic_law():
    t = np.geomspace(1, 100, 40)
    fit = fit_growth_exponent(t, 2.5 * t**1.5)
    assert abs(fit.exponent - 1.5) < 1e-12
    assert abs(fit.coefficient - 2.5) < 1e-12
    assert fit.residual < 1e-12


def test_growth_fit_input_validation():
    t = np.geomspace(1, 10, 10)
    with pytest.raises(ValueError):
        fit_growth_exponent(t, -np.ones_like(t))
    with pytest.raises(ValueError):
        fit_growth_exponent(t[:4], t[:4])


def test_asymptotic_profile_envelope_and_unsupported(psi):
    case2 = NonlinearityCase.resonant(Quadratic.U1_U2)
    env = asymptotic_profile(case2, 3, 100.0, 0.5, psi)
    assert np.isscalar(env) or np.ndim(env) == 0
    for kind in (Quadratic.CONJ_U1_U2, Quadratic.ABS_U2_U2):
        with pytest.raises(ValueError):
            asymptotic_profile(NonlinearityCase.resonant(kind), 3, 100.0, 0.5, psi)


def test_integration_controls_checkpoints(psi, case1, traj):
    # ~64 checkpoints per decade by default
    decades = np.log10(traj.checkpoints[-1] / traj.checkpoints[0])
    per_decade = traj.checkpoints.size / decades
    assert 50 < per_decade < 80
