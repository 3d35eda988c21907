import numpy as np
import pytest

from nls_blowup.cases import NonlinearityCase, Quadratic
from nls_blowup.fullsolver import (NonlinearOverflowError, SolverControls,
                                   evolve_full, nonlinearity)
from nls_blowup.grids import Field, Grid, gaussian_field

GRID = Grid(256, 40.0)
CASE = NonlinearityCase.resonant(Quadratic.U2_SQUARED)


def _zero():
    return Field(GRID, np.zeros(GRID.n_points, complex))


def test_controls_validation():
    with pytest.raises(ValueError):
        SolverControls(t_max=-1.0)
    with pytest.raises(ValueError):
        SolverControls(t_max=1.0, dealias=0.0)
    with pytest.raises(ValueError):
        SolverControls(t_max=1.0, sigma_cap=1.0)
    with pytest.raises(ValueError):
        SolverControls(t_max=1.0, dt_init=0.0)


def test_nonlinearity_structure():
    g = gaussian_field(GRID, width=1.5)
    n1, n2, n3 = nonlinearity((g, g, _zero()), CASE)
    assert np.all(n1.values == 0)
    assert np.max(np.abs(n2.values - g.values**2)) < 1e-14
    # u3 = 0 kills the derivative-squared term, leaving q(u1, u2) / (2 m3)
    expected = CASE.q(g.values, g.values) / (2 * CASE.masses.m3)
    assert np.max(np.abs(n3.values - expected)) < 1e-14


def test_nonlinearity_overflow_guard():
    big = Field(GRID, np.full(GRID.n_points, 10.0 + 0j))
    with pytest.raises(NonlinearOverflowError):
        nonlinearity((_zero(), _zero(), big), CASE)


def test_first_component_stays_free_and_conserved():
    phi1 = gaussian_field(GRID, width=1.0)
    phi = (phi1, _zero(), _zero())
    controls = SolverControls(t_max=1.0, dt_init=5e-3)
    traj = evolve_full(phi, CASE, controls, snapshot_times=[0.0, 1.0])
    assert traj.halt_reason == "t_max"
    assert traj.l2_u1_drift < 1e-12

    u1 = traj.at(1.0)[0]
    x = GRID.points()
    m, t = CASE.masses.m1, 1.0
    z = 1.0 + 1j * t / m
    exact = z**-0.5 * np.exp(-x**2 / (2.0 * z))
    assert np.max(np.abs(u1.values - exact)) < 1e-9


def test_fixed_step_error_shrinks_at_fourth_order():
    phi1 = gaussian_field(GRID, width=1.0, momentum=0.3)
    phi = (phi1, phi1.with_values(0.2 * phi1.values), _zero())
    errs = []
    ref = evolve_full(phi, CASE,
                      SolverControls(t_max=0.25, dt_init=6.25e-4,
                                     adaptive=False),
                      snapshot_times=[0.25]).at(0.25)
    for dt in (1e-2, 5e-3):
        traj = evolve_full(phi, CASE,
                           SolverControls(t_max=0.25, dt_init=dt,
                                          adaptive=False),
                           snapshot_times=[0.25])
        u = traj.at(0.25)
        errs.append(max(np.max(np.abs(u[j].values - ref[j].values))
                        for j in range(3)))
    order = np.log2(errs[0] / errs[1])
    assert order > 3.5


def test_initial_sigma_beyond_cap_rejected():
    u3 = Field(GRID, np.full(GRID.n_points, 0.4 + 0j))
    with pytest.raises(ValueError):
        evolve_full((_zero(), _zero(), u3), CASE,
                    SolverControls(t_max=1.0, sigma_cap=0.5))
