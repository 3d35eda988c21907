import numpy as np
import pytest

from nls_blowup.cases import (MassTriple, NonlinearityCase, Quadratic,
                              gauge_condition_holds, homogeneity_holds)

RESONANT_RATIOS = {
    Quadratic.U2_SQUARED: (1, 2, 4),
    Quadratic.U1_U2: (1, 2, 3),
    Quadratic.CONJ_U1_U2: (1, 2, 1),
    Quadratic.ABS_U2_U2: (1, 2, 2),
}


def test_mass_triple_validation():
    with pytest.raises(ValueError):
        MassTriple(1.0, -2.0, 3.0)
    assert MassTriple(1.0, 2.0, 4.0).detuned(0.5).m3 == 6.0


def test_resonant_ratios_and_lifespan_orders():
    orders = {Quadratic.U2_SQUARED: 4, Quadratic.U1_U2: 6,
              Quadratic.CONJ_U1_U2: 6, Quadratic.ABS_U2_U2: 4}
    for kind, (r1, r2, r3) in RESONANT_RATIOS.items():
        case = NonlinearityCase.resonant(kind)
        m = case.masses
        assert (m.m1, m.m2, m.m3) == (float(r1), float(r2), float(r3))
        assert case.lifespan_order() == orders[kind]


def test_gauge_truth_table():
    for kind in Quadratic:
        case = NonlinearityCase.resonant(kind)
        assert gauge_condition_holds(case), kind
        assert not gauge_condition_holds(case.detuned(0.2)), kind
        assert not gauge_condition_holds(case.detuned(-0.2)), kind
    # explicit off-ratio example: u2^2 coupling with masses 1:2:5
    bad = NonlinearityCase(Quadratic.U2_SQUARED, MassTriple(1.0, 2.0, 5.0))
    assert not gauge_condition_holds(bad)


def test_homogeneity():
    for kind in Quadratic:
        assert homogeneity_holds(NonlinearityCase.resonant(kind)), kind
    case = NonlinearityCase.resonant(Quadratic.ABS_U2_U2)
    z = 1.0 + 1.0j
    assert np.isclose(case.q(0.0, 3 * z), 9 * case.q(0.0, z))


def test_q_tilde_consistency():
    # q_tilde is q conjugated by the e^{-i pi/4} rotation; for the bilinear
    # couplings this costs exactly one factor e^{-i pi/4}
    rng = np.random.default_rng(3)
    z1 = rng.normal(size=8) + 1j * rng.normal(size=8)
    z2 = rng.normal(size=8) + 1j * rng.normal(size=8)
    r = np.exp(-1j * np.pi / 4)
    for kind in Quadratic:
        case = NonlinearityCase.resonant(kind)
        expected = np.exp(1j * np.pi / 4) * case.q(r * z1, r * z2)
        assert np.allclose(case.q_tilde(z1, z2), expected)
    bilinear = NonlinearityCase.resonant(Quadratic.U1_U2)
    assert np.allclose(bilinear.q_tilde(z1, z2), r * z1 * z2)


def test_phase_weight_matches_m3_only_at_resonance():
    for kind in Quadratic:
        case = NonlinearityCase.resonant(kind)
        assert abs(case.phase_weight() - case.masses.m3) < 1e-14
        assert abs(case.detuned(0.1).phase_weight()
                   - case.detuned(0.1).masses.m3) > 1e-3
