import math

import numpy as np
import pytest

from planaron import constants as C
from planaron import cpr
from planaron import transmon as tm
from planaron.exceptions import DomainError

EC = 293e6 * C.h
EJ = 26.15e9 * C.h


def test_anharmonicity_near_minus_ec():
    s = tm.diagonalize(tm.TransmonParams.sinusoidal(EJ, EC))
    # computed value sits about 10% beyond -E_C at E_J/E_C = 89
    assert -1.15 * 293e6 < s.anharmonicity < -293e6
    assert s.convergence_shift < 1e3
    assert s.f01_asymptotic == pytest.approx(7.536e9, rel=1e-3)


@pytest.mark.parametrize("ratio", [30.0, 89.25, 400.0])
def test_mathieu_oracle(ratio):
    # at n_g = 0 the levels are E_C times the Mathieu values a_0, b_2, a_2, b_4 at q = E_J / 2 E_C
    from scipy.special import mathieu_a, mathieu_b

    q = ratio / 2
    ev = sorted([mathieu_a(0, q), mathieu_b(2, q), mathieu_a(2, q), mathieu_b(4, q)])
    f = np.diff(ev) * 293e6
    s = tm.diagonalize(tm.TransmonParams.sinusoidal(ratio * EC, EC))
    assert s.f01 == pytest.approx(f[0], rel=1e-9)
    assert s.anharmonicity == pytest.approx(f[1] - f[0], rel=1e-7)


def test_alpha_tends_to_ec_from_above():
    vals = [abs(tm.diagonalize(tm.TransmonParams.sinusoidal(r * EC, EC)).anharmonicity) for r in (50, 100, 200, 500)]
    assert np.all(np.diff(vals) < 0)
    assert vals[-1] > 293e6


def test_charge_dispersion():
    f = [tm.diagonalize(tm.TransmonParams.sinusoidal(EJ, EC, n_g=g)).f01 for g in (0.0, 0.25, 0.5)]
    assert np.ptp(f) < 1e3


def test_harmonic_limit_levels():
    s = tm.diagonalize(tm.TransmonParams.sinusoidal(EJ, EC))
    assert s.f01 == pytest.approx((math.sqrt(8 * EJ * EC) - EC) / C.h, rel=5e-3)


def test_josephson_inductance():
    assert tm.josephson_inductance(EJ) == pytest.approx(6.25e-9, rel=5e-3)
    assert EJ / EC == pytest.approx(89.25, abs=0.01)


def test_extract_ej_asymptotic_round_trip():
    f = (math.sqrt(8 * EJ * EC) - EC) / C.h
    ej, lj, ratio = tm.extract_ej(f, EC, "asymptotic")
    assert ej == pytest.approx(EJ, rel=1e-12)
    # the frequency quoted together with E_J = 26.15 GHz maps to a larger E_J
    ej2, _, _ = tm.extract_ej(7.945e9, EC, "asymptotic")
    assert ej2 / C.h == pytest.approx(28.95e9, rel=2e-3)


def test_extract_ej_numerical():
    f = tm.diagonalize(tm.TransmonParams.sinusoidal(EJ, EC)).f01
    ej, _, _ = tm.extract_ej(f, EC, "numerical")
    assert ej == pytest.approx(EJ, rel=1e-5)


def test_extract_ej_out_of_range():
    with pytest.raises(DomainError):
        tm.extract_ej(0.1e9, EC, "asymptotic")


def test_stray_participation():
    p, factor = tm.stray_participation(6.25e-9, 0.2e-9)
    assert p == pytest.approx(0.969, abs=1e-3)
    assert (1 - factor) * 293 == pytest.approx(18, abs=0.5)


def test_ballistic_channel_factor_four():
    s_sin = tm.diagonalize(tm.TransmonParams.sinusoidal(EJ, EC))
    delta = 4 * EJ
    pot = tuple(cpr.energy_phase(cpr.SingleChannel(tau=1.0, delta=delta), 12))
    s_bal = tm.diagonalize(tm.TransmonParams(EC, pot))
    ratio = s_bal.anharmonicity / s_sin.anharmonicity
    assert 0.22 <= ratio <= 0.30


def test_params_validation():
    with pytest.raises(DomainError):
        tm.TransmonParams(EC, ())
    with pytest.raises(DomainError):
        tm.TransmonParams(EC, ((0, EJ),))
    with pytest.raises(DomainError):
        tm.TransmonParams(EC, ((1, EJ),), n_cut=2)
