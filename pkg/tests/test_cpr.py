import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planaron import constants as C
from planaron import cpr
from planaron.exceptions import DomainError, SchemaError

DELTA = 2.03 * C.meV


def test_sinusoidal_peak():
    ic, phi = cpr.critical_current(cpr.Sinusoidal(1e-6))
    assert ic == pytest.approx(1e-6, rel=1e-12)
    assert phi == pytest.approx(math.pi / 2, abs=1e-6)


def test_resonant_level_peak_oracle():
    m = cpr.ResonantLevel(E_Th=0.14, delta=1.0, R_N=1.0)
    ic, phi = cpr.critical_current(m)
    assert ic * C.e == pytest.approx(0.498, abs=1e-3)
    assert phi == pytest.approx(1.64, abs=0.01)
    # dense grid check of the refined maximum
    grid = np.linspace(0, math.pi, 200001)
    assert ic == pytest.approx(np.max(cpr.cpr_current(m, grid)), rel=1e-8)


@given(st.floats(0.02, 0.6))
@settings(max_examples=25, deadline=None)
def test_resonant_level_forward_skewed(x):
    _, phi = cpr.critical_current(cpr.ResonantLevel(E_Th=x * DELTA, delta=DELTA, R_N=1e3))
    assert math.pi / 2 < phi < math.pi


def test_eth_inversion():
    eth = cpr.eth_from_icrn(0.3, DELTA)
    assert eth / DELTA == pytest.approx(0.13, abs=0.01)
    ratio = cpr.resonant_peak(0.05) / (math.pi / 2)
    assert cpr.eth_from_icrn(ratio, 1.0) == pytest.approx(0.05, abs=1e-6)


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.2])
def test_eth_inversion_domain(bad):
    with pytest.raises(DomainError):
        cpr.eth_from_icrn(bad, DELTA)


def test_harmonic_skew_regression():
    h = cpr.harmonics(cpr.ResonantLevel(E_Th=0.14 * DELTA, delta=DELTA, R_N=1e3), 5)
    r = h.coeffs[1][1] / h.coeffs[0][1]
    assert r < 0
    assert r == pytest.approx(-0.0395788, abs=1e-6)
    # truncation at K = 5 leaves a small reconstruction error
    assert h.residual < 5e-3 * h.coeffs[0][1]
    assert cpr.harmonics(cpr.ResonantLevel(E_Th=0.14 * DELTA, delta=DELTA, R_N=1e3), 40).residual < h.residual


def test_harmonic_series_exact():
    m = cpr.HarmonicSeries(((1, 1e-6), (2, 3e-7)))
    h = cpr.harmonics(m, 4)
    assert dict(h.coeffs) == {1: 1e-6, 2: 3e-7, 3: 0.0, 4: 0.0}
    phi = np.linspace(-3, 3, 11)
    np.testing.assert_allclose(h(phi), cpr.cpr_current(m, phi), atol=1e-18)


def test_single_channel_ballistic_limit():
    # tau = 1 gives (e Delta / hbar) sin(phi / 2), peaked at pi
    m = cpr.SingleChannel(tau=1.0, delta=DELTA)
    ic, phi = cpr.critical_current(m)
    assert ic == pytest.approx(C.e * DELTA / C.hbar, rel=1e-6)
    assert phi == pytest.approx(math.pi, abs=1e-3)


def test_energy_phase_ej():
    # I_c = 52 nA corresponds to E_J / h of about 26 GHz
    ek = cpr.energy_phase(cpr.Sinusoidal(52e-9), 1)
    assert ek[0][1] / C.h == pytest.approx(25.83e9, rel=1e-3)


def test_odd_and_periodic():
    m = cpr.ResonantLevel(E_Th=0.2 * DELTA, delta=DELTA, R_N=500.0)
    phi = np.linspace(-3.0, 3.0, 31)
    np.testing.assert_allclose(cpr.cpr_current(m, -phi), -cpr.cpr_current(m, phi), rtol=1e-12)
    np.testing.assert_allclose(cpr.cpr_current(m, phi + 2 * math.pi), cpr.cpr_current(m, phi), rtol=1e-9, atol=1e-20)


@pytest.mark.parametrize(
    "model",
    [
        cpr.Sinusoidal(1e-6),
        cpr.ResonantLevel(E_Th=1e-23, delta=DELTA, R_N=1e3),
        cpr.HarmonicSeries(((1, 1e-6), (2, -2e-7))),
        cpr.SingleChannel(tau=0.7, delta=DELTA),
    ],
)
def test_serialization_round_trip(model):
    assert cpr.loads(cpr.dumps(model)) == model
    assert cpr.from_dict(cpr.to_dict(model)) == model


def test_from_dict_errors():
    with pytest.raises(SchemaError):
        cpr.from_dict({"type": "triangle"})
    with pytest.raises(SchemaError):
        cpr.from_dict({"type": "sinusoidal", "I_c": 1e-6, "extra": 1})


def test_invalid_models():
    with pytest.raises(DomainError):
        cpr.SingleChannel(tau=1.5, delta=DELTA)
