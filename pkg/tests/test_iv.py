import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planaron import constants as C
from planaron import iv, synthetic
from planaron.exceptions import SchemaError


def test_rsj_features():
    f = iv.extract_features(synthetic.rsj_iv(1e-6, 1e3))
    assert f.I_c == pytest.approx(1e-6, rel=0.01)
    assert f.R_N == pytest.approx(1e3, rel=0.01)
    assert f.icrn == pytest.approx(1e-3, rel=0.02)
    assert f.phase == iv.SUPERCONDUCTING and f.rule == "slope"


@given(st.floats(-7.7, -4.0), st.floats(0.5, 4.5))
@settings(max_examples=20, deadline=None)
def test_device_family_range(log_ic, log_rn):
    # I_c from 20 nA to 100 uA, products inside the measured scale
    ic, rn = 10**log_ic, 10**log_rn
    f = iv.extract_features(synthetic.rsj_iv(ic, rn))
    assert f.I_c == pytest.approx(ic, rel=0.01)
    assert f.R_N == pytest.approx(rn, rel=0.01)


@pytest.mark.parametrize("icrn", [0.24e-3, 0.44e-3])
def test_measured_scale_products(icrn):
    f = iv.extract_features(synthetic.rsj_iv(1e-6, icrn / 1e-6))
    assert f.icrn == pytest.approx(icrn, rel=0.02)


def test_reversed_sweep_identical():
    c = synthetic.rsj_iv(1e-6, 1e3)
    rev = iv.IVCurve(c.I[::-1], c.V[::-1], "down")
    a, b = iv.extract_features(c), iv.extract_features(rev)
    assert (a.I_c, a.R_N) == (b.I_c, b.R_N)


def test_curvature_rule_for_rounded_curve():
    I = np.linspace(-20e-6, 20e-6, 4001)
    V = 1e3 * np.sign(I) * np.sqrt(I * I + (0.3e-6) ** 2) - 1e3 * np.sign(I) * 0.3e-6
    V = 1e3 * np.sign(I) * np.sqrt(np.clip(I * I - 1e-12, 0, None)) + 0.05 * 1e3 * I
    f = iv.extract_features(iv.IVCurve(I, V))
    assert f.rule == "curvature"
    assert f.I_c == pytest.approx(1e-6, rel=0.05)


def test_hysteresis_flag():
    up = synthetic.rsj_iv(1e-6, 1e3)
    down = synthetic.rsj_iv(0.5e-6, 1e3)
    assert iv.extract_features(up, partner=down).hysteretic
    assert not iv.extract_features(up, partner=up).hysteretic


def test_ohmic_curve_rejected():
    I = np.linspace(-1e-6, 1e-6, 201)
    with pytest.raises(iv.ExtractionError):
        iv.extract_features(iv.IVCurve(I, 1e3 * I))


def test_blockade():
    c = synthetic.blockade_iv()
    V_c, R_low, above_gap = iv.extract_insulating(c, gap=2.03 * C.meV)
    assert V_c == pytest.approx(5e-3, rel=0.01)
    assert R_low == pytest.approx(200e6, rel=1e-6)
    assert R_low > 100e6
    assert above_gap  # threshold 2 Delta / e = 4.06 mV
    assert 2 * 2.03 * C.meV / C.e == pytest.approx(4.06e-3)
    f = iv.extract_features(c)
    assert f.phase == iv.INSULATING and f.V_c == pytest.approx(5e-3, rel=0.01)


def test_blockade_below_gap():
    c = synthetic.blockade_iv(V_c=3e-3)
    assert not iv.extract_insulating(c, gap=2.03 * C.meV)[2]


def test_curve_validation():
    with pytest.raises(SchemaError):
        iv.IVCurve([0, 1, 1, 2, 3], [0, 0, 0, 1, 2])
    with pytest.raises(SchemaError):
        iv.IVCurve([0, 1, 2], [0, 0, 1])


def test_transformer():
    curves = [synthetic.rsj_iv(1e-6, 1e3), synthetic.blockade_iv()]
    tr = iv.IVFeatureExtractor()
    X = tr.fit_transform(curves)
    assert X.shape == (2, 4)
    assert np.isnan(X[0, 3]) and X[1, 3] == pytest.approx(5e-3, rel=0.01)
    assert list(tr.get_feature_names_out()) == ["I_c_A", "R_N_ohm", "icrn_V", "V_c_V"]
