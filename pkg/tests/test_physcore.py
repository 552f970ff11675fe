import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planaron import constants as C
from planaron import physcore as pc
from planaron.exceptions import DomainError


def test_exact_constants():
    assert C.h == 6.62607015e-34
    assert C.e == 1.602176634e-19
    assert C.k_B == 1.380649e-23
    assert C.R_Q == pytest.approx(6453.2, abs=0.1)
    assert C.Phi0 == pytest.approx(2.067833848e-15, rel=1e-9)


def test_dbm_round_trip():
    for p in (-138.0, -30.0, 0.0, 10.0):
        assert C.watt_to_dbm(C.dbm_to_watt(p)) == pytest.approx(p, abs=1e-12)
    assert C.dbm_to_watt(0.0) == pytest.approx(1e-3)


def test_strong_gap_values():
    g = pc.GapModel(12.0)
    # 1.96 k_B (12 K) is 2.0268 meV; the quoted 2.028 carries rounding
    assert g(0.0) / C.meV == pytest.approx(2.028, rel=1e-3)
    assert g(6.0) / C.meV == pytest.approx(1.756, abs=1e-3)
    assert g(12.0) == 0.0


def test_weak_gap_window():
    g = pc.GapModel(12.0, pc.WEAK_NEAR_TC)
    assert g.validity == pytest.approx((10.8, 12.0))
    g(11.5)
    with pytest.raises(DomainError):
        g(6.0)


def test_unknown_coupling():
    with pytest.raises(DomainError):
        pc.GapModel(12.0, "bcs_full")


@given(st.floats(0.0, 11.99))
def test_strong_gap_monotone(T):
    g = pc.GapModel(12.0)
    assert g(T) >= g(min(T + 0.01, 12.0))


def test_mattis_bardeen_values():
    d = 2.03 * C.meV
    assert pc.mattis_bardeen(C.R_Q, delta0=d) == pytest.approx(666e-12, rel=1e-2)
    assert pc.mattis_bardeen(1300.0, delta0=d) == pytest.approx(134e-12, rel=1e-2)


@given(st.floats(1.0, 1e5), st.floats(0.1, 5.0))
def test_mattis_bardeen_inverse(R, dmev):
    d = dmev * C.meV
    L = pc.mattis_bardeen(R, "RN_to_LK", d)
    assert pc.mattis_bardeen(L, "LK_to_RN", d) == pytest.approx(R, rel=1e-12)


def test_mattis_bardeen_errors():
    with pytest.raises(DomainError):
        pc.mattis_bardeen(100.0)
    with pytest.raises(DomainError):
        pc.mattis_bardeen(100.0, "sideways", 1e-22)


def test_ab_product():
    g = pc.GapModel(2.03 * C.meV / (pc.STRONG_COUPLING_RATIO * C.k_B))
    assert pc.ab_icrn(g, 0.0) == pytest.approx(3.189e-3, rel=1e-3)
    assert 0.3 * pc.ab_icrn(g, 0.0) == pytest.approx(0.956e-3, rel=1e-3)
    val, above = pc.ab_icrn(g, 20.0, full_output=True)
    assert val == 0.0 and above


def test_ab_slope_from_weak_gap_numerically():
    # finite difference of the product just below T_c against the closed form
    from planaron.sns import ab_slope_near_tc

    g = pc.GapModel(12.0, pc.WEAK_NEAR_TC)
    dT = 1e-4
    fd = (pc.ab_icrn(g, 12.0 - dT) - pc.ab_icrn(g, 12.0 - 2 * dT)) / dT
    assert fd == pytest.approx(ab_slope_near_tc(g, 1300.0)[0], rel=1e-3)


def test_scales():
    lo = pc.diffusion_scales(0.2e-4, 2e6, 30e-9, 7.0)
    hi = pc.diffusion_scales(1.1e-4, 0.7e6, 30e-9, 7.0)
    assert lo.l_e == pytest.approx(0.03e-9, rel=0.02)
    assert hi.l_e == pytest.approx(0.47e-9, rel=0.02)
    assert pc.thermal_length(1e-4, 7.0) == pytest.approx(4.17e-9, rel=1e-3)
    assert hi.E_Th == pytest.approx(pc.thouless_energy(1.1e-4, 30e-9))


def test_scales_reject_nonpositive():
    with pytest.raises(DomainError):
        pc.diffusion_scales(0.0, 1e6, 30e-9, 7.0)
