import math

import numpy as np
import pytest

from planaron import constants as C
from planaron import films, synthetic
from planaron.exceptions import InsufficientDataError, NoTransitionError, SchemaError, DomainError

THICK = np.linspace(1.5, 6.0, 30)


def test_family_classification():
    fam = synthetic.film_family(THICK)
    for s in fam:
        c = films.classify_phase(s)
        expected = films.INSULATING if s.thickness < 2.75 else films.SUPERCONDUCTING
        assert c.phase == expected


def test_critical_thickness_strictly_inside():
    fam = synthetic.film_family(THICK)
    ct = films.critical_thickness(fam)
    lo, hi = ct.bracket
    assert lo < ct.d_c < hi
    assert lo < 2.75 < hi
    d_c, r = ct
    assert d_c == ct.d_c and r == ct.R_s_at_dc


def test_resistance_at_dc_near_rq():
    # members placed symmetrically about d_c
    fam = synthetic.film_family([2.5, 3.0], noise=0.0)
    ct = films.critical_thickness(fam)
    assert ct.d_c == pytest.approx(2.75)
    assert ct.R_s_at_dc == pytest.approx(C.R_Q, rel=0.25)


def test_order_invariance():
    fam = synthetic.film_family(THICK, seed=2)
    a = films.critical_thickness(fam)
    b = films.critical_thickness(fam[::-1])
    assert a.d_c == b.d_c and a.bracket == b.bracket


def test_scale_invariance_of_class():
    s = synthetic.film_family([2.0, 4.0])
    for member in s:
        for k in (1e-3, 3.0, 1e4):
            assert films.classify_phase(member.scaled(k), tol=k).phase == films.classify_phase(member).phase


def test_constructed_classes():
    # 1-40 K puts the 10 K step inside the lowest quarter of the range
    T = np.linspace(1, 40, 157)
    flat = films.RsTSeries(3.0, T, np.full(T.size, 6450.0))
    assert films.classify_phase(flat).phase == films.FLAT
    step = films.RsTSeries(3.0, T, np.where(T < 10, 0.0, 5000.0))
    assert films.classify_phase(step).phase == films.SUPERCONDUCTING
    rising = films.RsTSeries(3.0, T, 100 * np.exp(-T / 2))
    assert films.classify_phase(rising).phase == films.INSULATING


def test_single_class_family():
    fam = synthetic.film_family([4.0, 5.0, 6.0])
    with pytest.raises(NoTransitionError):
        films.critical_thickness(fam)


def test_too_few_points():
    s = films.RsTSeries(3.0, np.linspace(2, 30, 8), np.ones(8))
    with pytest.raises(InsufficientDataError):
        films.classify_phase(s)


def test_series_validation():
    with pytest.raises((SchemaError, DomainError)):
        films.RsTSeries(3.0, [3.0, 2.0, 4.0], [1.0, 1.0, 1.0])
    with pytest.raises((SchemaError, DomainError)):
        films.RsTSeries(3.0, [1.0, 2.0, 3.0], [1.0, -1.0, 1.0])


def test_mb_consistency_exact_and_offset():
    d = 2.03 * C.meV
    R = np.geomspace(100, 1e4, 5)
    L = C.hbar * R / (math.pi * d)
    assert films.mb_consistency(np.column_stack([R, L]), d)[0] == pytest.approx(0.0, abs=1e-15)
    assert films.mb_consistency(np.column_stack([R, 1.1 * L]), d)[0] == pytest.approx(0.10)
    with pytest.raises(DomainError):
        films.mb_consistency([[1.0, -1.0]], d)


def test_mb_consistency_noise_level():
    rng = np.random.default_rng(7)
    d = 2.03 * C.meV
    R = np.geomspace(100, 1e4, 20)
    rms_all = []
    for _ in range(1000):
        L = C.hbar * R / (math.pi * d) * (1 + 0.05 * rng.standard_normal(R.size))
        rms_all.append(films.mb_consistency(np.column_stack([R, L]), d)[0])
    assert np.mean(rms_all) == pytest.approx(0.05, abs=0.02)


def test_classifier_estimator():
    fam = synthetic.film_family(THICK)
    clf = films.PhaseClassifier().fit(fam)
    pred = clf.predict(fam)
    assert list(pred[:3]) == [films.INSULATING] * 3
    assert clf.decision_function(fam).shape == (30,)
    assert clf.critical_thickness(fam).bracket[0] < 2.75
    assert films.PhaseClassifier(**clf.get_params()).get_params() == clf.get_params()


def test_midpoint_rule():
    fam = synthetic.film_family([2.0, 2.5, 3.0, 4.0])
    assert films.critical_thickness(fam).d_c == pytest.approx(2.75)
