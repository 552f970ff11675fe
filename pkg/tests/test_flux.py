import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from planaron import constants as C
from planaron import flux
from planaron.exceptions import DomainError


@pytest.mark.parametrize("w, b0, quoted", [(2e-6, 2.46e-3, 2.4e-3), (1e-6, 4.92e-3, 4.9e-3), (0.5e-6, 9.85e-3, 9.8e-3)])
def test_periods(w, b0, quoted):
    g = flux.period(w, 20e-9, 200e-9)
    assert g.B0 == pytest.approx(b0, rel=2e-3)
    assert g.B0 == pytest.approx(quoted, rel=0.05)


def test_sidelobe_oracle():
    # maximum of |sin x / x| beyond the first node sits at tan x = x
    x = brentq(lambda t: math.tan(t) - t, 4.4, 4.6)
    assert x == pytest.approx(4.49341, abs=1e-5)
    g = flux.period(2e-6, 20e-9, 200e-9)
    assert flux.first_sidelobe(flux.Uniform(), g) == pytest.approx(abs(math.sin(x) / x), abs=1e-6)
    assert flux.first_sidelobe(flux.Uniform(), g) == pytest.approx(0.2172, abs=1e-3)


def test_uniform_nodes():
    g = flux.period(1e-6, 20e-9, 200e-9)
    ic = flux.ic_of_field(flux.Uniform(), g, 2e-6, np.array([0, 1, 2, 3]) * g.B0)
    assert ic[0] == pytest.approx(2e-6)
    np.testing.assert_allclose(ic[1:], 0.0, atol=1e-20)


def test_edge_pair_cos():
    g = flux.period(1e-6, 20e-9, 200e-9)
    B = np.linspace(-3, 3, 121) * g.B0
    ic = flux.ic_of_field(flux.EdgePair(), g, 1.0, B)
    np.testing.assert_allclose(ic, np.abs(np.cos(np.pi * B / g.B0)), atol=1e-12)
    assert flux.first_sidelobe(flux.EdgePair(), g) == pytest.approx(1.0, abs=1e-6)


def test_sampled_matches_closed_forms():
    g = flux.period(1e-6, 20e-9, 200e-9)
    B = np.linspace(-2.5, 2.5, 51) * g.B0
    edges = flux.Sampled([-0.5e-6, 0.5e-6], [1.0, 1.0])
    np.testing.assert_allclose(flux.ic_of_field(edges, g, 1.0, B), flux.ic_of_field(flux.EdgePair(), g, 1.0, B), atol=1e-12)
    n = 4000
    x = (np.arange(n) + 0.5) / n - 0.5
    dense = flux.Sampled(x * g.w, np.ones(n))
    np.testing.assert_allclose(flux.ic_of_field(dense, g, 1.0, B), flux.ic_of_field(flux.Uniform(), g, 1.0, B), atol=1e-6)


@given(st.floats(0.0, 1.0), st.floats(-5, 5))
@settings(max_examples=50)
def test_bounded_and_even(a, b):
    g = flux.period(1e-6, 20e-9, 200e-9)
    p = flux.EdgePair(a)
    v = flux.ic_of_field(p, g, 1.0, [b * g.B0, -b * g.B0])
    assert 0 <= v[0] <= 1 + 1e-12
    assert v[0] == pytest.approx(v[1], abs=1e-12)


def test_asymmetric_edges_lift_nodes():
    g = flux.period(1e-6, 20e-9, 200e-9)
    v = flux.ic_of_field(flux.EdgePair(0.7), g, 1.0, [0.5 * g.B0])
    assert v[0] == pytest.approx(0.4)


def test_validation():
    with pytest.raises(DomainError):
        flux.period(0.0, 20e-9, 200e-9)
    with pytest.raises(DomainError):
        flux.EdgePair(1.5)
    with pytest.raises(DomainError):
        flux.Sampled([0.0], [-1.0])
    g = flux.period(1e-6, 20e-9, 200e-9)
    with pytest.raises(DomainError):
        flux.ic_of_field(flux.Sampled([2e-6], [1.0]), g, 1.0, [0.0])
