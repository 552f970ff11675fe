"""Seeded synthetic datasets for demos and round-trip tests."""

from __future__ import annotations

import math
from typing import List, Sequence, Tuple

import numpy as np

from . import constants as C
from .films import RsTSeries
from .iv import IVCurve
from .microwave import ComplexTrace, SquashParams, at_splitting, notch_model, squash_model
from .sns import DiffusiveJunction, IcTSeries, ic_curve


def film_family(
    thicknesses_nm: Sequence[float],
    d_c: float = 2.75,
    decay_nm: float = 1.0,
    T: Sequence[float] = None,
    noise: float = 1e-3,
    seed: int = 0,
) -> List[RsTSeries]:
    """Films whose normal-state R_s falls exponentially with thickness and equals R_Q at ``d_c``.

    Members thinner than ``d_c`` rise on cooling (activated, ``exp(c / T)``);
    thicker ones drop to zero through a transition at
    ``T_c = 3 K + (d - d_c)`` capped at 6 K, i.e. inside the low-T window.
    """
    rng = np.random.default_rng(seed)
    T = np.linspace(2.0, 31.0, 117) if T is None else np.asarray(T, dtype=float)
    t_edge = T[0] + 0.25 * (T[-1] - T[0])
    out = []
    for d in thicknesses_nm:
        Rn = C.R_Q * math.exp(-(d - d_c) / decay_nm)
        if d < d_c:
            R = Rn * np.exp(2.0 * (1.0 / T - 1.0 / t_edge))
        else:
            tc = min(3.0 + (d - d_c), 6.0)
            R = Rn / (1.0 + np.exp(-(T - tc) / 0.3))
        R = R * (1.0 + noise * rng.standard_normal(T.size))
        out.append(RsTSeries(float(d), T, np.abs(R), f"d={d:.4g}nm"))
    return out


def ic_t_data(j: DiffusiveJunction, T: Sequence[float], noise: float = 0.02, seed: int = 0) -> IcTSeries:
    """Matsubara-model ``I_c(T)`` with relative Gaussian noise."""
    rng = np.random.default_rng(seed)
    clean = ic_curve(j, T)
    ic = clean.I_c * (1.0 + noise * rng.standard_normal(clean.I_c.size))
    return IcTSeries(clean.T, np.abs(ic), j.R_N, "synthetic", sigma=noise * clean.I_c + 1e-15)


def squash_traces(
    p: SquashParams,
    ratios: Sequence[float] = (0.1, 0.5, 1.0, 2.0),
    reference_dBm: float = -30.0,
    n_points: int = 801,
    span: float = 4.0,
    noise: float = 0.01,
    seed: int = 0,
    background: complex = 0.0,
) -> Tuple[List[ComplexTrace], ComplexTrace]:
    """Traces at Rabi rates ``ratio * kappa_t``; power scales as ``ratio^2``.

    Noise is complex Gaussian with standard deviation ``noise * kappa_c / kappa_t``
    in each quadrature. Returns the traces and a saturated (background) trace.
    """
    rng = np.random.default_rng(seed)
    f = np.linspace(p.f_q - span * p.kappa_t, p.f_q + span * p.kappa_t, n_points)
    sd = noise * p.kappa_c / p.kappa_t
    traces = []
    for r in ratios:
        q = SquashParams(p.f_q, p.kappa_t, p.kappa_c, r * p.kappa_t)
        z = squash_model(q, f).z + background
        z = z + sd * (rng.standard_normal(f.size) + 1j * rng.standard_normal(f.size))
        traces.append(ComplexTrace(f, z, reference_dBm + 20.0 * math.log10(r)))
    bg = ComplexTrace(f, np.full(f.size, background, dtype=complex), reference_dBm + 60.0)
    return traces, bg


def notch_trace(
    f_r: float = 6e9,
    Q_i: float = 1e6,
    Q_c: float = 1e6,
    phi0: float = 0.1,
    delay: float = 40e-9,
    amplitude: float = 0.8,
    alpha: float = 0.7,
    noise: float = 0.005,
    n_points: int = 801,
    span_linewidths: float = 10.0,
    seed: int = 0,
) -> ComplexTrace:
    """Notch resonance with cable delay and complex noise ``noise * amplitude``."""
    rng = np.random.default_rng(seed)
    Q_l = 1.0 / (1.0 / Q_i + math.cos(phi0) / Q_c)
    lw = f_r / Q_l
    f = np.linspace(f_r - 0.5 * span_linewidths * lw, f_r + 0.5 * span_linewidths * lw, n_points)
    z = notch_model(f, f_r, Q_l, Q_c, phi0, amplitude, alpha, delay)
    z = z + noise * amplitude * (rng.standard_normal(f.size) + 1j * rng.standard_normal(f.size))
    return ComplexTrace(f, z, -140.0)


def at_sidebands(f_q, f01, kappa, powers_dBm, attenuation_dB=-135.0, noise_Hz=0.0, seed=0):
    """Alternating lower/upper sideband positions with Gaussian jitter."""
    rng = np.random.default_rng(seed)
    P = np.asarray(powers_dBm, dtype=float)
    s = at_splitting(f01, kappa, P, attenuation_dB)
    sign = np.where(np.arange(P.size) % 2 == 0, -1.0, 1.0)
    return f_q + sign * s + noise_Hz * rng.standard_normal(P.size)


def rsj_iv(I_c: float, R_N: float, i_max: float = 20.0, n: int = 8001, noise: float = 0.0, seed: int = 0) -> IVCurve:
    """Analytic overdamped I-V on ``[-i_max, i_max] * I_c``."""
    rng = np.random.default_rng(seed)
    I = np.linspace(-i_max * I_c, i_max * I_c, n)
    V = np.sign(I) * R_N * np.sqrt(np.clip(I * I - I_c * I_c, 0.0, None))
    V = V + noise * I_c * R_N * rng.standard_normal(n)
    return IVCurve(I, V, "up")


def blockade_iv(V_c: float = 5e-3, R_low: float = 200e6, R_high: float = 1e4, v_max: float = 10e-3, n: int = 2001):
    """Voltage-biased insulating curve: ``R_low`` inside ``|V| < V_c``, ``R_high`` outside."""
    V = np.linspace(-v_max, v_max, n)
    I = np.where(np.abs(V) < V_c, V / R_low, np.sign(V) * ((np.abs(V) - V_c) / R_high + V_c / R_low))
    return IVCurve(I, V, "up")
