"""Microwave spectroscopy: saturated qubit lineshape, Autler-Townes calibration,
notch-resonator circle fit and a small-Kerr estimate.

Rates are quoted as ordinary frequencies (Hz), i.e. ``kappa / 2 pi``.
Powers cross the public interface in dBm and are converted to W inside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import constants as C
from ._lsq import levenberg_marquardt
from ._validation import check_increasing
from .exceptions import ConvergenceError, DomainError, InsufficientDataError, ModelValidityError, SchemaError

FORWARD = "forward"
FIT_ATTENUATION = "fit_attenuation"


@dataclass(frozen=True)
class SquashParams:
    """Qubit frequency ``f_q``, total and coupling linewidths, Rabi rate (all Hz)."""

    f_q: float
    kappa_t: float
    kappa_c: float
    omega_R: float = 0.0

    def __post_init__(self):
        if not (self.kappa_t >= self.kappa_c > 0):
            raise DomainError("need kappa_t >= kappa_c > 0")
        if self.omega_R < 0:
            raise DomainError("omega_R must be non-negative")


@dataclass
class ComplexTrace:
    """Complex transmission (or its change) on a strictly increasing frequency grid."""

    f: np.ndarray
    z: np.ndarray
    power_dBm: Optional[float] = None
    metadata: Dict = field(default_factory=dict)

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=float)
        self.z = np.asarray(self.z, dtype=complex)
        if self.f.ndim != 1 or self.f.shape != self.z.shape:
            raise SchemaError("frequency and complex data must be 1-D of equal length")
        if not (np.all(np.isfinite(self.f)) and np.all(np.isfinite(self.z))):
            raise SchemaError("trace contains NaN or inf")
        check_increasing(self.f, "frequency")

    def subtract(self, background: "ComplexTrace") -> "ComplexTrace":
        """Remove a reference trace recorded on the same grid (e.g. at saturating power)."""
        if background.f.shape != self.f.shape or not np.allclose(background.f, self.f, rtol=0, atol=0):
            raise SchemaError("background trace is on a different frequency grid")
        return ComplexTrace(self.f, self.z - background.z, self.power_dBm, dict(self.metadata))


def squash_model(p: SquashParams, fgrid) -> ComplexTrace:
    """Change in transmission of a drive-saturated two-level system.

    ``dS21 = (k_c/k_t) (1 + 2 i D / k_t) / (1 + (2 D / k_t)^2 + 2 (W / k_t)^2)``
    with detuning ``D = f - f_q`` and Rabi rate ``W``.
    """
    f = np.asarray(fgrid, dtype=float)
    return ComplexTrace(f, _squash(f, p.f_q, p.kappa_t, p.kappa_c, p.omega_R))


def _squash(f, f_q, kt, kc, om):
    x = 2.0 * (f - f_q) / kt
    return (kc / kt) * (1 + 1j * x) / (1 + x * x + 2.0 * (om / kt) ** 2)


def drive_amplitude(power_dBm):
    """``sqrt(P)`` in sqrt(W)."""
    return np.sqrt(C.dbm_to_watt(np.asarray(power_dBm, dtype=float)))


@dataclass
class SquashFitResult:
    f_q: float
    kappa_t: float
    kappa_c: float
    omega_R: np.ndarray
    stderr: Dict[str, np.ndarray]
    rabi_slope: float
    rabi_intercept: float
    rabi_r2: float
    cost_trace: List[float]
    converged: bool

    def as_dict(self) -> dict:
        return {
            "f_q_Hz": self.f_q,
            "kappa_t_Hz": self.kappa_t,
            "kappa_c_Hz": self.kappa_c,
            "omega_R_Hz": [float(x) for x in self.omega_R],
            "stderr": {k: np.atleast_1d(v).tolist() for k, v in self.stderr.items()},
            "rabi_slope_Hz_per_sqrtW": self.rabi_slope,
            "rabi_intercept_Hz": self.rabi_intercept,
            "rabi_r2": self.rabi_r2,
            "converged": self.converged,
            "cost_trace": list(self.cost_trace),
        }


def _squash_initial(traces):
    # Im/Re = 2 (f - f_q) / k_t for every trace, independent of the drive
    f = np.concatenate([t.f for t in traces])
    z = np.concatenate([t.z for t in traces])
    w = np.abs(z.real)
    ok = w > 0.3 * w.max()
    slope, icpt = np.polyfit(f[ok], z.imag[ok] / z.real[ok], 1, w=w[ok])
    kt = 2.0 / slope if slope > 0 else np.ptp(f) / 10
    fq = -icpt / slope if slope > 0 else f[np.argmax(w)]
    heights, widths = [], []
    for t in traces:
        re = t.z.real
        h = re.max()
        above = t.f[re >= 0.5 * h]
        heights.append(h)
        widths.append(max(above[-1] - above[0], np.min(np.diff(t.f))) if above.size else kt)
    s = np.maximum((np.asarray(widths) / kt) ** 2 - 1.0, 1e-4)
    kc = float(np.median(np.asarray(heights) * kt * (1 + s)))
    om = kt * np.sqrt(s / 2.0)
    return fq, kt, min(kc, kt), om


def fit_squash(traces: Sequence[ComplexTrace], powers_dBm=None, ftol=1e-12, max_iter=200) -> SquashFitResult:
    """Joint fit of shared ``(f_q, kappa_t, kappa_c)`` and per-trace Rabi rates.

    Traces must already have the background removed. The fitted Rabi rates
    are regressed on the drive amplitude ``sqrt(P)``.
    """
    traces = list(traces)
    if len(traces) < 2:
        raise InsufficientDataError("need at least 2 traces")
    if powers_dBm is None:
        powers_dBm = [t.power_dBm for t in traces]
    powers = np.asarray(powers_dBm, dtype=float)
    if powers.size != len(traces) or not np.all(np.isfinite(powers)):
        raise SchemaError("every trace needs a drive power")
    if np.unique(powers).size != powers.size:
        raise SchemaError("trace powers must be distinct")
    f0 = traces[0].f
    for t in traces[1:]:
        if t.f.shape != f0.shape or not np.array_equal(t.f, f0):
            raise SchemaError("traces are on mismatched frequency grids")

    fq0, kt0, kc0, om0 = _squash_initial(traces)
    n = len(traces)
    data = np.concatenate([np.concatenate([t.z.real, t.z.imag]) for t in traces])
    scale = max(np.max(np.abs(data)), 1e-300)

    # internal variables: f_q offset in units of kt0, log linewidths, Rabi rates over kt0
    def unpack(x):
        return fq0 + x[0] * kt0, kt0 * math.exp(x[1]), kc0 * math.exp(x[2]), x[3:] * kt0

    def resid(x):
        fq, kt, kc, om = unpack(x)
        out = []
        for t, o in zip(traces, om):
            m = _squash(t.f, fq, kt, kc, o)
            out.append(t.z.real - m.real)
            out.append(t.z.imag - m.imag)
        return np.concatenate(out) / scale

    x0 = np.concatenate([[0.0, 0.0, 0.0], om0 / kt0])
    res = levenberg_marquardt(resid, x0, ftol=ftol, max_iter=max_iter)
    if not res.converged:
        raise ConvergenceError(f"joint lineshape fit did not converge in {max_iter} iterations", partial=res)
    fq, kt, kc, om = unpack(res.x)
    om = np.abs(om)
    se = res.stderr
    amp = drive_amplitude(powers)
    slope, icpt = np.polyfit(amp, om, 1)
    pred = slope * amp + icpt
    ss_tot = float(np.sum((om - om.mean()) ** 2))
    r2 = 1.0 - float(np.sum((om - pred) ** 2)) / ss_tot if ss_tot > 0 else float("nan")
    stderr = {
        "f_q": se[0] * kt0,
        "kappa_t": se[1] * kt,
        "kappa_c": se[2] * kc,
        "omega_R": se[3:] * kt0,
    }
    return SquashFitResult(fq, kt, kc, om, stderr, float(slope), float(icpt), r2, res.cost_trace, res.converged)


class SquashFit(BaseEstimator):
    """Estimator form of :func:`fit_squash`; ``X`` is a list of background-subtracted traces."""

    def __init__(self, ftol=1e-12, max_iter=200):
        self.ftol = ftol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        """``y`` optionally gives the drive powers in dBm."""
        r = fit_squash(X, y, self.ftol, self.max_iter)
        self.result_ = r
        self.params_ = SquashParams(r.f_q, r.kappa_t, min(r.kappa_c, r.kappa_t), 0.0)
        self.omega_R_ = r.omega_R
        return self

    def predict(self, X):
        """Model traces on the grids of ``X`` (a list of traces or frequency arrays)."""
        check_is_fitted(self, "result_")
        r = self.result_
        out = []
        for t, om in zip(X, r.omega_R):
            f = t.f if isinstance(t, ComplexTrace) else np.asarray(t, dtype=float)
            out.append(_squash(f, r.f_q, r.kappa_t, r.kappa_c, om))
        return out


# --- Autler-Townes -------------------------------------------------------


def device_power(applied_dBm, attenuation_dB):
    """Device-referred power in dBm: applied power plus the (negative) line attenuation."""
    return np.asarray(applied_dBm, dtype=float) + attenuation_dB


def at_splitting(f01, kappa, applied_dBm, attenuation_dB):
    """Half splitting ``sqrt(4 kappa P_d / (h f01))`` in Hz."""
    P = C.dbm_to_watt(device_power(applied_dBm, attenuation_dB))
    return np.sqrt(4.0 * kappa * P / (C.h * f01))


@dataclass
class AutlerTownesFit:
    attenuation_dB: float
    stderr_dB: float
    residual_rms_Hz: float
    n_points: int
    cost_trace: List[float]

    def as_dict(self) -> dict:
        return {
            "attenuation_dB": self.attenuation_dB,
            "stderr_dB": self.stderr_dB,
            "residual_rms_Hz": self.residual_rms_Hz,
            "n_points": self.n_points,
            "cost_trace": list(self.cost_trace),
        }


def autler_townes(f_q, f01, kappa, Pgrid, attenuation=None, mode=FORWARD, sidebands=None, att_init=-120.0):
    """Dressed-state sideband positions ``f_q +- sqrt(4 kappa P_d / (h f01))``.

    Parameters
    ----------
    f_q, f01 : float
        Probed transition frequency and the driven 0-1 frequency (Hz).
    kappa : float
        Coupling rate of the drive (Hz); kept separate from the lineshape
        linewidths.
    Pgrid : array_like
        Applied powers in dBm.
    attenuation : float
        Line attenuation in dB (negative); required for ``mode="forward"``.
    mode : {"forward", "fit_attenuation"}
    sidebands : array_like
        Measured sideband frequencies (Hz), one per entry of ``Pgrid``;
        points on either branch are accepted.

    Returns
    -------
    (lower, upper) arrays for ``"forward"``, :class:`AutlerTownesFit` otherwise.
    """
    if not (f01 > 0 and kappa > 0):
        raise DomainError("f01 and kappa must be positive")
    P = np.atleast_1d(np.asarray(Pgrid, dtype=float))
    if mode == FORWARD:
        if attenuation is None:
            raise DomainError("forward mode needs the attenuation")
        s = at_splitting(f01, kappa, P, attenuation)
        return f_q - s, f_q + s
    if mode != FIT_ATTENUATION:
        raise DomainError(f"unknown mode {mode!r}")
    if sidebands is None:
        raise InsufficientDataError("fit_attenuation needs measured sideband frequencies")
    fs = np.atleast_1d(np.asarray(sidebands, dtype=float))
    if fs.shape != P.shape:
        raise SchemaError("sidebands and Pgrid must have equal length")
    if fs.size < 3:
        raise InsufficientDataError(f"only {fs.size} sideband points; need at least 3")
    delta = np.abs(fs - f_q)
    norm = max(float(np.max(delta)), 1.0)
    if attenuation is not None:
        att_init = attenuation
    else:
        # closed-form start: splitting^2 is linear in P_d
        P_w = C.dbm_to_watt(P)
        g = np.sum(delta**2 * P_w) / np.sum(P_w**2)
        if g > 0:
            att_init = 10.0 * math.log10(g * C.h * f01 / (4.0 * kappa))

    def resid(x):
        return (delta - at_splitting(f01, kappa, P, x[0])) / norm

    res = levenberg_marquardt(resid, [att_init], ftol=1e-14)
    if not res.converged:
        raise ConvergenceError("attenuation fit did not converge", partial=res)
    r = resid(res.x) * norm
    return AutlerTownesFit(float(res.x[0]), float(res.stderr[0]), float(np.sqrt(np.mean(r**2))), int(fs.size), res.cost_trace)


class AutlerTownesCalibration(BaseEstimator):
    """Fit the line attenuation from sideband positions; ``X`` holds applied powers (dBm)."""

    def __init__(self, f_q=7.5e9, f01=7.5e9, kappa=75e3, att_init=-120.0):
        self.f_q = f_q
        self.f01 = f01
        self.kappa = kappa
        self.att_init = att_init

    def fit(self, X, y):
        r = autler_townes(self.f_q, self.f01, self.kappa, np.ravel(X), mode=FIT_ATTENUATION, sidebands=y,
                          att_init=self.att_init)
        self.result_ = r
        self.attenuation_ = r.attenuation_dB
        return self

    def transform(self, X):
        """Device-referred power (dBm) of applied powers ``X``."""
        check_is_fitted(self, "attenuation_")
        return device_power(np.ravel(X), self.attenuation_)

    def predict(self, X):
        """Upper sideband frequency at applied powers ``X``."""
        check_is_fitted(self, "attenuation_")
        return autler_townes(self.f_q, self.f01, self.kappa, np.ravel(X), self.attenuation_)[1]


# --- notch resonator circle fit -----------------------------------------


@dataclass(frozen=True)
class NotchResonance:
    f_r: float
    Q_l: float
    Q_c_abs: float
    phi0: float
    Q_i: float
    amplitude: float
    alpha: float
    delay: float
    f_ref: float
    stderr: Dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "f_r_Hz": self.f_r,
            "Q_l": self.Q_l,
            "Q_c_abs": self.Q_c_abs,
            "phi0_rad": self.phi0,
            "Q_i": self.Q_i,
            "amplitude": self.amplitude,
            "alpha_rad": self.alpha,
            "delay_s": self.delay,
            "f_ref_Hz": self.f_ref,
            "stderr": dict(self.stderr),
        }


def notch_model(f, f_r, Q_l, Q_c_abs, phi0, amplitude=1.0, alpha=0.0, delay=0.0, f_ref=0.0):
    """``a e^{i alpha} e^{-2 pi i (f - f_ref) tau} [1 - (Q_l/|Q_c|) e^{i phi0} / (1 + 2 i Q_l (f/f_r - 1))]``.

    The cable phase is referenced to ``f_ref`` so that ``alpha`` stays well
    conditioned; ``f_ref = 0`` gives the plain form.
    """
    f = np.asarray(f, dtype=float)
    env = amplitude * np.exp(1j * alpha) * np.exp(-2j * np.pi * (f - f_ref) * delay)
    return env * (1 - (Q_l / Q_c_abs) * np.exp(1j * phi0) / (1 + 2j * Q_l * (f / f_r - 1)))


def _fit_circle(z, refine=True):
    """Algebraic (Kasa) circle fit, optionally refined geometrically; returns centre and radius."""
    x, y = z.real, z.imag
    A = np.column_stack([x, y, np.ones_like(x)])
    b = x * x + y * y
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    xc, yc = sol[0] / 2, sol[1] / 2
    r = math.sqrt(max(sol[2] + xc * xc + yc * yc, 0.0))
    if not refine:
        return complex(xc, yc), r
    s = max(r, 1e-300)

    def resid(p):
        return (np.hypot(x - p[0] * s, y - p[1] * s) - p[2] * s) / s

    res = levenberg_marquardt(resid, [xc / s, yc / s, r / s], ftol=1e-15, max_iter=50)
    return complex(res.x[0] * s, res.x[1] * s), abs(res.x[2] * s)


def _circle_rms(z):
    # algebraic fit only: this is evaluated many times during the delay search
    c, r = _fit_circle(z, refine=False)
    return float(np.sqrt(np.mean((np.abs(z - c) - r) ** 2)))


def _phase_fit(f, z, c, f_guess, Ql_guess):
    # angle of points about the circle centre: theta0 + 2 atan(2 Q_l (1 - f / f_r))
    theta = np.unwrap(np.angle(z - c))
    lw = f_guess / Ql_guess

    def model(p):
        fr = f_guess + p[1] * lw
        return p[0] + 2.0 * np.arctan(2.0 * Ql_guess * math.exp(min(max(p[2], -50.0), 50.0)) * (1 - f / fr))

    t0 = float(np.mean(theta))
    res = levenberg_marquardt(lambda p: theta - model(p), [t0, 0.0, 0.0], ftol=1e-15, max_iter=200)
    t0, u, lq = res.x
    return t0, f_guess + u * lw, Ql_guess * math.exp(lq)


def circle_fit(trace: ComplexTrace, f_ref: Optional[float] = None, polish: bool = True) -> NotchResonance:
    """Notch-type resonator parameters from a complex S21 sweep.

    Steps: cable delay from the off-resonant phase slope (refined by
    circularity), algebraic circle fit, phase-angle fit for ``f_r`` and
    ``Q_l``, normalisation by the off-resonant point, and finally a full
    complex least-squares polish of all parameters.

    Raises
    ------
    NoTransitionError
        Circle radius is consistent with zero (no resonance).
    ModelValidityError
        ``1/Q_i = 1/Q_l - cos(phi0)/|Q_c|`` is not positive.
    """
    from .exceptions import NoTransitionError

    f, z = trace.f, trace.z
    if f.size < 20:
        raise InsufficientDataError("circle fit needs at least 20 points")
    f_ref = float(np.mean(f)) if f_ref is None else float(f_ref)
    span = f[-1] - f[0]

    # 1. delay: phase slope on the outer 10% at each end, then circularity refinement
    n_edge = max(3, f.size // 10)
    edge = np.r_[0:n_edge, f.size - n_edge : f.size]
    ph = np.unwrap(np.angle(z))
    tau0 = -np.polyfit(f[edge], ph[edge], 1)[0] / (2 * np.pi)

    def undelay(tau):
        return z * np.exp(2j * np.pi * (f - f_ref) * tau)

    grid = tau0 + np.linspace(-1, 1, 41) * (0.5 / span)
    costs = [_circle_rms(undelay(t)) for t in grid]
    k = int(np.argmin(costs))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    gr = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    for _ in range(60):
        c1, c2 = b - gr * (b - a), a + gr * (b - a)
        if _circle_rms(undelay(c1)) < _circle_rms(undelay(c2)):
            b = c2
        else:
            a = c1
    tau = 0.5 * (a + b)
    zd = undelay(tau)

    # 2. circle
    c, r = _fit_circle(zd)
    noise = float(np.sqrt(np.mean((np.abs(zd - c) - r) ** 2)))
    if r <= 3 * noise / math.sqrt(f.size) or r < 1e-6 * np.max(np.abs(zd)):
        raise NoTransitionError("circle radius is consistent with zero: no resonance in the trace")

    # 3. phase about the centre
    i_res = int(np.argmax(np.abs(zd - np.mean(zd[edge]))))
    f_guess = float(f[i_res])
    # linewidth from the points a quarter turn either side of resonance
    theta = np.unwrap(np.angle(zd - c))
    quarter = np.abs(np.abs(theta - theta[i_res]) - np.pi / 2)
    left = int(np.argmin(quarter[: i_res + 1])) if i_res > 0 else 0
    right = i_res + int(np.argmin(quarter[i_res:]))
    fwhm = f[right] - f[left]
    if not fwhm > 0:
        fwhm = span / 10
    Ql_guess = max(f_guess / fwhm, 10.0)
    theta0, f_r, Q_l = _phase_fit(f, zd, c, f_guess, Ql_guess)

    # 4. off-resonant point and normalisation
    P = c + r * np.exp(1j * (theta0 + np.pi))
    amp, alpha = abs(P), float(np.angle(P))
    cn = c / P
    rn = r / abs(P)
    phi0 = -math.asin(max(-1.0, min(1.0, cn.imag / rn)))
    Qc = Q_l / (2 * rn)

    # 5. polish everything on the raw data
    stderr = {}
    if polish:
        lw = f_r / Q_l
        zs = max(np.max(np.abs(z)), 1e-300)

        def unpack(p):
            return (
                f_r + p[0] * lw,
                Q_l * math.exp(p[1]),
                Qc * math.exp(p[2]),
                phi0 + p[3],
                amp * math.exp(p[4]),
                alpha + p[5],
                tau + p[6] / span,
            )

        def resid(p):
            m = notch_model(f, *unpack(p), f_ref=f_ref)
            d = (z - m) / zs
            return np.concatenate([d.real, d.imag])

        res = levenberg_marquardt(resid, np.zeros(7), ftol=1e-15, max_iter=200)
        f_r, Q_l, Qc, phi0, amp, alpha, tau = unpack(res.x)
        se = res.stderr
        stderr = {
            "f_r": float(se[0] * lw),
            "Q_l": float(se[1] * Q_l),
            "Q_c_abs": float(se[2] * Qc),
            "phi0": float(se[3]),
        }
    inv_qi = 1.0 / Q_l - math.cos(phi0) / Qc
    if not inv_qi > 0:
        raise ModelValidityError(f"1/Q_i = {inv_qi:.3g} <= 0 (phi0 = {phi0:.4g} rad): impedance mismatch too large")
    return NotchResonance(f_r, Q_l, Qc, phi0, 1.0 / inv_qi, amp, alpha, tau, f_ref, stderr)


class NotchCircleFit(BaseEstimator):
    """Estimator form of :func:`circle_fit`; ``fit(f, s21)``."""

    def __init__(self, polish=True):
        self.polish = polish

    def fit(self, X, y=None):
        trace = X if isinstance(X, ComplexTrace) else ComplexTrace(X, y)
        self.resonance_ = circle_fit(trace, polish=self.polish)
        self.Q_i_ = self.resonance_.Q_i
        return self

    def predict(self, X):
        check_is_fitted(self, "resonance_")
        r = self.resonance_
        return notch_model(X, r.f_r, r.Q_l, r.Q_c_abs, r.phi0, r.amplitude, r.alpha, r.delay, r.f_ref)


# --- Kerr -----------------------------------------------------------------


@dataclass
class KerrEstimate:
    alpha: float
    stderr: float
    f0: float

    def as_dict(self) -> dict:
        return {"alpha_Hz_per_photon": self.alpha, "stderr_Hz": self.stderr, "f0_Hz": self.f0}


def kerr_shift(series, nbar_of_P: Callable) -> KerrEstimate:
    """Per-photon frequency shift from resonance frequency versus drive power.

    ``series`` holds ``(P in dBm, f_r in Hz)`` rows; ``nbar_of_P`` maps dBm to
    mean photon number and must increase with power. Valid only while the
    shift is small compared with the linewidth.
    """
    arr = np.asarray(series, dtype=float).reshape(-1, 2)
    if arr.shape[0] < 3:
        raise InsufficientDataError("need at least 3 (P, f_r) points")
    order = np.argsort(arr[:, 0])
    P, fr = arr[order, 0], arr[order, 1]
    nbar = np.asarray([nbar_of_P(p) for p in P], dtype=float)
    if np.any(np.diff(nbar) <= 0) or np.any(nbar < 0):
        raise DomainError("photon-number calibration must be non-negative and increasing with power")
    X = np.column_stack([np.ones_like(nbar), nbar])
    coef, *_ = np.linalg.lstsq(X, fr, rcond=None)
    r = fr - X @ coef
    dof = max(fr.size - 2, 1)
    cov = np.linalg.inv(X.T @ X) * float(r @ r) / dof
    return KerrEstimate(float(coef[1]), float(math.sqrt(cov[1, 1])), float(coef[0]))
