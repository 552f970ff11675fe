"""RF-driven resistively (and capacitively) shunted junction with arbitrary CPR.

Equation of motion in dimensionless time ``tau = t * 2 e R I_c / hbar``::

    beta_c phi'' + phi' + i_s(phi) = i_dc + i_rf sin(Omega tau)

where currents are in units of ``I_c = critical_current(cpr)`` and
``Omega = 2 pi f_RF hbar / (2 e R I_c)``. The mean voltage is
``V = I_c R <phi'>``. Integration uses an adaptive Dormand-Prince 8(5,3) scheme
compiled with numba.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

import numba
import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import constants as C
from .cpr import CprModel, Sinusoidal, critical_current, numba_spec
from .exceptions import DomainError, StiffnessError

STATUS_OK = 0
STATUS_UNDERFLOW = 1

# Dormand-Prince 8(5,3) tableau, taken from scipy's DOP853 implementation
_NS = _dop.N_STAGES
_A = np.ascontiguousarray(_dop.A[:_NS, :_NS])
_B = np.ascontiguousarray(_dop.B)
_CC = np.ascontiguousarray(_dop.C[:_NS])
_E3 = np.ascontiguousarray(_dop.E3)
_E5 = np.ascontiguousarray(_dop.E5)


@numba.njit(cache=True)
def _isup(kind, params, phi):
    # supercurrent in units of the critical current; params pre-normalised.
    # Every branch is 2 pi periodic as written, so phi is never wrapped.
    if kind == 0:
        return params[0] * math.sin(phi)
    if kind == 1:
        s = 0.0
        for j in range(0, params.size, 2):
            s += params[j + 1] * math.sin(params[j] * phi)
        return s
    if kind == 2:
        a = math.asin(math.sin(0.5 * phi))
        return params[0] * (math.log(4.0 / params[1]) + a * a / math.pi) * math.sin(phi)
    tau = params[1]
    s = math.sin(0.5 * phi)
    d = 1.0 - tau * s * s
    if d <= 0.0:
        return 0.0
    return params[0] * tau * math.sin(phi) / math.sqrt(d)


@numba.njit(cache=True)
def _force(t, phi, kind, params, idc, irf, om):
    return idc + irf * math.sin(om * t) - _isup(kind, params, phi)


@numba.njit(cache=True)
def _advance(t, phi, v, h, t_end, tol, kind, params, idc, irf, om, beta, target, direction, cross,
             A, B, Cn, E3, E5):
    """Integrate from t to t_end with adaptive DOP853 steps.

    With ``beta == 0`` only the phase is integrated and ``v`` is ignored.
    When ``direction`` is nonzero, every crossing of phi through
    ``target + 2 pi m`` (m = 1, 2, ...) in that direction is counted and the
    time of the latest one stored in ``cross[1]`` (count in ``cross[0]``).
    ``cross[2]`` and ``cross[3]`` accumulate accepted and rejected steps.
    Returns (t, phi, v, h, status).
    """
    ns = B.size
    second = beta > 0.0
    kp = np.zeros(ns + 1)
    kv = np.zeros(ns + 1)
    if second:
        kp[0] = v
        kv[0] = (_force(t, phi, kind, params, idc, irf, om) - v) / beta
    else:
        kp[0] = _force(t, phi, kind, params, idc, irf, om)
    hmin = 1e-14 * max(1.0, abs(t_end))
    rejected = False
    err_prev = 1e-4
    while t < t_end:
        if t + h > t_end:
            h = t_end - t
        for s in range(1, ns):
            dp = 0.0
            for j in range(s):
                dp += A[s, j] * kp[j]
            ts = t + Cn[s] * h
            if second:
                dv = 0.0
                for j in range(s):
                    dv += A[s, j] * kv[j]
                vs = v + h * dv
                kp[s] = vs
                kv[s] = (_force(ts, phi + h * dp, kind, params, idc, irf, om) - vs) / beta
            else:
                kp[s] = _force(ts, phi + h * dp, kind, params, idc, irf, om)
        dp = 0.0
        dv = 0.0
        for j in range(ns):
            dp += B[j] * kp[j]
            dv += B[j] * kv[j]
        pn = phi + h * dp
        wn = v + h * dv
        if second:
            kp[ns] = wn
            kv[ns] = (_force(t + h, pn, kind, params, idc, irf, om) - wn) / beta
        else:
            kp[ns] = _force(t + h, pn, kind, params, idc, irf, om)
        e5p = 0.0
        e3p = 0.0
        e5v = 0.0
        e3v = 0.0
        for j in range(ns + 1):
            e5p += E5[j] * kp[j]
            e3p += E3[j] * kp[j]
        if second:
            for j in range(ns + 1):
                e5v += E5[j] * kv[j]
                e3v += E3[j] * kv[j]
        n5 = (e5p * e5p + e5v * e5v) / (tol * tol)
        n3 = (e3p * e3p + e3v * e3v) / (tol * tol)
        if n5 == 0.0 and n3 == 0.0:
            err = 0.0
        else:
            err = abs(h) * n5 / math.sqrt((n5 + 0.01 * n3) * (2.0 if second else 1.0))
        if err <= 1.0:
            cross[2] += 1.0
            if direction != 0:
                # crossings of target + 2 pi m between the step endpoints
                while True:
                    level = target + direction * 2.0 * math.pi * (cross[0] + 1.0)
                    if direction * (pn - level) < 0.0:
                        break
                    # cubic Hermite interpolant on [t, t + h], root by bisection
                    lo, hi = 0.0, 1.0
                    for _ in range(60):
                        sm = 0.5 * (lo + hi)
                        s2 = sm * sm
                        s3 = s2 * sm
                        val = (
                            (2 * s3 - 3 * s2 + 1) * phi
                            + (s3 - 2 * s2 + sm) * h * kp[0]
                            + (-2 * s3 + 3 * s2) * pn
                            + (s3 - s2) * h * kp[ns]
                        )
                        if direction * (val - level) < 0.0:
                            lo = sm
                        else:
                            hi = sm
                    cross[0] += 1.0
                    cross[1] = t + 0.5 * (lo + hi) * h
            t = t + h
            phi = pn
            v = wn
            kp[0] = kp[ns]
            kv[0] = kv[ns]
            # PI step control damps the accept/reject oscillation
            ec = max(err, 1e-10)
            fac = min(10.0, 0.9 * ec ** (-0.7 / 8.0) * err_prev ** (0.4 / 8.0))
            err_prev = max(ec, 1e-4)
            if rejected:
                fac = min(fac, 1.0)
            rejected = False
        else:
            cross[3] += 1.0
            fac = max(0.2, 0.9 * err ** (-1.0 / 8.0))
            rejected = True
        h = h * fac
        if h < hmin and t < t_end:
            return t, phi, v, h, STATUS_UNDERFLOW
    return t, phi, v, h, STATUS_OK


@numba.njit(cache=True)
def _mean_velocity(kind, params, idc, irf, om, beta, tol, n_transient, n_average):
    period = 2.0 * math.pi / om
    cross = np.zeros(4)
    t, phi, v, h, status = _advance(
        0.0, 0.0, 0.0, 0.01 * period, n_transient * period, tol, kind, params, idc, irf, om, beta, 0.0, 0, cross, _A, _B, _CC, _E3, _E5
    )
    if status != STATUS_OK:
        return np.nan, status
    t0 = t
    phi0 = phi
    direction = 0
    if irf == 0.0:
        # DC bias: average over whole phase-slip cycles
        direction = 1 if idc > 0 else -1
    t, phi, v, h, status = _advance(
        t, phi, v, h, t0 + n_average * period, tol, kind, params, idc, irf, om, beta, phi0, direction, cross, _A, _B, _CC, _E3, _E5
    )
    if status != STATUS_OK:
        return np.nan, status
    if direction != 0 and cross[0] >= 1.0:
        return direction * 2.0 * math.pi * cross[0] / (cross[1] - t0), STATUS_OK
    return (phi - phi0) / (t - t0), STATUS_OK


@numba.njit(cache=True)
def _map_kernel(kind, params, idc_grid, irf_grid, om, beta, tol, n_transient, n_average, out, status):
    for j in range(irf_grid.size):
        for i in range(idc_grid.size):
            v, s = _mean_velocity(kind, params, idc_grid[i], irf_grid[j], om, beta, tol, n_transient, n_average)
            out[i, j] = v
            status[i, j] = s


@dataclass(frozen=True)
class RcsjConfig:
    """Simulation settings.

    ``R`` in ohm, ``f_RF`` in Hz, ``beta_c`` the Stewart-McCumber parameter
    (0 for the overdamped limit). ``rel_tol`` is the local error tolerance
    on the dimensionless phase and velocity.
    """

    cpr: CprModel
    R: float
    f_RF: float
    beta_c: float = 0.0
    transient_periods: int = 200
    average_periods: int = 800
    rel_tol: float = 1e-8

    def __post_init__(self):
        if not self.R > 0:
            raise DomainError("R must be positive")
        if not self.beta_c >= 0:
            raise DomainError("beta_c must be non-negative")
        if not self.f_RF > 0:
            raise DomainError("f_RF must be positive")
        if self.average_periods < 1 or self.transient_periods < 0:
            raise DomainError("average_periods must be >= 1 and transient_periods >= 0")
        if not 0 < self.rel_tol <= 1e-6:
            raise DomainError("rel_tol must lie in (0, 1e-6]")

    @property
    def I_c(self) -> float:
        return critical_current(self.cpr)[0]

    @property
    def omega(self) -> float:
        """Dimensionless drive frequency."""
        return 2.0 * math.pi * self.f_RF * C.hbar / (2.0 * C.e * self.R * self.I_c)

    def kernel_args(self):
        kind, params = numba_spec(self.cpr)
        ic = self.I_c
        params = params.astype(float).copy()
        if kind == 1:
            params[1::2] /= ic
        else:
            params[0] /= ic
        return kind, params


def step_voltage(f_RF: float, q: float = 1.0) -> float:
    """Shapiro voltage ``q h f / 2e``."""
    return q * C.h * f_RF / (2.0 * C.e)


def _raise_status(status, cfg):
    if np.any(status == STATUS_UNDERFLOW):
        raise StiffnessError(
            f"step size underflow (beta_c={cfg.beta_c}, rel_tol={cfg.rel_tol}); "
            "try a smaller beta_c or a looser tolerance"
        )


def simulate_point(cfg: RcsjConfig, i_dc: float, i_rf: float) -> float:
    """Mean DC voltage (V) at bias ``i_dc`` and RF amplitude ``i_rf`` (both A)."""
    kind, params = cfg.kernel_args()
    ic = cfg.I_c
    v, status = _mean_velocity(
        kind, params, i_dc / ic, i_rf / ic, cfg.omega, cfg.beta_c, cfg.rel_tol,
        cfg.transient_periods, cfg.average_periods,
    )
    _raise_status(np.array([status]), cfg)
    return v * ic * cfg.R


@dataclass
class ShapiroMap:
    """Mean voltage on an ``(i_dc, drive)`` grid; ``V[i, j]`` is at ``i_dc[i]``, ``drive[j]``."""

    i_dc: np.ndarray
    drive: np.ndarray
    V: np.ndarray
    dVdI: np.ndarray = field(init=False)
    drive_unit: str = "A"

    def __post_init__(self):
        self.i_dc = np.asarray(self.i_dc, dtype=float)
        self.drive = np.asarray(self.drive, dtype=float)
        self.V = np.asarray(self.V, dtype=float)
        if self.V.shape != (self.i_dc.size, self.drive.size):
            raise DomainError(
                f"voltage grid shape {self.V.shape} != ({self.i_dc.size}, {self.drive.size})"
            )
        self.dVdI = differential_resistance(self.i_dc, self.V)


def differential_resistance(current, voltage):
    """Centred-difference ``dV/dI`` along the first axis (one-sided at the ends)."""
    current = np.asarray(current, dtype=float)
    voltage = np.asarray(voltage, dtype=float)
    if current.size < 2:
        return np.zeros_like(voltage)
    return np.gradient(voltage, current, axis=0)


def _check_monotone(grid, name):
    grid = np.asarray(grid, dtype=float)
    d = np.diff(grid)
    if grid.ndim != 1 or not (np.all(d > 0) or np.all(d < 0)):
        raise DomainError(f"{name} grid must be 1-D and strictly monotone")
    return grid


def shapiro_map(cfg: RcsjConfig, i_dc_grid, drive_grid) -> ShapiroMap:
    """Mean voltage over the bias/drive grid (currents in A)."""
    i_dc_grid = _check_monotone(i_dc_grid, "i_dc")
    drive_grid = np.atleast_1d(np.asarray(drive_grid, dtype=float))
    if drive_grid.size > 1:
        _check_monotone(drive_grid, "drive")
    kind, params = cfg.kernel_args()
    ic = cfg.I_c
    out = np.empty((i_dc_grid.size, drive_grid.size))
    status = np.zeros((i_dc_grid.size, drive_grid.size), dtype=np.int64)
    _map_kernel(
        kind, params, i_dc_grid / ic, drive_grid / ic, cfg.omega, cfg.beta_c, cfg.rel_tol,
        cfg.transient_periods, cfg.average_periods, out, status,
    )
    _raise_status(status, cfg)
    return ShapiroMap(i_dc_grid, drive_grid, out * ic * cfg.R)


@dataclass(frozen=True)
class Step:
    q: Fraction
    V_q: float
    span: Tuple[float, float]
    n_points: int
    exists: bool

    @property
    def width(self) -> float:
        return abs(self.span[1] - self.span[0])


@dataclass
class StepReport:
    steps: List[Step]
    f_RF: float
    tolerance: float
    min_points: int
    drive: Optional[float] = None

    def found(self, q) -> bool:
        q = Fraction(q)
        return any(s.exists and s.q == q for s in self.steps)

    def get(self, q) -> Optional[Step]:
        q = Fraction(q)
        for s in self.steps:
            if s.q == q:
                return s
        return None


def _detect_iv(current, voltage, f_RF, fractions, tolerance, min_points, drive=None):
    unit = step_voltage(f_RF)
    steps = []
    for q in fractions:
        q = Fraction(q).limit_denominator(64)
        target = float(q) * unit
        inside = np.abs(voltage - target) < tolerance * unit
        best = (0, -1, -1)
        i = 0
        n = inside.size
        while i < n:
            if inside[i]:
                j = i
                while j + 1 < n and inside[j + 1]:
                    j += 1
                if j - i + 1 > best[0]:
                    best = (j - i + 1, i, j)
                i = j + 1
            else:
                i += 1
        count, a, b = best
        if count:
            centre = voltage[(a + b) // 2]
            steps.append(Step(q, float(centre), (float(current[a]), float(current[b])), count, count >= min_points))
        else:
            steps.append(Step(q, float("nan"), (float("nan"), float("nan")), 0, False))
    return StepReport(steps, f_RF, tolerance, min_points, drive)


def detect_steps(
    data: Union[ShapiroMap, Tuple[np.ndarray, np.ndarray]],
    f_RF: float,
    fractions: Sequence = (Fraction(1, 2), 1, Fraction(3, 2), 2, 3),
    tolerance: float = 0.002,
    min_points: int = 3,
):
    """Locate voltage plateaus at ``q h f_RF / 2e``.

    For every ``q`` the longest contiguous run of bias points with
    ``|V - q h f / 2e| < tolerance * h f / 2e`` is reported; the step exists
    when the run has at least ``min_points`` points. ``data`` is either a
    :class:`ShapiroMap` (one report per drive column is returned) or a
    ``(current, voltage)`` pair.
    """
    if not len(fractions):
        raise DomainError("fractions must be nonempty")
    if isinstance(data, ShapiroMap):
        return [
            _detect_iv(data.i_dc, data.V[:, j], f_RF, fractions, tolerance, min_points, float(data.drive[j]))
            for j in range(data.drive.size)
        ]
    current, voltage = (np.asarray(a, dtype=float) for a in data)
    return _detect_iv(current, voltage, f_RF, fractions, tolerance, min_points)


class RcsjSimulator(BaseEstimator):
    """Estimator-style wrapper: ``predict`` maps ``(i_dc, i_rf)`` rows to mean voltage.

    ``fit`` only validates the configuration and caches the critical current,
    so the simulator drops into pipelines and parameter searches.
    """

    def __init__(self, cpr=None, R=1.0, f_RF=6.8e9, beta_c=0.0, transient_periods=200,
                 average_periods=800, rel_tol=1e-8):
        self.cpr = cpr
        self.R = R
        self.f_RF = f_RF
        self.beta_c = beta_c
        self.transient_periods = transient_periods
        self.average_periods = average_periods
        self.rel_tol = rel_tol

    def fit(self, X=None, y=None):
        cpr = self.cpr if self.cpr is not None else Sinusoidal(1e-6)
        self.config_ = RcsjConfig(cpr, self.R, self.f_RF, self.beta_c, self.transient_periods,
                                  self.average_periods, self.rel_tol)
        self.I_c_ = self.config_.I_c
        return self

    def predict(self, X):
        check_is_fitted(self, "config_")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] == 1:
            X = np.hstack([X, np.zeros_like(X)])
        return np.array([simulate_point(self.config_, a, b) for a, b in X])
