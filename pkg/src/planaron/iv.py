"""Feature extraction from current-voltage characteristics.

Superconducting curves yield the critical current (end of the zero-slope
branch), the normal-state resistance (high-bias slope) and their product.
Insulating curves yield the blockade voltage and the low-bias resistance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from . import constants as C
from ._validation import check_series
from .exceptions import DomainError, SchemaError

SUPERCONDUCTING = "superconducting"
INSULATING = "insulating"


class ExtractionError(DomainError):
    """The curve lacks the branch a rule needs."""


@dataclass
class IVCurve:
    """One sweep branch; ``I`` (A) must be strictly monotone, either direction.

    ``sweep`` is ``"up"``, ``"down"`` or ``None``; ``dVdI`` (ohm) is an
    optional measured differential resistance on the same points.
    """

    I: np.ndarray
    V: np.ndarray
    sweep: Optional[str] = None
    dVdI: Optional[np.ndarray] = None
    label: str = ""

    def __post_init__(self):
        self.I = np.asarray(self.I, dtype=float)
        self.V = np.asarray(self.V, dtype=float)
        check_series(self.I, self.V, "current", "voltage")
        d = np.diff(self.I)
        if self.I.size < 5 or not (np.all(d > 0) or np.all(d < 0)):
            raise SchemaError("current must be strictly monotone with at least 5 points")
        if self.dVdI is not None:
            self.dVdI = np.asarray(self.dVdI, dtype=float)
            check_series(self.I, self.dVdI, "current", "dVdI")
        if self.sweep not in (None, "up", "down"):
            raise SchemaError(f"sweep must be 'up' or 'down', got {self.sweep!r}")

    def sorted(self):
        """``(I, V, dVdI)`` ordered by increasing current."""
        order = np.argsort(self.I, kind="stable")
        r = None if self.dVdI is None else self.dVdI[order]
        return self.I[order], self.V[order], r


@dataclass
class IVFeatures:
    I_c: float
    R_N: float
    V_c: Optional[float] = None
    hysteretic: bool = False
    phase: str = SUPERCONDUCTING
    rule: str = "slope"
    I_c_plus: float = float("nan")
    I_c_minus: float = float("nan")
    metadata: Dict = field(default_factory=dict)
    icrn: float = field(init=False)

    def __post_init__(self):
        self.icrn = self.I_c * self.R_N

    def as_dict(self) -> dict:
        return {
            "phase": self.phase,
            "I_c_A": self.I_c,
            "R_N_ohm": self.R_N,
            "icrn_V": self.icrn,
            "V_c_V": self.V_c,
            "hysteretic": self.hysteretic,
            "rule": self.rule,
            "I_c_plus_A": self.I_c_plus,
            "I_c_minus_A": self.I_c_minus,
            **self.metadata,
        }


def _high_bias_slope(I, V, top_fraction):
    imax = np.max(np.abs(I))
    sel = np.abs(I) >= (1 - top_fraction) * imax
    if sel.sum() < 3:
        raise ExtractionError("fewer than 3 points in the high-bias window")
    # common slope, separate offsets for the two bias polarities
    cols = [I[sel]]
    pos, neg = sel & (I > 0), sel & (I < 0)
    if pos.any():
        cols.append((I[sel] > 0).astype(float))
    if neg.any():
        cols.append((I[sel] < 0).astype(float))
    A = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(A, V[sel], rcond=None)
    fit = A @ coef
    ss = float(np.sum((V[sel] - V[sel].mean()) ** 2))
    r2 = 1 - float(np.sum((V[sel] - fit) ** 2)) / ss if ss > 0 else 0.0
    R = float(coef[0])
    if not R > 0 or r2 < 0.99:
        raise ExtractionError(f"no linear high-bias branch (slope {R:.3g} ohm, R^2 {r2:.4f})")
    return R, ((1 - top_fraction) * imax, imax)


def _segments(I, V, dVdI):
    # differential resistance on segments (midpoints) unless measured values are given
    if dVdI is not None:
        return I, dVdI
    return 0.5 * (I[1:] + I[:-1]), np.diff(V) / np.diff(I)


def _branch_end(Ipts, r, thr, I_full, sign):
    """End of the contiguous low-slope run starting at zero bias on one polarity."""
    if sign > 0:
        idx = np.nonzero(Ipts >= 0)[0]
    else:
        idx = np.nonzero(Ipts <= 0)[0][::-1]
    if idx.size == 0:
        return float("nan")
    last = None
    for k in idx:
        if abs(r[k]) < thr:
            last = k
        else:
            break
    if last is None:
        return float("nan")
    if Ipts is I_full:
        return abs(float(Ipts[last]))
    # segment k spans points k and k + 1; take its outer end
    return abs(float(I_full[last + 1] if sign > 0 else I_full[last]))


def _curvature_onset(I, V, frac, sign):
    d1 = np.gradient(V, I)
    d2 = np.abs(np.gradient(d1, I))
    side = I > 0 if sign > 0 else I < 0
    if side.sum() < 5:
        return float("nan"), 0.0
    m = d2[side].max()
    if not m > 0:
        return float("nan"), 0.0
    Is = np.abs(I[side])
    hit = Is[d2[side] > frac * m]
    return float(hit.min()), float(m)


def extract_features(
    curve: IVCurve,
    slope_fraction: float = 0.01,
    curvature_fraction: float = 0.05,
    top_fraction: float = 0.2,
    partner: Optional[IVCurve] = None,
    hysteresis_fraction: float = 0.05,
    insulating_ratio: float = 10.0,
    r_floor: float = 100e6,
) -> IVFeatures:
    """Critical current, normal resistance and their product.

    Parameters
    ----------
    curve : IVCurve
    slope_fraction : float
        ``I_c`` is the largest ``|I|`` of the zero-bias run with
        ``dV/dI < slope_fraction * R_N``.
    curvature_fraction : float
        Fallback for rounded transitions (no point below the slope
        threshold): ``I_c`` is the smallest ``|I|`` where ``|d2V/dI2|``
        exceeds this fraction of its maximum.
    top_fraction : float
        ``R_N`` is the least-squares slope over the top fraction of ``|I|``.
    partner : IVCurve, optional
        The opposite sweep; the device is hysteretic when the two critical
        currents differ by more than ``hysteresis_fraction``.
    insulating_ratio : float
        Curves whose zero-bias resistance exceeds this multiple of the
        high-bias slope are handed to :func:`extract_insulating`.

    Raises
    ------
    ExtractionError
        No linear high-bias branch, or neither rule finds a transition.
    """
    I, V, r_meas = curve.sorted()
    R_N, window = _high_bias_slope(I, V, top_fraction)
    Ipts, r = _segments(I, V, r_meas)
    k0 = int(np.argmin(np.abs(Ipts)))
    r0 = float(np.median(np.abs(r[max(k0 - 1, 0) : k0 + 2])))
    meta = {
        "slope_fraction": slope_fraction,
        "curvature_fraction": curvature_fraction,
        "top_fraction": top_fraction,
        "high_bias_window_A": [float(w) for w in window],
    }
    if r0 > insulating_ratio * R_N:
        V_c, R_low = extract_insulating(curve, r_floor=r_floor)
        meta["R_low_ohm"] = R_low
        return IVFeatures(0.0, R_N, V_c, False, INSULATING, "blockade", metadata=meta)

    thr = slope_fraction * R_N
    plus = _branch_end(Ipts, r, thr, I, +1)
    minus = _branch_end(Ipts, r, thr, I, -1)
    rule = "slope"
    if np.isnan(plus) and np.isnan(minus):
        rule = "curvature"
        (plus, mp), (minus, mm) = (_curvature_onset(I, V, curvature_fraction, s) for s in (+1, -1))
        span = float(np.ptp(I))
        if max(mp, mm) * span / R_N < 1e-2:
            raise ExtractionError("curve is ohmic: no supercurrent branch and no curvature onset")
    vals = [x for x in (plus, minus) if not np.isnan(x)]
    if not vals:
        raise ExtractionError("no supercurrent branch found")
    I_c = float(np.mean(vals))
    hyst = False
    if partner is not None:
        other = extract_features(partner, slope_fraction, curvature_fraction, top_fraction,
                                 insulating_ratio=insulating_ratio, r_floor=r_floor)
        hyst = abs(other.I_c - I_c) > hysteresis_fraction * max(other.I_c, I_c)
        meta["partner_I_c_A"] = other.I_c
    return IVFeatures(I_c, R_N, None, hyst, SUPERCONDUCTING, rule, plus, minus, meta)


def extract_insulating(curve: IVCurve, r_floor: float = 100e6, gap: Optional[float] = None):
    """Blockade voltage and low-bias resistance of an insulating link.

    ``V_c`` is the smallest ``|V|`` at which the differential resistance
    falls below ``r_floor``; ``R_low`` is the least-squares slope
    resistance of the points inside the blockade. With ``gap`` (J) given,
    a third value reports whether ``V_c > 2 gap / e``.

    Raises
    ------
    ExtractionError
        No blockade region (low-bias resistance below ``r_floor``).
    """
    I, V, _ = curve.sorted()
    order = np.argsort(V, kind="stable")
    I, V = I[order], V[order]
    Vm = 0.5 * (V[1:] + V[:-1])
    dV = np.diff(V)
    ok = dV != 0
    g = np.full(dV.shape, np.inf)
    g[ok] = np.diff(I)[ok] / dV[ok]
    conducting = np.abs(g) > 1.0 / r_floor
    if not conducting.any():
        V_c = float(np.max(np.abs(V)))
    else:
        V_c = float(np.min(np.abs(Vm[conducting])))
    inside = np.abs(V) < V_c
    if inside.sum() < 3:
        raise ExtractionError("curve is not insulating: no blockade region at low bias")
    slope = np.polyfit(V[inside], I[inside], 1)[0]
    R_low = float("inf") if slope == 0 else float(1.0 / slope)
    if not (R_low > r_floor or R_low < 0):
        raise ExtractionError(f"curve is not insulating: low-bias resistance {R_low:.3g} ohm below {r_floor:.3g}")
    if gap is not None:
        return V_c, R_low, bool(V_c > 2.0 * gap / C.e)
    return V_c, R_low


def rsj_curve(I_c: float, R_N: float, current) -> IVCurve:
    """Overdamped-junction I-V: ``V = R_N sign(I) sqrt(I^2 - I_c^2)`` above ``I_c``, zero below."""
    I = np.asarray(current, dtype=float)
    V = np.sign(I) * R_N * np.sqrt(np.clip(I * I - I_c * I_c, 0.0, None))
    return IVCurve(I, V)


class IVFeatureExtractor(TransformerMixin, BaseEstimator):
    """Turns a list of :class:`IVCurve` into rows ``[I_c, R_N, icrn, V_c]``."""

    def __init__(self, slope_fraction=0.01, curvature_fraction=0.05, top_fraction=0.2, r_floor=100e6):
        self.slope_fraction = slope_fraction
        self.curvature_fraction = curvature_fraction
        self.top_fraction = top_fraction
        self.r_floor = r_floor

    def fit(self, X, y=None):
        self.n_features_out_ = 4
        return self

    def extract(self, X) -> Sequence[IVFeatures]:
        return [
            extract_features(c, self.slope_fraction, self.curvature_fraction, self.top_fraction, r_floor=self.r_floor)
            for c in X
        ]

    def transform(self, X):
        rows = []
        for f in self.extract(X):
            rows.append([f.I_c, f.R_N, f.icrn, np.nan if f.V_c is None else f.V_c])
        return np.asarray(rows, dtype=float)

    def get_feature_names_out(self, input_features=None):
        return np.array(["I_c_A", "R_N_ohm", "icrn_V", "V_c_V"], dtype=object)
