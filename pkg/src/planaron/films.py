"""Sheet-resistance classification of thin films across the superconductor-insulator transition.

A film is called superconducting when R_s falls on cooling (positive
low-temperature slope dR_s/dT), insulating when it rises, and flat inside a
tolerance band around zero slope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from . import constants as C
from ._validation import check_increasing, check_series
from .exceptions import DomainError, InsufficientDataError, NoTransitionError, SchemaError

SUPERCONDUCTING = "superconducting"
INSULATING = "insulating"
FLAT = "flat"
CLASSES = (SUPERCONDUCTING, INSULATING, FLAT)


@dataclass(frozen=True)
class RsTSeries:
    """R_s(T) of one film.

    Parameters
    ----------
    thickness : float
        Film thickness in nm.
    T, R_s : array_like
        Temperature (K, strictly increasing) and sheet resistance (ohm per
        square, non-negative so that a resistive transition to zero is
        representable).
    """

    thickness: float
    T: np.ndarray
    R_s: np.ndarray
    label: str = ""

    def __post_init__(self):
        T = np.asarray(self.T, dtype=float)
        R = np.asarray(self.R_s, dtype=float)
        check_series(T, R, "T", "R_s")
        check_increasing(T, "T")
        if np.any(R < 0):
            raise SchemaError(f"R_s must be non-negative (series {self.label!r})")
        if not self.thickness > 0:
            raise DomainError("thickness must be positive")
        T.flags.writeable = False
        R.flags.writeable = False
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "R_s", R)

    def window(self, fraction: float = 0.25) -> Tuple[float, float]:
        """Lowest ``fraction`` of the temperature range."""
        lo, hi = float(self.T[0]), float(self.T[-1])
        return lo, lo + fraction * (hi - lo)

    def scaled(self, factor: float) -> "RsTSeries":
        return RsTSeries(self.thickness, self.T, self.R_s * factor, self.label)


@dataclass(frozen=True)
class PhaseClass:
    phase: str
    slope_statistic: float
    window: Tuple[float, float]
    n_points: int = 0

    def as_dict(self) -> dict:
        return {
            "class": self.phase,
            "slope_ohm_per_sq_per_K": self.slope_statistic,
            "window_K": list(self.window),
            "n_points": self.n_points,
        }


def _window_points(series: RsTSeries, window_fraction: float):
    if not 0 < window_fraction <= 1:
        raise DomainError("window_fraction must lie in (0, 1]")
    lo, hi = series.window(window_fraction)
    mask = series.T <= hi * (1 + 1e-12)
    return (lo, hi), series.T[mask], series.R_s[mask]


def classify_phase(series: RsTSeries, window_fraction: float = 0.25, tol: float = 1.0) -> PhaseClass:
    """Classify a film from the least-squares slope of R_s(T) at low temperature.

    Parameters
    ----------
    series : RsTSeries
    window_fraction : float
        Fraction of the temperature range, counted from the lowest point,
        used for the slope.
    tol : float
        Slope band (ohm per square per K) treated as flat.

    Raises
    ------
    InsufficientDataError
        Fewer than 5 points fall inside the window.
    """
    if tol < 0:
        raise DomainError("tol must be non-negative")
    window, T, R = _window_points(series, window_fraction)
    if T.size < 5:
        raise InsufficientDataError(
            f"only {T.size} points in the low-T window [{window[0]:.4g}, {window[1]:.4g}] K "
            f"of series {series.label or series.thickness!r}; need at least 5"
        )
    slope = float(np.polyfit(T, R, 1)[0])
    if slope > tol:
        phase = SUPERCONDUCTING
    elif slope < -tol:
        phase = INSULATING
    else:
        phase = FLAT
    return PhaseClass(phase, slope, window, int(T.size))


def _edge_resistance(series: RsTSeries, window_fraction: float) -> float:
    # R_s at the warm edge of the low-T window; finite for a film that has
    # already dropped to zero resistance at base temperature
    _, hi = series.window(window_fraction)
    return float(np.interp(hi, series.T, series.R_s))


@dataclass(frozen=True)
class CriticalThickness:
    d_c: float
    R_s_at_dc: float
    bracket: Tuple[float, float]
    classes: Tuple[PhaseClass, ...] = field(repr=False, default=())

    def __iter__(self):
        # unpacks as (d_c, R_s_at_dc)
        return iter((self.d_c, self.R_s_at_dc))


def critical_thickness(
    family: Sequence[RsTSeries], window_fraction: float = 0.25, tol: float = 1.0
) -> CriticalThickness:
    """Critical thickness of the transition within a film family.

    ``d_c`` is the midpoint between the thickest insulating member and the
    thinnest superconducting one. ``R_s_at_dc`` interpolates log R_s,
    taken at the warm edge of each member's low-T window, linearly in
    thickness between those two members.
    """
    family = list(family)
    if not family:
        raise DomainError("empty film family")
    classes = tuple(classify_phase(s, window_fraction, tol) for s in family)
    ins = [s for s, c in zip(family, classes) if c.phase == INSULATING]
    sup = [s for s, c in zip(family, classes) if c.phase == SUPERCONDUCTING]
    if not ins or not sup:
        found = sorted({c.phase for c in classes})
        raise NoTransitionError(f"family has no superconductor-insulator bracket (classes: {found})")
    a = max(ins, key=lambda s: s.thickness)
    b = min(sup, key=lambda s: s.thickness)
    if not a.thickness < b.thickness:
        raise NoTransitionError(
            f"thickest insulating film ({a.thickness} nm) is not thinner than the thinnest "
            f"superconducting film ({b.thickness} nm)"
        )
    d_c = 0.5 * (a.thickness + b.thickness)
    ra, rb = _edge_resistance(a, window_fraction), _edge_resistance(b, window_fraction)
    if ra > 0 and rb > 0:
        w = (d_c - a.thickness) / (b.thickness - a.thickness)
        r_dc = math.exp((1 - w) * math.log(ra) + w * math.log(rb))
    else:
        r_dc = float("nan")
    return CriticalThickness(d_c, r_dc, (a.thickness, b.thickness), classes)


def mb_consistency(pairs, delta0: float):
    """Relative deviation of measured ``(R_N, L_K)`` pairs from ``hbar R_N / (pi Delta)``.

    Returns
    -------
    rms : float
    per_point : ndarray
    """
    arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
    if np.any(arr <= 0) or not delta0 > 0:
        raise DomainError("R_N, L_K and delta0 must be positive")
    expected = C.hbar * arr[:, 0] / (math.pi * delta0)
    dev = (arr[:, 1] - expected) / expected
    return float(np.sqrt(np.mean(dev**2))), dev


class PhaseClassifier(ClassifierMixin, BaseEstimator):
    """Estimator wrapper around :func:`classify_phase`.

    ``X`` is a sequence of :class:`RsTSeries`. The rule has no learned
    state; ``fit`` records the class vocabulary so ``score`` works against
    reference labels.
    """

    def __init__(self, window_fraction=0.25, tol=1.0):
        self.window_fraction = window_fraction
        self.tol = tol

    def fit(self, X, y=None):
        self.classes_ = np.array(CLASSES)
        return self

    def transform(self, X) -> List[PhaseClass]:
        check_is_fitted(self, "classes_")
        return [classify_phase(s, self.window_fraction, self.tol) for s in X]

    def predict(self, X):
        return np.array([c.phase for c in self.transform(X)])

    def decision_function(self, X):
        return np.array([c.slope_statistic for c in self.transform(X)])

    def critical_thickness(self, X) -> CriticalThickness:
        return critical_thickness(X, self.window_fraction, self.tol)
