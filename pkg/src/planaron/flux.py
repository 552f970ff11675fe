"""Magnetic interference patterns of a planar weak link.

The critical current in a perpendicular field is the magnitude of the
Fourier transform of the normalised supercurrent density ``j(x)`` across the
link width,

    I_c(B) = I_c0 |sum_x j(x) exp(2 pi i (B / B0) (x / w))|,

with the period ``B0 = Phi0 / A`` set by the flux-focusing area
``A = (l + 2 lambda) w``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import constants as C
from .exceptions import DomainError


@dataclass(frozen=True)
class FluxGeometry:
    """Width ``w``, link length ``l`` and penetration depth ``lam`` (all m)."""

    w: float
    l: float
    lam: float

    def __post_init__(self):
        if not (self.w > 0 and self.l >= 0 and self.lam >= 0 and self.l + self.lam > 0):
            raise DomainError("need w > 0, l >= 0, lam >= 0 and a nonzero effective length")

    @property
    def A(self) -> float:
        return (self.l + 2.0 * self.lam) * self.w

    @property
    def B0(self) -> float:
        return C.Phi0 / self.A

    def as_dict(self) -> dict:
        return {"w_m": self.w, "l_m": self.l, "lambda_m": self.lam, "A_m2": self.A, "B0_T": self.B0}


def period(w: float, l: float, lam: float) -> FluxGeometry:
    """Geometry and modulation period ``B0 = Phi0 / ((l + 2 lam) w)``."""
    return FluxGeometry(w, l, lam)


@dataclass(frozen=True)
class Uniform:
    kind: str = field(default="uniform", init=False, repr=False)


@dataclass(frozen=True)
class EdgePair:
    """Two line currents at the edges; ``edge_weight`` is the share carried by the ``x = -w/2`` edge."""

    edge_weight: float = 0.5
    kind: str = field(default="edge_pair", init=False, repr=False)

    def __post_init__(self):
        if not 0 <= self.edge_weight <= 1:
            raise DomainError("edge_weight must lie in [0, 1]")


@dataclass(frozen=True)
class Sampled:
    """Discrete profile: ``positions`` (m, origin at the link centre) and non-negative ``weights``."""

    positions: np.ndarray
    weights: np.ndarray
    kind: str = field(default="sampled", init=False, repr=False)

    def __post_init__(self):
        x = np.asarray(self.positions, dtype=float).ravel()
        wt = np.asarray(self.weights, dtype=float).ravel()
        if x.shape != wt.shape or x.size == 0:
            raise DomainError("positions and weights must be nonempty and of equal length")
        if np.any(wt < 0) or not np.all(np.isfinite(wt)) or not wt.sum() > 0:
            raise DomainError("weights must be finite, non-negative and not all zero")
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "weights", wt / wt.sum())


Profile = Union[Uniform, EdgePair, Sampled]


def ic_of_field(profile: Profile, geom: FluxGeometry, I_c0: float, Bgrid) -> np.ndarray:
    """Critical current on ``Bgrid`` (T), normalised so that ``I_c(0) = I_c0``."""
    b = np.asarray(Bgrid, dtype=float) / geom.B0
    if not np.all(np.isfinite(b)):
        raise DomainError("field grid must be finite")
    if isinstance(profile, Uniform):
        return I_c0 * np.abs(np.sinc(b))
    if isinstance(profile, EdgePair):
        a = profile.edge_weight
        amp = a * np.exp(-1j * np.pi * b) + (1 - a) * np.exp(1j * np.pi * b)
        return I_c0 * np.abs(amp)
    if isinstance(profile, Sampled):
        u = profile.positions / geom.w
        if np.any(np.abs(u) > 0.5 + 1e-12):
            raise DomainError("sampled positions must lie within [-w/2, w/2]")
        phase = 2.0 * np.pi * np.multiply.outer(b, u)
        amp = np.exp(1j * phase) @ profile.weights
        return I_c0 * np.abs(amp)
    raise DomainError(f"unknown profile {profile!r}")


def first_sidelobe(profile: Profile, geom: FluxGeometry, n: int = 20001) -> float:
    """Height of the largest lobe between B0 and 2 B0, relative to ``I_c(0)``."""
    B = np.linspace(geom.B0, 2 * geom.B0, n)
    ic = ic_of_field(profile, geom, 1.0, B)
    k = int(np.argmax(ic))
    if 0 < k < n - 1:
        # parabolic refinement of the sampled maximum
        y0, y1, y2 = ic[k - 1], ic[k], ic[k + 1]
        den = y0 - 2 * y1 + y2
        if den < 0:
            return float(y1 - 0.125 * (y2 - y0) ** 2 / den)
    return float(ic[k])
