"""Transmon spectra from charge-basis diagonalisation.

The Hamiltonian

    H = 4 E_C (n - n_g)^2 + sum_k E_k (1 - cos k phi)

is banded in the charge basis: ``cos k phi`` couples ``|n>`` and ``|n +- k>``
with amplitude 1/2. Energies are in J, frequencies in Hz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from . import constants as C
from .exceptions import ConvergenceError, DomainError

CONVERGENCE_HZ = 1e3


def default_ncut(ej_total: float, E_C: float) -> int:
    return int(max(20, math.ceil(8.0 * (ej_total / E_C) ** 0.25)))


@dataclass(frozen=True)
class TransmonParams:
    """Charging energy ``E_C`` (J), potential ``((k, E_k), ...)`` in J.

    ``n_cut`` defaults to ``max(20, 8 (sum E_k / E_C)^(1/4))``.
    """

    E_C: float
    potential: Tuple[Tuple[int, float], ...]
    n_g: float = 0.0
    n_cut: Optional[int] = None
    L_stray: float = 0.0

    def __post_init__(self):
        pot = tuple((int(k), float(v)) for k, v in self.potential)
        if not pot:
            raise DomainError("potential must be nonempty")
        if any(k < 1 for k, _ in pot):
            raise DomainError("harmonic orders must be >= 1")
        object.__setattr__(self, "potential", pot)
        if not self.E_C > 0:
            raise DomainError("E_C must be positive")
        ej = self.ej_total
        if not ej > 0:
            raise DomainError("sum of potential coefficients must be positive")
        minimum = 4 * math.ceil((ej / self.E_C) ** 0.25)
        if self.n_cut is None:
            object.__setattr__(self, "n_cut", max(default_ncut(ej, self.E_C), minimum))
        elif self.n_cut < minimum:
            raise DomainError(f"n_cut={self.n_cut} below the minimum {minimum}")

    @classmethod
    def sinusoidal(cls, E_J: float, E_C: float, **kw) -> "TransmonParams":
        return cls(E_C=E_C, potential=((1, E_J),), **kw)

    @property
    def ej_total(self) -> float:
        return sum(v for _, v in self.potential)

    @property
    def ej_effective(self) -> float:
        """Curvature of the potential at phi = 0, ``sum k^2 E_k``."""
        return sum(k * k * v for k, v in self.potential)


@dataclass(frozen=True)
class Spectrum:
    f01: float
    f12: float
    f23: float
    anharmonicity: float
    n_cut: int
    convergence_shift: float
    energies: Tuple[float, ...] = field(repr=False, default=())
    f01_asymptotic: Optional[float] = None

    def as_dict(self) -> dict:
        out = {
            "f01_Hz": self.f01,
            "f12_Hz": self.f12,
            "f23_Hz": self.f23,
            "alpha_over_2pi_Hz": self.anharmonicity,
            "n_cut": self.n_cut,
            "convergence_shift_Hz": self.convergence_shift,
        }
        if self.f01_asymptotic is not None:
            out["f01_asymptotic_Hz"] = self.f01_asymptotic
        return out


def _lowest_levels(E_C, potential, n_g, n_cut, count=4):
    n = np.arange(-n_cut, n_cut + 1, dtype=float)
    dim = n.size
    kmax = max(k for k, _ in potential)
    # upper banded storage: row kmax - k holds the k-th superdiagonal
    band = np.zeros((kmax + 1, dim))
    band[kmax] = 4.0 * E_C * (n - n_g) ** 2 + sum(v for _, v in potential)
    for k, v in potential:
        band[kmax - k, k:] += -v / 2.0
    return linalg.eig_banded(band, lower=False, eigvals_only=True, select="i", select_range=(0, count - 1))


def diagonalize(p: TransmonParams, check_convergence: bool = True) -> Spectrum:
    """Lowest four levels and the 0-1, 1-2, 2-3 transition frequencies.

    Convergence is checked by repeating the calculation with twice the
    charge cutoff; a shift of 1 kHz or more raises :class:`ConvergenceError`.
    """
    ev = _lowest_levels(p.E_C, p.potential, p.n_g, p.n_cut)
    f = np.diff(ev) / C.h
    shift = 0.0
    if check_convergence:
        ev2 = _lowest_levels(p.E_C, p.potential, p.n_g, 2 * p.n_cut)
        f2 = np.diff(ev2) / C.h
        shift = float(np.max(np.abs(f2 - f)))
        if shift >= CONVERGENCE_HZ:
            raise ConvergenceError(
                f"charge cutoff {p.n_cut} not converged: doubling moves transitions by {shift:.3g} Hz",
                partial=f,
            )
    asym = None
    if len(p.potential) == 1 and p.potential[0][0] == 1:
        E_J = p.potential[0][1]
        asym = (math.sqrt(8.0 * E_J * p.E_C) - p.E_C) / C.h
    return Spectrum(
        f01=float(f[0]),
        f12=float(f[1]),
        f23=float(f[2]),
        anharmonicity=float(f[1] - f[0]),
        n_cut=p.n_cut,
        convergence_shift=shift,
        energies=tuple(float(x) for x in ev),
        f01_asymptotic=asym,
    )


def josephson_inductance(E_J: float) -> float:
    """``L_J = (Phi0 / 2 pi)^2 / E_J`` in H."""
    return C.reduced_Phi0**2 / E_J


def extract_ej(f_q: float, E_C: float, method: str = "asymptotic", ratio_range=(10.0, 1e4)):
    """Josephson energy from the qubit frequency.

    ``method="asymptotic"`` inverts ``h f_q = sqrt(8 E_J E_C) - E_C``;
    ``"numerical"`` bisects on ``E_J / E_C`` until the diagonalised ``f01``
    matches ``f_q`` within 1 kHz.

    Returns ``(E_J in J, L_J in H, E_J / E_C)``.
    """
    if not f_q > 0 or not E_C > 0:
        raise DomainError("f_q and E_C must be positive")
    lo, hi = ratio_range
    if method == "asymptotic":
        E_J = (C.h * f_q + E_C) ** 2 / (8.0 * E_C)
        if not lo <= E_J / E_C <= hi:
            raise DomainError(f"E_J/E_C = {E_J / E_C:.4g} outside [{lo}, {hi}]")
    elif method == "numerical":

        def mismatch(r):
            p = TransmonParams.sinusoidal(r * E_C, E_C)
            return diagonalize(p, check_convergence=False).f01 - f_q

        m_lo, m_hi = mismatch(lo), mismatch(hi)
        if m_lo * m_hi > 0:
            raise DomainError(f"no E_J/E_C in [{lo}, {hi}] gives f01 = {f_q:.6g} Hz")
        a, b = lo, hi
        r = 0.5 * (a + b)
        for _ in range(200):
            r = 0.5 * (a + b)
            m = mismatch(r)
            if abs(m) < CONVERGENCE_HZ:
                break
            if (m > 0) == (m_hi > 0):
                b, m_hi = r, m
            else:
                a = r
        E_J = r * E_C
    else:
        raise DomainError(f"unknown method {method!r}")
    return E_J, josephson_inductance(E_J), E_J / E_C


def stray_participation(L_J: float, L_S: float, exponent: float = 2.0) -> Tuple[float, float]:
    """Inductive participation ``p = L_J / (L_J + L_S)`` and ``p**exponent``.

    The second value is the ratio of dressed to bare anharmonicity in this
    scalar correction.
    """
    if not L_J > 0 or L_S < 0:
        raise DomainError("L_J must be positive and L_S non-negative")
    p = L_J / (L_J + L_S)
    return p, p**exponent
