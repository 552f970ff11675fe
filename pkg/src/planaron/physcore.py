"""Gap models and closed-form superconductivity relations.

All quantities are SI: temperatures in K, energies in J, resistances in ohm,
inductances in H.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from . import constants as C
from .exceptions import DomainError

STRONG = "strong_phenomenological"
WEAK_NEAR_TC = "weak_near_tc"

# strong-coupling ratio Delta(0) / (k_B T_c)
STRONG_COUPLING_RATIO = 1.96
# weak-coupling BCS amplitude of Delta near T_c, in units of k_B sqrt(T_c (T_c - T))
WEAK_NEAR_TC_AMPLITUDE = 3.06


@dataclass(frozen=True)
class GapModel:
    """Temperature profile of the superconducting gap.

    Parameters
    ----------
    tc : float
        Critical temperature in K.
    coupling : {"strong_phenomenological", "weak_near_tc"}
        ``strong_phenomenological`` uses ``delta0 * sqrt(1 - T**2/tc**2)``;
        ``weak_near_tc`` uses ``3.06 k_B sqrt(tc (tc - T))`` and is only
        defined inside ``validity``.
    delta0 : float, optional
        Zero-temperature gap in J. Defaults to ``1.96 k_B tc``.
    validity_fraction : float
        Lower end of the weak-coupling window as a fraction of ``tc``.
    """

    tc: float
    coupling: str = STRONG
    delta0: float = None
    validity_fraction: float = 0.9

    def __post_init__(self):
        if not self.tc > 0:
            raise DomainError(f"tc must be positive, got {self.tc!r}")
        if self.coupling not in (STRONG, WEAK_NEAR_TC):
            raise DomainError(f"unknown gap coupling {self.coupling!r}")
        if self.delta0 is None:
            object.__setattr__(self, "delta0", STRONG_COUPLING_RATIO * C.k_B * self.tc)
        if not self.delta0 > 0:
            raise DomainError("delta0 must be positive")

    @property
    def validity(self) -> Tuple[float, float]:
        """Temperature window (K) in which the profile is defined."""
        if self.coupling == WEAK_NEAR_TC:
            return (self.validity_fraction * self.tc, self.tc)
        return (0.0, self.tc)

    def __call__(self, T):
        return delta_of_T(self, T)


def delta_of_T(model: GapModel, T):
    """Gap at temperature ``T`` (scalar or array), in J."""
    T_arr = np.asarray(T, dtype=float)
    lo, hi = model.validity
    if np.any(~np.isfinite(T_arr)) or np.any(T_arr < lo) or np.any(T_arr > hi):
        raise DomainError(
            f"temperature {T!r} K outside the {model.coupling} validity window "
            f"[{lo:.6g}, {hi:.6g}] K"
        )
    if model.coupling == STRONG:
        out = model.delta0 * np.sqrt(np.clip(1.0 - (T_arr / model.tc) ** 2, 0.0, None))
    else:
        out = WEAK_NEAR_TC_AMPLITUDE * C.k_B * np.sqrt(model.tc * (model.tc - T_arr))
    return float(out) if out.ndim == 0 else out


def mattis_bardeen(value: float, direction: str = "RN_to_LK", delta0: float = None) -> float:
    """Kinetic inductance <-> normal resistance via ``L_K = hbar R_N / (pi Delta)``.

    ``direction`` is ``"RN_to_LK"`` (ohm in, H out) or ``"LK_to_RN"``.
    Works per square as well as for whole structures.
    """
    if delta0 is None or not delta0 > 0 or not value > 0:
        raise DomainError("mattis_bardeen needs positive value and delta0")
    if direction == "RN_to_LK":
        return C.hbar * value / (math.pi * delta0)
    if direction == "LK_to_RN":
        return value * math.pi * delta0 / C.hbar
    raise DomainError(f"unknown direction {direction!r}")


def ab_icrn(model: GapModel, T: float, full_output: bool = False):
    """Ambegaokar-Baratoff product ``(pi Delta(T) / 2e) tanh(Delta(T) / 2 k_B T)`` in V.

    Above ``tc`` the product is zero; with ``full_output`` the second element
    of the returned tuple flags that case instead of raising.
    """
    if not T >= 0:
        raise DomainError(f"temperature must be non-negative, got {T!r}")
    above = T >= model.tc
    if above:
        value = 0.0
    else:
        delta = delta_of_T(model, T)
        thermal = 1.0 if T == 0 else math.tanh(delta / (2.0 * C.k_B * T))
        value = math.pi * delta / (2.0 * C.e) * thermal
    if full_output:
        return value, above
    return value


@dataclass(frozen=True)
class DiffusionScales:
    """Length and energy scales of diffusive transport through a link.

    ``E_Th`` is stored as an energy, ``hbar D / l**2``.
    """

    D: float
    v_F: float
    l: float
    T: float
    l_T: float = field(init=False)
    E_Th: float = field(init=False)
    l_e: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "l_T", thermal_length(self.D, self.T))
        object.__setattr__(self, "E_Th", C.hbar * self.D / self.l**2)
        object.__setattr__(self, "l_e", 3.0 * self.D / self.v_F)


def thermal_length(D: float, T: float) -> float:
    return math.sqrt(C.hbar * D / (2.0 * math.pi * C.k_B * T))


def thouless_energy(D: float, l: float) -> float:
    return C.hbar * D / l**2


def diffusion_scales(D: float, v_F: float, l: float, T: float) -> DiffusionScales:
    """Mean free path, thermal length and Thouless energy for a link."""
    for name, val in (("D", D), ("v_F", v_F), ("l", l), ("T", T)):
        if not val > 0:
            raise DomainError(f"{name} must be positive, got {val!r}")
    return DiffusionScales(D=D, v_F=v_F, l=l, T=T)
