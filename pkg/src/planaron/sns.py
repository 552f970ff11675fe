"""Diffusive-link critical current from a Matsubara sum, and fitting of D.

The product ``I_c R_N`` of a long diffusive S-N-S link at ``k_B T > E_Th`` is

    I_c R_N = (64 pi k_B T / e) sum_n (l / l_n) Delta^2 exp(-l / l_n)
              / (w_n + W_n + sqrt(2 (W_n^2 + w_n W_n)))^2

with ``w_n = (2n + 1) pi k_B T``, ``W_n = sqrt(Delta^2 + w_n^2)`` and
``l_n = sqrt(hbar D / 2 w_n)``. All energies are carried in J.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from . import constants as C
from ._lsq import levenberg_marquardt
from ._validation import check_increasing, check_series
from .exceptions import ConvergenceError, DomainError, InsufficientDataError, ModelValidityError
from .physcore import STRONG, WEAK_NEAR_TC, GapModel, delta_of_T, thouless_energy

# long-junction zero-temperature product e I_c(0) R_N / E_Th
ZERO_T_ICRN_OVER_ETH = 10.82

MATSUBARA = "matsubara"
ZERO_T_EXTENSION = "zero_T_extension"


@dataclass(frozen=True)
class DiffusiveJunction:
    """Link of length ``l`` (m), diffusion constant ``D`` (m^2/s), resistance ``R_N`` (ohm)."""

    l: float
    D: float
    R_N: float
    gap: GapModel = field(default_factory=lambda: GapModel(tc=12.0))

    def __post_init__(self):
        for name in ("l", "D", "R_N"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")

    @property
    def E_Th(self) -> float:
        return thouless_energy(self.D, self.l)

    def with_D(self, D: float) -> "DiffusiveJunction":
        return DiffusiveJunction(self.l, D, self.R_N, self.gap)


def _matsubara_terms(j: DiffusiveJunction, T: float, delta: float, n0: int, n1: int):
    n = np.arange(n0, n1, dtype=float)
    w = (2.0 * n + 1.0) * math.pi * C.k_B * T
    W = np.sqrt(delta * delta + w * w)
    l_over = j.l / np.sqrt(C.hbar * j.D / (2.0 * w))
    denom = (w + W + np.sqrt(2.0 * (W * W + w * W))) ** 2
    return l_over * delta * delta * np.exp(-l_over) / denom


def dubos_icrn(
    j: DiffusiveJunction,
    T: float,
    rel_threshold: float = 1e-12,
    n_cap: int = 1_000_000,
    full_output: bool = False,
):
    """``I_c R_N`` in V from the Matsubara sum.

    Terms are added until the last one is below ``rel_threshold`` times the
    running sum. With ``full_output`` a dict with the number of terms and the
    ``k_B T > E_Th`` validity flag is returned as well.
    """
    tc = j.gap.tc
    if not 0.0 < T < tc:
        raise DomainError(f"T = {T!r} K outside (0, T_c = {tc} K)")
    delta = delta_of_T(j.gap, T)
    total = 0.0
    n0 = 0
    block = 64
    last = math.inf
    while n0 < n_cap:
        n1 = min(n0 + block, n_cap)
        terms = _matsubara_terms(j, T, delta, n0, n1)
        # sequential partial sums so termination is term-exact
        csum = total + np.cumsum(terms)
        small = np.nonzero(terms < rel_threshold * np.maximum(csum, 1e-300))[0]
        if small.size:
            k = int(small[0])
            total = float(csum[k])
            n_terms = n0 + k + 1
            last = float(terms[k])
            break
        total = float(csum[-1])
        last = float(terms[-1])
        n0 = n1
        block *= 2
    else:
        raise ConvergenceError(
            f"Matsubara sum not converged after {n_cap} terms", partial=64 * math.pi * C.k_B * T / C.e * total
        )
    value = 64.0 * math.pi * C.k_B * T / C.e * total
    if full_output:
        return value, {"n_terms": n_terms, "last_term": last, "valid": C.k_B * T > j.E_Th}
    return value


def zero_temperature_icrn(j: DiffusiveJunction) -> float:
    """Long-junction ``I_c(0) R_N = 10.82 E_Th / e`` (outside the Matsubara formula's range)."""
    return ZERO_T_ICRN_OVER_ETH * j.E_Th / C.e


@dataclass
class IcTSeries:
    """Critical current versus temperature.

    ``provenance`` tags every point as ``"matsubara"`` or ``"zero_T_extension"``;
    measured data carry ``"measured"``.
    """

    T: np.ndarray
    I_c: np.ndarray
    R_N: Optional[float] = None
    label: str = ""
    sigma: Optional[np.ndarray] = None
    provenance: Tuple[str, ...] = ()

    def __post_init__(self):
        self.T = np.asarray(self.T, dtype=float)
        self.I_c = np.asarray(self.I_c, dtype=float)
        check_series(self.T, self.I_c, "temperature", "critical current")
        check_increasing(self.T, "temperature")
        if np.any(self.I_c < 0):
            raise DomainError("critical currents must be non-negative")
        if self.sigma is not None:
            self.sigma = np.asarray(self.sigma, dtype=float)
        if not self.provenance:
            self.provenance = ("measured",) * self.T.size


def ic_curve(j: DiffusiveJunction, Tgrid: Sequence[float], include_zero_T: bool = False) -> IcTSeries:
    """Model ``I_c(T) = dubos_icrn / R_N`` on ``Tgrid``.

    With ``include_zero_T`` the zero-temperature extension point is prepended
    at ``T = 0`` and tagged accordingly.
    """
    Tgrid = np.asarray(Tgrid, dtype=float)
    ic = np.array([dubos_icrn(j, float(T)) / j.R_N for T in Tgrid])
    prov = [MATSUBARA] * Tgrid.size
    if include_zero_T:
        Tgrid = np.concatenate([[0.0], Tgrid])
        ic = np.concatenate([[zero_temperature_icrn(j) / j.R_N], ic])
        prov = [ZERO_T_EXTENSION] + prov
    return IcTSeries(Tgrid, ic, R_N=j.R_N, label=f"D={j.D:.6g} m^2/s", provenance=tuple(prov))


def ab_slope_near_tc(gap: GapModel, R_N: float) -> Tuple[float, float]:
    """Slope of the Ambegaokar-Baratoff product at ``T_c`` for the weak-coupling gap.

    Returns ``(d(I_c R_N)/dT in V/K, dI_c/dT in A/K)``.
    """
    if gap.coupling != WEAK_NEAR_TC:
        raise DomainError("the analytic near-T_c slope needs the weak_near_tc gap model")
    if not R_N > 0:
        raise DomainError("R_N must be positive")
    slope_v = -math.pi * 3.06**2 * C.k_B / (4.0 * C.e)
    return slope_v, slope_v / R_N


def strong_gap_slope_near_tc(gap: GapModel) -> float:
    """Same slope for the phenomenological strong-coupling profile (V/K)."""
    if gap.coupling != STRONG:
        raise DomainError("expects the strong_phenomenological gap model")
    ratio = gap.delta0 / (C.k_B * gap.tc)
    return -math.pi * 2.0 * ratio**2 * C.k_B / (4.0 * C.e)


class DiffusionFit(RegressorMixin, BaseEstimator):
    """Fit the diffusion constant of a link to measured ``I_c(T)``.

    ``D`` is the only free parameter; it is optimised in ``log D`` by damped
    least squares. The link length has no default and must be given.

    Parameters
    ----------
    length : float
        Link length in m.
    R_N : float
        Normal-state resistance in ohm.
    tc : float
        Critical temperature in K (fixed, not fitted).
    gap_coupling : str
        Gap profile, see :class:`~planaron.physcore.GapModel`.
    D_init : float
        Starting diffusion constant in m^2/s.
    include_zero_T : bool
        Model points with ``T <= zero_T_below`` by the zero-temperature
        extension instead of dropping them.
    sigma_floor : float
        Uncertainty floor as a fraction of ``max(I_c)``.

    Attributes
    ----------
    D_ : float
    D_stderr_ : float
    covariance_ : ndarray of shape (1, 1)
        Covariance of ``log D``.
    residual_ : float
        Final weighted cost.
    converged_ : bool
    cost_trace_ : list of float
    valid_ : bool
        Whether ``k_B T_min > E_Th(D_)`` for the finite-temperature points.
    """

    def __init__(
        self,
        length=None,
        R_N=None,
        tc=12.0,
        gap_coupling=STRONG,
        D_init=1e-4,
        include_zero_T=False,
        zero_T_below=0.5,
        sigma_floor=0.01,
        ftol=1e-10,
        max_iter=200,
    ):
        self.length = length
        self.R_N = R_N
        self.tc = tc
        self.gap_coupling = gap_coupling
        self.D_init = D_init
        self.include_zero_T = include_zero_T
        self.zero_T_below = zero_T_below
        self.sigma_floor = sigma_floor
        self.ftol = ftol
        self.max_iter = max_iter

    def _junction(self, D):
        return DiffusiveJunction(self.length, D, self.R_N, GapModel(self.tc, self.gap_coupling))

    def _model(self, D, T, zero_mask):
        j = self._junction(D)
        out = np.empty_like(T)
        for i, t in enumerate(T):
            if zero_mask[i]:
                out[i] = zero_temperature_icrn(j) / self.R_N
            else:
                out[i] = dubos_icrn(j, float(t)) / self.R_N
        return out

    def fit(self, X, y, sigma=None):
        """Fit ``D``.

        ``X`` holds temperatures in K (shape ``(n,)`` or ``(n, 1)``), ``y`` the
        critical currents in A, ``sigma`` optional per-point uncertainties.
        """
        if self.length is None or self.R_N is None:
            raise DomainError("DiffusionFit needs explicit length and R_N")
        T = np.asarray(X, dtype=float).reshape(-1)
        ic = np.asarray(y, dtype=float).reshape(-1)
        check_series(T, ic, "temperature", "critical current")
        floor = self.sigma_floor * float(np.max(np.abs(ic)))
        if sigma is None:
            sig = np.full_like(ic, floor)
        else:
            sig = np.maximum(np.asarray(sigma, dtype=float).reshape(-1), floor)
        zero = T <= self.zero_T_below
        keep = (~zero) | bool(self.include_zero_T)
        keep &= T < self.tc
        T, ic, sig, zero = T[keep], ic[keep], sig[keep], zero[keep]
        order = np.argsort(T, kind="stable")
        T, ic, sig, zero = T[order], ic[order], sig[order], zero[order]
        finite_T = T[~zero]
        E_th0 = thouless_energy(self.D_init, self.length)
        n_valid = int(np.sum(C.k_B * finite_T > E_th0))
        if finite_T.size and n_valid == 0:
            raise ModelValidityError(
                "all temperatures violate k_B T > E_Th at the starting D; "
                "the Matsubara formula does not apply"
            )
        if n_valid < 4:
            raise InsufficientDataError(
                f"need at least 4 points with k_B T > E_Th, got {n_valid}"
            )

        def resid(x):
            return (self._model(math.exp(x[0]), T, zero) - ic) / sig

        res = levenberg_marquardt(resid, [math.log(self.D_init)], ftol=self.ftol, max_iter=self.max_iter)
        if not res.converged:
            raise ConvergenceError(
                f"D fit did not converge; cost trace {res.cost_trace[-5:]}", partial=res
            )
        self.D_ = math.exp(res.x[0])
        self.covariance_ = res.covariance
        self.D_stderr_ = self.D_ * float(res.stderr[0])
        self.residual_ = res.cost
        self.cost_trace_ = res.cost_trace
        self.converged_ = res.converged
        self.n_iter_ = res.n_iter
        self.E_Th_ = thouless_energy(self.D_, self.length)
        self.valid_ = bool(finite_T.size == 0 or C.k_B * finite_T.min() > self.E_Th_)
        return self

    def predict(self, X):
        check_is_fitted(self, "D_")
        T = np.asarray(X, dtype=float).reshape(-1)
        return self._model(self.D_, T, T <= self.zero_T_below)

    def junction(self) -> DiffusiveJunction:
        check_is_fitted(self, "D_")
        return self._junction(self.D_)

    def report(self) -> dict:
        check_is_fitted(self, "D_")
        return {
            "D_m2_per_s": self.D_,
            "D_stderr_m2_per_s": self.D_stderr_,
            "log_D_variance": float(self.covariance_[0, 0]),
            "residual": self.residual_,
            "converged": self.converged_,
            "iterations": self.n_iter_,
            "E_Th_J": self.E_Th_,
            "kT_min_exceeds_E_Th": self.valid_,
            "length_m": self.length,
            "R_N_ohm": self.R_N,
            "tc_K": self.tc,
            "gap_coupling": self.gap_coupling,
        }
