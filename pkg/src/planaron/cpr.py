"""Current-phase relations of Josephson weak links.

Four model families are supported:

* :class:`Sinusoidal` - tunnel-junction ``I_c sin(phi)``
* :class:`ResonantLevel` - single resonant level averaged over disorder
  configurations, valid for ``E_Th < Delta``
* :class:`HarmonicSeries` - ``sum_k I_k sin(k phi)``
* :class:`SingleChannel` - zero-temperature short single channel of
  transparency ``tau``

Every model is odd and 2 pi-periodic in phi. Phases are reduced into
``[-pi, pi]`` before evaluation.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import List, Sequence, Tuple, Union

import numpy as np
from scipy import integrate

from . import constants as C
from .exceptions import DomainError, ModelValidityError, SchemaError


def wrap_phase(phi):
    """Reduce phase into ``[-pi, pi)``."""
    return np.mod(np.asarray(phi, dtype=float) + np.pi, 2.0 * np.pi) - np.pi


@dataclass(frozen=True)
class Sinusoidal:
    I_c: float
    kind: str = field(default="sinusoidal", init=False, repr=False)


@dataclass(frozen=True)
class ResonantLevel:
    """Resonant-level weak link; energies in J, ``R_N`` in ohm."""

    E_Th: float
    delta: float
    R_N: float
    kind: str = field(default="resonant_level", init=False, repr=False)

    def __post_init__(self):
        if not (self.E_Th > 0 and self.delta > 0 and self.R_N > 0):
            raise DomainError("ResonantLevel needs positive E_Th, delta and R_N")
        if self.E_Th >= self.delta:
            raise ModelValidityError(
                f"resonant-level relation assumes E_Th < Delta (E_Th/Delta = "
                f"{self.E_Th / self.delta:.4g})"
            )


@dataclass(frozen=True)
class HarmonicSeries:
    """``I(phi) = sum_k I_k sin(k phi)``; ``coeffs`` is a tuple of ``(k, I_k)``."""

    coeffs: Tuple[Tuple[int, float], ...]
    kind: str = field(default="harmonic_series", init=False, repr=False)

    def __post_init__(self):
        coeffs = tuple((int(k), float(a)) for k, a in self.coeffs)
        if not coeffs or any(k < 1 for k, _ in coeffs):
            raise DomainError("harmonic orders must be integers >= 1")
        object.__setattr__(self, "coeffs", coeffs)


@dataclass(frozen=True)
class SingleChannel:
    """Single channel ``(e Delta / 2 hbar) tau sin(phi) / sqrt(1 - tau sin^2(phi/2))``.

    ``prefactor_R_N`` is only used to report ``I_c R_N`` products.
    """

    tau: float
    delta: float
    prefactor_R_N: float = C.R_Q
    kind: str = field(default="single_channel", init=False, repr=False)

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise DomainError(f"transparency must lie in (0, 1], got {self.tau!r}")
        if not self.delta > 0:
            raise DomainError("delta must be positive")


CprModel = Union[Sinusoidal, ResonantLevel, HarmonicSeries, SingleChannel]

_KINDS = {
    "sinusoidal": Sinusoidal,
    "resonant_level": ResonantLevel,
    "harmonic_series": HarmonicSeries,
    "single_channel": SingleChannel,
}


def _resonant_bracket(x, phi):
    # ln(4 Delta / E_Th) + asin(sin(phi/2))**2 / pi, in units where E_Th = x Delta
    return np.log(4.0 / x) + np.arcsin(np.sin(phi / 2.0)) ** 2 / np.pi


def cpr_current(model: CprModel, phi):
    """Supercurrent in A at phase(s) ``phi`` (rad)."""
    phi = wrap_phase(phi)
    if isinstance(model, Sinusoidal):
        out = model.I_c * np.sin(phi)
    elif isinstance(model, ResonantLevel):
        x = model.E_Th / model.delta
        out = (model.E_Th / (C.e * model.R_N)) * _resonant_bracket(x, phi) * np.sin(phi)
    elif isinstance(model, HarmonicSeries):
        out = np.zeros_like(phi)
        for k, a in model.coeffs:
            out = out + a * np.sin(k * phi)
    elif isinstance(model, SingleChannel):
        amp = C.e * model.delta / (2.0 * C.hbar)
        s2 = np.sin(phi / 2.0) ** 2
        denom = np.sqrt(np.clip(1.0 - model.tau * s2, 0.0, None))
        with np.errstate(invalid="ignore", divide="ignore"):
            out = amp * model.tau * np.sin(phi) / denom
        # tau = 1 at phi = -pi: 0/0, the odd-symmetric value is 0
        out = np.where(denom == 0.0, 0.0, out)
    else:
        raise SchemaError(f"not a CPR model: {model!r}")
    return float(out) if np.ndim(out) == 0 else out


def _golden_max(f, a, b, tol):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol * max(1.0, abs(c)):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2.0


def critical_current(model: CprModel, n_grid: int = 2048) -> Tuple[float, float]:
    """Maximum supercurrent over ``[0, pi]`` and the phase where it occurs.

    A ``n_grid``-point scan brackets the maximum, then golden-section search
    refines it.
    """
    if isinstance(model, Sinusoidal):
        return abs(model.I_c), (math.pi / 2.0 if model.I_c >= 0 else -math.pi / 2.0)
    grid = np.linspace(0.0, math.pi, n_grid)
    vals = cpr_current(model, grid)
    i = int(np.argmax(vals))
    if isinstance(model, SingleChannel) and model.tau == 1.0 and i >= n_grid - 2:
        # the supremum sits at the discontinuity phi -> pi
        return C.e * model.delta / C.hbar, math.pi
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, n_grid - 1)]
    phi_max = _golden_max(lambda p: float(cpr_current(model, p)), lo, hi, 1e-12)
    return float(cpr_current(model, phi_max)), phi_max


def resonant_peak(x: float) -> float:
    """Peak of ``e I R_N / Delta`` for the resonant-level relation at ``E_Th/Delta = x``."""
    model = ResonantLevel(E_Th=x, delta=1.0, R_N=1.0)
    ic, _ = critical_current(model)
    # in these units cpr_current returns E_Th/(e R_N) * (...), i.e. Delta/e scaling
    return ic * C.e


def eth_from_icrn(ratio: float, delta: float, bracket=(1e-6, 0.99), xtol=1e-10) -> float:
    """Thouless energy reproducing ``I_c R_N = ratio * pi Delta / 2e``.

    ``ratio`` is the measured product expressed as a fraction of the
    zero-temperature Ambegaokar-Baratoff value. Solved by bisection on
    ``E_Th / Delta``; the peak current is monotone in ``E_Th`` on the bracket.
    """
    if not 0.0 < ratio < 1.0:
        raise DomainError(f"ratio must lie in (0, 1), got {ratio!r}")
    if not delta > 0:
        raise DomainError("delta must be positive")
    target = ratio * math.pi / 2.0
    lo, hi = bracket
    f_lo = resonant_peak(lo) - target
    f_hi = resonant_peak(hi) - target
    if f_lo * f_hi > 0:
        raise DomainError(
            f"no E_Th/Delta in [{lo}, {hi}] reproduces ratio {ratio} "
            f"(peak range {resonant_peak(lo) / (math.pi / 2):.4g}.."
            f"{resonant_peak(hi) / (math.pi / 2):.4g})"
        )
    while hi - lo > xtol * hi:
        mid = 0.5 * (lo + hi)
        f_mid = resonant_peak(mid) - target
        if (f_mid > 0) == (f_hi > 0):
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi) * delta


@dataclass(frozen=True)
class HarmonicDecomposition:
    coeffs: Tuple[Tuple[int, float], ...]
    residual: float

    def __call__(self, phi):
        phi = np.asarray(phi, dtype=float)
        return sum(a * np.sin(k * phi) for k, a in self.coeffs)


def _kinks(model):
    if isinstance(model, SingleChannel) and model.tau == 1.0:
        return [math.pi]
    return []


def harmonics(model: CprModel, K: int, n_check: int = 257) -> HarmonicDecomposition:
    """Sine-series coefficients ``I_k = (1/pi) int I(phi) sin(k phi) dphi``, k = 1..K.

    Uses QUADPACK's adaptive sine-weighted quadrature on ``[0, pi]`` (the
    relation is odd, so the full-period integral is twice the half-period
    one). ``residual`` is the largest reconstruction error on an ``n_check``
    node grid over ``[-pi, pi]``.
    """
    if K < 1:
        raise DomainError("K must be >= 1")
    if isinstance(model, HarmonicSeries):
        exact = dict()
        for k, a in model.coeffs:
            exact[k] = exact.get(k, 0.0) + a
    grid = np.linspace(-math.pi, math.pi, n_check)
    scale = float(np.max(np.abs(cpr_current(model, grid)))) or 1.0
    coeffs: List[Tuple[int, float]] = []
    for k in range(1, K + 1):
        if isinstance(model, Sinusoidal):
            val = model.I_c if k == 1 else 0.0
        elif isinstance(model, HarmonicSeries):
            val = exact.get(k, 0.0)
        else:
            val, _ = integrate.quad(
                lambda p: float(cpr_current(model, p)) / scale,
                0.0,
                math.pi,
                weight="sin",
                wvar=k,
                epsabs=1e-12,
                epsrel=1e-12,
                limit=400,
            )
            val *= 2.0 * scale / math.pi
        coeffs.append((k, val))
    decomposition = HarmonicDecomposition(tuple(coeffs), 0.0)
    residual = float(np.max(np.abs(decomposition(grid) - cpr_current(model, grid))))
    return HarmonicDecomposition(tuple(coeffs), residual)


def energy_phase(model: CprModel, K: int) -> List[Tuple[int, float]]:
    """Coefficients ``E_k`` (J) of ``E(phi) = sum_k E_k (1 - cos k phi)``.

    Term-wise integration of the sine series: ``E_k = (hbar / 2e) I_k / k``.
    """
    dec = harmonics(model, K)
    return [(k, C.hbar / (2.0 * C.e) * a / k) for k, a in dec.coeffs]


def to_dict(model: CprModel) -> dict:
    d = asdict(model)
    d.pop("kind")
    if isinstance(model, HarmonicSeries):
        d["coeffs"] = [list(c) for c in model.coeffs]
    return {"type": model.kind, **d}


def from_dict(data: dict) -> CprModel:
    """Inverse of :func:`to_dict`. Unknown tags or fields raise :class:`SchemaError`."""
    data = dict(data)
    tag = data.pop("type", None)
    if tag not in _KINDS:
        raise SchemaError(f"unknown CPR type {tag!r}; expected one of {sorted(_KINDS)}")
    cls = _KINDS[tag]
    if cls is HarmonicSeries and "coeffs" in data:
        data["coeffs"] = tuple(tuple(c) for c in data["coeffs"])
    try:
        return cls(**data)
    except TypeError as exc:
        raise SchemaError(f"bad fields for CPR type {tag!r}: {exc}") from None


def dumps(model: CprModel) -> str:
    return json.dumps(to_dict(model), sort_keys=True)


def loads(text: str) -> CprModel:
    return from_dict(json.loads(text))


def numba_spec(model: CprModel) -> Tuple[int, np.ndarray]:
    """Integer tag and parameter vector used by the compiled RCSJ kernel.

    Amplitudes are in A; the kernel rescales them.
    """
    if isinstance(model, Sinusoidal):
        return 0, np.array([model.I_c])
    if isinstance(model, HarmonicSeries):
        flat = []
        for k, a in model.coeffs:
            flat += [float(k), a]
        return 1, np.array(flat)
    if isinstance(model, ResonantLevel):
        return 2, np.array([model.E_Th / (C.e * model.R_N), model.E_Th / model.delta])
    if isinstance(model, SingleChannel):
        return 3, np.array([C.e * model.delta / (2.0 * C.hbar), model.tau])
    raise SchemaError(f"not a CPR model: {model!r}")
