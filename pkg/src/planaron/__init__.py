"""Modelling and analysis tools for planar superconductor-normal-superconductor weak links.

Submodules
----------
constants   CODATA 2018 constants and unit helpers
physcore    gap profiles, Mattis-Bardeen and Ambegaokar-Baratoff relations
films       sheet-resistance phase classification and critical thickness
cpr         current-phase relations and harmonic decomposition
sns         diffusive-junction critical current and the D fit
rcsj        driven junction dynamics and Shapiro step detection
transmon    charge-basis transmon spectrum
microwave   squash fit, Autler-Townes calibration, notch circle fit
flux        magnetic interference patterns
iv          I-V feature extraction
io          CSV schemas and deterministic writers
"""

__version__ = "0.1.0"

from . import constants
from .exceptions import (
    ConvergenceError,
    DomainError,
    InsufficientDataError,
    ModelValidityError,
    NoTransitionError,
    PlanaronError,
    SchemaError,
    StiffnessError,
)

__all__ = [
    "__version__",
    "constants",
    "PlanaronError",
    "SchemaError",
    "DomainError",
    "ModelValidityError",
    "InsufficientDataError",
    "NoTransitionError",
    "ConvergenceError",
    "StiffnessError",
]
