"""CSV ingestion and deterministic output writers.

Every data file starts with comment lines ``# key: value``; ``# schema:`` is
mandatory. Column names carry their unit as a suffix (``voltage_mV``), and
values are converted to SI on read. Outputs are written with 17 significant
digits in a fixed column order so identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import constants as C
from .exceptions import SchemaError

# quantity -> {unit suffix: factor to SI}
UNITS: Dict[str, Dict[str, float]] = {
    "temperature": {"K": 1.0, "mK": 1e-3},
    "rs": {"ohm_per_sq": 1.0, "kohm_per_sq": 1e3},
    "current": {"A": 1.0, "mA": 1e-3, "uA": 1e-6, "nA": 1e-9, "pA": 1e-12},
    "voltage": {"V": 1.0, "mV": 1e-3, "uV": 1e-6, "nV": 1e-9},
    "dvdi": {"ohm": 1.0, "kohm": 1e3, "Mohm": 1e6},
    "ic": {"A": 1.0, "mA": 1e-3, "uA": 1e-6, "nA": 1e-9},
    "sigma": {"A": 1.0, "mA": 1e-3, "uA": 1e-6, "nA": 1e-9},
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9},
    "power": {"dBm": 1.0},
    "drive": {"A": 1.0, "mA": 1e-3, "uA": 1e-6, "nA": 1e-9},
    "x": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9},
    "B": {"T": 1.0, "mT": 1e-3},
    "re": {"": 1.0},
    "im": {"": 1.0},
    "weight": {"": 1.0},
    "ic_over_ic0": {"": 1.0},
    # output tables
    "thickness": {"m": 1.0, "nm": 1e-9},
    "slope": {"ohm_per_sq_per_K": 1.0},
    "window_lo": {"K": 1.0},
    "window_hi": {"K": 1.0},
    "rn": {"ohm": 1.0},
    "icrn": {"V": 1.0, "mV": 1e-3},
    "vc": {"V": 1.0, "mV": 1e-3},
    "vq": {"V": 1.0, "uV": 1e-6},
    "ilo": {"A": 1.0},
    "ihi": {"A": 1.0},
    "npoints": {"": 1.0},
    "lower": {"Hz": 1.0},
    "upper": {"Hz": 1.0},
    "device_power": {"dBm": 1.0},
    "label": {"": 1.0},
    "class": {"": 1.0},
    "phase": {"": 1.0},
    "rule": {"": 1.0},
    "q": {"": 1.0},
    "exists": {"": 1.0},
    "hysteretic": {"": 1.0},
}

TEXT = {"label", "class", "phase", "rule", "q", "exists", "hysteretic"}


@dataclass(frozen=True)
class Schema:
    name: str
    required: Tuple[str, ...]
    optional: Tuple[str, ...] = ()
    increasing: Optional[str] = None
    positive: Tuple[str, ...] = ()
    nonneg: Tuple[str, ...] = ()
    alternatives: Dict[str, Tuple[str, ...]] = field(default_factory=dict)
    allow_nan: bool = False


SCHEMAS: Dict[str, Schema] = {
    "rs_t": Schema("rs_t", ("temperature", "rs"), increasing="temperature", nonneg=("rs",)),
    "iv": Schema("iv", ("current", "voltage"), ("dvdi",)),
    "ic_t": Schema("ic_t", ("temperature", "ic"), ("sigma",), increasing="temperature", nonneg=("ic",), positive=("sigma",)),
    "s21": Schema("s21", ("frequency", "re", "im"), increasing="frequency"),
    # measured maps carry RF power; simulated maps carry the drive current amplitude
    "shapiro": Schema("shapiro", ("power", "current", "voltage"), ("dvdi",), alternatives={"power": ("drive",)}),
    "profile": Schema("profile", ("x", "weight"), increasing="x", nonneg=("weight",)),
    # written by the command-line front end
    "films_classes": Schema("films_classes", ("thickness", "slope", "class", "window_lo", "window_hi")),
    "fraunhofer": Schema("fraunhofer", ("B", "ic_over_ic0"), increasing="B"),
    "features": Schema("features", ("label", "phase", "ic", "rn", "icrn", "vc", "rule", "hysteretic"), allow_nan=True),
    "steps": Schema("steps", ("power", "q", "exists", "vq", "ilo", "ihi", "npoints"), alternatives={"power": ("drive",)}, allow_nan=True),
    "at_branches": Schema("at_branches", ("power", "device_power", "lower", "upper"), increasing="power"),
}


def split_column(name: str) -> Tuple[str, str]:
    """``"voltage_mV"`` -> ``("voltage", "mV")``; unitless columns return ``(name, "")``."""
    for q in sorted(UNITS, key=len, reverse=True):
        if name == q:
            return q, ""
        if name.startswith(q + "_"):
            return q, name[len(q) + 1 :]
    return name, ""


@dataclass
class Table:
    """Parsed CSV: SI columns keyed by quantity, header fields, and source line numbers."""

    schema: str
    columns: Dict[str, np.ndarray]
    header: Dict[str, str]
    lines: np.ndarray
    path: str = ""
    raw: Dict[str, np.ndarray] = field(default_factory=dict)


def _fail(path, msg):
    raise SchemaError(f"{path}: {msg}")


def read_table(path: str, schema: Optional[str] = None) -> Table:
    """Read and validate a CSV file against ``schema`` (or the one it declares)."""
    if not os.path.exists(path):
        _fail(path, "file not found")
    header: Dict[str, str] = {}
    rows: List[Tuple[int, List[str]]] = []
    names: Optional[List[str]] = None
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                body = s[1:].strip()
                if ":" in body:
                    k, v = body.split(":", 1)
                    header[k.strip()] = v.strip()
                continue
            fields = next(csv.reader([s]))
            if names is None:
                names = [f.strip() for f in fields]
            else:
                rows.append((lineno, fields))
    declared = header.get("schema")
    if declared is None:
        _fail(path, "missing '# schema:' header line")
    if schema is not None and declared != schema:
        _fail(path, f"schema mismatch: file declares {declared!r}, expected {schema!r}")
    if declared not in SCHEMAS:
        _fail(path, f"unknown schema {declared!r}")
    sch = SCHEMAS[declared]
    if names is None:
        _fail(path, "no column header row")

    index: Dict[str, Tuple[int, float]] = {}
    for i, n in enumerate(names):
        q, unit = split_column(n)
        if q not in UNITS:
            _fail(path, f"unknown column {n!r}")
        if unit not in UNITS[q]:
            _fail(path, f"unit mismatch in column {n!r}: {unit or '(none)'} not in {sorted(UNITS[q])}")
        index[q] = (i, UNITS[q][unit])
    for q in sch.required:
        if q not in index and not any(a in index for a in sch.alternatives.get(q, ())):
            _fail(path, f"missing required column {q!r} for schema {declared!r}")

    data = {q: (np.empty(len(rows), dtype=object) if q in TEXT else np.empty(len(rows))) for q in index}
    raw = {q: np.empty(len(rows)) for q in index if q not in TEXT}
    lines = np.array([ln for ln, _ in rows], dtype=int)
    for r, (ln, fields) in enumerate(rows):
        if len(fields) != len(names):
            _fail(path, f"row at line {ln}: expected {len(names)} fields, got {len(fields)}")
        for q, (i, factor) in index.items():
            if q in TEXT:
                data[q][r] = fields[i]
                continue
            try:
                v = float(fields[i])
            except ValueError:
                _fail(path, f"row at line {ln}: column {names[i]!r} is not a number ({fields[i]!r})")
            if not math.isfinite(v) and not (sch.allow_nan and math.isnan(v)):
                _fail(path, f"row at line {ln}: column {names[i]!r} is NaN or inf")
            raw[q][r] = v
            data[q][r] = v * factor if factor != 1.0 else v
    if not rows:
        _fail(path, "no data rows")
    if sch.increasing and sch.increasing in data:
        bad = np.nonzero(np.diff(data[sch.increasing]) <= 0)[0]
        if bad.size:
            k = int(bad[0]) + 1
            _fail(path, f"{sch.increasing} must be strictly increasing; violated at line {lines[k]}")
    for q in sch.positive:
        if q in data and np.any(data[q] <= 0):
            k = int(np.nonzero(data[q] <= 0)[0][0])
            _fail(path, f"{q} must be positive; violated at line {lines[k]}")
    for q in sch.nonneg:
        if q in data and np.any(data[q] < 0):
            k = int(np.nonzero(data[q] < 0)[0][0])
            _fail(path, f"{q} must be non-negative; violated at line {lines[k]}")
    return Table(declared, data, header, lines, path, raw)


def _header_float(t: Table, key: str, required=True):
    if key not in t.header:
        if required:
            _fail(t.path, f"missing '# {key}:' header")
        return None
    try:
        return float(t.header[key])
    except ValueError:
        _fail(t.path, f"header {key!r} is not a number")


def ingest(path: str, schema: str):
    """Read ``path`` and build the typed object for ``schema``.

    ``rs_t`` -> :class:`~planaron.films.RsTSeries`, ``iv`` ->
    :class:`~planaron.iv.IVCurve`, ``ic_t`` -> :class:`~planaron.sns.IcTSeries`,
    ``s21`` -> :class:`~planaron.microwave.ComplexTrace`, ``shapiro`` ->
    :class:`ShapiroTable`, ``profile`` -> :class:`~planaron.flux.Sampled`.
    """
    t = read_table(path, schema)
    c = t.columns
    if schema == "rs_t":
        from .films import RsTSeries

        return RsTSeries(_header_float(t, "thickness_nm"), c["temperature"], c["rs"], t.header.get("label", ""))
    if schema == "iv":
        from .iv import IVCurve

        d = np.diff(c["current"])
        if not (np.all(d > 0) or np.all(d < 0)):
            k = int(np.nonzero(np.sign(d) != np.sign(d[0]))[0][0]) + 1 if np.any(d != 0) else 1
            _fail(path, f"current must be monotone within a sweep; violated at line {t.lines[k]}")
        return IVCurve(c["current"], c["voltage"], t.header.get("sweep_dir"), c.get("dvdi"), t.header.get("label", ""))
    if schema == "ic_t":
        from .sns import IcTSeries

        return IcTSeries(c["temperature"], c["ic"], _header_float(t, "R_N_ohm", False), t.header.get("label", ""), c.get("sigma"))
    if schema == "s21":
        from .microwave import ComplexTrace

        meta = {k: v for k, v in t.header.items() if k not in ("schema", "power_dBm")}
        return ComplexTrace(c["frequency"], c["re"] + 1j * c["im"], _header_float(t, "power_dBm", False), meta)
    if schema == "shapiro":
        return ShapiroTable.from_table(t)
    if schema == "profile":
        from .flux import Sampled

        return Sampled(c["x"], c["weight"])
    _fail(path, f"no builder for schema {schema!r}")


@dataclass
class ShapiroTable:
    """Long-format map: one row per (drive, bias) point."""

    drive: np.ndarray
    current: np.ndarray
    voltage: np.ndarray
    drive_kind: str = "power"

    @classmethod
    def from_table(cls, t: Table) -> "ShapiroTable":
        c = t.columns
        kind = "power" if "power" in c else "drive"
        return cls(c[kind], c["current"], c["voltage"], kind)

    def cuts(self):
        """``[(drive value, I, V), ...]`` sorted by drive, each cut sorted by bias."""
        out = []
        for d in np.unique(self.drive):
            m = self.drive == d
            order = np.argsort(self.current[m], kind="stable")
            I, V = self.current[m][order], self.voltage[m][order]
            if np.any(np.diff(I) <= 0):
                raise SchemaError(f"repeated bias current in the cut at drive {d!r}")
            out.append((float(d), I, V))
        return out


# --- writers ----------------------------------------------------------------


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def config_hash(cfg: dict) -> str:
    """SHA-256 of the canonical config, ignoring where outputs go."""
    clean = {k: v for k, v in cfg.items() if k not in ("output_dir",)}
    return hashlib.sha256(canonical_json(clean).encode()).hexdigest()


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return "%.17g" % float(v)


def write_csv(path: str, schema: str, columns: Sequence[Tuple[str, Sequence]], header: Optional[dict] = None,
              chash: Optional[str] = None) -> str:
    """Write columns (list of ``(name, values)``) with the comment header first."""
    buf = _io.StringIO()
    buf.write(f"# schema: {schema}\n")
    for k, v in (header or {}).items():
        buf.write(f"# {k}: {fmt(v)}\n")
    if chash is not None:
        buf.write(f"# config_hash: {chash}\n")
    names = [n for n, _ in columns]
    vals = [list(v) for _, v in columns]
    n = len(vals[0]) if vals else 0
    if any(len(v) != n for v in vals):
        raise SchemaError("columns of unequal length")
    buf.write(",".join(names) + "\n")
    for i in range(n):
        buf.write(",".join(fmt(v[i]) for v in vals) + "\n")
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    return obj


def write_json(path: str, obj: dict) -> str:
    with open(path, "w") as fh:
        fh.write(json.dumps(_jsonable(obj), sort_keys=True, indent=2))
        fh.write("\n")
    return path


def provenance(chash: str) -> dict:
    import numba
    import scipy
    import sklearn

    from . import __version__

    return {
        "config_hash": chash,
        "constants": C.CODATA_VERSION,
        "versions": {
            "planaron": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "scikit-learn": sklearn.__version__,
            "numba": numba.__version__,
        },
    }


def embedded_hash(path: str) -> Optional[str]:
    """Config hash stored in an output file (CSV header or JSON provenance)."""
    if path.endswith(".json"):
        with open(path) as fh:
            return json.load(fh).get("provenance", {}).get("config_hash")
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            if line[1:].strip().startswith("config_hash:"):
                return line.split(":", 1)[1].strip()
    return None
