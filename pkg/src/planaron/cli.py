"""Command-line front end.

    planaron <command> [--config FILE] [--out DIR] [--seed N] [--demo]
                       [--input PATH ...] [--set block.key=VALUE ...]

Configs are JSON objects with one typed block per module plus ``inputs``,
``seed`` and ``demo``. Values given with ``--set`` are parsed as JSON (bare
words fall back to strings) and override the file. Every run writes the
resolved ``config.json``, a ``report.json`` carrying the provenance block,
and command-specific CSV tables, each stamped with the config hash.

Exit codes: 0 success, 2 schema error, 3 model-validity error,
4 non-convergence, 1 anything else raised by the package.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
from fractions import Fraction
from typing import Callable, Dict, List, Optional

import numpy as np

from . import constants as C
from . import io as pio
from .exceptions import DomainError, PlanaronError, SchemaError

ANY = object()
NUM = (int, float)


def _block(**fields):
    """Typed parameter block: ``name=(default, types)``; ``None`` is always allowed."""
    return fields


BLOCKS: Dict[str, Dict[str, dict]] = {
    "films-classify": {
        "films": _block(
            window_fraction=(0.25, NUM),
            tol_ohm_per_sq_per_K=(1.0, NUM),
            demo_thicknesses_nm=([1.5 + 4.5 * k / 29 for k in range(30)], list),
            demo_d_c_nm=(2.75, NUM),
            demo_noise=(1e-3, NUM),
        )
    },
    "sns-fit": {
        "sns": _block(
            length_nm=(30.0, NUM),
            R_N_ohm=(1300.0, NUM),
            tc_K=(12.0, NUM),
            gap_coupling=("strong_phenomenological", str),
            D_init_cm2_per_s=(1.0, NUM),
            include_zero_T=(False, bool),
            zero_T_below_K=(0.5, NUM),
            sigma_floor=(0.01, NUM),
            n_model_points=(60, int),
            demo_D_cm2_per_s=(1.1, NUM),
            demo_T_K=([3.0 + 0.5 * k for k in range(18)], list),
            demo_noise=(0.02, NUM),
        )
    },
    "shapiro-sim": {
        "rcsj": _block(
            cpr=({"type": "sinusoidal", "I_c": 1e-6}, dict),
            R_ohm=(20.0, NUM),
            f_RF_Hz=(6.8e9, NUM),
            beta_c=(0.0, NUM),
            transient_periods=(200, int),
            average_periods=(800, int),
            rel_tol=(1e-8, NUM),
            i_dc_A=([-3e-6, 3e-6, 64], list),
            drive_A=([0.0, 3e-6, 64], list),
        ),
        "detect": _block(
            fractions=(["1/2", "1", "3/2", "2", "3"], list),
            tolerance=(0.002, NUM),
            min_points=(3, int),
        ),
    },
    "shapiro-detect": {
        "detect": _block(
            f_RF_Hz=(6.8e9, NUM),
            fractions=(["1/2", "1", "3/2", "2", "3"], list),
            tolerance=(0.002, NUM),
            min_points=(3, int),
            demo_cpr=({"type": "harmonic_series", "coeffs": [[1, 1e-6], [2, 3e-7]]}, dict),
            demo_R_ohm=(10.0, NUM),
            demo_i_dc_A=([0.0, 2.5e-6, 81], list),
            demo_drive_A=([0.5e-6, 2.0e-6, 4], list),
        )
    },
    "transmon": {
        "transmon": _block(
            E_C_Hz=(293e6, NUM),
            E_J_Hz=(26.15e9, NUM),
            potential_Hz=(None, list),
            cpr=(None, dict),
            harmonics=(12, int),
            f_q_Hz=(None, NUM),
            extract_method=("numerical", str),
            n_g=(0.0, NUM),
            n_cut=(None, int),
            L_stray_H=(0.0, NUM),
            participation_exponent=(2.0, NUM),
        )
    },
    "squash-fit": {
        "squash": _block(
            ftol=(1e-12, NUM),
            max_iter=(200, int),
            demo_f_q_Hz=(7.5e9, NUM),
            demo_kappa_t_Hz=(15e6, NUM),
            demo_kappa_c_Hz=(75e3, NUM),
            demo_ratios=([0.1, 0.5, 1.0, 2.0], list),
            demo_noise=(0.01, NUM),
            demo_n_points=(801, int),
        )
    },
    "circle-fit": {
        "circle": _block(
            polish=(True, bool),
            demo_f_r_Hz=(6e9, NUM),
            demo_Q_i=(1e6, NUM),
            demo_Q_c=(1e6, NUM),
            demo_phi0=(0.1, NUM),
            demo_delay_s=(40e-9, NUM),
            demo_noise=(0.005, NUM),
            demo_n_points=(801, int),
        )
    },
    "at-calibrate": {
        "autler_townes": _block(
            f_q_Hz=(7.5e9, NUM),
            f01_Hz=(7.5e9, NUM),
            kappa_Hz=(75e3, NUM),
            powers_dBm=(None, list),
            sidebands_Hz=(None, list),
            attenuation_init_dB=(None, NUM),
            reference_applied_dBm=(-3.0, NUM),
            demo_attenuation_dB=(-135.0, NUM),
            demo_powers_dBm=([-20.0 + 2.0 * k for k in range(11)], list),
            demo_noise_Hz=(2e3, NUM),
        )
    },
    "fraunhofer": {
        "flux": _block(
            w_um=(2.0, NUM),
            l_nm=(20.0, NUM),
            lambda_nm=(200.0, NUM),
            profile=("uniform", str),
            edge_weight=(0.5, NUM),
            I_c0_A=(1e-6, NUM),
            B_mT=([-12.5, 12.5, 501], list),
        )
    },
    "iv-extract": {
        "iv": _block(
            slope_fraction=(0.01, NUM),
            curvature_fraction=(0.05, NUM),
            top_fraction=(0.2, NUM),
            r_floor_ohm=(100e6, NUM),
            demo_pairs=([[1e-6, 1e3], [2e-8, 12e3], [5e-5, 8.0]], list),
        )
    },
    "eth-invert": {
        "cpr": _block(
            icrn_V=(None, NUM),
            delta_meV=(2.03, NUM),
            icrn_over_ab=(0.3, NUM),
        )
    },
}

INPUT_SCHEMAS = {
    "films-classify": ("rs_t", True),
    "sns-fit": ("ic_t", False),
    "shapiro-detect": ("shapiro", False),
    "squash-fit": ("s21", True),
    "circle-fit": ("s21", False),
    "fraunhofer": ("profile", False),
    "iv-extract": ("iv", True),
}

# analytic profiles need no file
OPTIONAL_INPUT = {"fraunhofer"}

COMMANDS = tuple(BLOCKS)


def _check_type(cmd, block, key, value, types):
    if value is None:
        return
    if types is bool:
        ok = isinstance(value, bool)
    elif types is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif types == NUM:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    else:
        ok = isinstance(value, types)
    if not ok:
        raise SchemaError(f"config block {block}.{key}: expected {getattr(types, '__name__', 'number')}, got {value!r}")


def resolve_config(cmd: str, cfg: Optional[dict] = None, overrides: Optional[List[str]] = None,
                   seed: Optional[int] = None, demo: Optional[bool] = None, inputs: Optional[list] = None) -> dict:
    """Merge defaults, a config mapping and ``--set`` overrides into a validated config."""
    if cmd not in BLOCKS:
        raise SchemaError(f"unknown command {cmd!r}")
    cfg = copy.deepcopy(cfg or {})
    if cfg.get("command", cmd) != cmd:
        raise SchemaError(f"config is for command {cfg['command']!r}, not {cmd!r}")
    out = {"command": cmd, "seed": 0, "demo": False, "inputs": {}}
    for name, fields in BLOCKS[cmd].items():
        out[name] = {k: copy.deepcopy(d) for k, (d, _) in fields.items()}
    for k, v in cfg.items():
        if k in ("command", "output_dir"):
            continue
        if k in ("seed", "demo", "inputs"):
            out[k] = v
        elif k in BLOCKS[cmd]:
            if not isinstance(v, dict):
                raise SchemaError(f"config block {k!r} must be an object")
            for kk, vv in v.items():
                if kk not in BLOCKS[cmd][k]:
                    raise SchemaError(f"config block {k}: unknown field {kk!r}")
                out[k][kk] = vv
        else:
            raise SchemaError(f"unknown config block {k!r} for command {cmd!r}")
    for item in overrides or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise SchemaError(f"--set expects block.key=value, got {item!r}")
        path, raw = item.split("=", 1)
        block, key = path.split(".", 1)
        if block not in BLOCKS[cmd] or key not in BLOCKS[cmd][block]:
            raise SchemaError(f"--set: unknown field {path!r}")
        try:
            val = json.loads(raw)
        except json.JSONDecodeError:
            val = raw
        out[block][key] = val
    if seed is not None:
        out["seed"] = seed
    if demo is not None and demo:
        out["demo"] = True
    if inputs:
        schema, many = INPUT_SCHEMAS.get(cmd, (None, False))
        if schema is None:
            raise SchemaError(f"command {cmd!r} takes no input files")
        out["inputs"][schema] = list(inputs) if many else inputs[0]
    if not isinstance(out["seed"], int) or isinstance(out["seed"], bool):
        raise SchemaError("seed must be an integer")
    for name, fields in BLOCKS[cmd].items():
        for k, (_, types) in fields.items():
            _check_type(cmd, name, k, out[name][k], types)
    return out


def _validate_inputs(cfg):
    """Every referenced input must exist and parse before any computation starts."""
    cmd = cfg["command"]
    schema, many = INPUT_SCHEMAS.get(cmd, (None, False))
    loaded = {}
    for key, val in cfg["inputs"].items():
        if key == "background":
            loaded[key] = pio.ingest(val, "s21")
            continue
        if key != schema:
            raise SchemaError(f"inputs: unexpected key {key!r} for {cmd!r} (expects {schema!r})")
        paths = val if isinstance(val, list) else [val]
        objs = [pio.ingest(p, schema) for p in paths]
        loaded[key] = objs if many else objs[0]
    if schema is not None and schema not in loaded and not cfg["demo"] and cmd not in OPTIONAL_INPUT:
        raise SchemaError(f"{cmd}: no input file given (use --input or --demo)")
    return loaded


class Context:
    def __init__(self, cfg, out_dir):
        self.cfg = cfg
        self.out = out_dir
        self.hash = pio.config_hash(cfg)
        self.files: List[str] = []

    def csv(self, name, schema, columns, header=None):
        self.files.append(pio.write_csv(os.path.join(self.out, name), schema, columns, header, self.hash))

    def report(self, body: dict):
        body = dict(body)
        body["command"] = self.cfg["command"]
        body["provenance"] = pio.provenance(self.hash)
        self.files.append(pio.write_json(os.path.join(self.out, "report.json"), body))


def _grid(spec, name):
    if not (isinstance(spec, list) and len(spec) == 3):
        raise SchemaError(f"{name} must be [start, stop, count]")
    return np.linspace(float(spec[0]), float(spec[1]), int(spec[2]))


# --- command handlers ---------------------------------------------------------


def _films(ctx, cfg, data):
    from . import films, synthetic

    p = cfg["films"]
    family = data.get("rs_t")
    if family is None:
        family = synthetic.film_family(p["demo_thicknesses_nm"], p["demo_d_c_nm"], noise=p["demo_noise"], seed=cfg["seed"])
        for i, s in enumerate(family):
            ctx.csv(f"input_rs_t_{i:02d}.csv", "rs_t", [("temperature_K", s.T), ("rs_ohm_per_sq", s.R_s)],
                    {"thickness_nm": s.thickness, "label": s.label})
    classes = [films.classify_phase(s, p["window_fraction"], p["tol_ohm_per_sq_per_K"]) for s in family]
    ctx.csv(
        "classes.csv",
        "films_classes",
        [
            ("thickness_nm", [s.thickness for s in family]),
            ("slope_ohm_per_sq_per_K", [c.slope_statistic for c in classes]),
            ("class", [c.phase for c in classes]),
            ("window_lo_K", [c.window[0] for c in classes]),
            ("window_hi_K", [c.window[1] for c in classes]),
        ],
    )
    body = {"classes": [dict(c.as_dict(), thickness_nm=s.thickness, label=s.label) for s, c in zip(family, classes)]}
    try:
        ct = films.critical_thickness(family, p["window_fraction"], p["tol_ohm_per_sq_per_K"])
        body["critical_thickness"] = {
            "d_c_nm": ct.d_c,
            "R_s_at_dc_ohm_per_sq": ct.R_s_at_dc,
            "bracket_nm": list(ct.bracket),
            "R_s_at_dc_over_R_Q": ct.R_s_at_dc / C.R_Q,
        }
    except DomainError as exc:
        body["critical_thickness"] = {"error": str(exc)}
    ctx.report(body)


def _sns(ctx, cfg, data):
    from . import synthetic
    from .physcore import GapModel
    from .sns import DiffusionFit, DiffusiveJunction

    p = cfg["sns"]
    length = p["length_nm"] * C.nm
    series = data.get("ic_t")
    R_N = p["R_N_ohm"] if series is None or series.R_N is None else series.R_N
    if series is None:
        j = DiffusiveJunction(length, p["demo_D_cm2_per_s"] * C.cm2_per_s, R_N, GapModel(p["tc_K"], p["gap_coupling"]))
        series = synthetic.ic_t_data(j, p["demo_T_K"], p["demo_noise"], cfg["seed"])
        ctx.csv("input_ic_t.csv", "ic_t", [("temperature_K", series.T), ("ic_A", series.I_c), ("sigma_A", series.sigma)],
                {"R_N_ohm": R_N})
    est = DiffusionFit(
        length=length, R_N=R_N, tc=p["tc_K"], gap_coupling=p["gap_coupling"],
        D_init=p["D_init_cm2_per_s"] * C.cm2_per_s, include_zero_T=p["include_zero_T"],
        zero_T_below=p["zero_T_below_K"], sigma_floor=p["sigma_floor"],
    )
    est.fit(series.T, series.I_c, series.sigma)
    lo = max(float(series.T.min()), 1e-3)
    Tm = np.linspace(lo, min(float(series.T.max()), p["tc_K"] * 0.999), p["n_model_points"])
    ctx.csv("model_ic_t.csv", "ic_t", [("temperature_K", Tm), ("ic_A", est.predict(Tm))], {"R_N_ohm": R_N})
    rep = est.report()
    rep["D_cm2_per_s"] = est.D_ / C.cm2_per_s
    rep["E_Th_ueV"] = est.E_Th_ / C.ueV
    rep["cost_trace"] = est.cost_trace_
    ctx.report({"fit": rep})


def _rcsj_config(p):
    from .cpr import from_dict
    from .rcsj import RcsjConfig

    return RcsjConfig(from_dict(p["cpr"]), p["R_ohm"], p["f_RF_Hz"], p["beta_c"], p["transient_periods"],
                      p["average_periods"], p["rel_tol"])


def _fractions(spec):
    try:
        return [Fraction(str(x)) for x in spec]
    except (ValueError, ZeroDivisionError):
        raise SchemaError(f"bad step fractions {spec!r}") from None


def _step_rows(reports, drive_name):
    drive, q, ex, vq, ilo, ihi, npts = [], [], [], [], [], [], []
    for r in reports:
        for s in r.steps:
            drive.append(r.drive)
            q.append(str(s.q))
            ex.append("true" if s.exists else "false")
            vq.append(s.V_q)
            ilo.append(min(s.span))
            ihi.append(max(s.span))
            npts.append(s.n_points)
    return [(drive_name, drive), ("q", q), ("exists", ex), ("vq_V", vq), ("ilo_A", ilo), ("ihi_A", ihi),
            ("npoints", npts)]


def _step_summary(reports, f_RF):
    from .rcsj import step_voltage

    unit = step_voltage(f_RF)
    found = {}
    for r in reports:
        for s in r.steps:
            if s.exists:
                key = str(s.q)
                found.setdefault(key, []).append(s.V_q / unit)
    return {
        "step_unit_V": unit,
        "found": {k: {"n_drives": len(v), "max_center_error": float(max(abs(x - float(Fraction(k))) for x in v))}
                  for k, v in sorted(found.items())},
    }


def _shapiro_sim(ctx, cfg, data):
    from .rcsj import detect_steps, shapiro_map

    p = cfg["rcsj"]
    d = cfg["detect"]
    rc = _rcsj_config(p)
    m = shapiro_map(rc, _grid(p["i_dc_A"], "rcsj.i_dc_A"), _grid(p["drive_A"], "rcsj.drive_A"))
    nI, nD = m.V.shape
    ctx.csv(
        "map.csv",
        "shapiro",
        [
            ("drive_A", np.repeat(m.drive, nI)),
            ("current_A", np.tile(m.i_dc, nD)),
            ("voltage_V", m.V.T.ravel()),
            ("dvdi_ohm", m.dVdI.T.ravel()),
        ],
        {"f_RF_Hz": p["f_RF_Hz"], "I_c_A": rc.I_c},
    )
    reports = detect_steps(m, p["f_RF_Hz"], _fractions(d["fractions"]), d["tolerance"], d["min_points"])
    ctx.csv("steps.csv", "steps", _step_rows(reports, "drive_A"))
    ctx.report({"I_c_A": rc.I_c, "omega": rc.omega, "grid": [nI, nD], "steps": _step_summary(reports, p["f_RF_Hz"])})


def _shapiro_detect(ctx, cfg, data):
    from .rcsj import RcsjConfig, detect_steps, shapiro_map
    from .cpr import from_dict

    d = cfg["detect"]
    fr = _fractions(d["fractions"])
    table = data.get("shapiro")
    if table is None:
        rc = RcsjConfig(from_dict(d["demo_cpr"]), d["demo_R_ohm"], d["f_RF_Hz"])
        m = shapiro_map(rc, _grid(d["demo_i_dc_A"], "detect.demo_i_dc_A"), _grid(d["demo_drive_A"], "detect.demo_drive_A"))
        nI, nD = m.V.shape
        ctx.csv("input_map.csv", "shapiro",
                [("drive_A", np.repeat(m.drive, nI)), ("current_A", np.tile(m.i_dc, nD)), ("voltage_V", m.V.T.ravel())],
                {"f_RF_Hz": d["f_RF_Hz"]})
        table = pio.ShapiroTable(np.repeat(m.drive, nI), np.tile(m.i_dc, nD), m.V.T.ravel(), "drive")
    reports = []
    for drive, I, V in table.cuts():
        r = detect_steps((I, V), d["f_RF_Hz"], fr, d["tolerance"], d["min_points"])
        r.drive = drive
        reports.append(r)
    name = "power_dBm" if table.drive_kind == "power" else "drive_A"
    ctx.csv("steps.csv", "steps", _step_rows(reports, name))
    ctx.report({"steps": _step_summary(reports, d["f_RF_Hz"]), "drive_kind": table.drive_kind})


def _transmon(ctx, cfg, data):
    from . import transmon as tm
    from .cpr import energy_phase, from_dict

    p = cfg["transmon"]
    E_C = p["E_C_Hz"] * C.h
    body = {}
    if p["f_q_Hz"] is not None:
        E_J, L_J, ratio = tm.extract_ej(p["f_q_Hz"], E_C, p["extract_method"])
        body["extraction"] = {"E_J_Hz": E_J / C.h, "L_J_H": L_J, "E_J_over_E_C": ratio, "method": p["extract_method"]}
        potential = ((1, E_J),)
    elif p["cpr"] is not None:
        potential = tuple(energy_phase(from_dict(p["cpr"]), p["harmonics"]))
    elif p["potential_Hz"] is not None:
        potential = tuple((int(k), float(v) * C.h) for k, v in p["potential_Hz"])
    else:
        potential = ((1, p["E_J_Hz"] * C.h),)
    params = tm.TransmonParams(E_C, potential, p["n_g"], p["n_cut"], p["L_stray_H"])
    spec = tm.diagonalize(params)
    body["spectrum"] = spec.as_dict()
    body["potential_Hz"] = [[k, v / C.h] for k, v in params.potential]
    body["E_J_eff_Hz"] = params.ej_effective / C.h
    L_J = tm.josephson_inductance(params.ej_effective)
    body["L_J_H"] = L_J
    if p["L_stray_H"] > 0:
        part, factor = tm.stray_participation(L_J, p["L_stray_H"], p["participation_exponent"])
        body["stray"] = {"participation": part, "anharmonicity_factor": factor,
                         "alpha_dressed_Hz": spec.anharmonicity * factor}
    ctx.report(body)


def _squash(ctx, cfg, data):
    from . import synthetic
    from .microwave import SquashParams, fit_squash, _squash

    p = cfg["squash"]
    traces = data.get("s21")
    bg = data.get("background")
    if traces is None:
        truth = SquashParams(p["demo_f_q_Hz"], p["demo_kappa_t_Hz"], p["demo_kappa_c_Hz"])
        traces, bg = synthetic.squash_traces(truth, p["demo_ratios"], n_points=p["demo_n_points"],
                                             noise=p["demo_noise"], seed=cfg["seed"], background=0.2 + 0.1j)
        for i, t in enumerate(traces):
            ctx.csv(f"input_s21_{i}.csv", "s21", [("frequency_Hz", t.f), ("re", t.z.real), ("im", t.z.imag)],
                    {"power_dBm": t.power_dBm})
        ctx.csv("input_background.csv", "s21", [("frequency_Hz", bg.f), ("re", bg.z.real), ("im", bg.z.imag)],
                {"power_dBm": bg.power_dBm})
    if bg is not None:
        traces = [t.subtract(bg) for t in traces]
    r = fit_squash(traces, ftol=p["ftol"], max_iter=p["max_iter"])
    for i, (t, om) in enumerate(zip(traces, r.omega_R)):
        z = _squash(t.f, r.f_q, r.kappa_t, r.kappa_c, om)
        ctx.csv(f"model_s21_{i}.csv", "s21", [("frequency_Hz", t.f), ("re", z.real), ("im", z.imag)],
                {"power_dBm": t.power_dBm})
    body = {"fit": r.as_dict(), "on_resonance_depth": r.kappa_c / r.kappa_t}
    ctx.report(body)


def _circle(ctx, cfg, data):
    from . import synthetic
    from .microwave import circle_fit, notch_model

    p = cfg["circle"]
    trace = data.get("s21")
    if trace is None:
        trace = synthetic.notch_trace(p["demo_f_r_Hz"], p["demo_Q_i"], p["demo_Q_c"], p["demo_phi0"], p["demo_delay_s"],
                                      noise=p["demo_noise"], n_points=p["demo_n_points"], seed=cfg["seed"])
        ctx.csv("input_s21.csv", "s21", [("frequency_Hz", trace.f), ("re", trace.z.real), ("im", trace.z.imag)],
                {"power_dBm": trace.power_dBm})
    r = circle_fit(trace, polish=p["polish"])
    z = notch_model(trace.f, r.f_r, r.Q_l, r.Q_c_abs, r.phi0, r.amplitude, r.alpha, r.delay, r.f_ref)
    ctx.csv("model_s21.csv", "s21", [("frequency_Hz", trace.f), ("re", z.real), ("im", z.imag)])
    ctx.report({"resonance": r.as_dict()})


def _at(ctx, cfg, data):
    from . import synthetic
    from .microwave import FIT_ATTENUATION, autler_townes, device_power

    p = cfg["autler_townes"]
    P, fs = p["powers_dBm"], p["sidebands_Hz"]
    if P is None or fs is None:
        if not cfg["demo"]:
            raise SchemaError("autler_townes.powers_dBm and sidebands_Hz are required without --demo")
        P = p["demo_powers_dBm"]
        fs = synthetic.at_sidebands(p["f_q_Hz"], p["f01_Hz"], p["kappa_Hz"], P, p["demo_attenuation_dB"],
                                    p["demo_noise_Hz"], cfg["seed"])
    P = np.asarray(P, dtype=float)
    fit = autler_townes(p["f_q_Hz"], p["f01_Hz"], p["kappa_Hz"], P, p["attenuation_init_dB"], FIT_ATTENUATION,
                        sidebands=fs)
    lo, hi = autler_townes(p["f_q_Hz"], p["f01_Hz"], p["kappa_Hz"], np.sort(P), fit.attenuation_dB)
    ctx.csv("branches.csv", "at_branches", [("power_dBm", np.sort(P)),
                                            ("device_power_dBm", device_power(np.sort(P), fit.attenuation_dB)),
                                            ("lower_Hz", lo), ("upper_Hz", hi)])
    ref = p["reference_applied_dBm"]
    ctx.report({
        "fit": fit.as_dict(),
        "measured": {"powers_dBm": P, "sidebands_Hz": np.asarray(fs, dtype=float)},
        "reference": {"applied_dBm": ref, "device_dBm": float(device_power(ref, fit.attenuation_dB))},
    })


def _fraunhofer(ctx, cfg, data):
    from . import flux

    p = cfg["flux"]
    geom = flux.period(p["w_um"] * C.um, p["l_nm"] * C.nm, p["lambda_nm"] * C.nm)
    prof = data.get("profile")
    if prof is None:
        if p["profile"] == "uniform":
            prof = flux.Uniform()
        elif p["profile"] == "edge_pair":
            prof = flux.EdgePair(p["edge_weight"])
        else:
            raise SchemaError(f"flux.profile must be 'uniform' or 'edge_pair' (or give a profile file), got {p['profile']!r}")
    B = _grid(p["B_mT"], "flux.B_mT") * C.mT
    ic = flux.ic_of_field(prof, geom, 1.0, B)
    ctx.csv("pattern.csv", "fraunhofer", [("B_mT", B / C.mT), ("ic_over_ic0", ic)])
    ctx.report({
        "geometry": geom.as_dict(),
        "B0_mT": geom.B0 / C.mT,
        "profile": getattr(prof, "kind", "sampled"),
        "I_c0_A": p["I_c0_A"],
        "first_sidelobe": flux.first_sidelobe(prof, geom),
    })


def _iv(ctx, cfg, data):
    from . import synthetic
    from .iv import extract_features

    p = cfg["iv"]
    curves = data.get("iv")
    if curves is None:
        curves = []
        for i, (ic, rn) in enumerate(p["demo_pairs"]):
            c = synthetic.rsj_iv(float(ic), float(rn), n=4001, noise=1e-6, seed=cfg["seed"] + i)
            c.label = f"demo{i}"
            curves.append(c)
            ctx.csv(f"input_iv_{i}.csv", "iv", [("current_A", c.I), ("voltage_V", c.V)], {"sweep_dir": "up", "label": c.label})
    feats = [extract_features(c, p["slope_fraction"], p["curvature_fraction"], p["top_fraction"], r_floor=p["r_floor_ohm"])
             for c in curves]
    nan = float("nan")
    ctx.csv("features.csv", "features", [
        ("label", [c.label or f"curve{i}" for i, c in enumerate(curves)]),
        ("phase", [f.phase for f in feats]),
        ("ic_A", [f.I_c for f in feats]),
        ("rn_ohm", [f.R_N for f in feats]),
        ("icrn_V", [f.icrn for f in feats]),
        ("vc_V", [nan if f.V_c is None else f.V_c for f in feats]),
        ("rule", [f.rule for f in feats]),
        ("hysteretic", ["true" if f.hysteretic else "false" for f in feats]),
    ])
    ctx.report({"features": [f.as_dict() for f in feats]})


def _eth(ctx, cfg, data):
    from .cpr import eth_from_icrn, resonant_peak

    p = cfg["cpr"]
    delta = p["delta_meV"] * C.meV
    # measured product as a fraction of the zero-temperature pi Delta / 2e
    ratio = p["icrn_over_ab"] if p["icrn_V"] is None else p["icrn_V"] * C.e / (0.5 * math.pi * delta)
    eth = eth_from_icrn(ratio, delta)
    x = eth / delta
    ctx.report({
        "icrn_over_ab": ratio,
        "E_Th_over_delta": x,
        "E_Th_J": eth,
        "E_Th_ueV": eth / C.ueV,
        "check_icrn_over_ab": resonant_peak(x) / (math.pi / 2.0),
    })


HANDLERS: Dict[str, Callable] = {
    "films-classify": _films,
    "sns-fit": _sns,
    "shapiro-sim": _shapiro_sim,
    "shapiro-detect": _shapiro_detect,
    "transmon": _transmon,
    "squash-fit": _squash,
    "circle-fit": _circle,
    "at-calibrate": _at,
    "fraunhofer": _fraunhofer,
    "iv-extract": _iv,
    "eth-invert": _eth,
}

MODULE_OF = {
    "films-classify": "films", "sns-fit": "sns", "shapiro-sim": "rcsj", "shapiro-detect": "rcsj",
    "transmon": "transmon", "squash-fit": "microwave", "circle-fit": "microwave", "at-calibrate": "microwave",
    "fraunhofer": "flux", "iv-extract": "iv", "eth-invert": "cpr",
}


def run(cfg: dict, out_dir: str) -> List[str]:
    """Execute a resolved config; returns the written file paths."""
    cmd = cfg["command"]
    data = _validate_inputs(cfg)
    os.makedirs(out_dir, exist_ok=True)
    ctx = Context(cfg, out_dir)
    pio.write_json(os.path.join(out_dir, "config.json"), cfg)
    block = next(iter(BLOCKS[cmd]))
    try:
        HANDLERS[cmd](ctx, cfg, data)
    except PlanaronError as exc:
        exc.args = (f"[{MODULE_OF[cmd]}] config block '{block}': {exc}",) + tuple(exc.args[1:])
        raise
    return [os.path.join(out_dir, "config.json")] + ctx.files


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="planaron", description="Planar weak-link analysis toolkit")
    sub = ap.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", default=None, help="output directory (default: ./out/<command>)")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--demo", action="store_true", help="run on seeded synthetic inputs")
        sp.add_argument("--input", action="append", default=None, help="input CSV (repeatable)")
        sp.add_argument("--set", action="append", default=None, dest="overrides", metavar="BLOCK.KEY=VALUE")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg_in = {}
        if args.config:
            try:
                with open(args.config) as fh:
                    cfg_in = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise SchemaError(f"cannot read config {args.config}: {exc}") from None
        out_dir = args.out or cfg_in.get("output_dir") or os.path.join("out", args.command)
        cfg = resolve_config(args.command, cfg_in, args.overrides, args.seed, args.demo or None, args.input)
        files = run(cfg, out_dir)
    except PlanaronError as exc:
        print(f"planaron {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
