import json
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planaron import io as pio
from planaron.exceptions import SchemaError


def write(tmp_path, text, name="in.csv"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_units_converted(tmp_path):
    p = write(tmp_path, "# schema: iv\ncurrent_uA,voltage_mV\n-1,-2\n0,0\n1,2\n")
    t = pio.read_table(p, "iv")
    np.testing.assert_allclose(t.columns["current"], [-1e-6, 0, 1e-6])
    np.testing.assert_allclose(t.columns["voltage"], [-2e-3, 0, 2e-3])
    np.testing.assert_array_equal(t.raw["current"], [-1, 0, 1])


@pytest.mark.parametrize(
    "text, msg",
    [
        ("current_A,voltage_V\n1,2\n", "schema"),
        ("# schema: iv\ncurrent_furlong,voltage_V\n1,2\n", "unit mismatch"),
        ("# schema: iv\ncurrent_A\n1\n", "missing required column"),
        ("# schema: iv\ncurrent_A,voltage_V\n1,2\n2\n", "line 4"),
        ("# schema: iv\ncurrent_A,voltage_V\n1,nan\n", "NaN"),
        ("# schema: ic_t\ntemperature_K,ic_A\n3,1\n2,1\n", "line 4"),
        ("# schema: ic_t\ntemperature_K,ic_A\n3,-1\n", "non-negative"),
        ("# schema: iv\ncurrent_A,voltage_V\n", "no data rows"),
    ],
)
def test_diagnostics(tmp_path, text, msg):
    with pytest.raises(SchemaError, match=msg):
        pio.read_table(write(tmp_path, text))


def test_schema_mismatch(tmp_path):
    p = write(tmp_path, "# schema: iv\ncurrent_A,voltage_V\n1,2\n")
    with pytest.raises(SchemaError, match="mismatch"):
        pio.read_table(p, "rs_t")


def test_missing_file():
    with pytest.raises(SchemaError, match="not found"):
        pio.read_table("/nonexistent/x.csv")


def test_iv_monotone_reported_with_line(tmp_path):
    p = write(tmp_path, "# schema: iv\ncurrent_A,voltage_V\n0,0\n1,1\n2,2\n1.5,1\n3,3\n")
    with pytest.raises(SchemaError, match="line 6"):
        pio.ingest(p, "iv")


def test_rs_t_needs_thickness(tmp_path):
    p = write(tmp_path, "# schema: rs_t\ntemperature_K,rs_ohm_per_sq\n" + "".join(f"{t},{100}\n" for t in range(2, 10)))
    with pytest.raises(SchemaError, match="thickness_nm"):
        pio.ingest(p, "rs_t")


def test_shapiro_alternative_and_cuts(tmp_path):
    rows = "".join(f"{d},{i},{i * 2}\n" for d in (0.5, 0.1) for i in (3, 1, 2))
    p = write(tmp_path, "# schema: shapiro\ndrive_uA,current_uA,voltage_uV\n" + rows)
    t = pio.ingest(p, "shapiro")
    assert t.drive_kind == "drive"
    cuts = t.cuts()
    assert [c[0] for c in cuts] == pytest.approx([0.1e-6, 0.5e-6])
    np.testing.assert_allclose(cuts[0][1], [1e-6, 2e-6, 3e-6])


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=30))
@settings(max_examples=30)
def test_csv_round_trip_exact(tmp_path_factory, values):
    d = tmp_path_factory.mktemp("rt")
    x = np.arange(len(values), dtype=float) * 0.1 + 1e-3
    p = pio.write_csv(str(d / "a.csv"), "s21", [("frequency_Hz", x), ("re", values), ("im", values)], {"power_dBm": -30})
    t = pio.read_table(p, "s21")
    np.testing.assert_array_equal(t.raw["re"], np.asarray(values, dtype=float))
    np.testing.assert_array_equal(t.raw["frequency"], x)


def test_hash_ignores_output_dir():
    a = {"command": "transmon", "seed": 1, "transmon": {"E_C_Hz": 1.0}}
    b = dict(a, output_dir="/elsewhere")
    assert pio.config_hash(a) == pio.config_hash(b)
    assert pio.config_hash(a) != pio.config_hash(dict(a, seed=2))


def test_hash_embedded(tmp_path):
    h = pio.config_hash({"x": 1})
    p = pio.write_csv(str(tmp_path / "o.csv"), "fraunhofer", [("B_mT", [0, 1]), ("ic_over_ic0", [1, 0.5])], chash=h)
    assert pio.embedded_hash(p) == h
    j = pio.write_json(str(tmp_path / "r.json"), {"provenance": pio.provenance(h), "value": np.float64(2.0)})
    assert pio.embedded_hash(j) == h
    assert json.load(open(j))["value"] == 2.0


def test_unequal_columns(tmp_path):
    with pytest.raises(SchemaError):
        pio.write_csv(str(tmp_path / "o.csv"), "fraunhofer", [("B_mT", [0, 1]), ("ic_over_ic0", [1])])
