import filecmp
import json
import os

import pytest

from planaron import cli
from planaron import io as pio

SMALL_SIM = ["--set", "rcsj.i_dc_A=[0,3e-6,13]", "--set", "rcsj.drive_A=[0,2e-6,3]",
             "--set", "rcsj.transient_periods=50", "--set", "rcsj.average_periods=100"]
SMALL_DETECT = ["--set", "detect.demo_i_dc_A=[0,2.5e-6,21]", "--set", "detect.demo_drive_A=[1e-6,1e-6,1]"]

EXTRA = {"shapiro-sim": SMALL_SIM, "shapiro-detect": SMALL_DETECT}


def run(tmp_path, cmd, name, *extra):
    out = str(tmp_path / name)
    rc = cli.main([cmd, "--demo", "--seed", "3", "--out", out, *EXTRA.get(cmd, []), *extra])
    return rc, out


@pytest.mark.parametrize("cmd", cli.COMMANDS)
def test_demo_runs_deterministic_and_hashed(tmp_path, cmd):
    rc1, a = run(tmp_path, cmd, "a")
    rc2, b = run(tmp_path, cmd, "b")
    assert rc1 == rc2 == 0
    files = sorted(os.listdir(a))
    assert files == sorted(os.listdir(b))
    assert "config.json" in files and "report.json" in files
    match, mismatch, errors = filecmp.cmpfiles(a, b, files, shallow=False)
    assert not mismatch and not errors
    h = pio.config_hash(json.load(open(os.path.join(a, "config.json"))))
    for f in files:
        if f != "config.json":
            assert pio.embedded_hash(os.path.join(a, f)) == h, f


def test_seed_changes_output(tmp_path):
    _, a = run(tmp_path, "circle-fit", "a")
    out = str(tmp_path / "b")
    cli.main(["circle-fit", "--demo", "--seed", "4", "--out", out])
    assert not filecmp.cmp(os.path.join(a, "report.json"), os.path.join(out, "report.json"), shallow=False)


def test_transmon_report(tmp_path):
    _, out = run(tmp_path, "transmon", "t")
    rep = json.load(open(os.path.join(out, "report.json")))
    assert rep["spectrum"]["alpha_over_2pi_Hz"] == pytest.approx(-323.0e6, abs=0.5e6)
    assert rep["L_J_H"] == pytest.approx(6.25e-9, rel=5e-3)


def test_shapiro_sim_demo_steps(tmp_path):
    _, out = run(tmp_path, "shapiro-sim", "s")
    rep = json.load(open(os.path.join(out, "report.json")))
    assert rep["steps"]["step_unit_V"] == pytest.approx(14.06e-6, rel=1e-3)
    assert rep["steps"]["found"]["1"]["max_center_error"] < 2e-3


def test_detect_reads_sim_output(tmp_path):
    _, sim = run(tmp_path, "shapiro-sim", "s")
    out = str(tmp_path / "d")
    assert cli.main(["shapiro-detect", "--input", os.path.join(sim, "map.csv"), "--out", out]) == 0
    t = pio.read_table(os.path.join(out, "steps.csv"), "steps")
    assert "1" in set(t.columns["q"])


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "fraunhofer", "flux": {"w_um": 1.0}, "output_dir": str(tmp_path / "o")}))
    assert cli.main(["fraunhofer", "--config", str(cfg), "--set", "flux.profile=edge_pair"]) == 0
    rep = json.load(open(tmp_path / "o" / "report.json"))
    assert rep["B0_mT"] == pytest.approx(4.92, rel=2e-3)
    assert rep["profile"] == "edge_pair"


@pytest.mark.parametrize(
    "argv, code",
    [
        (["transmon", "--set", "transmon.nope=1"], 2),
        (["transmon", "--set", "transmon.E_C_Hz=\"x\""], 2),
        (["films-classify"], 2),
        (["films-classify", "--input", "/no/such.csv"], 2),
        (["eth-invert", "--set", "cpr.icrn_over_ab=1.5"], 3),
        (["flux", "--demo"], None),
    ],
)
def test_exit_codes(tmp_path, argv, code, capsys):
    if code is None:
        with pytest.raises(SystemExit):
            cli.main(argv)
        return
    assert cli.main(argv + ["--out", str(tmp_path / "x")]) == code
    err = capsys.readouterr().err
    assert err.startswith("planaron ")


def test_error_names_module_and_block(tmp_path, capsys):
    cli.main(["eth-invert", "--set", "cpr.icrn_over_ab=1.5", "--out", str(tmp_path)])
    assert "[cpr] config block 'cpr'" in capsys.readouterr().err


def test_nonconvergence_exit_code(tmp_path):
    # a one-iteration budget cannot meet the cost tolerance
    rc = cli.main(["squash-fit", "--demo", "--set", "squash.max_iter=1", "--out", str(tmp_path)])
    assert rc == 4


def test_unknown_block(tmp_path):
    with pytest.raises(Exception):
        cli.resolve_config("transmon", {"films": {}})
