import json
import subprocess
import sys

import pytest

from nhmech import cli


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_check_pass_and_report_fields(capsys):
    code, out, _ = run(["check", "--system", "free_particle", "--check", "hj_strong", "--c1", "1", "--c2", "2"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["pass"] is True
    assert rep["max_residual"] < 1e-8
    assert rep["points_tested"] == 100 and rep["grid_spec"]["count"] == 100
    assert rep["notes"]["system"] == "free_particle"


def test_check_fail_exit_code(capsys):
    code, out, _ = run(["check", "--system", "carriage", "--check", "chow", "--depth", "4"], capsys)
    assert code == 1
    assert json.loads(out)["notes"]["growth"] == [2, 3, 4, 4]


def test_classify_reports_general_case(capsys):
    code, out, _ = run(["check", "--system", "free_particle", "--check", "classify"], capsys)
    assert code == 0 and json.loads(out)["notes"]["case"] == "general"


@pytest.mark.parametrize(
    "argv",
    [
        ["check", "--system", "nowhere", "--check", "in_N"],
        ["check", "--system", "free_particle", "--check", "bogus"],
        ["check", "--system", "free_particle", "--check", "in_N", "--candidate", "missing"],
        ["check", "--system", "carriage", "--param", "a=-1", "--check", "chow"],
        ["reduce", "--system", "rolling_disk"],
        ["simulate", "--system", "free_particle", "--q0", "0,1,0", "--v0", "1,0,0", "--steps", "3"],
        ["simulate", "--system", "free_particle", "--q0", "0,1"],
    ],
)
def test_configuration_errors_exit_2(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2
    assert err


def test_numerical_failure_exit_3(capsys):
    code, _, err = run(["simulate", "--system", "free_particle", "--q0", "0,0,0", "--v0", "1e200,0,0", "--dt", "1e300", "--steps", "5"], capsys)
    assert code == 3 and "step" in err


def test_simulate_zero_steps_single_row(capsys):
    code, out, _ = run(["simulate", "--system", "free_particle", "--steps", "0"], capsys)
    lines = out.strip().splitlines()
    assert code == 0 and len(lines) == 2 and lines[0].startswith("t,q1")


def test_output_is_deterministic(tmp_path, capsys):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert cli.main(["check", "--system", "carriage", "--check", "reduced", "--candidate", "xbar1", "--per-point", "--out", str(p)]) == 0
    capsys.readouterr()
    assert paths[0].read_bytes() == paths[1].read_bytes()
    csv = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in csv:
        cli.main(["simulate", "--system", "carriage", "--steps", "20", "--out", str(p)])
    assert csv[0].read_bytes() == csv[1].read_bytes()


def test_config_file_with_flags_winning(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# reduced check\nsystem = carriage\ncheck = reduced\ncandidate = xbar2\ngrid_count = 10\n", encoding="utf-8")
    code, out, _ = run(["check", "--config", str(cfg)], capsys)
    assert code == 0 and json.loads(out)["notes"]["sign"] == "plus"
    code, out, _ = run(["check", "--config", str(cfg), "--candidate", "xbar1"], capsys)
    assert code == 0 and json.loads(out)["notes"]["sign"] == "minus"
    code, _, _ = run(["check", "--config", str(tmp_path / "absent.cfg")], capsys)
    assert code == 2


def test_reduce_reports_stages(capsys):
    code, out, _ = run(["reduce", "--system", "free_particle", "--c1", "1", "--c2", "2"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["variant"] == "general"
    assert set(rep["stages"]) == {"reduced_hj", "reconstructed_invariance", "reconstructed_in_N", "reconstructed_related"}


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "nhmech.cli", "check", "--system", "free_particle", "--check", "chow"],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["notes"]["complete"] is True
