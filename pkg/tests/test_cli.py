import json
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from groupoid_lab.certificate import Certificate
from groupoid_lab.cli import main, report

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, text, name="cfg.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_measure_solve_uniform(capsys, tmp_path):
    cfg = write(tmp_path, "[experiment]\nn = 2\ndepth = 3\n")
    code, out, _ = run_cli(capsys, "measure-solve", "--config", cfg)
    assert code == 0
    cert = json.loads(out)
    assert cert["verdict"] == "pass"
    assert set(cert["values"]["measure"]["values"].values()) == {"1/8"}


def test_measure_solve_underdetermined_fails(capsys, tmp_path):
    cfg = write(tmp_path, "[experiment]\nn = 2\ndepth = 2\n[measure-solve]\nbisections = 0>1\n")
    code, out, _ = run_cli(capsys, "measure-solve", "--config", cfg)
    assert code == 1 and json.loads(out)["values"]["dimension"] == 2


def test_z_af_audit_names_the_interval(capsys, tmp_path):
    out_file = tmp_path / "z.json"
    code, text, _ = run_cli(capsys, "af-audit", "--config", str(CONFIGS / "af_audit_z_control.ini"),
                            "--out", str(out_file))
    assert code == 1
    cert = Certificate.from_json(out_file.read_text())
    assert "shift m=000050" in cert.witnesses["below_delta"]
    assert cert.values["min_deficiency"] == "1/25"
    assert "FAIL" in text and "shift m=000050" in text


@pytest.mark.parametrize("bad", ["n = 1", "n = two", "depth = 0"])
def test_invalid_input_exits_2(capsys, tmp_path, bad):
    cfg = write(tmp_path, f"[experiment]\nn = 2\ndepth = 3\n{bad}\n")
    code, _, err = run_cli(capsys, "measure-solve", "--config", cfg)
    assert code == 2 and "error" in err


def test_unknown_subcommand_and_missing_file(capsys, tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate", "--config", "x.ini"])
    assert info.value.code == 2
    assert run_cli(capsys, "measure-solve", "--config", str(tmp_path / "absent.ini"))[0] == 2
    bad = write(tmp_path, "[experiment\nn=2", "broken.ini")
    assert run_cli(capsys, "measure-solve", "--config", bad)[0] == 2


@pytest.mark.parametrize("name,sub,expected", [
    ("measure_solve.ini", "measure-solve", 0),
    ("af_audit_f2.ini", "af-audit", 0),
    ("af_audit_z_control.ini", "af-audit", 1),
    ("odometer_f2.ini", "odometer-check", 0),
    ("pi_obstruct_product.ini", "pi-obstruct", 0),
    ("witness.ini", "witness-minimal", 0),
    ("witness.ini", "witness-effective", 0),
])
def test_shipped_configs(capsys, name, sub, expected):
    code, out, _ = run_cli(capsys, sub, "--config", str(CONFIGS / name))
    assert code == expected
    assert json.loads(out)["verdict"] == ("fail" if expected else "pass")


def test_remaining_subcommands(capsys, tmp_path):
    cfg = write(tmp_path, "[experiment]\ngroup = F2\nn = 2\ndepth = 2\nwindow_radius = 1\n"
                          "twist_radius = 1\nmax_constraints = 2\n"
                          "[diagonal]\nt = e\nt_prime = a\ndepth = 5\n"
                          "[folner-audit]\nfamily = exhaustive\nradius = 1\nmax_size = 4\n"
                          "[twisted-measure-solve]\nwindow = e,a\n")
    for sub in ("diagonal", "folner-audit", "twisted-measure-solve", "invariance-check"):
        code, out, _ = run_cli(capsys, sub, "--config", cfg)
        assert code == 0, sub
    code, out, _ = run_cli(capsys, "diagonal", "--config", cfg)
    assert "1/32" in out


def test_odometer_incompatible_chain_fails(capsys, tmp_path):
    cfg = write(tmp_path, "[experiment]\ngroup = F2\n[odometer-check]\nchain = free\n"
                          "level1 = 1 0 | 0 1\nlevel2 = 0 2 1 | 2 1 0\n")
    code, out, _ = run_cli(capsys, "odometer-check", "--config", cfg)
    assert code == 1 and json.loads(out)["verdict"] == "fail"


def test_determinism_byte_identical(tmp_path, capsys):
    outs = []
    for i in range(2):
        path = tmp_path / f"run{i}.json"
        assert main(["af-audit", "--config", str(CONFIGS / "af_audit_f2.ini"), "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    capsys.readouterr()
    assert outs[0] == outs[1]
    # a different seed changes the sampled fibers
    other = tmp_path / "other.json"
    main(["af-audit", "--config", str(CONFIGS / "af_audit_f2.ini"), "--out", str(other), "--seed", "8"])
    assert other.read_bytes() != outs[0]


def test_report_variants(capsys, tmp_path):
    passing = Certificate("not_almost_finite_at_scale", {"B": ["a"]}, "pass", {"minimiser": "random-0001"},
                          {"min_deficiency": Fraction(8, 3)})
    text = report(passing)
    assert "PASS" in text and "min_deficiency: 8/3" in text
    failing = Certificate("not_almost_finite_at_scale", {}, "fail", {"below_delta": ["shift m=000050"]}, {})
    assert "shift m=000050" in report(failing.to_json())
    vac = Certificate("not_almost_finite_at_scale", {}, "vacuous", None, {"count": 0})
    assert "empty family" in report(vac.as_dict())
    path = write(tmp_path, passing.to_json(), "c.json")
    assert run_cli(capsys, "report", "--config", path)[0] == 0
    bad = write(tmp_path, "{\"verdict\": \"pass\"}", "bad.json")
    assert run_cli(capsys, "report", "--config", bad)[0] == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "groupoid_lab.cli", "diagonal", "--config",
                           write(tmp_path, "[experiment]\nt = e\nt_prime = b\ndepth = 3\ngroup = F2\nn = 2\n")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "1/8" in proc.stdout
