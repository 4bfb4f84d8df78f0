import json

import numpy as np
import pytest

from conesolve.cli import main
from conesolve.config import ConfigError, parse_config

MINIMAL = """
[problem]
mode = complex
dimension = 1
operator = monge_ampere

[grid]
points_per_axis = 64
"""


def test_parse_minimal():
    cfg = parse_config(MINIMAL)
    assert cfg.mode == "complex" and cfg.dimension == 1
    assert cfg.operator == "monge_ampere" and cfg.path == "fixed"
    assert cfg.points_per_axis == 64


def test_quotient_l_ge_k_rejected():
    text = MINIMAL.replace(
        "operator = monge_ampere",
        "operator = hessian_quotient\nk = 1\nl = 2",
    )
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert any("require l < k" in e for e in err.value.errors)


def test_missing_grid_section():
    with pytest.raises(ConfigError) as err:
        parse_config("[problem]\nmode = complex\ndimension = 1\n")
    assert any("grid.points_per_axis" in e for e in err.value.errors)


def test_all_errors_collected():
    bad = """
[problem]
mode = wavelet
dimension = 9
operator = frobnicate

[grid]
points_per_axis = 7

[mystery]
key = 1
"""
    with pytest.raises(ConfigError) as err:
        parse_config(bad)
    text = "\n".join(err.value.errors)
    assert "mode" in text and "dimension" in text
    assert "frobnicate" in text
    assert "points_per_axis" in text
    assert "unknown section [mystery]" in text
    assert len(err.value.errors) >= 5


def test_unknown_key_named():
    with pytest.raises(ConfigError) as err:
        parse_config(MINIMAL + "\n[solve]\nwibble = 3\n")
    assert any("solve.wibble" in e for e in err.value.errors)


QUOTIENT_CFG = """
[problem]
mode = complex
dimension = 2
operator = hessian_quotient
k = 2
l = 1
path = quotient

[grid]
points_per_axis = 16
reduced = true

[background]
chi = chi_perturbed(2, 0.1, 21)

[solve]
schedule = 6

[certify]
kappa_samples = 200

[output]
directory = {out}
"""


def test_cli_solve_quotient(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(QUOTIENT_CFG.format(out=tmp_path / "out"))
    assert main(["solve", "--config", str(cfg)]) == 0
    report = json.loads((tmp_path / "out" / "solve_report.json").read_text())
    assert report["schema"] == "v1"
    assert report["certificate"]["verdict"] == "certified"
    assert report["solve"]["final"]["c"] == pytest.approx(0.5, abs=1e-8)
    assert (tmp_path / "out" / "u_final.bin").exists()
    assert (tmp_path / "out" / "summary.txt").exists()
    # resolved config and version are embedded
    assert report["config"]["operator"] == "hessian_quotient"
    assert "library_version" in report
    # the second-order/gradient monitor rides along in the diagnostics
    monitor = report["diagnostics"]["second_order_gradient_monitor"]
    assert np.isfinite(monitor["ratio"])


def test_cli_reports_byte_identical(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(QUOTIENT_CFG.format(out=tmp_path / "out"))
    assert main(["solve", "--config", str(cfg)]) == 0
    first = (tmp_path / "out" / "solve_report.json").read_bytes()
    assert main(["solve", "--config", str(cfg)]) == 0
    assert (tmp_path / "out" / "solve_report.json").read_bytes() == first


def test_cli_refuted_exit_code(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        QUOTIENT_CFG.format(out=tmp_path / "out")
        .replace("chi_perturbed(2, 0.1, 21)", "chi_perturbed(5, 2.6, 3)")
    )
    assert main(["solve", "--config", str(cfg)]) == 5
    report = json.loads((tmp_path / "out" / "solve_report.json").read_text())
    assert report["certificate"]["verdict"] == "refuted"
    assert report["certificate"]["witness"] is not None


def test_cli_check_only(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(QUOTIENT_CFG.format(out=tmp_path / "out"))
    assert main(["solve", "--config", str(cfg), "--check-only"]) == 0
    report = json.loads((tmp_path / "out" / "solve_report.json").read_text())
    assert report["check_only"] and "solve" not in report


def test_cli_bad_config_path(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "missing.cfg")]) == 4


def test_cli_abp(tmp_path, capsys):
    assert main(["abp", "--grid", "64", "--cases", "3",
                 "--output", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "abp_report.json").read_text())
    assert report["all_fuzz_passed"]
    out = capsys.readouterr().out
    assert out.count("[pass]") == 4


def test_cli_selftest(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "[pass]" in out and "FAIL" not in out


def test_field_generators_deterministic(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    cfg = tmp_path / "run.cfg"
    base = QUOTIENT_CFG.format(out=out1)
    cfg.write_text(base)
    assert main(["solve", "--config", str(cfg)]) == 0
    cfg.write_text(base.replace(str(out1), str(out2)))
    assert main(["solve", "--config", str(cfg)]) == 0
    u1 = (out1 / "u_final.bin").read_bytes()
    u2 = (out2 / "u_final.bin").read_bytes()
    assert u1 == u2
