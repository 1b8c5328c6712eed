import io
import subprocess
import sys

import pytest

from moebiusflat.cli import EXIT_FAIL, EXIT_INPUT, EXIT_PASS, Report, RunConfig, run
from moebiusflat.errors import MoebiusError


def _run(args):
    buf = io.StringIO()
    code = run([str(a) for a in args], stdout=buf)
    return code, buf.getvalue()


def _kv(text):
    return dict(line.split(" = ", 1) for line in text.splitlines())


def test_check_pass_and_fail(data_dir):
    code, out = _run(["check", data_dir / "e3.coef", "--format", "kv"])
    assert code == EXIT_PASS and _kv(out)["status"] == "pass"
    code, out = _run(["check", data_dir / "e3_a_x.coef", "--format", "kv"])
    kv = _kv(out)
    assert code == EXIT_FAIL
    assert float(kv["moebius_flat.r_a"]) == pytest.approx(1.0)
    assert float(kv["moebius_flat.r_c"]) < 1e-12
    code, out = _run(["check", data_dir / "e3_a_y.coef", "--format", "kv"])
    assert code == EXIT_FAIL and float(_kv(out)["moebius_flat.r_c"]) == pytest.approx(2.0)


def test_derived_sign_option(data_dir):
    code, out = _run(["check", data_dir / "e3.coef", "--sign", "derived", "--format", "kv"])
    assert code == EXIT_PASS and _kv(out)["sign"] == "derived"


def test_defaults_quadratic_differential(data_dir):
    _, out = _run(["check", data_dir / "e2.coef", "--format", "kv"])
    assert _kv(out)["quadratic_source"] == "V/2, W/2"


def test_input_errors(data_dir, tmp_path, capsys):
    code, _ = _run(["check", data_dir / "malformed.coef"])
    assert code == EXIT_INPUT
    assert "line 1, column 11" in capsys.readouterr().err
    assert _run(["check", tmp_path / "missing.coef"])[0] == EXIT_INPUT
    assert _run(["check", data_dir / "e3.coef", "--tol", "-1"])[0] == EXIT_INPUT
    assert _run(["deform", data_dir / "e2.coef"])[0] == EXIT_INPUT
    assert _run(["spectral", data_dir / "e3.coef", "--t", "a,b"])[0] == EXIT_INPUT
    assert _run(["conserved", data_dir / "quadric.coef"])[0] == EXIT_INPUT
    assert _run(["frobnicate"])[0] == EXIT_INPUT


def test_incompatible_input(data_dir):
    code, out = _run(["spectral", data_dir / "incompatible.coef", "--t", "1", "--format", "kv"])
    assert code == EXIT_FAIL and float(_kv(out)["t=1.curvature"]) == pytest.approx(1.0)
    code, _ = _run(["deform", data_dir / "incompatible.coef", "--t", "1"])
    assert code == EXIT_FAIL


def test_kv_output_is_deterministic(data_dir):
    a = _run(["spectral", data_dir / "e3.coef", "--format", "kv"])[1]
    b = _run(["spectral", data_dir / "e3.coef", "--format", "kv"])[1]
    assert a == b and "t=-0.5.route_gap" in a


def test_conserved_reports(data_dir):
    for name in ("e3", "ramp", "e2"):
        code, out = _run(["conserved", data_dir / f"{name}.coef", "--format", "kv"])
        assert code == EXIT_PASS, out
        assert "flat_centro_affine.unit" in _kv(out)


def test_centroaffine_reports(data_dir):
    _, out = _run(["centroaffine", data_dir / "tzitzeica.imm", "--format", "kv"])
    kv = _kv(out)
    assert kv["flat_metric"] == "true" and kv["proper_affine_sphere"] == "true"
    assert float(kv["metric.g11.max"]) == pytest.approx(2 / 3)
    _, out = _run(["centroaffine", data_dir / "sphere.imm", "--format", "kv"])
    kv = _kv(out)
    assert kv["flat_metric"] == "false" and kv["metric.hyperbolic"] == "false"
    code, out = _run(["centroaffine", data_dir / "hyperboloid.imm", "--format", "kv"])
    assert code == EXIT_PASS and "adapted_conservation" in _kv(out)


def test_output_files(data_dir, tmp_path):
    out = tmp_path / "run"
    code, text = _run(["deform", data_dir / "e2.coef", "--t", "1,2", "--out", out])
    assert code == EXIT_PASS
    names = {p.name for p in out.iterdir()}
    for t in ("1", "2"):
        assert {f"deform_t{t}.surface", f"deform_t{t}.chart", f"deform_t{t}.png"} <= names
    assert "report.txt" in names and (out / "deform_t2.png").stat().st_size > 0
    assert (out / "deform_t2.png").read_bytes()[:4] == b"\x89PNG"

    bare = tmp_path / "bare"
    _run(["spectral", data_dir / "e3.coef", "--out", bare, "--no-figures", "--format", "kv"])
    assert sorted(p.name for p in bare.iterdir()) == ["report.kv", "spectral.dat"]


@pytest.mark.parametrize("cmd,name", [("check", "e3.coef"), ("conserved", "e3.coef"),
                                      ("centroaffine", "tzitzeica.imm")])
def test_figures_for_each_command(cmd, name, data_dir, tmp_path):
    code, _ = _run([cmd, data_dir / name, "--out", tmp_path])
    assert code == EXIT_PASS
    assert any(p.suffix == ".png" for p in tmp_path.iterdir())


def test_report_and_config():
    rep = Report("demo")
    rep.check("a", 1e-14, 1e-12)
    rep.check("b", float("nan"), 1e-12)
    assert not rep.passed and rep.render("kv").endswith("status = fail\n")
    with pytest.raises(MoebiusError):
        RunConfig("check", None, tol=0.0)


def test_console_entry_point(data_dir):
    proc = subprocess.run([sys.executable, "-m", "moebiusflat", "check", str(data_dir / "e3.coef")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "status" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "moebiusflat", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "0.1.0" in proc.stdout
