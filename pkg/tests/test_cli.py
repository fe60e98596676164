import subprocess
import sys

import numpy as np
import pytest

from streakct import cli, formats
from streakct import shapes as S
from streakct.geometry import LineSet


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = cli.main([argv[0], "--out", str(out), *argv[1:]])
    return code, out


def kv(path):
    rows = {}
    for line in path.read_text().splitlines():
        k, _, v = line.partition(" = ")
        rows[k] = v
    return rows


SMALL = ["--set", "image.n=128", "--set", "sinogram.n_phi=180"]


# --- predict -----------------------------------------------------------------------


def test_predict_figure1(tmp_path):
    code, out = run(tmp_path, "predict")
    assert code == cli.EXIT_OK
    lines = LineSet.from_csv((out / "lines.csv").read_text())
    assert sorted(ln.kind for ln in lines) == ["bitangent", "inflection-tangent", "inflection-tangent"]
    rep = kv(out / "assumptions.txt")
    assert rep["A1"] == "pass" and rep["A2"] == "pass"
    assert (out / "config.ini").exists()


def test_predict_ellipse(tmp_path):
    code, out = run(tmp_path, "predict", "--set", "curve.shape=ellipse")
    assert code == cli.EXIT_OK
    assert len(LineSet.from_csv((out / "lines.csv").read_text())) == 0


def test_predict_flat_side(tmp_path):
    code, out = run(tmp_path, "predict", "--set", "curve.shape=flat_side")
    assert code == cli.EXIT_ASSUMPTION
    assert kv(out / "assumptions.txt")["A1"] == "fail"


def test_predict_curve_file(tmp_path):
    p = tmp_path / "bean.curve"
    S.bean().save(p)
    code, out = run(tmp_path, "predict", "--set", f"curve.file={p}")
    assert code == cli.EXIT_OK
    assert len(LineSet.from_csv((out / "lines.csv").read_text())) == 6


def test_bad_curve_file(tmp_path, capsys):
    p = tmp_path / "bad.curve"
    p.write_text("harmonic 0: 0 0 0 0\nharmonic 1: 1 0 zero 1\n")
    code, _ = run(tmp_path, "predict", "--set", f"curve.file={p}")
    assert code == cli.EXIT_USAGE
    assert "line 2" in capsys.readouterr().err


def test_usage_errors(tmp_path):
    assert run(tmp_path, "predict", "--set", "image.size=3")[0] == cli.EXIT_USAGE
    assert run(tmp_path, "predict", "--set", "image.n")[0] == cli.EXIT_USAGE
    assert run(tmp_path, "predict", "--config", str(tmp_path / "none.ini"))[0] == cli.EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        cli.main(["explode", "--out", str(tmp_path)])
    assert exc.value.code == cli.EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        cli.main(["predict"])
    assert exc.value.code == cli.EXIT_USAGE


def test_help_lists_exit_codes():
    res = subprocess.run([sys.executable, "-m", "streakct.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "exit codes:" in res.stdout and "3  numerical failure" in res.stdout


def test_config_file_and_overrides(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[curve]\nshape = ellipse\n[run]\nseed = 4\n")
    code, out = run(tmp_path, "predict", "--config", str(ini), "--seed", "9")
    assert code == cli.EXIT_OK
    cfg = (out / "config.ini").read_text()
    assert "shape = ellipse" in cfg and "seed = 9" in cfg


# --- simulate ------------------------------------------------------------------------


def test_simulate_is_deterministic(tmp_path):
    a = run(tmp_path, "simulate", *SMALL, name="a")
    b = run(tmp_path, "simulate", *SMALL, name="b")
    assert a[0] == b[0] == cli.EXIT_OK
    files = ["sinogram.sino", "p_ma.sino", "f_ma.img", "f_ma.pgm", "gradient.img", "score.txt", "lines.csv"]
    for f in files:
        assert (a[1] / f).read_bytes() == (b[1] / f).read_bytes(), f
    img = formats.load_image(a[1] / "f_ma.img")
    assert img.n == 128
    sino = formats.load_sinogram(a[1] / "p_ma.sino")
    assert sino.grid.n_phi == 180
    assert np.all(sino.values >= 0)  # quadratic F
    score = kv(a[1] / "score.txt")
    assert 0 <= float(score["inside_fraction"]) <= 1
    assert score["baseline.seed"] == "0"
    assert sum(k.startswith("drop.") for k in score) == 3


def test_simulate_ellipse_has_empty_breakdown(tmp_path):
    code, out = run(tmp_path, "simulate", *SMALL, "--set", "curve.shape=ellipse")
    assert code == cli.EXIT_OK
    score = kv(out / "score.txt")
    assert [k for k in score if k.startswith("mass.")] == ["mass.boundary"]
    assert not any(k.startswith("drop.") for k in score)


def test_simulate_grid_must_cover_curve(tmp_path):
    code, _ = run(tmp_path, "simulate", *SMALL, "--set", "image.r=0.5")
    assert code == cli.EXIT_USAGE


def test_simulate_table_variant(tmp_path):
    tab = tmp_path / "f.csv"
    x = np.linspace(0, 3, 31)
    np.savetxt(tab, np.stack([x, x * x], axis=1), delimiter=",")
    code, out = run(tmp_path, "simulate", *SMALL, "--set", "nonlinearity.variant=table",
                    "--set", f"nonlinearity.table={tab}")
    assert code == cli.EXIT_OK
    code, _ = run(tmp_path, "simulate", *SMALL, "--set", "nonlinearity.variant=table", name="t2")
    assert code == cli.EXIT_USAGE


# --- verify and cusp -------------------------------------------------------------------


def test_verify_reduced_resolution(tmp_path):
    code, out = run(tmp_path, "verify", "--set", "verify.n=128")
    assert code == cli.EXIT_OK
    rep = kv(out / "verify.txt")
    assert rep["all"] == "pass"
    assert {"canonical_roundtrip", "dual_tangency_point", "disk_sinogram_over_ds", "normal_residual",
            "normal_c_two_grids", "parseval_relative"} <= set(rep)


def test_verify_failure_exits_3(tmp_path):
    code, out = run(tmp_path, "verify", "--set", "verify.n=64", "--set", "verify.roundtrip_tol=1e-30")
    assert code == cli.EXIT_NUMERIC
    assert kv(out / "verify.txt")["all"] == "fail"


def test_verify_corrupt_curve(tmp_path):
    p = tmp_path / "bad.curve"
    p.write_text("garbage\n")
    code, _ = run(tmp_path, "verify", "--set", f"curve.file={p}")
    assert code == cli.EXIT_USAGE


def test_cusp_small_grid(tmp_path):
    code, out = run(tmp_path, "cusp", "--n", "2048", "--rho", "3", "--set", "cusp.fit_lo=10",
                    "--set", "cusp.fit_hi=60")
    assert code == cli.EXIT_OK
    rep = kv(out / "decay.txt")
    assert float(rep["expected_slope"]) == -6.5
    assert "wavefront.passed" in rep
    rows = (out / "decay_samples.csv").read_text().splitlines()
    assert rows[0] == "xi2,abs_F" and len(rows) == 257


def test_cusp_alias_guard_exits_3(tmp_path):
    code, _ = run(tmp_path, "cusp", "--n", "2048", "--rho", "2.5", "--set", "cusp.fit_lo=10",
                  "--set", "cusp.fit_hi=60")
    assert code == cli.EXIT_NUMERIC
