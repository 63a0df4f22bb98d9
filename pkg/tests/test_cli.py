import csv
import json
import math
import subprocess
import sys

import pytest

from corner_scatter_lab import cli


def run(tmp_path, *argv):
    code = cli.main([*argv, "--out", str(tmp_path)])
    return code


def load(path):
    return json.loads(path.read_text())


def test_usage_errors_exit_1(tmp_path, capsys):
    assert cli.main([]) == 1
    assert cli.main(["laplace", "nonsense"]) == 1
    assert cli.main(["laplace", "eval", "--dim", "4"]) == 1
    assert run(tmp_path, "fourier", "decay", "--shape", "hexagon") == 1
    assert run(tmp_path, "laplace", "eval", "--rho", "1,zz") == 1
    assert "error" in capsys.readouterr().err


def test_version_exits_0(capsys):
    assert cli.main(["--version"]) == 0
    assert capsys.readouterr().out.strip()


def test_console_script_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "corner_scatter_lab", "laplace", "eval",
                          "--angle", "1.0", "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert "PASS" in out.stdout


def test_laplace_eval_golden(tmp_path):
    assert run(tmp_path, "laplace", "eval", "--angle", "60", "--degrees") == 0
    rec = load(tmp_path / "laplace_eval.json")
    assert rec["schema"] == 1 and rec["module"] == "laplace-cone"
    for e in rec["values"]["evaluations"]:
        assert e["value_re"] == pytest.approx(2 * math.tan(math.pi / 6), rel=1e-10)
        assert e["value_im"] == pytest.approx(0.0, abs=1e-12)


def test_laplace_eval_3d(tmp_path):
    g = 0.6
    assert run(tmp_path, "laplace", "eval", "--dim", "3", "--angle", str(g), "--rho", "0,0,1") == 0
    e = load(tmp_path / "laplace_eval.json")["values"]["evaluations"][0]
    assert e["value_re"] == pytest.approx(2 * math.pi * math.tan(g) ** 2, rel=1e-9)


def test_inadmissible_rho_exits_2(tmp_path, capsys):
    assert run(tmp_path, "laplace", "eval", "--rho=-1,0") == 2
    fail = load(tmp_path / "failure.json")
    assert fail["values"]["error"] == "InadmissibleError"
    assert "FAIL" in capsys.readouterr().err


def test_config_presets_and_overrides(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"angle": 60.0, "degrees": True}))
    out = tmp_path / "a"
    assert cli.main(["laplace", "eval", "--config", str(cfg), "--out", str(out)]) == 0
    v = load(out / "laplace_eval.json")["values"]["evaluations"][0]["value_re"]
    assert v == pytest.approx(2 * math.tan(math.pi / 6), rel=1e-10)
    # a flag on the command line wins over the preset
    out2 = tmp_path / "b"
    assert cli.main(["laplace", "eval", "--config", str(cfg), "--angle", "90", "--out", str(out2)]) == 0
    v2 = load(out2 / "laplace_eval.json")["values"]["evaluations"][0]["value_re"]
    assert v2 == pytest.approx(2 * math.tan(math.pi / 4), rel=1e-10)


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"no_such_flag": 3}))
    assert cli.main(["laplace", "eval", "--config", str(bad), "--out", str(tmp_path)]) == 1
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert cli.main(["laplace", "eval", "--config", str(broken), "--out", str(tmp_path)]) == 1
    assert cli.main(["laplace", "eval", "--config", str(tmp_path / "missing.json")]) == 1
    listy = tmp_path / "list.json"
    listy.write_text("[1, 2]")
    assert cli.main(["laplace", "eval", "--config", str(listy), "--out", str(tmp_path)]) == 1


def test_parse_range():
    assert list(cli.parse_range("0:1:0.25")) == [0.0, 0.25, 0.5, 0.75, 1.0]
    r = cli.parse_range("10:1000:log3")
    assert r == pytest.approx([10, 100, 1000])
    assert list(cli.parse_range("1,2.5")) == [1.0, 2.5]
    with pytest.raises(cli.UsageError):
        cli.parse_range("1:2")


def test_corner2d_verify(tmp_path):
    assert run(tmp_path, "corner2d", "verify", "--nmax", "3") == 0
    rows = list(csv.reader(open(tmp_path / "corner2d_table.csv")))
    assert rows[0][0] == "N" and len(rows) == 1 + 3 * 2
    rec = load(tmp_path / "corner2d_certificates.json")
    assert len(rec["values"]["certificates"]) == 3


def test_corner2d_coarse_grid_fails_with_record(tmp_path):
    assert run(tmp_path, "corner2d", "verify", "--nmax", "2", "--grid", "20") == 2
    assert load(tmp_path / "failure.json")["values"]["error"] == "CertificateError"


def test_corner3d_exceptional(tmp_path):
    assert run(tmp_path, "corner3d", "exceptional", "--N", "1", "--grid", "300", "--certify", "2") == 0
    rec = load(tmp_path / "corner3d_exceptional.json")
    assert len(rec["values"]["certified_at"]) == 2
    assert "ESTIMATE" in rec["provenance"]["label"]
    header = next(csv.reader(open(tmp_path / "corner3d_curves_N1.csv")))
    assert header == ["gamma", "abs_f0", "abs_f1"]


def test_fourier_decay(tmp_path):
    assert run(tmp_path, "fourier", "decay", "--shape", "cylinder", "--tau", "0:0.4:0.2",
               "--grids", "128,256") == 0
    rows = list(csv.reader(open(tmp_path / "fourier_trend.csv")))
    assert len(rows) == 1 + 3 * 2


def test_cgo_decay(tmp_path):
    assert run(tmp_path, "cgo", "decay", "--retzeta", "10:100:log8", "--res", "256") == 0
    rec = load(tmp_path / "cgo_decay.json")
    assert rec["values"]["slopes"][0] <= -1 / 3 - 0.05
    assert all(r <= 1e-10 for r in rec["values"]["residuals"])


def test_cgo_insufficient_range_exits_2(tmp_path):
    assert run(tmp_path, "cgo", "decay", "--retzeta", "10:40:log8", "--res", "256") == 2
    assert load(tmp_path / "failure.json")["values"]["error"] == "InsufficientRangeError"


def test_scatter_scan_disk(tmp_path):
    assert run(tmp_path, "scatter", "scan", "--potential", "disk", "--kmin", "2.7", "--kmax", "3.1",
               "--steps", "9", "--ndir", "16") == 0
    rec = load(tmp_path / "scatter_disk.json")
    assert any(r["order"] == 1 for r in rec["values"]["roots"])
    rows = list(csv.reader(open(tmp_path / "scatter_disk.csv")))
    assert rows[0] == ["k", "sigma_min"] and len(rows) == 10


@pytest.mark.parametrize("argv", [
    ["laplace", "eval"],
    ["fourier", "decay", "--shape", "cylinder", "--tau", "0,0.4", "--grids", "128,256"],
])
def test_outputs_are_deterministic(tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main([*argv, "--out", str(a), "--plot"]) == 0
    assert cli.main([*argv, "--out", str(b), "--plot"]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n


def test_plot_svg_written(tmp_path):
    pytest.importorskip("matplotlib")
    assert run(tmp_path, "fourier", "decay", "--shape", "cylinder", "--tau", "0,0.4",
               "--grids", "128,256", "--plot") == 0
    svg = (tmp_path / "fourier_trend.svg").read_text()
    assert svg.lstrip().startswith("<?xml") and "<svg" in svg
