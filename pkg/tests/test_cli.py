"""CLI plumbing: flags, config precedence, CSV format, determinism, exits."""
import json
import re

import pytest

from adaptconv.cli import build_parser, build_spec, main, read_config

FLOAT_RE = re.compile(r"^-?\d\.\d{12}e[+-]\d{2,}$")


def _run(args):
    return main(args)


def _read(path):
    return path.read_bytes()


def test_vkde_demo_deterministic(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert _run(["vkde-demo", "--seed", "5", "--out-dir", str(a)]) == 0
    assert _run(["vkde-demo", "--seed", "5", "--out-dir", str(b)]) == 0
    for name in ("vkde_demo_iterations.csv", "vkde_demo_density.csv"):
        assert _read(a / name) == _read(b / name)
    ra = json.loads((a / "vkde-demo_report.json").read_text())
    rb = json.loads((b / "vkde-demo_report.json").read_text())
    ra.pop("wall_ms")
    rb.pop("wall_ms")
    assert ra == rb


def test_seed_changes_vkde_demo_output(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    _run(["vkde-demo", "--seed", "1", "--out-dir", str(a)])
    _run(["vkde-demo", "--seed", "2", "--out-dir", str(b)])
    assert _read(a / "vkde_demo_density.csv") != _read(b / "vkde_demo_density.csv")


def test_verify_filter_deterministic_and_exit_zero(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert _run(["verify", "--filter", "silverman", "--out-dir", str(a)]) == 0
    assert _run(["verify", "--filter", "silverman", "--out-dir", str(b)]) == 0
    ra = json.loads((a / "verify_report.json").read_text())
    rb = json.loads((b / "verify_report.json").read_text())
    assert ra["checks"] == rb["checks"]
    assert all(c["pass"] == (abs(c["value"]) <= c["tol"]) for c in ra["checks"])


def test_csv_format(tmp_path):
    _run(["vkde-demo", "--out-dir", str(tmp_path)])
    raw = _read(tmp_path / "vkde_demo_density.csv")
    assert b"\r" not in raw
    lines = raw.decode().split("\n")
    assert lines[0] == "x,density"
    cells = lines[1].split(",")
    assert len(cells) == 2
    for cell in cells:
        assert FLOAT_RE.match(cell), cell


def test_corrupted_config_exits_2(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("no_such_key=1\n")
    assert _run(["vkde-demo", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 2
    cfg.write_text("seed\n")
    assert _run(["vkde-demo", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 2
    assert _run(["vkde-demo", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_invalid_parameter_exits_2(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("lambda=2.5\n")
    assert _run(["vkde-demo", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 2


def test_flag_overrides_config(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(f"seed=5\nout_dir={tmp_path}\n")
    parser = build_parser()
    spec = build_spec(parser.parse_args(["vkde-demo", "--config", str(cfg), "--seed", "7"]))
    assert spec.seed == 7
    assert spec.out_dir == str(tmp_path)


def test_config_overrides_defaults(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("lambda=0.7\nbeta=0.25\n")
    parser = build_parser()
    spec = build_spec(parser.parse_args(["smooth1d", "--config", str(cfg)]))
    assert spec.lam == 0.7
    assert spec.beta == 0.25
    # untouched defaults survive
    assert spec.q == 1.0


def test_lambda_flag(tmp_path):
    parser = build_parser()
    spec = build_spec(parser.parse_args(["smooth1d", "--lambda", "1.1"]))
    assert spec.lam == 1.1


def test_env_out_dir_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("ADAPTCONV_OUT_DIR", str(tmp_path))
    parser = build_parser()
    spec = build_spec(parser.parse_args(["vkde-demo"]))
    assert spec.out_dir == str(tmp_path)
    assert _run(["vkde-demo"]) == 0
    assert (tmp_path / "vkde_demo_density.csv").exists()


def test_read_config_ignores_comments(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# comment\n\nseed = 9\ngrid-n=33\n")
    out = read_config(str(cfg))
    assert out == {"seed": 9, "grid_n": 33}


def test_phasespace_scenario_exit_zero(tmp_path):
    assert _run(["phasespace", "--out-dir", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "phasespace_report.json").read_text())
    assert {c["name"] for c in report["checks"]} == {
        "phasespace-wigner-marginals",
        "phasespace-gaussian-nonnegative",
    }
    assert all(c["pass"] for c in report["checks"])
