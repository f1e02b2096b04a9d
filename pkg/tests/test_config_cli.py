import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tcdyn import cli
from tcdyn import sweeps
from tcdyn.config import (
    ExperimentConfig, GridAxis, RunBlock, SchemeBlock, parse_config, serialize_config,
)
from tcdyn.errors import NumericalError, ParseError, ValidationError
from tcdyn.io import fmt_value, read_csv, write_csv
from tcdyn.model import SystemParams

finite = st.floats(0.01, 10.0)


def test_empty_file_gives_defaults():
    cfg = parse_config("")
    p = cfg.params
    assert (p.omega1, p.omega2, p.delta, p.gamma_down, p.gamma_up) == (2, 4, 1, 0.1, 0.2)
    assert cfg == ExperimentConfig()


def test_sections_and_comments():
    cfg = parse_config("""
# comment
[params]
g = 5
kappa = 0.5
; another comment
[scheme]
variant = JzPyragas
lambda = 0.4
tau = 1
[grid.g]
count = 11
spacing = linear
""")
    assert cfg.params.g == 5 and cfg.params.kappa == 0.5
    assert cfg.scheme.variant == "jzpyragas" and cfg.scheme.lam == 0.4
    assert len(cfg.grid("g")) == 11


@given(g=finite, kappa=st.floats(1e-3, 1.0), lam=st.floats(-1, 1), tau=finite,
       dt=st.floats(1e-4, 1e-2), count=st.integers(1, 300),
       variant=st.sampled_from(["none", "jz", "omega1", "mirror"]),
       inversion=st.sampled_from(["sigma", "spin"]))
def test_serialization_round_trip(g, kappa, lam, tau, dt, count, variant, inversion):
    cfg = ExperimentConfig(
        params=SystemParams(g=g, kappa=kappa, inversion=inversion),
        scheme=SchemeBlock(variant, lam, tau),
        run=RunBlock(dt=dt),
        grids=dict(ExperimentConfig().grids, tau=GridAxis(0.1, 6.0, count)),
    )
    back = parse_config(serialize_config(cfg))
    assert back == cfg
    assert serialize_config(back) == serialize_config(cfg)


@pytest.mark.parametrize("text, exc", [
    ("[params]\nbogus = 1\n", ValidationError),
    ("[nosuch]\n", ValidationError),
    ("[params]\ng = abc\n", ParseError),
    ("g = 2\n", ParseError),
    ("[params]\ng = 1\ng = 2\n", ParseError),
    ("[params]\nkappa = 0\n", ValidationError),
    ("[run]\nT = -1\n", ValidationError),
    ("[run]\nframe = sideways\n", ValidationError),
    ("[scheme]\nvariant = other\n", ValidationError),
    ("[grid.kappa]\nmin = 0\n", ValidationError),
])
def test_invalid_configs(text, exc):
    with pytest.raises(exc):
        parse_config(text)


def test_parse_error_reports_line():
    with pytest.raises(ParseError) as info:
        parse_config("[params]\ng==2\n")
    assert info.value.line == 2


def test_absorbing_medium_warns():
    cfg = parse_config("[params]\ngamma_up = 0.05\ngamma_down = 0.1\n")
    assert cfg.params.z0 < 0
    assert any("z0" in w for w in cfg.warnings)


@pytest.mark.parametrize("ov, attr, value", [
    (["params.g=3.5"], ("params", "g"), 3.5),
    (["kappa=0.2"], ("params", "kappa"), 0.2),
    (["scheme.lambda=0.3"], ("scheme", "lam"), 0.3),
    (["grid.g.count=7"], None, 7),
])
def test_overrides(ov, attr, value):
    cfg = parse_config("[params]\ng = 1\n", ov)
    if attr is None:
        assert cfg.grids["g"].count == value
    else:
        assert getattr(getattr(cfg, attr[0]), attr[1]) == value


@pytest.mark.parametrize("ov", [["nosuch=1"], ["dt"], ["params.nosuch=1"]])
def test_bad_overrides(ov):
    with pytest.raises(ValidationError):
        parse_config("", ov)


def test_tau_in_periods_needs_target():
    s = SchemeBlock("mirror", 1.0, 1.0, "multiples_of_2pi_over_omega")
    assert s.feedback(2.0).tau == pytest.approx(np.pi)
    with pytest.raises(ValidationError):
        s.feedback(None)


@pytest.mark.parametrize("v, s", [(True, "1"), (3, "3"), (0.1, "0.10000000000000001"),
                                  (float("nan"), "nan"), (-float("inf"), "-inf"), (None, "")])
def test_fmt_value(v, s):
    assert fmt_value(v) == s


def test_csv_header_documents_columns(tmp_path):
    path = write_csv(tmp_path / "x.csv", [("t", "1/Delta", "time"), ("n1", "dimensionless", "pop")],
                     [(0.0, 1.0), (0.5, 2.0)], {"tool": "tcdyn"}, "[params]\ng = 2\n")
    text = path.read_text()
    assert "#   t [1/Delta]: time" in text and "#   g = 2" in text
    header, rows = read_csv(path)
    assert header == ["t", "n1"] and rows[1] == ["0.5", "2"]


def test_csv_rejects_bad_rows(tmp_path):
    with pytest.raises(ValueError):
        write_csv(tmp_path / "x.csv", [("a", "u", "d")], [(1, 2)])


def _run(tmp_path, *args, name="out"):
    out = tmp_path / name
    return cli.main(list(args) + ["--out", str(out), "--no-plot"]), out


def test_fixed_points_command(tmp_path):
    code, out = _run(tmp_path, "fixed-points")
    assert code == 0
    s = json.loads((out / "summary.json").read_text())
    assert s["n_fp"] == 3 and s["n_sfp"] == 2 and s["region"] == "e"
    assert sum(f["stability"] == "Stable" for f in s["fixed_points"]) == 2
    header, rows = read_csv(out / "fixed_points.csv")
    assert len(rows) == 3 and "omega" in header


def test_outputs_are_byte_identical(tmp_path):
    _, a = _run(tmp_path, "fixed-points", "--set", "g=4", name="a")
    _, b = _run(tmp_path, "fixed-points", "--set", "g=4", name="b")
    files = sorted(f.name for f in a.iterdir())
    assert files == sorted(f.name for f in b.iterdir())
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_plot_script_written(tmp_path):
    out = tmp_path / "p"
    assert cli.main(["bifurcation", "--out", str(out), "--set", "grid.g.count=20"]) == 0
    assert (out / "plot_bifurcation.py").exists()


def test_stabilize_command(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("[params]\ng = 5\nkappa = 0.5\n[scheme]\nvariant = jz\nlambda = 0.4\n"
                   "tau = 1\ntarget = 1\n[run]\nT = 1000\nwindow = 100\nsave_every = 50\n")
    code, out = _run(tmp_path, "stabilize", "--config", str(cfg))
    assert code == 0
    s = json.loads((out / "summary.json").read_text())
    assert s["controlled"]["classification"]["kind"] == "FixedPointConverged"
    assert s["uncontrolled"]["classification"]["kind"] == "LimitCycle"
    assert s["rightmost_real_part"] < 0
    _, rows = read_csv(out / "timeseries_controlled.csv")
    tail = np.array([[float(v) for v in r[1:3]] for r in rows[-200:]])
    assert np.ptp(tail, axis=0).max() <= 1e-6


@pytest.mark.parametrize("args", [
    ["integrate", "--set", "run.T=-1"],
    ["fixed-points", "--set", "params.kappa=-1"],
    ["stabilize"],
    ["fixed-points", "--config", "/nonexistent/file.cfg"],
])
def test_validation_exit_code(tmp_path, args):
    code, _ = _run(tmp_path, *args)
    assert code == 2


def test_parse_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[params]\ng==2\n")
    code, _ = _run(tmp_path, "fixed-points", "--config", str(cfg))
    assert code == 2
    assert "line 2" in capsys.readouterr().err


def test_numerical_exit_code(tmp_path):
    # below threshold there is no lasing state to target
    code, _ = _run(tmp_path, "integrate", "--set", "g=0.1", "--set", "scheme.variant=jz",
                   "--set", "scheme.target=n1", "--set", "run.T=1")
    assert code == 3


def test_partial_grid_exit_code(tmp_path, monkeypatch):
    real = sweeps.analyzed_fixed_points

    def flaky(p, *a, **kw):
        if p.g > 5:
            raise NumericalError("injected failure")
        return real(p, *a, **kw)

    monkeypatch.setattr(sweeps, "analyzed_fixed_points", flaky)
    code, out = _run(tmp_path, "phase-diagram", "--set", "grid.g.count=4",
                     "--set", "grid.kappa.count=3")
    assert code == 4
    _, rows = read_csv(out / "phase_diagram.csv")
    assert sum(r[-1] == "0" for r in rows) == 3
