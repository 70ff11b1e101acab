import json

import numpy as np
import pytest

from optomech import cli
from optomech.cli import deserialize_rational, main, parse_config
from optomech.errors import ConfigError

SMALL = """
[reduced]
omega_q = 0.5
eta = 0.9

[sweep]
mode = "{mode}"
axes = [
  {{ name = "gamma", min = 0.5, max = 2.0, count = {n}, spacing = "log" }},
  {{ name = "delta", min = -1.5, max = 0.0, count = 2 }},
]
"""

POINT = """
[reduced]
gamma = {gamma}
delta = {delta}
omega_q = {omega_q}
"""


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def data_rows(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return [ln.split(",") for ln in lines]


@pytest.mark.parametrize("text", [
    "[reduced]\ngamma = 1\n[physical]\nlaser_power = 1\n[sweep]\npreset = 'fig1'\n",
    "[reduced]\ngamma = 'a'\ndelta = 0\nomega_q = 0.5\n[sweep]\naxes = [{name='gamma', min=1, max=2, count=2}]\n",
    "[reduced]\ngamma = 1\ndelta = 0\nomega_q = 0.5\n[sweep]\naxes = [{name='gamma', min=1, max=2, count=0}]\n",
    "[reduced]\ngamma = 1\ndelta = 0\nomega_q = 0.5\n[sweep]\nmode = 'nope'\naxes = [{name='gamma', min=1, max=2, count=2}]\n",
    "[reduced]\ngamma = 1\ndelta = 0\nomega_q = 0.5\n[sweep]\naxes = [{name='bogus', min=1, max=2, count=2}]\n",
    "[reduced]\ngamma = -1\ndelta = 0\nomega_q = 0.5\n[sweep]\naxes = [{name='delta', min=1, max=2, count=2}]\n",
    "[sweep]\npreset = 'nope'\n",
    "not toml = = =\n",
])
def test_config_errors_exit_1(tmp_path, text):
    assert main(["run", "--config", write(tmp_path, text)]) == 1


def test_missing_config_exits_1(tmp_path):
    assert main(["run", "--config", str(tmp_path / "absent.toml")]) == 1


def test_preset_fills_grid():
    cfg = parse_config({}, preset="fig1")
    assert cfg.mode == "ctrl"
    assert [ax.count for ax in cfg.axes] == [40, 40]


def test_preset_and_axes_conflict():
    with pytest.raises(ConfigError):
        parse_config({"sweep": {"preset": "fig1", "axes": [
            {"name": "gamma", "min": 1.0, "max": 2.0, "count": 2}]}})


def test_single_count_axis(tmp_path):
    text = POINT.format(gamma=1.0, delta=-1.0, omega_q=0.5) + \
        "[sweep]\naxes = [{name='gamma', min=1.0, max=3.0, count=1}]\n"
    out = tmp_path / "o.csv"
    assert main(["run", "--config", write(tmp_path, text), "--out", str(out)]) == 0
    rows = data_rows(out.read_text())
    assert rows[0][:3] == ["gamma", "stable", "N_uncond"]
    assert len(rows) == 2 and rows[1][0] == "1"


def test_columns_and_formatting(tmp_path):
    out = tmp_path / "o.csv"
    assert main(["run", "--config", write(tmp_path, SMALL.format(mode="ctrl", n=2)),
                 "--out", str(out)]) == 0
    rows = data_rows(out.read_text())
    assert rows[0] == ["gamma", "delta", "stable", "N_uncond", "N_eff_cond", "N_ctrl",
                       "EN_uncond", "EN_cond", "error_flag"]
    # row-major: the last axis varies fastest
    assert [r[:2] for r in rows[1:3]] == [["0.5", "-1.5"], ["0.5", "0"]]
    for r in rows[1:]:
        if r[2] == "true":
            assert r[6] == r[7] == "" and r[8] == ""
            assert r[3] == f"{float(r[3]):.12g}"


def test_worker_count_is_byte_identical(tmp_path, monkeypatch):
    cfg = write(tmp_path, SMALL.format(mode="cond", n=3))
    a, b, c = (tmp_path / f"{k}.csv" for k in "abc")
    assert main(["run", "--config", cfg, "--out", str(a), "--workers", "1"]) == 0
    assert main(["run", "--config", cfg, "--out", str(b), "--workers", "3"]) == 0
    monkeypatch.setenv("OPTOMECH_WORKERS", "2")
    assert main(["run", "--config", cfg, "--out", str(c)]) == 0
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()


def test_workers_env(monkeypatch):
    monkeypatch.setenv("OPTOMECH_WORKERS", "4")
    assert cli.resolve_workers(None) == 4
    assert cli.resolve_workers(2) == 2
    monkeypatch.setenv("OPTOMECH_WORKERS", "x")
    with pytest.raises(ConfigError):
        cli.resolve_workers(None)
    monkeypatch.delenv("OPTOMECH_WORKERS")
    assert cli.resolve_workers(None) == 1


def test_bad_workers_exit_1(tmp_path):
    cfg = write(tmp_path, SMALL.format(mode="uncond", n=2))
    assert main(["run", "--config", cfg, "--workers", "0"]) == 1


def test_unstable_rows(tmp_path, capsys):
    text = POINT.format(gamma=0.1, delta=0.0, omega_q=0.9) + \
        "[sweep]\naxes = [{name='delta', min=0.5, max=1.0, count=2}]\n"
    assert main(["run", "--config", write(tmp_path, text)]) == 0
    rows = data_rows(capsys.readouterr().out)
    for r in rows[1:]:
        assert r[1] == "false"
        assert all(v == "" for v in r[2:])


def test_point_error_exits_2(tmp_path, monkeypatch):
    def boom(mode, rp):
        return True, {"N_uncond": 0.1}, "ControllerSynthesisError"

    monkeypatch.setattr(cli, "evaluate_point", boom)
    cfg = write(tmp_path, SMALL.format(mode="uncond", n=2))
    out = tmp_path / "o.csv"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 2
    assert data_rows(out.read_text())[1][-1] == "ControllerSynthesisError"


def test_fig2_header_records_detection():
    cfg = parse_config({}, preset="fig2")
    assert cfg.fixed["eta"] == 1.0 and cfg.fixed["zeta"] == 0.0
    assert any("eta = 1" in c for c in cfg.comments)


def test_export_round_trip(tmp_path):
    cfg = write(tmp_path, POINT.format(gamma=1.0, delta=-1.0, omega_q=0.5))
    out = tmp_path / "k.json"
    assert main(["export", "--config", cfg, "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert set(data) >= {"K_x", "K_p", "C_opt", "psi_plus", "params"}
    from optomech.control import optimal_controller
    from optomech.estimator import solve_point
    from optomech.model import ReducedParams

    rp = ReducedParams(gamma=1.0, delta=-1.0, omega_q=0.5)
    ps = solve_point(rp)
    cs = optimal_controller(rp, ps.wiener, ps.cond, ps.transfers)
    refs = {"K_x": ps.wiener.k["x"], "K_p": ps.wiener.k["p"],
            "psi_plus": ps.wiener.psi.psi_plus, "C_opt": cs.c_opt}
    for key, ref in refs.items():
        got = deserialize_rational(data[key])(1.0)
        assert abs(got - ref(1.0)) <= 1e-12 * max(1.0, abs(ref(1.0)))


def test_export_uncoupled_has_zero_filter(tmp_path):
    cfg = write(tmp_path, POINT.format(gamma=1.0, delta=-1.0, omega_q=0.0))
    out = tmp_path / "k.json"
    main(["export", "--config", cfg, "--out", str(out)])
    data = json.loads(out.read_text())
    assert deserialize_rational(data["K_x"]).is_zero


def test_export_fig7_controller_is_causal(tmp_path):
    cfg = write(tmp_path, "[physical]\ntemperature = 10.0\n\n[sweep]\npreset = 'fig7'\n")
    out = tmp_path / "k.json"
    assert main(["export", "--config", cfg, "--out", str(out)]) == 0
    c = deserialize_rational(json.loads(out.read_text())["C_opt"])
    assert np.all(c.den.roots().imag < 0)


def test_validate_command(capsys):
    assert main(["validate", "--draws", "3", "--seed", "2"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 2 and all(line.startswith("PASS") for line in out)


def test_validate_bad_draws():
    assert main(["validate", "--draws", "0"]) == 1
