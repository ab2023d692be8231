import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from whitham_coalescence.cli import main
from whitham_coalescence.models_builtin import CnlsParams, cnls_standing_coalescence, coalescence_amplitude_ratio

SHALLOW = """
omega = [-1.0]
k = [0.0]
[model]
name = "shallow_water"
g = 1.0
"""

CNLS_MODEL = """
[model]
name = "cnls"
alpha = [{a1}, {a2}]
beta = [[{b11}, {b12}], [{b12}, {b22}]]
"""


def run(tmp_path, *args, config=None, name="cfg.toml"):
    if config is not None:
        (tmp_path / name).write_text(config)
        args = args + ("--config", str(tmp_path / name))
    return CliRunner().invoke(main, list(args), catch_exceptions=False)


def cnls_scan_config(vals, branch, grid=80):
    p = CnlsParams(*vals)
    r = float(coalescence_amplitude_ratio(p, branch))
    a1, a2, b11, b12, b22 = vals
    return CNLS_MODEL.format(a1=a1, a2=a2, b11=b11, b12=b12, b22=b22) + f"""
[path]
type = "cnls_standing"
amp1_sq = 1.0
ratio_start = {1.3 * r!r}
ratio_end = {0.6 * r!r}
""", grid


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_characteristics_shallow_water(tmp_path):
    res = run(tmp_path, "characteristics", "--out", str(tmp_path / "o"), "--curve", config=SHALLOW)
    assert res.exit_code == 0, res.output
    rows = read_rows(tmp_path / "o" / "characteristics.csv")
    assert [float(r["re"]) for r in rows] == [-1.0, 1.0]
    assert [r["sign_char"] for r in rows] == ["1", "-1"]
    assert (tmp_path / "o" / "curve.csv").exists()
    d = json.loads((tmp_path / "o" / "characteristics.json").read_text())
    assert d["schema_version"] == 1


def test_characteristics_cnls_mixed(tmp_path):
    cfg = 'omega = [1.2, 2.1]\nk = [0.0, 0.0]\n' + CNLS_MODEL.format(a1=1.0, a2=1.0, b11=1.0, b12=2.0, b22=1.0)
    res = run(tmp_path, "characteristics", "--out", str(tmp_path / "o"), config=cfg)
    assert res.exit_code == 0, res.output
    rows = read_rows(tmp_path / "o" / "characteristics.csv")
    real = [r for r in rows if r["is_real"] == "true"]
    cplx = [r for r in rows if r["is_real"] == "false"]
    assert len(real) == 2 and len(cplx) == 2
    assert sorted(r["sign_char"] for r in real) == ["-1", "1"]


def test_malformed_config_names_key(tmp_path):
    res = run(tmp_path, "characteristics", "--out", str(tmp_path / "o"), config=SHALLOW.replace("k = [0.0]", "k = [0.0]\nbogus = 3"))
    assert res.exit_code == 2
    assert "bogus" in res.output


def test_domain_error_exit_2(tmp_path):
    res = run(tmp_path, "characteristics", "--out", str(tmp_path / "o"), config=SHALLOW.replace("-1.0", "1.0"))
    assert res.exit_code == 2


def test_bad_tolerance_rejected(tmp_path):
    res = run(tmp_path, "characteristics", "--out", str(tmp_path / "o"), config="[tol]\nchain = -1.0\n" + SHALLOW)
    assert res.exit_code == 2


def _scan(tmp_path, vals=(1.0, -1.0, 1.0, 2.0, 1.0), branch=-1, out="s"):
    cfg, grid = cnls_scan_config(vals, branch)
    res = run(tmp_path, "scan", "--out", str(tmp_path / out), "--grid", str(grid), config=cfg, name=f"{out}.toml")
    assert res.exit_code == 0, res.output
    return json.loads((tmp_path / out / "points.json").read_text())


def test_scan_cnls_one_crossing(tmp_path):
    d = _scan(tmp_path)
    sc = cnls_standing_coalescence(CnlsParams(1, -1, 1, 2, 1), 1.0, -1)
    pts = d["points"]
    assert len({round(p["path_param"], 9) for p in pts}) == 1
    for p in pts:
        assert abs(p["c_g"]) == pytest.approx(sc.c_g, rel=1e-6)
        assert p["K_disp"] / p["mu"] == pytest.approx(sc.K_tilde / sc.cg_sq, rel=1e-8)
    header = next(csv.reader(open(tmp_path / "s" / "scan.csv")))
    assert header[0] == "p" and header[-1] == "flags" and "c_4" in header and "sign_4" in header


def test_scan_is_byte_identical(tmp_path):
    _scan(tmp_path, out="a")
    _scan(tmp_path, out="b")
    for f in ("points.json", "scan.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_scan_all_hyperbolic(tmp_path):
    cfg = SHALLOW.replace("omega = [-1.0]\nk = [0.0]\n", "") + """
[path]
omega0 = [-1.0]
k0 = [0.0]
omega1 = [-3.0]
k1 = [1.0]
"""
    res = run(tmp_path, "scan", "--out", str(tmp_path / "o"), "--grid", "20", config=cfg)
    assert res.exit_code == 0
    assert json.loads((tmp_path / "o" / "points.json").read_text())["points"] == []


def test_scan_leaving_domain_warns(tmp_path):
    cfg = SHALLOW.replace("omega = [-1.0]\nk = [0.0]\n", "") + """
[path]
omega0 = [-1.0]
k0 = [0.0]
omega1 = [1.0]
k1 = [0.0]
"""
    res = run(tmp_path, "scan", "--out", str(tmp_path / "o"), "--grid", "20", config=cfg)
    assert res.exit_code == 0
    assert "warning: skipped" in res.output
    d = json.loads((tmp_path / "o" / "points.json").read_text())
    assert d["skipped"]


def test_reduce_good_point(tmp_path):
    # branch +1 of this family has K_tilde > 0
    _scan(tmp_path, vals=(1.0, -1.0, -1.0, 2.0, 1.0), branch=1, out="g")
    res = run(tmp_path, "reduce", "--point", str(tmp_path / "g" / "points.json"), "--out", str(tmp_path / "g"))
    assert res.exit_code == 0, res.output
    setup = json.loads((tmp_path / "g" / "setup.json").read_text())
    assert setup["s2"] == 1


def test_reduce_missing_K_and_zero_kappa(tmp_path):
    d = _scan(tmp_path)
    pt = dict(d["points"][0])
    pt["K_disp"] = None
    (tmp_path / "noK.json").write_text(json.dumps(pt))
    res = run(tmp_path, "reduce", "--point", str(tmp_path / "noK.json"), "--out", str(tmp_path / "r"))
    assert res.exit_code == 1 and "--K" in res.output
    res = run(tmp_path, "reduce", "--point", str(tmp_path / "noK.json"), "--K", "0.5", "--out", str(tmp_path / "r"))
    assert res.exit_code == 0
    pt["kappa"] = 0.0
    (tmp_path / "k0.json").write_text(json.dumps(pt))
    res = run(tmp_path, "reduce", "--point", str(tmp_path / "k0.json"), "--K", "0.5", "--out", str(tmp_path / "r"))
    assert res.exit_code == 1 and "cubic" in res.output


def test_simulate_soliton(tmp_path):
    cfg = "s1 = -1\ns2 = 1\nL = 80.0\nM = 512\nt_end = 20.0\n[init]\ntype = \"solitary\"\nspeed = 0.5\n"
    res = run(tmp_path, "simulate", "--out", str(tmp_path / "o"), config=cfg)
    assert res.exit_code == 0, res.output
    summary = json.loads((tmp_path / "o" / "simulation.json").read_text())
    assert summary["flux_mean_drift"] < 1e-8
    rows = list(csv.reader(open(tmp_path / "o" / "trajectory.csv")))
    assert rows[0][:2] == ["t", "xi_0"] and len(rows[0]) == 513
    u_end = np.array(rows[-1][1:], float)
    x = np.arange(512) * 80 / 512
    exact = 2.25 / np.cosh(np.sqrt(0.1875) * (x - 40 + 10)) ** 2
    assert np.linalg.norm(u_end - exact) / np.linalg.norm(exact) < 1e-4


def test_simulate_bad_case_exit_3(tmp_path):
    cfg = "s1 = -1\ns2 = -1\nL = 40.0\nM = 128\nt_end = 50.0\n[init]\ntype = \"mode\"\nmode = 3\namplitude = 1e-6\n"
    res = run(tmp_path, "simulate", "--out", str(tmp_path / "o"), config=cfg)
    assert res.exit_code == 3
    assert json.loads((tmp_path / "o" / "simulation.json").read_text())["blowup_time"] < 50


def test_file_init_roundtrip_bit_exact(tmp_path):
    cfg = "s1 = -1\ns2 = 1\nL = 40.0\nM = 64\nt_end = 0.0\nseed = 3\n[init]\ntype = \"random\"\n"
    res = run(tmp_path, "simulate", "--out", str(tmp_path / "a"), config=cfg)
    assert res.exit_code == 0, res.output
    cfg2 = f"s1 = -1\ns2 = 1\nL = 40.0\nM = 64\nt_end = 0.0\n[init]\ntype = \"file\"\npath = \"{tmp_path / 'a' / 'init.csv'}\"\n"
    res = run(tmp_path, "simulate", "--out", str(tmp_path / "b"), config=cfg2, name="b.toml")
    assert res.exit_code == 0, res.output
    assert (tmp_path / "a" / "init.csv").read_bytes() == (tmp_path / "b" / "init.csv").read_bytes()
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() == (tmp_path / "b" / "trajectory.csv").read_bytes()


def test_json_config_accepted(tmp_path):
    cfg = json.dumps({"omega": [-1.0], "k": [0.0], "model": {"name": "shallow_water", "g": 1.0}})
    res = run(tmp_path, "characteristics", "--out", str(tmp_path / "o"), config=cfg, name="c.json")
    assert res.exit_code == 0, res.output
