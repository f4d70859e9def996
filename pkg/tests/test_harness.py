import json
import os

import numpy as np
import pytest

from thinvolt.fields import Grid3
from thinvolt.harness import (
    ConfigError,
    RunConfig,
    check_conditions,
    cli_main,
    saddle_probe,
    solve3d_alternating,
)
from thinvolt.material import Material
from thinvolt.recovery import SWEEP_COLUMNS, SweepRow


def _write_config(path, extra=None):
    data = {
        "grid": {"n1": 9, "n2": 9, "n3": 5},
        "eps": [0.25, 0.125, 0.0625],
        "solver": {"poisson_tol": 1e-10, "grad_tol": 1e-7, "max_iters": 50},
    }
    if extra:
        data.update(extra)
    with open(path, "w") as fh:
        json.dump(data, fh)
    return str(path)


# ---------------------------------------------------------------------------
# configuration


def test_config_defaults():
    cfg = RunConfig({})
    assert (cfg.n1, cfg.n2, cfg.n3) == (17, 17, 9)
    assert cfg.eps_list == [0.25, 0.125, 0.0625, 0.03125]
    assert cfg.material.elastic.q_w == 26.0
    assert cfg.material.hyper.alpha_h == 10.5
    assert np.max(np.abs(cfg.material.permittivity.k - np.diag([1.0, 1.0, 4.0]))) == 0.0
    assert cfg.material.charge.mode == "cosine"
    assert cfg.mode is None and cfg.seed == 0
    assert cfg.isometry["kind"] == "linear"
    grid = cfg.grid3()
    assert grid.shape == (17, 17, 9)


@pytest.mark.parametrize(
    "data",
    [
        {"unknown_section": {}},
        {"grid": {"n1": 9, "bogus": 1}},
        {"grid": {"n1": 2}},
        {"eps": []},
        {"eps": "0.25"},
        {"eps": [0.25, 0.5]},
        {"eps": [0.25, -0.1]},
        {"elastic": 5},
        {"elastic": {"q_w": 8.0}},
        {"charge": {"mode": "sawtooth"}},
        {"prestrain": {"B0": [[0, 1, 0], [0, 0, 0], [0, 0, 0]]}},
        {"permittivity": {"k": [[1, 0, 0], [0, -1, 0], [0, 0, 1]]}},
        {"isometry": {"kind": "spiral"}},
        {"solver": {"poisson_tol": -1.0}},
        {"mode": "explode"},
        {"seed": -3},
        {"output": {"dir": 7}},
    ],
)
def test_config_rejections(data):
    with pytest.raises(ConfigError):
        RunConfig(data)


def test_config_from_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.from_file(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        RunConfig.from_file(str(bad))


def test_theta_profiles():
    grid2 = RunConfig({}).grid2()
    cfg = RunConfig({"isometry": {"kind": "constant", "offset": 0.3}})
    assert np.all(cfg.theta_profile(grid2) == 0.3)
    cfg = RunConfig({"isometry": {"kind": "linear", "offset": 0.1, "slope": 2.0}})
    assert np.max(np.abs(cfg.theta_profile(grid2) - (0.1 + 2.0 * grid2.x1))) < 1e-15
    cfg = RunConfig({"isometry": {"kind": "cosine", "amplitude": 0.5}})
    want = 0.5 * np.cos(np.pi * grid2.x1)
    assert np.max(np.abs(cfg.theta_profile(grid2) - want)) < 1e-15


def test_recovery_inputs_pick_up_prestrain_mean():
    cfg = RunConfig({"prestrain": {"B0": [[0.2, 0, 0], [0, 0.1, 0], [0, 0, 0]]}})
    inputs = cfg.recovery_inputs(cfg.grid2())
    assert np.max(np.abs(inputs.g_matrix - np.diag([0.2, 0.1]))) < 1e-14


# ---------------------------------------------------------------------------
# certification helpers


def _synthetic_rows(eps_list, m0=1.0 / 9.0, e0=0.01, mech_rate=0.01, elec_rate=0.001):
    rows = []
    for eps in eps_list:
        m = m0 + mech_rate * eps
        e = e0 + elec_rate * eps
        row = SweepRow(
            eps=eps,
            Mel_scaled=m,
            hyper=0.0,
            M_eps=m,
            E_eps=e,
            F_eps=m - e,
            M0=m0,
            E0=e0,
            F0=m0 - e0,
            d2_ratio=0.1,
            pW_norm=0.2,
            min_det=0.9,
            pg0_res=1e-12,
        )
        row.ok = True
        rows.append(row)
    return rows


def test_check_conditions_pass_and_structure():
    rows = _synthetic_rows([0.25, 0.125, 0.0625])
    report = check_conditions(rows)
    assert report["pass"]
    for name in ("mech_lower", "mech_recovery", "total_recovery", "elec_lower"):
        entry = report[name]
        assert entry["pass"] and entry["trend_ok"]
        assert len(entry["values"]) == 3
        assert entry["final"] <= entry["tol"] or entry["final"] <= 0.5 * entry["values"][-2]


def test_check_conditions_negative_control():
    rows = _synthetic_rows([0.25, 0.125, 0.0625])
    # shifting the mechanical target up by 1 breaks the lower-bound margin
    report = check_conditions(rows, targets=(rows[0].M0 + 1.0, rows[0].E0, rows[0].F0))
    assert not report["mech_lower"]["pass"]
    assert not report["pass"]


def test_check_conditions_needs_three_rows():
    with pytest.raises(ValueError):
        check_conditions(_synthetic_rows([0.25, 0.125]))
    bad = _synthetic_rows([0.25, 0.125, 0.0625])
    for row in bad:
        row.ok = False
    with pytest.raises(ValueError):
        check_conditions(bad)


# ---------------------------------------------------------------------------
# saddle probes


def test_saddle_probe_quadratic_model():
    # exact saddle: minimum in y, maximum in phi
    a = np.full((4, 3), 0.7)
    b = np.zeros((5, 5))

    def F(y, phi):
        return float(np.sum((y - a) ** 2) - np.sum((phi - b) ** 2))

    probes = saddle_probe(F, (a, b), n_probes=20, radius=1e-3)
    assert probes["phi_side"] <= 0.0
    assert probes["y_side"] <= 0.0
    # a displaced deformation admits descent directions
    probes = saddle_probe(F, (a + 0.01, b), n_probes=40, radius=1e-3)
    assert probes["y_side"] > 1e-6
    one_sided = saddle_probe(F, (a, b), n_probes=5, sides=("phi",))
    assert one_sided["y_side"] is None
    with pytest.raises(ValueError):
        saddle_probe(lambda y, p: np.inf, (a, b), n_probes=1)


def test_solve3d_alternating_bookkeeping():
    from thinvolt.elastic3d import flat_deformation

    grid = Grid3(5, 5, 4)
    eps = 0.25
    mat = Material()
    y, phi, history, converged = solve3d_alternating(
        grid, eps, mat, flat_deformation(grid, eps), poisson_tol=1e-11, grad_tol=1e-9, max_iters=4
    )
    assert history.shape[1] == 6
    assert 1 <= history.shape[0] <= 4
    assert np.all(np.isfinite(history))
    for r in range(history.shape[0]):
        # deformation step never increases the frozen-potential energy
        assert history[r, 1] <= history[r, 0] + 1e-12
        assert history[r, 4] <= 1e-8  # weak-form residual of each solve
        assert history[r, 5] <= 1e-8  # phi-side probe at each solve
        if r > 0:
            assert history[r, 0] >= history[r - 1, 1] - 1e-9
    assert phi.shape == grid.shape
    with pytest.raises(ValueError):
        bad = flat_deformation(grid, eps)
        bad[..., 2] *= -1.0
        solve3d_alternating(grid, eps, mat, bad)


# ---------------------------------------------------------------------------
# CLI end to end


def test_cli_config_errors(tmp_path):
    missing = str(tmp_path / "none.json")
    assert cli_main(["sweep", "--config", missing]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"grid": {"n1": "lots"}}')
    assert cli_main(["sweep", "--config", str(bad)]) == 2
    cfgpath = _write_config(tmp_path / "ok.json")
    assert cli_main(["sweep", "--config", cfgpath, "--eps", "0.1,0.2"]) == 2
    assert cli_main(["sweep", "--config", cfgpath, "--seed", "-1"]) == 2
    assert cli_main(["bogus-command", "--config", cfgpath]) == 2


def test_cli_relax(tmp_path):
    cfgpath = _write_config(tmp_path / "cfg.json")
    out = str(tmp_path / "out")
    assert cli_main(["relax", "--config", cfgpath, "--out", out]) == 0
    payload = json.loads((tmp_path / "out" / "relax.json").read_text())
    assert payload["pass"]
    assert payload["q2_closed_form_dev"] <= 1e-10
    assert np.array(payload["qbar2_quadratic"]).shape == (4, 4)


def test_cli_sweep_writes_artifacts_and_is_deterministic(tmp_path):
    cfgpath = _write_config(tmp_path / "cfg.json")
    out_a = str(tmp_path / "a")
    out_b = str(tmp_path / "b")
    code_a = cli_main(["sweep", "--config", cfgpath, "--out", out_a])
    code_b = cli_main(["sweep", "--config", cfgpath, "--out", out_b])
    assert code_a == code_b
    csv_a = (tmp_path / "a" / "sweep.csv").read_bytes()
    csv_b = (tmp_path / "b" / "sweep.csv").read_bytes()
    assert csv_a == csv_b
    header = csv_a.decode().splitlines()[0].split(",")
    assert header == SWEEP_COLUMNS
    assert len(csv_a.decode().splitlines()) == 4  # header + one row per eps
    assert (tmp_path / "a" / "sweep.svg").exists()
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["mode"] == "sweep" and "pass" in summary


def test_cli_sweep_threaded_matches_serial(tmp_path, monkeypatch):
    cfgpath = _write_config(tmp_path / "cfg.json")
    out_serial = str(tmp_path / "serial")
    out_threaded = str(tmp_path / "threaded")
    monkeypatch.delenv("THINVOLT_THREADS", raising=False)
    cli_main(["sweep", "--config", cfgpath, "--out", out_serial])
    monkeypatch.setenv("THINVOLT_THREADS", "3")
    cli_main(["sweep", "--config", cfgpath, "--out", out_threaded])
    assert (tmp_path / "serial" / "sweep.csv").read_bytes() == (
        tmp_path / "threaded" / "sweep.csv"
    ).read_bytes()


def test_cli_sweep_too_few_rows_fails(tmp_path):
    cfgpath = _write_config(tmp_path / "cfg.json", extra={"eps": [0.25, 0.125]})
    out = str(tmp_path / "out")
    assert cli_main(["sweep", "--config", cfgpath, "--out", out]) == 1
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert not summary["pass"] and "error" in summary


def test_cli_check_roundtrip(tmp_path):
    out = tmp_path / "out"
    out.mkdir()
    cfgpath = _write_config(tmp_path / "cfg.json")
    rows = _synthetic_rows([0.25, 0.125, 0.0625])
    lines = [",".join(SWEEP_COLUMNS)]
    for row in rows:
        lines.append(",".join("%.17g" % float(v) for v in row.values()))
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    assert cli_main(["check", "--config", cfgpath, "--out", str(out)]) == 0
    payload = json.loads((out / "check.json").read_text())
    assert payload["pass"]
    # a sweep stuck a constant distance below the target must fail
    bad = _synthetic_rows([0.25, 0.125, 0.0625])
    for row in bad:
        row.M_eps = row.M0 - 1.0
        row.F_eps = row.M_eps - row.E_eps
    lines = [",".join(SWEEP_COLUMNS)]
    for row in bad:
        lines.append(",".join("%.17g" % float(v) for v in row.values()))
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    assert cli_main(["check", "--config", cfgpath, "--out", str(out)]) == 1
    # missing and malformed tables are configuration errors
    empty = tmp_path / "empty"
    empty.mkdir()
    assert cli_main(["check", "--config", cfgpath, "--out", str(empty)]) == 2
    (out / "sweep.csv").write_text("a,b\n1,2\n")
    assert cli_main(["check", "--config", cfgpath, "--out", str(out)]) == 2


def test_cli_solve2d(tmp_path):
    cfgpath = _write_config(
        tmp_path / "cfg.json",
        extra={
            "grid": {"n1": 9, "n2": 9, "n3": 5, "n1_2d": 33, "n2_2d": 7},
            "isometry": {"kind": "linear", "slope": 0.3},
            "solver": {"poisson_tol": 1e-12, "grad_tol": 1e-8, "max_iters": 200},
        },
    )
    out = str(tmp_path / "out")
    assert cli_main(["solve2d", "--config", cfgpath, "--out", out]) == 0
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["pass"] and summary["converged"]
    assert summary["virial"] <= 1e-7
    assert summary["phi_probe"] <= 1e-10
    assert summary["y_probe"] <= 1e-8
    hist = (tmp_path / "out" / "solve2d_history.csv").read_text().splitlines()
    assert hist[0] == "F_after_phi,F_after_theta,grad_norm,step"
    assert len(hist) >= 2


def test_cli_solve3d(tmp_path):
    cfgpath = _write_config(
        tmp_path / "cfg.json",
        extra={
            "grid": {"n1": 5, "n2": 5, "n3": 4},
            "eps": [0.25],
            "solver": {"poisson_tol": 1e-11, "grad_tol": 1e-7, "max_iters": 3},
        },
    )
    out = str(tmp_path / "out")
    assert cli_main(["solve3d", "--config", cfgpath, "--out", out]) == 0
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["pass"]
    assert summary["worst_pg0"] <= 1e-8
    assert summary["worst_phi_probe"] <= 1e-8
    hist = (tmp_path / "out" / "solve3d_history.csv").read_text().splitlines()
    assert hist[0] == "F_after_phi,F_after_y,grad_norm,step,pg0_res,phi_probe"


def test_cli_eps_override(tmp_path):
    cfgpath = _write_config(tmp_path / "cfg.json")
    out = str(tmp_path / "out")
    cli_main(["sweep", "--config", cfgpath, "--out", out, "--eps", "0.5,0.25,0.125,0.0625"])
    lines = (tmp_path / "out" / "sweep.csv").read_text().splitlines()
    assert len(lines) == 5
    assert lines[1].startswith("0.5")
