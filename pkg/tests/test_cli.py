import csv
import json

import numpy as np
import pytest

from greenstream import cli
from greenstream import experiment as ex
from greenstream.config import DEFAULTS, ConfigError, load, validate


def _rates_csv(path, rate_bps=1e6, T=20):
    lines = ["user_id,slot,rate_bps"] + [f"1,{t},{rate_bps}" for t in range(1, T + 1)]
    path.write_text("\n".join(lines) + "\n")
    return path


def _tiny_cfg(tmp_path, l_req=2.0, rate_bps=1e6):
    _rates_csv(tmp_path / "r.csv", rate_bps)
    cfg = {"scenario": {"rates_csv": "r.csv", "T_s": 20},
           "video": {"ladder_bps": [250000, 500000]}, "allocator": "pgs", "l_req": l_req}
    p = tmp_path / "tiny.json"
    p.write_text(json.dumps(cfg))
    return p


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# -- config -----------------------------------------------------------------------

def test_defaults_are_valid():
    validate(DEFAULTS)


def test_unknown_key_is_named(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"radio": {"bandwith": 5e6}}')
    with pytest.raises(ConfigError, match="bandwith"):
        load(p)
    assert cli.main(["run", "-c", str(p)]) == cli.EXIT_INVALID


def test_precedence(tmp_path, monkeypatch):
    p = tmp_path / "c.json"
    p.write_text('{"seed": 4, "output_dir": "from_file", "scenario": {"n_vehicles": 7}}')
    cfg = load(p)
    assert cfg["seed"] == 4 and cfg["scenario"]["n_vehicles"] == 7
    assert cfg["scenario"]["n_bs"] == 3  # untouched default
    monkeypatch.setenv("GREENSTREAM_OUTPUT_DIR", "from_env")
    assert load(p)["output_dir"] == "from_env"
    cfg = load(p, {"output_dir": "from_flag", "seed": 9})
    assert cfg["output_dir"] == "from_flag" and cfg["seed"] == 9


def test_override_is_validated():
    with pytest.raises(ConfigError):
        load(None, {"allocator": "pf"})
    with pytest.raises(ConfigError):
        load(None, {"scenario.n_vehicles": 0})


def test_relative_input_paths_follow_the_config_file(tmp_path):
    cfg = load(_tiny_cfg(tmp_path))
    assert cfg["scenario"]["rates_csv"] == str(tmp_path / "r.csv")


# -- run ---------------------------------------------------------------------------

def test_run_es_smoke(tmp_path):
    cfg = load(None, {"allocator": "es", "scenario.n_vehicles": 5, "output_dir": str(tmp_path)})
    row = ex.run(cfg)
    for f in ("total_stall_s", "mean_power_w", "mean_power_present_w", "mean_power_sleep_w",
              "achieved_avg_level", "objective"):
        assert np.isfinite(row[f])
    assert row["solve_status"] == "ok" and row["lp_bound"] is None
    files = {p.name for p in tmp_path.iterdir()}
    assert {"power_es_n5_seed0.csv", "solution_es_n5_seed0_x.csv",
            "solution_es_n5_seed0_levels.csv", "buffer_es_n5_seed0.csv"} <= files


def test_run_pgs_tiny_instance(tmp_path):
    cfg = load(_tiny_cfg(tmp_path), {"output_dir": str(tmp_path / "out")})
    row = ex.run(cfg)
    assert row["objective"] == pytest.approx(10.0)
    assert row["solve_status"] == "optimal" and row["total_stall_s"] == 0


def test_run_cli_writes_summary_and_exit_codes(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", "-c", str(_tiny_cfg(tmp_path)), "-o", str(out)]) == cli.EXIT_OK
    (row,) = _read(out / "summary.csv")
    assert row["objective"] == "10" and "wall_time_s" not in row
    assert "wall_time_s" in _read(out / "timing.csv")[0]
    # 0.4 Mbit/s cannot carry level 2 throughout
    bad = tmp_path / "b"
    bad.mkdir()
    code = cli.main(["run", "-c", str(_tiny_cfg(bad, rate_bps=4e5)), "-o", str(bad / "out")])
    assert code == cli.EXIT_INFEASIBLE
    (row,) = _read(bad / "out" / "summary.csv")
    assert row["solve_status"] == "infeasible" and row["mean_power_w"] == "nan"


def test_internal_error_exit_code(tmp_path, monkeypatch):
    def boom(cfg, args):
        raise RuntimeError("boom")
    monkeypatch.setitem(cli.COMMANDS, "run", boom)
    assert cli.main(["run", "-o", str(tmp_path)]) == cli.EXIT_INTERNAL


def test_matched_l_req_is_on_the_grid(tmp_path):
    cfg = load(None, {"scenario.n_vehicles": 4, "scenario.T_s": 120, "output_dir": str(tmp_path)})
    row = ex.run(cfg, write=False)
    assert row["l_req"] * 4 == int(row["l_req"] * 4)
    es = ex.run(dict(cfg, allocator="es"), write=False)
    rp = ex.run(dict(cfg, allocator="rp"), write=False)
    assert row["l_req"] <= max(es["achieved_avg_level"], rp["achieved_avg_level"]) + 1e-12
    assert row["achieved_avg_level"] >= row["l_req"] - 1e-12


# -- sweep ------------------------------------------------------------------------

def test_sweep_counts_and_order():
    cfg = load(None, {"scenario.T_s": 120})
    rows = ex.sweep(cfg, {"n_vehicles": [5, 10]}, seeds=[1, 2], allocators=["es", "rp"])
    assert len(rows) == 8
    assert [(r["n_vehicles"], r["seed"], r["allocator"]) for r in rows[:4]] == [
        (5, 1, "es"), (5, 1, "rp"), (5, 2, "es"), (5, 2, "rp")]


def test_sweep_empty_grid_is_an_error(tmp_path):
    with pytest.raises(ConfigError):
        ex.sweep(load(None), {"n_vehicles": []}, seeds=[1], allocators=["es"])
    with pytest.raises(ConfigError):
        ex.sweep(load(None), {}, seeds=[1], allocators=["es"])
    assert cli.main(["sweep", "--vary", "n_vehicles=", "-o", str(tmp_path)]) == cli.EXIT_INVALID


def test_l_req_sweep_power_nondecreasing(tmp_path):
    cfg = load(None, {"scenario.n_vehicles": 4, "scenario.T_s": 120})
    rows = ex.sweep(cfg, {"l_req": [1.0, 2.0, 3.0, 4.0]}, seeds=[0], allocators=["pgs"])
    power = [r["mean_power_w"] for r in rows]
    assert all(np.isfinite(power))
    assert all(b >= a - 1e-9 for a, b in zip(power, power[1:]))


def test_sweep_cli_parallel_matches_serial(tmp_path):
    args = ["sweep", "--vary", "n_vehicles=2,3", "--seeds", "1,2", "--allocators", "es,pgs",
            "--set", "scenario.T_s=60"]
    assert cli.main(args + ["-o", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["-o", str(tmp_path / "b"), "-j", "2"]) == 0
    a = (tmp_path / "a" / "sweep_summary.csv").read_bytes()
    assert a == (tmp_path / "b" / "sweep_summary.csv").read_bytes()
    assert len(a.decode().splitlines()) == 9


# -- verify, generate, export ---------------------------------------------------------

def _dump(tmp_path):
    cfg_path = _tiny_cfg(tmp_path, l_req=1.0)
    out = tmp_path / "out"
    assert cli.main(["run", "-c", str(cfg_path), "-o", str(out)]) == 0
    return cfg_path, out / "solution_pgs_n1_seed0_x.csv", out / "solution_pgs_n1_seed0_levels.csv"


def test_verify_accepts_solver_dump(tmp_path, capsys):
    cfg, x, lv = _dump(tmp_path)
    assert cli.main(["verify", "-c", str(cfg), "--x", str(x), "--levels", str(lv)]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 5 and "FAIL" not in out


def test_verify_flags_capacity_violation(tmp_path):
    cfg = load(_tiny_cfg(tmp_path, l_req=2.0))
    world = ex.build_world(cfg)
    sol = ex.solve_pgs(world, 2.0, cfg)
    x = sol.x.copy()
    t = int(np.flatnonzero(x[0] >= 1 - 1e-9)[0])  # a saturated slot
    x[0, t] += 0.1
    rep = ex.verify_solution(world, x, sol.plan, 2.0)
    assert not rep["C3"][0] and rep["C1"][0]


def test_verify_flags_level_raised_beyond_delivery(tmp_path, capsys):
    cfg, x, lv = _dump(tmp_path)
    text = lv.read_text().replace("1,2,1", "1,2,2")
    lv.write_text(text)
    assert cli.main(["verify", "-c", str(cfg), "--x", str(x), "--levels", str(lv)]) == cli.EXIT_INVALID
    out = capsys.readouterr().out
    assert "C1: FAIL" in out and "stall: FAIL" in out


def test_verify_dimension_mismatch(tmp_path):
    cfg, x, lv = _dump(tmp_path)
    x.write_text(x.read_text() + "7,3,0.5\n")
    assert cli.main(["verify", "-c", str(cfg), "--x", str(x), "--levels", str(lv)]) == cli.EXIT_INVALID


def test_generate_then_run_from_rate_table(tmp_path):
    out = tmp_path / "gen"
    assert cli.main(["generate", "-N", "3", "--set", "scenario.T_s=60", "-o", str(out)]) == 0
    assert (out / "traces.csv").exists()
    direct = ex.run(load(None, {"scenario.n_vehicles": 3, "scenario.T_s": 60,
                                "allocator": "es"}), write=False)
    cfg = load(None, {"scenario.rates_csv": str(out / "rates.csv"), "scenario.T_s": 60,
                      "allocator": "es"})
    again = ex.run(cfg, write=False)
    assert again["objective"] == pytest.approx(direct["objective"], rel=1e-8)
    from_traces = load(None, {"scenario.trace_csv": str(out / "traces.csv"), "scenario.T_s": 60,
                              "allocator": "es"})
    assert ex.run(from_traces, write=False)["objective"] == pytest.approx(direct["objective"], rel=1e-8)


def test_export_mps(tmp_path):
    assert cli.main(["export-mps", "-c", str(_tiny_cfg(tmp_path)), "-o", str(tmp_path / "m")]) == 0
    text = (tmp_path / "m" / "pgs.mps").read_text()
    assert text.startswith("NAME") and text.rstrip().endswith("ENDATA")


def test_fmt_nine_significant_digits():
    assert ex.fmt(1 / 3) == "0.333333333"
    assert ex.fmt(None) == "" and ex.fmt(float("nan")) == "nan" and ex.fmt(3) == "3"
    assert ex.fmt(-0.0) == "0"
