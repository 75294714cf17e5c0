"""Experiment pipeline: scenario -> rates -> allocator -> playback -> power.

``run`` produces one summary row per configuration; ``sweep`` maps it over a
parameter grid and a list of seeds, serially or in worker processes, and
always returns rows in grid order.
"""
import copy
import csv
import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baselines import BaselineConfig, allocate
from .config import ConfigError, set_path, validate
from .playback import verify_plan
from .power import PowerModel, energy_report, load_matrix
from .radio import RadioParams, RateMatrix, build_rate_matrix, read_rate_table
from .scenario import (AssociationMap, HighwayParams, Scenario, Topology, associate,
                       generate_highway_scenario, load_scenario)
from .streaming import QualityLadder, QualityPlan, SegmentSchedule
from .pgs import (PgsInstance, build_model, heuristic_round, solve_exact,
                  solve_lp_relaxation)
from .pgs.solver import PgsSolution, infeasibility_note

SUMMARY_FIELDS = (
    "allocator", "n_vehicles", "seed", "l_req", "mean_power_w", "mean_power_present_w",
    "mean_power_sleep_w", "zero_load_slots", "achieved_avg_level", "total_stall_s",
    "mean_startup_s", "objective", "lp_bound", "solve_status",
)
TIMING_FIELDS = ("allocator", "n_vehicles", "seed", "l_req", "wall_time_s")
L_REQ_STEP = 0.25

# sweep shorthands for the usual grid axes
AXES = {"n_vehicles": "scenario.n_vehicles", "N": "scenario.n_vehicles", "l_req": "l_req"}


@dataclass
class World:
    """Everything an allocator needs, independent of the allocator."""

    rates: RateMatrix
    assoc: AssociationMap
    schedule: SegmentSchedule
    ladder: QualityLadder
    scenario: Scenario | None = None

    @property
    def n_users(self) -> int:
        return self.rates.shape[0]


def window_slots(cfg) -> int:
    sc = cfg["scenario"]
    T = sc["T_s"] / sc["tau_s"]
    if abs(T - round(T)) > 1e-9:
        raise ConfigError("T_s must be a whole number of slots")
    return int(round(T))


def radio_params(cfg) -> RadioParams:
    return RadioParams(**cfg["radio"])


def power_model(cfg, sleep=None) -> PowerModel:
    p = dict(cfg["power"])
    if sleep is not None:
        p["sleep_enabled"] = sleep
    return PowerModel(**p)


def highway_params(cfg) -> HighwayParams:
    sc = cfg["scenario"]
    return HighwayParams(
        n_vehicles=sc["n_vehicles"], n_bs=sc["n_bs"], bs_spacing=sc["bs_spacing_m"],
        bs_perp_offset=sc["bs_perp_offset_m"], arrival=sc["arrival"],
        arrival_rate=sc["arrival_rate"], speed=sc["speed_mps"], speed_jitter=sc["speed_jitter"],
        T_s=sc["T_s"], tau=sc["tau_s"], seed=cfg["seed"],
    )


def build_scenario(cfg) -> Scenario:
    sc = cfg["scenario"]
    if sc["trace_csv"] is None:
        return generate_highway_scenario(highway_params(cfg))
    road = sc["road_length_m"] or sc["speed_mps"] * (1 + sc["speed_jitter"]) * sc["T_s"]
    topo = Topology.centered(sc["n_bs"], sc["bs_spacing_m"], road, sc["bs_perp_offset_m"])
    return load_scenario(sc["trace_csv"], topo, window_slots(cfg), sc["tau_s"])


def build_world(cfg) -> World:
    sc = cfg["scenario"]
    ladder = QualityLadder(tuple(cfg["video"]["ladder_bps"]))
    tau_seg = cfg["video"]["tau_seg_s"]
    if sc["rates_csv"] is not None:
        rates, assoc = read_rate_table(sc["rates_csv"], window_slots(cfg), sc["tau_s"])
        sched = SegmentSchedule.from_presence(rates.present, sc["tau_s"], tau_seg)
        return World(rates, assoc, sched, ladder)
    scen = build_scenario(cfg)
    assoc = associate(scen)
    rates = build_rate_matrix(scen, radio_params(cfg), assoc)
    return World(rates, assoc, SegmentSchedule.from_scenario(scen, tau_seg), ladder, scen)


def run_baseline(world: World, kind: str):
    cfg = BaselineConfig(kind, world.ladder, world.schedule)
    return allocate(kind, world.rates, world.assoc, cfg)


def solve_pgs(world: World, l_req: float, cfg) -> PgsSolution:
    inst = PgsInstance(world.rates, world.assoc, world.ladder, world.schedule, l_req, cfg["b_max_bits"])
    model = build_model(inst)
    sv = cfg["solver"]
    mode = sv["mode"]
    if mode == "auto":
        mode = "exact" if world.n_users <= sv["exact_max_users"] else "heuristic"
    if mode == "exact":
        return solve_exact(model, time_limit_s=sv["time_limit_s"], max_nodes=sv["max_nodes"])
    t0 = time.perf_counter()
    relax = solve_lp_relaxation(model, tighten=True)
    if relax.status != "optimal":
        return PgsSolution(None, None, math.inf, "infeasible", math.inf,
                           {"wall_time_s": time.perf_counter() - t0}, infeasibility_note(inst))
    sol = heuristic_round(model, relax.values)
    sol.lp_bound = relax.bound
    sol.stats["wall_time_s"] = time.perf_counter() - t0
    return sol


def floor_to_grid(level: float, step: float = L_REQ_STEP) -> float:
    return math.floor(level / step + 1e-9) * step


def matched_l_req(world: World, cfg):
    """Highest grid value at or below the baselines' achieved mean level that PGS can meet.

    Returns ``(l_req, solution)``; the solution is infeasible only when
    l_req = 1 is.
    """
    achieved = []
    for kind in ("es", "rp"):
        _, _, rep = run_baseline(world, kind)
        if np.isfinite(rep.mean_level):
            achieved.append(rep.mean_level)
    target = max(achieved) if achieved else 1.0
    l_req = min(max(floor_to_grid(target), 1.0), float(world.ladder.q_max))
    while True:
        sol = solve_pgs(world, l_req, cfg)
        if sol.feasible or l_req <= 1.0:
            return l_req, sol
        l_req = max(1.0, l_req - L_REQ_STEP)


def _tag(cfg, n_users) -> str:
    return f"{cfg['allocator']}_n{n_users}_seed{cfg['seed']}"


def write_solution(x, plan: QualityPlan, rates: RateMatrix, prefix) -> tuple[Path, Path]:
    """Dump an allocation as ``<prefix>_x.csv`` and ``<prefix>_levels.csv``."""
    px, pl = Path(f"{prefix}_x.csv"), Path(f"{prefix}_levels.csv")
    with open(px, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["user_id", "slot", "x"])
        for i, uid in enumerate(rates.user_ids):
            for t in np.flatnonzero(rates.present[i]):
                w.writerow([uid, t + 1, f"{x[i, t]:.17g}"])
    with open(pl, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["user_id", "segment", "level"])
        for uid, lv in zip(rates.user_ids, plan.levels):
            for s, l in enumerate(lv, start=1):
                w.writerow([uid, s, int(l)])
    return px, pl


def run(cfg, write: bool = True) -> dict:
    """One allocator on one scenario; returns the summary row (with ``wall_time_s``)."""
    validate(cfg)
    t0 = time.perf_counter()
    world = build_world(cfg)
    alloc = cfg["allocator"]
    row = {"allocator": alloc, "n_vehicles": world.n_users, "seed": cfg["seed"], "l_req": None,
           "lp_bound": None}
    x = plan = None
    if alloc in ("es", "rp"):
        x, plan, _ = run_baseline(world, alloc)
        row["solve_status"] = "ok"
    else:
        if cfg["l_req"] == "match":
            l_req, sol = matched_l_req(world, cfg)
        else:
            l_req = float(cfg["l_req"])
            sol = solve_pgs(world, l_req, cfg)
        row["l_req"] = l_req
        row["lp_bound"] = sol.lp_bound
        row["solve_status"] = sol.status
        if sol.feasible:
            x, plan = sol.x, sol.plan

    if x is None:
        row.update(mean_power_w=math.nan, mean_power_present_w=math.nan, mean_power_sleep_w=math.nan,
                   zero_load_slots=None, achieved_avg_level=math.nan, total_stall_s=math.nan,
                   mean_startup_s=math.nan, objective=math.nan)
    else:
        rep = verify_plan(x, world.rates, plan, world.ladder, world.schedule,
                          record_buffer=write)
        off = energy_report(x, world.assoc, power_model(cfg, sleep=False), world.rates.tau)
        on = energy_report(x, world.assoc, power_model(cfg, sleep=True), world.rates.tau)
        row.update(mean_power_w=off.mean_power_w, mean_power_present_w=off.mean_power_present_w,
                   mean_power_sleep_w=on.mean_power_w, zero_load_slots=off.zero_load_slots,
                   achieved_avg_level=rep.mean_level, total_stall_s=rep.total_stall_s,
                   mean_startup_s=rep.mean_startup_s, objective=float(x.sum()))
        if write:
            out = Path(cfg["output_dir"])
            out.mkdir(parents=True, exist_ok=True)
            tag = _tag(cfg, world.n_users)
            trace = on if cfg["power"]["sleep_enabled"] else off
            trace.write_csv(out / f"power_{tag}.csv")
            write_solution(x, plan, world.rates, out / f"solution_{tag}")
            rep.write_buffer_csv(out / f"buffer_{tag}.csv")
    row["wall_time_s"] = time.perf_counter() - t0
    return row


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if v == 0:
            return "0"
        return f"{v:.9g}"
    return str(v)


def write_rows(rows, path, fields=SUMMARY_FIELDS) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            w.writerow([fmt(r.get(f)) for f in fields])
    return path


def expand_grid(cfg, vary: dict, seeds, allocators) -> list[dict]:
    """One config per (point, seed, allocator), in that nesting order."""
    if not vary or any(len(v) == 0 for v in vary.values()):
        raise ConfigError("sweep grid is empty")
    if not seeds or not allocators:
        raise ConfigError("sweep needs at least one seed and one allocator")
    keys = [AXES.get(k, k) for k in vary]
    out = []
    for point in itertools.product(*vary.values()):
        for seed in seeds:
            for alloc in allocators:
                c = copy.deepcopy(cfg)
                for k, v in zip(keys, point):
                    set_path(c, k, v)
                c["seed"] = int(seed)
                c["allocator"] = alloc
                validate(c)
                out.append(c)
    return out


def _run_quiet(cfg):
    return run(cfg, write=False)


def sweep(cfg, vary: dict, seeds, allocators, jobs: int = 1) -> list[dict]:
    configs = expand_grid(cfg, vary, seeds, allocators)
    if jobs <= 1:
        return [_run_quiet(c) for c in configs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_quiet, configs))


# -- independent checker for solution dumps ------------------------------------

def read_solution(world: World, x_path, levels_path):
    idx = {uid: i for i, uid in enumerate(world.rates.user_ids)}
    n, T = world.rates.shape
    x = np.zeros((n, T))
    with open(x_path, newline="") as fh:
        for rec in csv.DictReader(fh):
            uid, slot = int(rec["user_id"]), int(rec["slot"])
            if uid not in idx or not 1 <= slot <= T:
                raise ValueError(f"{x_path}: user {uid} slot {slot} not in the configured scenario")
            x[idx[uid], slot - 1] = float(rec["x"])
    levels = [[] for _ in range(n)]
    with open(levels_path, newline="") as fh:
        for rec in csv.DictReader(fh):
            uid = int(rec["user_id"])
            if uid not in idx:
                raise ValueError(f"{levels_path}: user {uid} not in the configured scenario")
            levels[idx[uid]].append((int(rec["segment"]), int(rec["level"])))
    lv = []
    for i, recs in enumerate(levels):
        recs.sort()
        if [s for s, _ in recs] != list(range(1, world.schedule.n_segments[i] + 1)):
            raise ValueError(f"user {world.rates.user_ids[i]}: expected segments "
                             f"1..{world.schedule.n_segments[i]} in the level dump")
        lv.append(np.array([l for _, l in recs], dtype=int))
    return x, QualityPlan(lv)


def verify_solution(world: World, x, plan: QualityPlan, l_req=None, tol: float = 1e-9,
                    tol_bits: float = 1.0) -> dict:
    """Re-check every constraint family; returns ``{family: (ok, detail)}``."""
    rates, sched, ladder = world.rates, world.schedule, world.ladder
    plan.check(ladder, sched)
    f = np.asarray(ladder.bitrates)
    out = {}

    bad = (x < -tol) | (x > 1 + tol) | (~rates.present & (np.abs(x) > tol))
    out["bounds"] = (not bad.any(), f"{int(bad.sum())} entries outside [0, 1] or on absent slots")

    worst, where = 0.0, ""
    for i in range(world.n_users):
        if sched.n_segments[i] == 0:
            continue
        got = np.cumsum(x[i] * rates.rates[i] * rates.tau)
        need = np.cumsum(sched.tau_seg * f[plan.levels[i] - 1])
        short = need - got[sched.deadlines(i) - 1]
        s = int(np.argmax(short))
        if short[s] > worst:
            worst, where = float(short[s]), f" (user {rates.user_ids[i]}, segment {s + 1})"
    out["C1"] = (worst <= tol_bits, f"max shortfall {worst:.6g} bits{where}")

    if l_req is None:
        out["C2"] = (True, "skipped: no numeric l_req")
    else:
        gaps = [l_req * S - lv.sum() for S, lv in zip(sched.n_segments, plan.levels)]
        g = max(gaps, default=0.0)
        out["C2"] = (g <= 1e-9, f"max level-sum deficit {max(g, 0.0):.6g}")

    load = load_matrix(x, world.assoc)
    over = load.max(initial=0.0) - 1.0
    out["C3"] = (over <= tol, f"max BS load {load.max(initial=0.0):.9g}")

    rep = verify_plan(x, rates, plan, ladder, sched, tol_bits=tol_bits)
    out["stall"] = (rep.stall_free, f"total stall {rep.total_stall_s:.6g} s, "
                                    f"{int(rep.incomplete_segments.sum())} segments never delivered")
    return out
