"""LP relaxation, rounding heuristic and branch-and-bound for the PGS model."""
import heapq
import time
from dataclasses import dataclass, field

import numpy as np

from ..streaming import QualityPlan
from . import simplex
from .model import MilpModel, PgsInstance

INT_TOL = 1e-6


@dataclass
class PgsSolution:
    x: np.ndarray | None  # (N, T) airtime fractions
    plan: QualityPlan | None
    objective: float
    status: str  # optimal | heuristic | infeasible | time_limit
    lp_bound: float
    stats: dict = field(default_factory=dict)
    note: str = ""

    @property
    def feasible(self) -> bool:
        return self.x is not None


@dataclass
class Relaxation:
    status: str
    bound: float
    values: np.ndarray | None
    pivots: int = 0


def _lp_arrays(model: MilpModel, rhs):
    """Row-equilibrated (A_ub, b_ub, A_eq, b_eq); '>=' rows are negated into '<='."""
    A = model.A.toarray()
    scale = np.abs(A).max(axis=1)
    scale[scale == 0] = 1.0
    A = A / scale[:, None]
    b = rhs / scale
    ge = model.sense == "G"
    A[ge] *= -1.0
    b = np.where(ge, -b, b)
    eq = model.sense == "E"
    return A[~eq], b[~eq], A[eq], b[eq]


def _tightened_rhs(model: MilpModel) -> np.ndarray:
    """C2 has integer coefficients on binaries, so its RHS can be rounded up."""
    rhs = model.rhs.copy()
    inst = model.instance
    rows = np.flatnonzero(model.row_kind == "C2")
    users = [i for i in range(inst.n_users) if inst.schedule.n_segments[i] > 0]
    for r, i in zip(rows, users):
        rhs[r] = inst.level_target(i)
    return rhs


def _solve_lp(model, lb, ub, rhs, kernels=None) -> Relaxation:
    A_ub, b_ub, A_eq, b_eq = _lp_arrays(model, rhs)
    res = simplex.solve(model.cost, A_ub, b_ub, A_eq, b_eq, lb, ub, kernels=kernels)
    if res.status != "optimal":
        return Relaxation(res.status, np.inf, None, res.pivots)
    return Relaxation("optimal", res.fun, res.x, res.pivots)


def solve_lp_relaxation(model: MilpModel, tighten: bool = False, kernels=None) -> Relaxation:
    """Optimal value of the model with every binary relaxed to [0, 1].

    ``tighten`` rounds the average-quality RHS up to the next attainable
    integer level sum first; that leaves the integer-feasible set unchanged.
    """
    rhs = _tightened_rhs(model) if tighten else model.rhs
    return _solve_lp(model, model.lb, model.ub, rhs, kernels)


def _levels_from_values(model: MilpModel, values) -> list:
    return [np.argmax(values[qc], axis=1) + 1 if qc.size else np.zeros(0, dtype=int)
            for qc in model.q_col]


def _x_matrix(model: MilpModel, values) -> np.ndarray:
    x = np.zeros(model.x_col.shape)
    mask = model.x_col >= 0
    x[mask] = np.clip(values[model.x_col[mask]], 0.0, 1.0)
    return x


def solve_fixed_levels(model: MilpModel, levels, kernels=None) -> Relaxation:
    """The x-only LP once every segment's level is fixed."""
    lb, ub = model.lb.copy(), model.ub.copy()
    for qc, lv in zip(model.q_col, levels):
        if qc.size == 0:
            continue
        ub[qc] = 0.0
        chosen = qc[np.arange(len(lv)), np.asarray(lv) - 1]
        lb[chosen] = 1.0
        ub[chosen] = 1.0
    return _solve_lp(model, lb, ub, model.rhs, kernels)


def _solution(model, values, levels, status, bound, stats, note=""):
    x = _x_matrix(model, values)
    return PgsSolution(x, QualityPlan(levels), float(x.sum()), status, bound, stats, note)


def _infeasible(bound_note, stats, lp_bound=np.inf):
    return PgsSolution(None, None, np.inf, "infeasible", lp_bound, stats, bound_note)


def infeasibility_note(instance: PgsInstance) -> str:
    """Name an aggregated constraint that no plan can satisfy, when one exists."""
    sched, ladder = instance.schedule, instance.ladder
    f = np.asarray(ladder.bitrates)
    qmax = ladder.q_max
    slope = min((f[l] - f[0]) / l for l in range(1, qmax)) if qmax > 1 else 0.0
    for i in range(instance.n_users):
        S = sched.n_segments[i]
        if not S:
            continue
        uid = instance.rates.user_ids[i]
        K = instance.level_target(i)
        if K > qmax * S:
            return f"C2 unreachable for user {uid}: level sum {K} exceeds {qmax}*{S}"
        cap = np.cumsum(instance.rates.rates[i] * instance.tau)
        for s, d in enumerate(sched.deadlines(i), start=1):
            need_levels = max(s, K - qmax * (S - s))
            need_bits = sched.tau_seg * (s * f[0] + (need_levels - s) * slope)
            if need_bits > cap[d - 1] * (1 + 1e-9) + 1.0:
                return (f"C1+C2 aggregate violated for user {uid}: at least {need_bits:.6g} bits "
                        f"due by slot {d}, at most {cap[d - 1]:.6g} deliverable at full airtime")
    return "LP relaxation infeasible; no single-user aggregate is violated, so shared BS airtime (C3) is the binding conflict"


def heuristic_round(model: MilpModel, values, kernels=None) -> PgsSolution:
    """Round a fractional solution to a quality plan, then re-solve for x.

    Each segment starts at the floor of its fractional expected level; levels
    are then raised one step at a time, cheapest extra bits first and later
    segments first on ties, until the average-quality target holds.
    """
    t0 = time.perf_counter()
    inst = model.instance
    f = np.asarray(inst.ladder.bitrates)
    qmax = inst.ladder.q_max
    levels = []
    for i, qc in enumerate(model.q_col):
        S = qc.shape[0]
        if S == 0:
            levels.append(np.zeros(0, dtype=int))
            continue
        expect = values[qc] @ np.arange(1, qmax + 1)
        lv = np.clip(np.floor(expect + 1e-9).astype(int), 1, qmax)
        K = inst.level_target(i)
        if K > qmax * S:
            return _infeasible(infeasibility_note(inst), {"wall_time_s": time.perf_counter() - t0})
        while lv.sum() < K:
            open_ = np.flatnonzero(lv < qmax)
            step = f[lv[open_]] - f[lv[open_] - 1]
            best = open_[step <= step.min() * (1 + 1e-12)]
            lv[best[-1]] += 1
        levels.append(lv)
    res = solve_fixed_levels(model, levels, kernels)
    stats = {"nodes": 0, "lp_pivots": res.pivots, "wall_time_s": time.perf_counter() - t0}
    if res.status != "optimal":
        return _infeasible("rounded quality plan cannot be delivered: " + infeasibility_note(inst), stats)
    return _solution(model, res.values, levels, "heuristic", np.nan, stats)


def solve_exact(model: MilpModel, time_limit_s: float | None = None, tol: float = 1e-6,
                max_nodes: int | None = None, kernels=None) -> PgsSolution:
    """Best-bound branch-and-bound over the quality binaries.

    Node bounds come from the LP relaxation (with the average-quality RHS
    rounded up). The root is seeded with ``heuristic_round``. Branching picks
    the q variable closest to 0.5, ties to the lowest column (user, segment,
    level order); equal-bound nodes are expanded in creation order.
    """
    t0 = time.perf_counter()
    rhs = _tightened_rhs(model)
    q_cols = np.arange(model.n_x, model.n_cols)
    pivots = 0

    root = _solve_lp(model, model.lb, model.ub, rhs, kernels)
    pivots += root.pivots
    nodes = 1
    if root.status != "optimal":
        return _infeasible(infeasibility_note(model.instance),
                           {"nodes": nodes, "lp_pivots": pivots, "wall_time_s": time.perf_counter() - t0})

    inc = heuristic_round(model, root.values, kernels)
    pivots += inc.stats.get("lp_pivots", 0)
    inc_val = inc.objective if inc.feasible else np.inf
    inc_node = 0
    inc_sol = inc if inc.feasible else None

    heap = [(root.bound, 0, model.lb, model.ub, root.values)]
    counter = 1
    status = "optimal"
    global_bound = root.bound
    while heap:
        bound, idx, lb, ub, vals = heapq.heappop(heap)
        if bound >= inc_val - tol:
            heap.clear()
            break
        if (time_limit_s is not None and time.perf_counter() - t0 > time_limit_s) or \
                (max_nodes is not None and nodes >= max_nodes):
            global_bound = bound
            status = "time_limit"
            break
        qv = vals[q_cols]
        frac = np.abs(qv - np.round(qv))
        if frac.max(initial=0.0) <= INT_TOL:
            levels = _levels_from_values(model, vals)
            if frac.max(initial=0.0) > 1e-9:
                fixed = solve_fixed_levels(model, levels, kernels)
                pivots += fixed.pivots
                vals = fixed.values
            cand = _solution(model, vals, levels, "optimal", root.bound, {})
            if cand.objective < inc_val - 1e-12 or (abs(cand.objective - inc_val) <= 1e-12 and idx < inc_node):
                inc_val, inc_node, inc_sol = cand.objective, idx, cand
            continue
        dist = np.round(np.abs(qv - 0.5), 9)
        dist[frac <= INT_TOL] = np.inf
        col = q_cols[int(np.argmin(dist))]
        for side in (0.0, 1.0):
            clb, cub = lb.copy(), ub.copy()
            clb[col] = cub[col] = side
            child = _solve_lp(model, clb, cub, rhs, kernels)
            pivots += child.pivots
            nodes += 1
            if child.status == "optimal" and child.bound < inc_val - tol:
                heapq.heappush(heap, (child.bound, counter, clb, cub, child.values))
            counter += 1

    stats = {"nodes": nodes, "lp_pivots": pivots, "wall_time_s": time.perf_counter() - t0}
    if inc_sol is None:
        if status == "time_limit":
            return PgsSolution(None, None, np.inf, "time_limit", global_bound, stats, "no incumbent found")
        return _infeasible("no integral quality plan is feasible: " + infeasibility_note(model.instance),
                           stats, root.bound)
    out = PgsSolution(inc_sol.x, inc_sol.plan, inc_sol.objective, status,
                      root.bound if status == "optimal" else global_bound, stats)
    return out
