"""Brute-force reference solver for tiny instances.

Enumerates every quality plan that meets the average-level target and solves
the remaining airtime LP with HiGHS (through scipy). Its constraints are
written here directly from the instance, not taken from ``build_model``, so
it checks the model builder, the simplex and the branch-and-bound together.
"""
import itertools
import time

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import lil_matrix

from ..streaming import QualityPlan
from .model import PgsInstance
from .solver import PgsSolution

MAX_PLANS = 10**5


def _user_plans(inst: PgsInstance, i: int):
    S = inst.schedule.n_segments[i]
    qmax = inst.ladder.q_max
    need = inst.l_req * S - 1e-9
    f = np.asarray(inst.ladder.bitrates)
    cap = np.cumsum(inst.rates.rates[i] * inst.tau)
    dl = inst.schedule.deadlines(i)
    out = []
    for combo in itertools.product(range(1, qmax + 1), repeat=S):
        if sum(combo) < need:
            continue
        demand = np.cumsum(inst.schedule.tau_seg * f[np.array(combo, dtype=int) - 1]) if S else np.zeros(0)
        # airtime can never exceed 1, so this prunes only hopeless plans
        if S and np.any(demand > cap[dl - 1] + 1.0):
            continue
        out.append(combo)
    return out


def _x_lp(inst: PgsInstance, levels):
    n, T = inst.rates.shape
    r = inst.rates.rates
    pres = inst.rates.present
    idx = -np.ones((n, T), dtype=int)
    idx[pres] = np.arange(int(pres.sum()))
    nv = int(pres.sum())
    f = np.asarray(inst.ladder.bitrates)
    sched = inst.schedule
    rows_ub, b_ub = [], []

    for i in range(n):
        lv = np.asarray(levels[i], dtype=int)
        if lv.size == 0:
            continue
        bits = sched.tau_seg * f[lv - 1]
        cum = np.cumsum(bits)
        for s, d in enumerate(sched.deadlines(i)):
            row = {idx[i, t]: -r[i, t] * inst.tau / 1e6 for t in range(d) if pres[i, t]}
            rows_ub.append(row)
            b_ub.append(-cum[s] / 1e6)
        if inst.b_max is not None:
            k = sched.slots_per_segment
            dl = sched.deadlines(i)
            for t in np.flatnonzero(pres[i]) + 1:
                played = float(bits @ np.clip((t - dl) / k, 0.0, 1.0))
                row = {idx[i, u]: r[i, u] * inst.tau / 1e6 for u in range(t) if pres[i, u]}
                rows_ub.append(row)
                b_ub.append((inst.b_max + played) / 1e6)
    for t in range(T):
        col = inst.assoc.serving[:, t]
        for j in np.unique(col[col >= 0]):
            users = np.flatnonzero(col == j)
            rows_ub.append({idx[i, t]: 1.0 for i in users})
            b_ub.append(1.0)

    A = lil_matrix((len(rows_ub), nv))
    for k, row in enumerate(rows_ub):
        for c, v in row.items():
            A[k, c] = v
    res = linprog(np.ones(nv), A_ub=A.tocsr(), b_ub=np.array(b_ub), bounds=(0.0, 1.0), method="highs")
    if res.status != 0:
        return None
    x = np.zeros((n, T))
    x[pres] = res.x
    return x


def enumerate_oracle(instance: PgsInstance) -> PgsSolution:
    t0 = time.perf_counter()
    qmax = instance.ladder.q_max
    total_segments = sum(instance.schedule.n_segments)
    if qmax ** total_segments > MAX_PLANS:
        raise ValueError(f"{qmax}^{total_segments} quality plans exceed the enumeration limit {MAX_PLANS}")
    per_user = [_user_plans(instance, i) for i in range(instance.n_users)]
    best, best_x, best_plan, count = np.inf, None, None, 0
    for combo in itertools.product(*per_user):
        count += 1
        x = _x_lp(instance, combo)
        if x is None:
            continue
        val = float(x.sum())
        if val < best - 1e-12:
            best, best_x, best_plan = val, x, combo
    stats = {"plans": count, "wall_time_s": time.perf_counter() - t0}
    if best_x is None:
        return PgsSolution(None, None, np.inf, "infeasible", np.nan, stats, "no quality plan is deliverable")
    plan = QualityPlan([np.asarray(p, dtype=int) for p in best_plan])
    return PgsSolution(best_x, plan, best, "optimal", best, stats)
