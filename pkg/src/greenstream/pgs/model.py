"""The joint airtime / segment-quality MILP.

Columns are the airtime fractions ``x[i, t]`` (one per slot the user is
present; absent slots have no column, i.e. are fixed to zero) followed by the
quality binaries ``q[i, s, l]``. Rows, in order:

* ``C1_i_s``  cumulative demand through segment s <= bits delivered by its deadline
* ``SEL_i_s`` exactly one level per segment
* ``C2_i``    sum of levels >= l_req * S_i
* ``C3_j_t``  airtime of BS j in slot t <= 1 (only where BS j serves someone)
* ``PB_i_t``  optional prebuffer cap, delivered minus played bits <= b_max
  at the end of every present slot
"""
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from ..radio import RadioParams, RateMatrix, build_rate_matrix
from ..scenario import AssociationMap, Scenario, associate
from ..streaming import QualityLadder, SegmentSchedule


@dataclass
class PgsInstance:
    rates: RateMatrix
    assoc: AssociationMap
    ladder: QualityLadder
    schedule: SegmentSchedule
    l_req: float
    b_max: float | None = None

    def __post_init__(self):
        n, T = self.rates.shape
        if self.assoc.serving.shape != (n, T):
            raise ValueError("association map and rate matrix differ in shape")
        if not 1 <= self.l_req <= self.ladder.q_max:
            raise ValueError(f"l_req={self.l_req} outside [1, {self.ladder.q_max}]")
        if self.schedule.n_users != n:
            raise ValueError("schedule and rate matrix cover different user counts")
        if abs(self.schedule.tau - self.rates.tau) > 1e-12:
            raise ValueError("schedule and rate matrix use different slot durations")
        for i in range(n):
            dl = self.schedule.deadlines(i)
            if dl.size and (self.schedule.entry_slots[i] < 1 or dl[-1] > T):
                raise ValueError(f"user {i}: segment deadlines exceed the window")
            if dl.size and not self.rates.present[i, dl[-1] - 1]:
                raise ValueError(f"user {i}: absent at its last segment deadline")
        if self.b_max is not None and self.b_max <= 0:
            raise ValueError("b_max must be positive")

    @property
    def tau(self) -> float:
        return self.rates.tau

    @property
    def n_users(self) -> int:
        return self.rates.shape[0]

    def level_target(self, i: int) -> int:
        """Smallest integer level sum that meets the average-level target."""
        S = self.schedule.n_segments[i]
        need = Fraction(self.l_req).limit_denominator(10**6) * S
        return int(-(-need.numerator // need.denominator))

    @classmethod
    def from_scenario(cls, scenario: Scenario, ladder: QualityLadder, tau_seg: float,
                      l_req: float, radio: RadioParams = RadioParams(),
                      b_max: float | None = None):
        assoc = associate(scenario)
        rates = build_rate_matrix(scenario, radio, assoc)
        sched = SegmentSchedule.from_scenario(scenario, tau_seg)
        return cls(rates, assoc, ladder, sched, l_req, b_max)


@dataclass
class MilpModel:
    instance: PgsInstance
    col_names: list
    col_is_int: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    cost: np.ndarray
    A: sp.csr_matrix
    row_names: list
    sense: np.ndarray  # 'L', 'E' or 'G'
    rhs: np.ndarray
    row_kind: np.ndarray
    x_col: np.ndarray  # (N, T) column index or -1
    q_col: list  # per user (S_i, q_max) column indices
    n_x: int = field(default=0)

    @property
    def n_cols(self) -> int:
        return len(self.col_names)

    @property
    def n_rows(self) -> int:
        return len(self.row_names)

    def count(self, kind: str) -> int:
        return int(np.count_nonzero(self.row_kind == kind))

    def q_slice(self) -> slice:
        return slice(self.n_x, self.n_cols)


def build_model(instance: PgsInstance) -> MilpModel:
    inst = instance
    n, T = inst.rates.shape
    sched, ladder = inst.schedule, inst.ladder
    qmax = ladder.q_max
    uid = inst.rates.user_ids
    tau = inst.tau
    seg_bits = sched.tau_seg * np.asarray(ladder.bitrates)

    names, lb, ub = [], [], []
    x_col = np.full((n, T), -1, dtype=int)
    for i in range(n):
        for t in np.flatnonzero(inst.rates.present[i]):
            x_col[i, t] = len(names)
            names.append(f"x_{uid[i]}_{t + 1}")
    n_x = len(names)
    q_col = []
    for i in range(n):
        S = sched.n_segments[i]
        idx = np.arange(len(names), len(names) + S * qmax).reshape(S, qmax)
        q_col.append(idx)
        for s in range(S):
            for l in range(qmax):
                names.append(f"q_{uid[i]}_{s + 1}_{l + 1}")
    ncol = len(names)
    is_int = np.zeros(ncol, dtype=bool)
    is_int[n_x:] = True
    lb = np.zeros(ncol)
    ub = np.ones(ncol)
    cost = np.zeros(ncol)
    cost[:n_x] = 1.0

    rows, cols, vals = [], [], []
    row_names, sense, rhs, kind = [], [], [], []

    def add_row(name, k, sgn, b, entries):
        r = len(row_names)
        for c, v in entries:
            rows.append(r)
            cols.append(c)
            vals.append(v)
        row_names.append(name)
        kind.append(k)
        sense.append(sgn)
        rhs.append(b)

    def delivered(i, upto):
        ts = np.flatnonzero(x_col[i, :upto] >= 0)
        return [(x_col[i, t], -inst.rates.rates[i, t] * tau) for t in ts]

    for i in range(n):
        dl = sched.deadlines(i)
        for s in range(sched.n_segments[i]):
            ent = [(q_col[i][sp_, l], seg_bits[l]) for sp_ in range(s + 1) for l in range(qmax)]
            add_row(f"C1_{uid[i]}_{s + 1}", "C1", "L", 0.0, ent + delivered(i, dl[s]))
    for i in range(n):
        for s in range(sched.n_segments[i]):
            add_row(f"SEL_{uid[i]}_{s + 1}", "SEL", "E", 1.0, [(q_col[i][s, l], 1.0) for l in range(qmax)])
    for i in range(n):
        S = sched.n_segments[i]
        if S:
            ent = [(q_col[i][s, l], float(l + 1)) for s in range(S) for l in range(qmax)]
            add_row(f"C2_{uid[i]}", "C2", "G", inst.l_req * S, ent)
    for j, t in inst.assoc.active_cells():
        users = inst.assoc.users(j, t)
        add_row(f"C3_{j + 1}_{t}", "C3", "L", 1.0, [(x_col[i, t - 1], 1.0) for i in users])
    if inst.b_max is not None:
        k = sched.slots_per_segment
        for i in range(n):
            S = sched.n_segments[i]
            if not S:
                continue
            dl = sched.deadlines(i)
            for t in np.flatnonzero(inst.rates.present[i]) + 1:
                # buffered = delivered through t minus played through t; segment s
                # plays during slots dl[s]+1 .. dl[s]+k when nothing stalls
                frac = np.clip((t - dl) / k, 0.0, 1.0)
                played = [(q_col[i][s, l], -seg_bits[l] * frac[s])
                          for s in np.flatnonzero(frac) for l in range(qmax)]
                ent = [(c, -v) for c, v in delivered(i, t)] + played
                add_row(f"PB_{uid[i]}_{t}", "PB", "L", float(inst.b_max), ent)

    A = sp.csr_matrix((vals, (rows, cols)), shape=(len(row_names), ncol))
    A.sum_duplicates()
    return MilpModel(inst, names, is_int, lb, ub, cost, A, row_names,
                     np.array(sense), np.array(rhs, dtype=float), np.array(kind),
                     x_col, q_col, n_x)
