"""Client playback simulation for an airtime plan and a quality plan.

Segment ``s`` completes in the first slot whose cumulative delivered bits
reach the cumulative demand through ``s``. Segment 1 starts playing at the
end of its deadline slot; each later segment starts when its predecessor
finishes. A segment that is not complete when it should start stalls the
player, and every later start shifts by the stall. Segments never completed
inside the window stall the player until the window ends.
"""
import csv
from dataclasses import dataclass, field

import numpy as np

from .radio import RateMatrix
from .streaming import QualityLadder, QualityPlan, SegmentSchedule


@dataclass
class PlaybackReport:
    user_ids: tuple
    stall_s: np.ndarray
    startup_s: np.ndarray  # NaN if segment 1 never completes
    avg_level: np.ndarray  # over completed segments; NaN if none
    max_prebuffer_bits: np.ndarray
    completion_slots: list  # per user, 1-based; -1 for incomplete segments
    incomplete_segments: np.ndarray
    completed_levels: list = field(repr=False)
    buffer_trace: list | None = field(default=None, repr=False)

    @property
    def total_stall_s(self) -> float:
        return float(self.stall_s.sum())

    @property
    def stall_free(self) -> bool:
        """No stall and every segment delivered inside the window."""
        return bool(self.total_stall_s == 0 and not np.any(self.incomplete_segments))

    @property
    def mean_level(self) -> float:
        """Segment-weighted mean level over every completed segment."""
        lv = [l for lvs in self.completed_levels for l in lvs]
        return float(np.mean(lv)) if lv else float("nan")

    @property
    def mean_startup_s(self) -> float:
        v = self.startup_s[~np.isnan(self.startup_s)]
        return float(v.mean()) if v.size else float("nan")

    def write_buffer_csv(self, path) -> None:
        if self.buffer_trace is None:
            raise ValueError("report was built without record_buffer=True")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["user_id", "slot", "buffered_bits", "playing_segment"])
            for row in self.buffer_trace:
                w.writerow([row[0], row[1], f"{row[2]:.9g}", row[3]])


def delivered_bits(x, rates: RateMatrix, i: int, t: int) -> float:
    """Bits delivered to user ``i`` through the end of slot ``t`` (1-based)."""
    return float(np.sum(x[i, :t] * rates.rates[i, :t]) * rates.tau)


def verify_plan(x, rates: RateMatrix, plan: QualityPlan, ladder: QualityLadder,
                schedule: SegmentSchedule, tol_bits: float = 1.0,
                record_buffer: bool = False) -> PlaybackReport:
    x = np.asarray(x, dtype=float)
    if x.shape != rates.shape:
        raise ValueError(f"allocation shape {x.shape} does not match rate matrix {rates.shape}")
    if schedule.n_users != x.shape[0]:
        raise ValueError("schedule and allocation cover different user counts")
    plan.check(ladder, schedule)
    n, T = x.shape
    k = schedule.slots_per_segment
    bitrates = np.asarray(ladder.bitrates)
    slots = np.arange(1, T + 1)

    stall = np.zeros(n)
    startup = np.full(n, np.nan)
    avg = np.full(n, np.nan)
    prebuf = np.zeros(n)
    incomplete = np.zeros(n, dtype=int)
    completions, done_levels, trace = [], [], [] if record_buffer else None

    for i in range(n):
        S = schedule.n_segments[i]
        cum = np.cumsum(x[i] * rates.rates[i] * rates.tau)
        if S == 0:
            completions.append(np.zeros(0, dtype=int))
            done_levels.append([])
            continue
        lv = plan.levels[i]
        seg_bits = schedule.tau_seg * bitrates[lv - 1]
        demand = np.cumsum(seg_bits)
        idx = np.searchsorted(cum, demand - tol_bits, side="left")
        comp = np.where(idx < T, idx + 1, -1)
        deadlines = schedule.deadlines(i)

        starts = np.full(S, np.nan)  # playback of s occupies slots starts[s]+1 .. starts[s]+k
        due = deadlines[0]
        n_done = S
        for s in range(S):
            if comp[s] < 0:
                stall[i] += max(0, T - due)
                n_done = s
                break
            if comp[s] > due:
                stall[i] += comp[s] - due
                due = comp[s]
            starts[s] = due
            due += k
        stall[i] *= rates.tau
        incomplete[i] = S - n_done
        if comp[0] > 0:
            startup[i] = (comp[0] - schedule.entry_slots[i] + 1) * rates.tau
        if n_done:
            avg[i] = lv[:n_done].mean()
        completions.append(comp)
        done_levels.append(lv[:n_done].tolist())

        st = starts[:n_done]
        frac = np.clip((slots[None, :] - st[:, None]) / k, 0.0, 1.0)
        played = seg_bits[:n_done] @ frac
        buffered = np.minimum(cum, demand[-1]) - played
        prebuf[i] = max(0.0, float(buffered.max()))
        if record_buffer:
            playing = np.zeros(T, dtype=int)
            for s in range(n_done):
                a = int(st[s])
                playing[a:min(a + k, T)] = s + 1
            uid = rates.user_ids[i]
            for t in np.flatnonzero(rates.present[i]):
                trace.append((uid, t + 1, float(buffered[t]), int(playing[t])))

    return PlaybackReport(tuple(rates.user_ids), stall, startup, avg, prebuf,
                          completions, incomplete, done_levels, trace)


def prebuffer_ok(report: PlaybackReport, b_max: float | None) -> bool:
    if b_max is None:
        return True
    return bool(np.all(report.max_prebuffer_bits <= b_max))
