"""Video model: quality ladder, per-user segment schedule and quality plans."""
from dataclasses import dataclass

import numpy as np

from .scenario import Scenario


@dataclass(frozen=True)
class QualityLadder:
    bitrates: tuple  # bit/s for levels 1..q_max

    def __post_init__(self):
        br = tuple(float(b) for b in self.bitrates)
        object.__setattr__(self, "bitrates", br)
        if len(br) < 1:
            raise ValueError("ladder needs at least one level")
        if any(b <= 0 for b in br):
            raise ValueError("bitrates must be positive")
        if any(b2 <= b1 for b1, b2 in zip(br, br[1:])):
            raise ValueError("bitrates must be strictly increasing")

    @property
    def q_max(self) -> int:
        return len(self.bitrates)

    def rate(self, level: int) -> float:
        if not 1 <= level <= self.q_max:
            raise ValueError(f"level {level} outside 1..{self.q_max}")
        return self.bitrates[level - 1]

    def is_affine(self, rtol=1e-12) -> bool:
        steps = np.diff(self.bitrates)
        return bool(steps.size == 0 or np.allclose(steps, steps[0], rtol=rtol, atol=0))

    @classmethod
    def table2(cls):
        return cls((0.25e6, 0.5e6, 0.75e6, 1.0e6))


def segment_bits(ladder: QualityLadder, tau_seg: float, level: int) -> float:
    return tau_seg * ladder.rate(level)


@dataclass(frozen=True)
class SegmentSchedule:
    """Per-user segment counts and deadlines on each user's local clock.

    Segment ``s`` of a user entering in slot ``e`` must be fully delivered by
    the end of slot ``e - 1 + s * k`` where ``k = tau_seg / tau``.
    """

    tau_seg: float
    tau: float
    entry_slots: tuple
    n_segments: tuple

    def __post_init__(self):
        object.__setattr__(self, "entry_slots", tuple(int(e) for e in self.entry_slots))
        object.__setattr__(self, "n_segments", tuple(int(s) for s in self.n_segments))
        k = self.tau_seg / self.tau
        if self.tau_seg <= 0 or abs(k - round(k)) > 1e-9:
            raise ValueError("tau_seg must be a positive multiple of tau")
        if len(self.entry_slots) != len(self.n_segments):
            raise ValueError("entry slots and segment counts differ in length")

    @property
    def slots_per_segment(self) -> int:
        return int(round(self.tau_seg / self.tau))

    @property
    def n_users(self) -> int:
        return len(self.n_segments)

    def deadlines(self, i: int) -> np.ndarray:
        """1-based deadline slots of user ``i``'s segments."""
        k = self.slots_per_segment
        return self.entry_slots[i] - 1 + k * np.arange(1, self.n_segments[i] + 1)

    @classmethod
    def from_scenario(cls, scenario: Scenario, tau_seg: float = 10.0):
        k = tau_seg / scenario.tau
        if abs(k - round(k)) > 1e-9 or tau_seg <= 0:
            raise ValueError("tau_seg must be a positive multiple of tau")
        k = int(round(k))
        entries = [tr.entry_slot for tr in scenario.traces]
        counts = [tr.n_slots // k for tr in scenario.traces]
        return cls(tau_seg, scenario.tau, tuple(entries), tuple(counts))

    @classmethod
    def from_presence(cls, present, tau: float, tau_seg: float = 10.0):
        """Schedule for users given only their (N, T) presence mask."""
        present = np.asarray(present, dtype=bool)
        k = tau_seg / tau
        if abs(k - round(k)) > 1e-9 or tau_seg <= 0:
            raise ValueError("tau_seg must be a positive multiple of tau")
        k = int(round(k))
        entries, counts = [], []
        for row in present:
            on = np.flatnonzero(row)
            if on.size == 0:
                raise ValueError("user present in no slot")
            if on[-1] - on[0] + 1 != on.size:
                raise ValueError("user presence must be contiguous")
            entries.append(int(on[0]) + 1)
            counts.append(on.size // k)
        return cls(tau_seg, tau, tuple(entries), tuple(counts))


@dataclass
class QualityPlan:
    """levels[i] holds the 1-based quality level of each of user i's segments."""

    levels: list

    def __post_init__(self):
        self.levels = [np.asarray(lv, dtype=int) for lv in self.levels]

    @classmethod
    def constant(cls, schedule: SegmentSchedule, level: int):
        return cls([np.full(s, level) for s in schedule.n_segments])

    def check(self, ladder: QualityLadder, schedule: SegmentSchedule) -> None:
        if len(self.levels) != schedule.n_users:
            raise ValueError("quality plan and schedule cover different user counts")
        for i, lv in enumerate(self.levels):
            if lv.size != schedule.n_segments[i]:
                raise ValueError(f"user {i}: plan has {lv.size} segments, schedule {schedule.n_segments[i]}")
            if lv.size and (lv.min() < 1 or lv.max() > ladder.q_max):
                raise ValueError(f"user {i}: level outside 1..{ladder.q_max}")


def demand_curve(plan: QualityPlan, i: int, ladder: QualityLadder,
                 schedule: SegmentSchedule) -> list[tuple[int, float]]:
    lv = plan.levels[i]
    if lv.size == 0:
        return []
    bits = schedule.tau_seg * np.asarray(ladder.bitrates)[lv - 1]
    return list(zip(schedule.deadlines(i).tolist(), np.cumsum(bits).tolist()))


def average_level(plan: QualityPlan, i: int) -> float:
    lv = plan.levels[i]
    if lv.size == 0:
        raise ValueError(f"user {i} streams no segments")
    return float(lv.sum()) / lv.size
