"""Prediction-free reference allocators with greedy per-segment quality adaptation.

ES splits each BS's airtime equally among its users that still have segments
to fetch; RP splits it in proportion to their instantaneous rates. Clients
download segments back to back until all of theirs are stored. A segment's
quality is fixed when it is requested, from the share the client holds at
the start of that slot. When a client needs less than its share to finish,
it takes only what it needs and the remainder is re-split among the others.
"""
from dataclasses import dataclass

import numpy as np

from .playback import PlaybackReport, verify_plan
from .radio import RateMatrix
from .scenario import AssociationMap, Scenario, associate
from .streaming import QualityLadder, QualityPlan, SegmentSchedule

KINDS = ("es", "rp")


@dataclass(frozen=True)
class BaselineConfig:
    kind: str
    ladder: QualityLadder
    schedule: SegmentSchedule

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"baseline kind must be one of {KINDS}, got {self.kind!r}")


def adapt_quality(share: float, rate: float, ladder: QualityLadder) -> int:
    """Highest level whose bitrate fits in ``share * rate``; level 1 if none does."""
    thr = share * rate
    level = 1
    for l, b in enumerate(ladder.bitrates, start=1):
        if b <= thr:
            level = l
    return level


def _split(kind, rates_now, weights_mask, air):
    if kind == "es":
        return air / weights_mask.sum() * weights_mask
    w = rates_now * weights_mask
    return air * w / w.sum()


def _allocate(kind, rates: RateMatrix, assoc: AssociationMap, config: BaselineConfig):
    ladder, sched = config.ladder, config.schedule
    n, T = rates.shape
    tau = rates.tau
    seg_rate = np.asarray(ladder.bitrates)
    x = np.zeros((n, T))
    levels = [np.ones(s, dtype=int) for s in sched.n_segments]
    next_seg = np.zeros(n, dtype=int)  # 0-based index of the segment being fetched
    progress = np.zeros(n)  # bits of that segment already received
    chosen = np.zeros(n, dtype=bool)  # level of the current segment fixed?

    for t in range(T):
        for j in range(assoc.n_bs):
            users = assoc.users(j, t + 1)
            users = users[[next_seg[i] < sched.n_segments[i] for i in users]]
            if users.size == 0:
                continue
            r = rates.rates[users, t]
            nominal = _split(kind, r, np.ones(users.size), 1.0)
            lvl_now = np.array([adapt_quality(nominal[a], r[a], ladder) for a in range(users.size)])
            for a, i in enumerate(users):
                if not chosen[i]:
                    levels[i][next_seg[i]] = lvl_now[a]
                    chosen[i] = True
            # bits each user needs to finish everything, later requests at this slot's level
            need = np.empty(users.size)
            for a, i in enumerate(users):
                cur = sched.tau_seg * seg_rate[levels[i][next_seg[i]] - 1] - progress[i]
                rest = sched.n_segments[i] - next_seg[i] - 1
                need[a] = cur + rest * sched.tau_seg * seg_rate[lvl_now[a] - 1]
            need_air = need / (r * tau)

            share = np.zeros(users.size)
            open_ = np.ones(users.size)
            air = 1.0
            while open_.any():
                tent = _split(kind, r, open_, air)
                done = (open_ > 0) & (need_air <= tent)
                if not done.any():
                    share += tent
                    break
                share[done] = need_air[done]
                air -= need_air[done].sum()
                open_[done] = 0.0
            x[users, t] = share

            for a, i in enumerate(users):
                cap = share[a] * r[a] * tau
                while cap > 0 and next_seg[i] < sched.n_segments[i]:
                    if not chosen[i]:
                        levels[i][next_seg[i]] = lvl_now[a]
                        chosen[i] = True
                    left = sched.tau_seg * seg_rate[levels[i][next_seg[i]] - 1] - progress[i]
                    if cap >= left * (1 - 1e-12):
                        cap -= left
                        next_seg[i] += 1
                        progress[i] = 0.0
                        chosen[i] = False
                    else:
                        progress[i] += cap
                        cap = 0.0

    plan = QualityPlan(levels)
    report = verify_plan(x, rates, plan, ladder, sched)
    return x, plan, report


def allocate(kind: str, rates: RateMatrix, assoc: AssociationMap, config: BaselineConfig):
    """Run baseline ``kind`` ("es" or "rp") on an explicit rate matrix and association."""
    if kind not in KINDS:
        raise ValueError(f"baseline kind must be one of {KINDS}, got {kind!r}")
    return _allocate(kind, rates, assoc, config)


def allocate_es(scenario: Scenario, rates: RateMatrix, config: BaselineConfig,
                assoc: AssociationMap | None = None) -> tuple[np.ndarray, QualityPlan, PlaybackReport]:
    return _allocate("es", rates, assoc if assoc is not None else associate(scenario), config)


def allocate_rp(scenario: Scenario, rates: RateMatrix, config: BaselineConfig,
                assoc: AssociationMap | None = None) -> tuple[np.ndarray, QualityPlan, PlaybackReport]:
    return _allocate("rp", rates, assoc if assoc is not None else associate(scenario), config)
