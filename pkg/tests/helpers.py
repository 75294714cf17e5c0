"""Shared instance builders for the test suite."""
import numpy as np

from greenstream.pgs import PgsInstance
from greenstream.radio import RateMatrix
from greenstream.scenario import AssociationMap
from greenstream.streaming import QualityLadder, SegmentSchedule

MBIT = 1e6


def single_user(rate_bps, levels_bps, l_req, tau_seg=10.0, b_max=None, entry=1):
    """One user on one BS, present from ``entry`` to the end of ``rate_bps``."""
    r = np.asarray(rate_bps, dtype=float)
    T = r.size
    present = np.zeros((1, T), dtype=bool)
    present[0, entry - 1:] = True
    rates = RateMatrix(np.where(present, r[None, :], 0.0), present, 1.0, (1,))
    assoc = AssociationMap(np.where(present, 0, -1), 1)
    sched = SegmentSchedule.from_presence(present, 1.0, tau_seg)
    return PgsInstance(rates, assoc, QualityLadder(tuple(levels_bps)), sched, l_req, b_max)


def random_tiny(rng: np.random.Generator, max_q: int = 2, max_users: int = 2, max_segments: int = 3,
                max_T: int = 30, affine: bool | None = None, b_max_prob: float = 0.2) -> PgsInstance:
    """A random instance small enough for exhaustive enumeration."""
    k = int(rng.choice([2, 3, 5, 10]))
    n = int(rng.integers(1, max_users + 1))
    q = int(rng.integers(1, max_q + 1))
    f1 = rng.uniform(0.1, 0.5) * MBIT
    steps = rng.uniform(0.05, 0.5, size=q - 1) * MBIT
    if affine or (affine is None and q > 2 and rng.random() < 0.5):
        steps[:] = steps[0]
    ladder = QualityLadder(tuple(np.concatenate([[f1], f1 + np.cumsum(steps)])))

    spans = []
    for _ in range(n):
        S = int(rng.integers(1, min(max_segments, max_T // k) + 1))
        extra = int(rng.integers(0, k))
        spans.append(min(S * k + extra, max_T))
    T = int(rng.integers(max(spans), max_T + 1))
    M = int(rng.integers(1, 3))
    present = np.zeros((n, T), dtype=bool)
    for i, L in enumerate(spans):
        e = int(rng.integers(0, T - L + 1))
        present[i, e:e + L] = True
    rates = np.where(present, rng.uniform(0.2, 2.0, size=(n, T)) * MBIT, 0.0)
    serving = np.where(present, rng.integers(0, M, size=(n, T)), -1)
    sched = SegmentSchedule.from_presence(present, 1.0, k * 1.0)
    l_req = float(rng.integers(4, 4 * q + 1)) / 4.0
    b_max = None
    if rng.random() < b_max_prob:
        b_max = float(rng.uniform(1.0, 3.0) * k * ladder.bitrates[-1])
    return PgsInstance(RateMatrix(rates, present, 1.0, tuple(range(1, n + 1))),
                       AssociationMap(serving, M), ladder, sched, l_req, b_max)
