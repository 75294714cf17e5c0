"""Highway scenarios: base-station line, vehicle traces and nearest-BS association.

Slots are 1-based in every external representation (trace CSV, entry slots);
arrays indexed by slot use ``slot - 1``.
"""
import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Topology:
    """A straight road along the x-axis and a line of BSs beside it."""

    bs_positions: np.ndarray  # (M, 2), meters
    road_length: float
    perp_offset: float = 500.0

    def __post_init__(self):
        pos = np.asarray(self.bs_positions, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "bs_positions", pos)
        if pos.shape[0] < 1:
            raise ValueError("topology needs at least one base station")
        if np.any(np.diff(pos[:, 0]) <= 0):
            raise ValueError("BS x-positions must be strictly increasing")
        if not self.road_length > 0:
            raise ValueError("road length must be positive")

    @property
    def n_bs(self) -> int:
        return self.bs_positions.shape[0]

    @classmethod
    def centered(cls, n_bs, spacing, road_length, perp_offset):
        mid = road_length / 2.0
        xs = mid + (np.arange(n_bs) - (n_bs - 1) / 2.0) * spacing
        pos = np.column_stack([xs, np.full(n_bs, float(perp_offset))])
        return cls(pos, float(road_length), float(perp_offset))


@dataclass(frozen=True)
class VehicleTrace:
    user_id: int
    entry_slot: int
    positions: np.ndarray  # x (m), one per slot of presence
    speed: float

    @property
    def n_slots(self) -> int:
        return len(self.positions)

    @property
    def last_slot(self) -> int:
        return self.entry_slot + self.n_slots - 1


@dataclass(frozen=True)
class Scenario:
    topology: Topology
    traces: tuple
    T: int  # window length in slots
    tau: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "traces", tuple(self.traces))
        if self.T < 1:
            raise ValueError("window must contain at least one slot")
        if not self.tau > 0:
            raise ValueError("slot duration must be positive")
        for tr in self.traces:
            if tr.entry_slot < 1 or tr.last_slot > self.T:
                raise ValueError(f"trace of user {tr.user_id} does not fit in the window")

    @property
    def n_users(self) -> int:
        return len(self.traces)

    @property
    def user_ids(self) -> list[int]:
        return [tr.user_id for tr in self.traces]

    def position_matrix(self) -> np.ndarray:
        """x-positions as an (N, T) array, NaN where the user is absent."""
        out = np.full((self.n_users, self.T), np.nan)
        for i, tr in enumerate(self.traces):
            out[i, tr.entry_slot - 1:tr.last_slot] = tr.positions
        return out


@dataclass(frozen=True)
class HighwayParams:
    n_vehicles: int = 10
    n_bs: int = 3
    bs_spacing: float = 1000.0
    bs_perp_offset: float = 500.0
    arrival: str = "deterministic"  # or "poisson"
    arrival_rate: float = 1.0  # vehicles/s
    speed: float = 25.0  # m/s
    speed_jitter: float = 0.0  # fraction, uniform +-jitter
    T_s: float = 240.0
    tau: float = 1.0
    seed: int = 0


@dataclass
class AssociationMap:
    """Serving BS per (user, slot); -1 where the user is absent."""

    serving: np.ndarray  # (N, T) int
    n_bs: int
    _members: dict = field(default_factory=dict, repr=False)

    def users(self, j, t):
        """Indices of users served by BS ``j`` (0-based) in slot ``t`` (1-based)."""
        key = (j, t)
        if key not in self._members:
            self._members[key] = np.flatnonzero(self.serving[:, t - 1] == j)
        return self._members[key]

    def active_cells(self):
        """(j, t) pairs with at least one associated user, t 1-based, sorted by t then j."""
        out = []
        for t0 in range(self.serving.shape[1]):
            col = self.serving[:, t0]
            for j in np.unique(col[col >= 0]):
                out.append((int(j), t0 + 1))
        return out


def generate_highway_scenario(params: HighwayParams) -> Scenario:
    if params.n_vehicles < 1 or params.n_vehicles > 200:
        raise ValueError("n_vehicles must be in [1, 200]")
    if params.speed <= 0:
        raise ValueError("speed must be positive")
    if not 0 <= params.speed_jitter < 1:
        raise ValueError("speed_jitter must be in [0, 1)")
    if params.tau <= 0:
        raise ValueError("tau must be positive")
    n_slots = params.T_s / params.tau
    if params.T_s <= 0 or abs(n_slots - round(n_slots)) > 1e-9:
        raise ValueError("T must be a positive multiple of tau")
    T = int(round(n_slots))
    if params.arrival_rate <= 0:
        raise ValueError("arrival rate must be positive")

    rng = np.random.default_rng(params.seed)
    n = params.n_vehicles
    if params.arrival == "deterministic":
        arrivals = np.arange(n) / params.arrival_rate
    elif params.arrival == "poisson":
        gaps = rng.exponential(1.0 / params.arrival_rate, size=n)
        gaps[0] = 0.0
        arrivals = np.cumsum(gaps)
    else:
        raise ValueError(f"unknown arrival model {params.arrival!r}")
    entry = 1 + np.floor(arrivals / params.tau + 1e-9).astype(int)
    if entry[-1] > T:
        raise ValueError("vehicle arrivals extend beyond the window")

    if params.speed_jitter > 0:
        speeds = params.speed * (1 + rng.uniform(-params.speed_jitter, params.speed_jitter, size=n))
    else:
        speeds = np.full(n, float(params.speed))
    road = params.speed * (1 + params.speed_jitter) * params.T_s
    topo = Topology.centered(params.n_bs, params.bs_spacing, road, params.bs_perp_offset)

    traces = []
    for i in range(n):
        steps = np.arange(T - entry[i] + 1)
        xs = speeds[i] * steps * params.tau
        xs = xs[xs <= road]
        traces.append(VehicleTrace(i + 1, int(entry[i]), xs, float(speeds[i])))
    return Scenario(topo, tuple(traces), T, params.tau, params.seed)


def import_traces(path, topology: Topology, tau: float = 1.0) -> list[VehicleTrace]:
    """Read a ``user_id,slot,x_m`` CSV into traces, one per user id."""
    rows: dict[int, list[tuple[int, float, int]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        if [h.strip() for h in header] != ["user_id", "slot", "x_m"]:
            raise ValueError(f"{path}: expected header user_id,slot,x_m, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: malformed row {row}")
            try:
                uid, slot, x = int(row[0]), int(row[1]), float(row[2])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed row {row}") from None
            if not 0 <= x <= topology.road_length:
                raise ValueError(f"{path}:{lineno}: position {x} out of range [0, {topology.road_length}]")
            if slot < 1:
                raise ValueError(f"{path}:{lineno}: slot must be >= 1")
            rows.setdefault(uid, []).append((slot, x, lineno))

    traces = []
    for uid in sorted(rows):
        recs = sorted(rows[uid])
        slots = [r[0] for r in recs]
        for a, b in zip(recs, recs[1:]):
            if b[0] != a[0] + 1:
                raise ValueError(f"{path}:{b[2]}: non-contiguous slots for user {uid}")
        xs = np.array([r[1] for r in recs])
        steps = np.diff(xs)
        if np.any(steps < 0) and np.any(steps > 0):
            raise ValueError(f"{path}: positions of user {uid} are not monotone")
        speed = float(np.abs(steps).mean() / tau) if steps.size else 0.0
        traces.append(VehicleTrace(uid, slots[0], xs, speed))
    return traces


def write_traces(scenario: Scenario, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["user_id", "slot", "x_m"])
        for tr in scenario.traces:
            for k, x in enumerate(tr.positions):
                w.writerow([tr.user_id, tr.entry_slot + k, f"{x:.9g}"])


def associate(scenario: Scenario) -> AssociationMap:
    """Nearest-BS association; exact distance ties go to the lowest BS index."""
    pos = scenario.position_matrix()
    bs = scenario.topology.bs_positions
    present = ~np.isnan(pos)
    dx = np.where(present, pos, 0.0)[:, :, None] - bs[None, None, :, 0]
    dist2 = dx * dx + bs[None, None, :, 1] ** 2
    serving = np.argmin(dist2, axis=2)  # first minimum wins ties
    serving = np.where(present, serving, -1)
    return AssociationMap(serving.astype(int), scenario.topology.n_bs)


def distance_matrix_km(scenario: Scenario, assoc: AssociationMap) -> np.ndarray:
    """Distance to the serving BS in km, NaN where absent."""
    pos = scenario.position_matrix()
    bs = scenario.topology.bs_positions
    j = np.clip(assoc.serving, 0, None)
    d = np.hypot(pos - bs[j, 0], bs[j, 1]) / 1000.0
    return np.where(assoc.serving >= 0, d, np.nan)


def load_scenario(path, topology: Topology, T: int, tau: float = 1.0) -> Scenario:
    return Scenario(topology, tuple(import_traces(Path(path), topology, tau)), T, tau)
