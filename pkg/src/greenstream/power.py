"""Linear load-dependent BS power model and energy accounting."""
import csv
from dataclasses import dataclass

import numpy as np

from .scenario import AssociationMap


@dataclass(frozen=True)
class PowerModel:
    p_min_w: float = 200.0
    p_max_w: float = 1300.0
    sleep_enabled: bool = False
    sleep_power_w: float = 0.0

    def __post_init__(self):
        if not 0 <= self.p_min_w < self.p_max_w:
            raise ValueError("need 0 <= p_min < p_max")
        if self.sleep_power_w > self.p_min_w:
            raise ValueError("sleep power must not exceed p_min")


def bs_load(x, assoc: AssociationMap, j: int, t: int) -> float:
    """Airtime used by BS ``j`` (0-based) in slot ``t`` (1-based)."""
    users = assoc.users(j, t)
    return float(np.sum(x[users, t - 1])) if users.size else 0.0


def load_matrix(x, assoc: AssociationMap) -> np.ndarray:
    """(n_bs, T) load of every BS in every slot."""
    x = np.asarray(x, dtype=float)
    T = x.shape[1]
    out = np.zeros((assoc.n_bs, T))
    for j in range(assoc.n_bs):
        out[j] = np.where(assoc.serving == j, x, 0.0).sum(axis=0)
    return out


def bs_power(load, model: PowerModel = PowerModel()):
    ld = np.asarray(load, dtype=float)
    if np.any(ld < -1e-9) or np.any(ld > 1 + 1e-9):
        raise ValueError("load outside [0, 1]")
    ld = np.clip(ld, 0.0, 1.0)
    p = model.p_min_w + (model.p_max_w - model.p_min_w) * ld
    if model.sleep_enabled:
        p = np.where(ld == 0.0, model.sleep_power_w, p)
    return float(p) if p.ndim == 0 else p


@dataclass
class EnergyReport:
    load: np.ndarray  # (n_bs, T)
    power_w: np.ndarray  # (n_bs, T)
    occupied: np.ndarray  # (n_bs, T) bool, BS has associated users
    tau: float

    @property
    def mean_power_w(self) -> float:
        """Mean over all BSs and all slots."""
        return float(self.power_w.mean())

    @property
    def mean_power_present_w(self) -> float:
        """Mean over BS-slots with at least one associated user."""
        return float(self.power_w[self.occupied].mean()) if self.occupied.any() else float("nan")

    @property
    def energy_j(self) -> float:
        return float(self.power_w.sum() * self.tau)

    @property
    def zero_load_slots(self) -> int:
        return int(np.count_nonzero(self.load <= 1e-12))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bs_id", "slot", "load", "power_w"])
            n_bs, T = self.load.shape
            for j in range(n_bs):
                for t in range(T):
                    w.writerow([j + 1, t + 1, f"{self.load[j, t]:.9g}", f"{self.power_w[j, t]:.9g}"])


def energy_report(x, assoc: AssociationMap, model: PowerModel = PowerModel(),
                  tau: float = 1.0) -> EnergyReport:
    load = load_matrix(x, assoc)
    # exact zeros stay zero so sleep accounting sees them
    load[np.abs(load) <= 1e-12] = 0.0
    occupied = np.stack([(assoc.serving == j).any(axis=0) for j in range(assoc.n_bs)])
    return EnergyReport(load, bs_power(load, model), occupied, tau)
