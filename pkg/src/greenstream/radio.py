"""Path loss, SNR and clipped Shannon rate; builds the predicted rate matrix."""
import csv
from dataclasses import dataclass

import numpy as np

from .scenario import AssociationMap, Scenario, associate, distance_matrix_km


@dataclass(frozen=True)
class RadioParams:
    tx_power_dbm: float = 43.0
    bandwidth_hz: float = 5e6
    noise_figure_db: float = 9.0
    snr_clip_db: float = 20.0
    min_distance_km: float = 0.035

    def __post_init__(self):
        if not self.bandwidth_hz > 0:
            raise ValueError("bandwidth must be positive")
        if not np.isfinite(self.snr_clip_db):
            raise ValueError("SNR clip must be finite")
        if not self.min_distance_km > 0:
            raise ValueError("minimum distance must be positive")

    @property
    def noise_floor_dbm(self) -> float:
        return -174.0 + 10.0 * np.log10(self.bandwidth_hz) + self.noise_figure_db

    @property
    def rate_cap(self) -> float:
        return self.bandwidth_hz * np.log2(1.0 + 10.0 ** (self.snr_clip_db / 10.0))


DEFAULT_RADIO = RadioParams()


def path_loss_db(d_km, params: RadioParams = DEFAULT_RADIO):
    d = np.maximum(np.asarray(d_km, dtype=float), params.min_distance_km)
    out = 128.1 + 37.6 * np.log10(d)
    return float(out) if out.ndim == 0 else out


def snr_db(d_km, params: RadioParams = DEFAULT_RADIO):
    return params.tx_power_dbm - path_loss_db(d_km, params) - params.noise_floor_dbm


def link_rate(snr_db_value, params: RadioParams = DEFAULT_RADIO):
    """Shannon rate in bit/s with the SNR clipped at ``snr_clip_db``."""
    s = np.minimum(np.asarray(snr_db_value, dtype=float), params.snr_clip_db)
    out = params.bandwidth_hz * np.log2(1.0 + 10.0 ** (s / 10.0))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RateMatrix:
    rates: np.ndarray  # (N, T) bit/s, 0 where absent
    present: np.ndarray  # (N, T) bool
    tau: float
    user_ids: tuple

    @property
    def shape(self):
        return self.rates.shape

    def write_csv(self, path, assoc: AssociationMap | None = None) -> None:
        """``user_id,slot,rate_bps`` rows, plus ``bs_id`` (1-based) when ``assoc`` is given."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["user_id", "slot", "rate_bps"] + (["bs_id"] if assoc is not None else []))
            for i, uid in enumerate(self.user_ids):
                for t in np.flatnonzero(self.present[i]):
                    row = [uid, t + 1, f"{self.rates[i, t]:.9g}"]
                    if assoc is not None:
                        row.append(int(assoc.serving[i, t]) + 1)
                    w.writerow(row)


def read_rate_table(path, T: int, tau: float = 1.0) -> tuple[RateMatrix, AssociationMap]:
    """Load a rate table written by ``RateMatrix.write_csv``.

    Without a ``bs_id`` column every user is served by a single BS.
    """
    recs = {}
    n_bs = 1
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header not in (["user_id", "slot", "rate_bps"], ["user_id", "slot", "rate_bps", "bs_id"]):
            raise ValueError(f"{path}: expected header user_id,slot,rate_bps[,bs_id], got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: malformed row {row}")
            try:
                uid, slot, r = int(row[0]), int(row[1]), float(row[2])
                j = int(row[3]) if len(row) == 4 else 1
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed row {row}") from None
            if not 1 <= slot <= T:
                raise ValueError(f"{path}:{lineno}: slot {slot} outside the window 1..{T}")
            if not r > 0 or j < 1:
                raise ValueError(f"{path}:{lineno}: rate must be positive and bs_id >= 1")
            recs.setdefault(uid, {})[slot] = (r, j)
            n_bs = max(n_bs, j)
    uids = tuple(sorted(recs))
    rates = np.zeros((len(uids), T))
    serving = -np.ones((len(uids), T), dtype=int)
    for i, uid in enumerate(uids):
        for slot, (r, j) in recs[uid].items():
            rates[i, slot - 1] = r
            serving[i, slot - 1] = j - 1
    present = serving >= 0
    return RateMatrix(rates, present, tau, uids), AssociationMap(serving, n_bs)


def build_rate_matrix(scenario: Scenario, params: RadioParams = DEFAULT_RADIO,
                      assoc: AssociationMap | None = None) -> RateMatrix:
    assoc = assoc if assoc is not None else associate(scenario)
    d = distance_matrix_km(scenario, assoc)
    present = assoc.serving >= 0
    rates = np.zeros(d.shape)
    rates[present] = link_rate(snr_db(d[present], params), params)
    return RateMatrix(rates, present, scenario.tau, tuple(scenario.user_ids))
