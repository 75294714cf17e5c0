"""Run configuration: defaults, JSON schema validation and overrides.

Precedence, lowest first: built-in defaults, the JSON config file, the
``GREENSTREAM_OUTPUT_DIR`` environment variable (output directory only),
command-line flags. Relative ``trace_csv``/``rates_csv`` paths in a config
file are resolved against the file's directory.
"""
import copy
import json
import os
from importlib import resources

import jsonschema

OUTPUT_ENV = "GREENSTREAM_OUTPUT_DIR"

DEFAULTS = {
    "scenario": {
        "n_vehicles": 10,
        "n_bs": 3,
        "bs_spacing_m": 1000.0,
        "bs_perp_offset_m": 500.0,
        "arrival": "deterministic",
        "arrival_rate": 1.0,
        "speed_mps": 25.0,
        "speed_jitter": 0.0,
        "T_s": 240.0,
        "tau_s": 1.0,
        "trace_csv": None,
        "rates_csv": None,
        "road_length_m": None,
    },
    "radio": {
        "tx_power_dbm": 43.0,
        "bandwidth_hz": 5e6,
        "noise_figure_db": 9.0,
        "snr_clip_db": 20.0,
        "min_distance_km": 0.035,
    },
    "video": {"ladder_bps": [0.25e6, 0.5e6, 0.75e6, 1.0e6], "tau_seg_s": 10.0},
    "allocator": "pgs",
    "l_req": "match",
    "b_max_bits": None,
    "solver": {"mode": "auto", "exact_max_users": 9, "time_limit_s": 300.0, "max_nodes": None},
    "power": {"p_min_w": 200.0, "p_max_w": 1300.0, "sleep_enabled": False, "sleep_power_w": 0.0},
    "seed": 0,
    "output_dir": "greenstream_out",
}


class ConfigError(ValueError):
    pass


def schema() -> dict:
    return json.loads(resources.files("greenstream").joinpath("config_schema.json").read_text())


def validate(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config {where}: {exc.message}") from None


def merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def set_path(cfg: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = cfg
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value


def parse_assignment(text: str):
    """``key.path=value``; the value is read as JSON, falling back to a string."""
    if "=" not in text:
        raise ConfigError(f"expected key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        val = json.loads(raw)
    except json.JSONDecodeError:
        val = raw
    return key.strip(), val


def load(path=None, overrides=None) -> dict:
    user = {}
    if path is not None:
        with open(path) as fh:
            try:
                user = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        validate(user)
        # input files named in a config file are relative to that file
        base = os.path.dirname(os.path.abspath(path))
        for key in ("trace_csv", "rates_csv"):
            val = user.get("scenario", {}).get(key)
            if val is not None and not os.path.isabs(val):
                user["scenario"][key] = os.path.join(base, val)
    cfg = merge(DEFAULTS, user)
    if os.environ.get(OUTPUT_ENV):
        cfg["output_dir"] = os.environ[OUTPUT_ENV]
    for key, val in (overrides or {}).items():
        set_path(cfg, key, val)
    validate(cfg)
    return cfg
