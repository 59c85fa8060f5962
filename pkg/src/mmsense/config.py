"""Declarative run configuration: defaults, JSON loading, validation, hashing.

The shipped defaults reproduce the reference experiment protocol: 216 us
frames (16 us training + 200 us payload) at 1 MHz, 9000-frame bursts,
0.1 s integration windows with 50% overlap, 100 samples per gesture per
scenario, batch size 16, 50 training samples per class.
"""

from __future__ import annotations

import copy
import hashlib
import json

from .errors import ConfigError

DEFAULTS = {
    "frame": {
        "training_duration": 16e-6,
        "payload_duration": 200e-6,
        "sample_rate": 1_000_000.0,
        "training_seed": 3623,
        "payload_seed": 1234,
    },
    "burst": {
        "n_frames": 9000,
    },
    "channel": {
        "snr_db": 10.0,
        "offset_hz": 0.0,
    },
    "grid": {
        "cit": 0.1,
        "hop": 0.05,
        "n_delay_samples": 16,
        "f_span": 500.0,
        "f_step": 10.0,
    },
    "dataset": {
        "scenario": "NLoS",
        "n_per_gesture": 100,
        "duration": 2.0,
        "seed": 0,
        "n_train_per_class": 50,
        # images only need delays covering the preset paths; smaller grid, same physics
        "delay_samples": 6,
    },
    "classifier": {
        "n_blocks": 2,
        "channels": [8, 16],
        "image_size": [32, 32],
        "n_classes": 3,
        "epochs": 100,
        "batch_size": 16,
        "lr": 0.01,
        "momentum": 0.9,
    },
    "sweep": {
        "durations": [0.25, 0.5, 1.0, 1.5, 2.0],
        "n_seeds": 5,
        "base_seed": 100,
    },
    "simulate": {
        "n_per_gesture": 100,
        "scenarios": ["LoS", "NLoS"],
    },
    "csi": {
        "n_taps": 6,
    },
}

_SCALARS = (int, float, str, bool)


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = {}
    for key, default_val in base.items():
        here = f"{path}.{key}" if path else key
        if key not in override:
            out[key] = copy.deepcopy(default_val)
            continue
        val = override[key]
        if isinstance(default_val, dict):
            if not isinstance(val, dict):
                raise ConfigError(f"config key {here} must be a section (object)")
            out[key] = _merge(default_val, val, here)
        elif isinstance(default_val, list):
            if not isinstance(val, list):
                raise ConfigError(f"config key {here} must be a list")
            out[key] = copy.deepcopy(val)
        elif isinstance(default_val, bool):
            if not isinstance(val, bool):
                raise ConfigError(f"config key {here} must be a boolean")
            out[key] = val
        elif isinstance(default_val, (int, float)):
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise ConfigError(f"config key {here} must be a number")
            out[key] = val
        elif isinstance(default_val, str):
            if not isinstance(val, str):
                raise ConfigError(f"config key {here} must be a string")
            out[key] = val
        else:  # pragma: no cover - defaults only hold the above types
            out[key] = copy.deepcopy(val)
    unknown = set(override) - set(base)
    if unknown:
        where = path or "top level"
        raise ConfigError(f"unknown config keys at {where}: {sorted(unknown)}")
    return out


def load_config(path: str | None = None) -> dict:
    """Defaults merged with an optional JSON override file."""
    if path is None:
        return copy.deepcopy(DEFAULTS)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            override = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(override, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return _merge(DEFAULTS, override)


def config_hash(cfg: dict) -> str:
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
