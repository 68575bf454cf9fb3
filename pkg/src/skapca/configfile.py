"""Flat ``key = value`` configuration files.

Recognised keys (``#`` and ``;`` start comments, order is free)::

    M, K, N_u, N_d          integers
    p_u_db, p_d_db          uplink / downlink power in dB
    beta, beta_e            linear large-scale gains, scalar or K comma-separated values
    p_e_db                  attack power in dB, scalar or K values; "off" means passive
    w2_db                   alternative to p_e_db: target w^2 in dB for every user
    delta, a_slack, b_slack
    seed

Sweep files add ``axis``, ``values``, ``trials``, ``metrics`` and ``plug_in``.
Keys starting with ``tol_`` or ``samples_`` are handed to the oracle suite.
Missing system keys fall back to the defaults of ``SystemConfig.default_setup``.
"""
from __future__ import annotations

import configparser
from pathlib import Path

import numpy as np

from .channel import ConfigError, SystemConfig, db_to_linear

SYSTEM_KEYS = {"M", "K", "N_u", "N_d", "p_u_db", "p_d_db", "beta", "beta_e", "p_e_db", "w2_db",
               "delta", "a_slack", "b_slack", "seed"}
SWEEP_KEYS = {"axis", "values", "trials", "metrics", "plug_in"}
_EXTRA_PREFIXES = ("tol_", "samples_")
_PASSIVE = {"off", "none", "passive", "-inf"}
_DEFAULTS = {"M": "500", "K": "10", "N_u": "100", "N_d": "1000", "p_u_db": "10", "p_d_db": "20",
             "beta": "1", "beta_e": "1", "w2_db": "-6"}


def _read_pairs(text: str, origin: str) -> dict[str, str]:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None,
                                       delimiters=("=", ":"))
    parser.optionxform = str
    try:
        parser.read_string("[config]\n" + text, source=origin)
    except configparser.Error as exc:
        raise ConfigError(f"{origin}: {exc}") from exc
    return dict(parser["config"])


def _number(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def _integer(key: str, raw: str) -> int:
    value = _number(key, raw)
    if value != int(value):
        raise ConfigError(f"{key}: expected an integer, got {raw!r}")
    return int(value)


def _vector(key: str, raw: str) -> tuple[float, ...]:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"{key}: empty value")
    return tuple(_number(key, p) for p in parts)


def parse_config_text(text: str, origin: str = "<config>") -> tuple[dict[str, str], dict[str, str]]:
    """Split a config file into system/sweep keys and oracle extras."""
    pairs = _read_pairs(text, origin)
    known, extras = {}, {}
    for key, value in pairs.items():
        if key in SYSTEM_KEYS or key in SWEEP_KEYS:
            known[key] = value
        elif key.startswith(_EXTRA_PREFIXES):
            extras[key] = value
        else:
            raise ConfigError(f"{origin}: unknown key {key!r}")
    return known, extras


def build_system_config(pairs: dict[str, str], seed: int | None = None) -> SystemConfig:
    merged = dict(_DEFAULTS)
    if "p_e_db" in pairs:
        merged.pop("w2_db")
        if "w2_db" in pairs:
            raise ConfigError("give either p_e_db or w2_db, not both")
    merged.update({k: v for k, v in pairs.items() if k in SYSTEM_KEYS})
    kwargs = {k: _integer(k, merged[k]) for k in ("M", "K", "N_u", "N_d")}
    kwargs["p_u"] = float(db_to_linear(_number("p_u_db", merged["p_u_db"])))
    kwargs["p_d"] = float(db_to_linear(_number("p_d_db", merged["p_d_db"])))
    kwargs["beta"] = _vector("beta", merged["beta"])
    kwargs["beta_e"] = _vector("beta_e", merged["beta_e"])
    for key in ("delta", "a_slack", "b_slack"):
        if key in merged:
            kwargs[key] = _number(key, merged[key])
    if seed is not None:
        kwargs["seed"] = int(seed)
    elif "seed" in merged:
        kwargs["seed"] = _integer("seed", merged["seed"])
    if "p_e_db" in merged:
        parts = [p.strip().lower() for p in merged["p_e_db"].split(",") if p.strip()]
        if not parts:
            raise ConfigError("p_e_db: empty value")
        kwargs["p_e"] = tuple(0.0 if p in _PASSIVE else float(db_to_linear(_number("p_e_db", p)))
                              for p in parts)
    config = SystemConfig(**kwargs)
    if "w2_db" in merged:
        raw = merged["w2_db"].strip().lower()
        config = config.with_attack(None if raw in _PASSIVE else _number("w2_db", raw))
    return config


def load_config(path, seed: int | None = None) -> tuple[SystemConfig, dict[str, str], dict[str, str]]:
    """Read ``path`` and return (system config, sweep keys, oracle extras)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    known, extras = parse_config_text(text, str(path))
    config = build_system_config(known, seed=seed)
    sweep = {k: v for k, v in known.items() if k in SWEEP_KEYS}
    return config, sweep, extras


def parse_float_list(raw: str, key: str = "values") -> tuple[float, ...]:
    values = _vector(key, raw)
    if not all(np.isfinite(values)):
        raise ConfigError(f"{key}: values must be finite")
    return values
