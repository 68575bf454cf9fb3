"""Monte-Carlo orchestration: parallel trials, sweeps, analytic curves and CSV.

Trials are the unit of work. Whatever the worker count, records are merged in
trial order before any reduction, so a sweep's table depends only on the
configuration and the seed.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import ConfigError, SystemConfig
from .estimation import eve_gain_power, mse_eve
from .mathkit import marcum_q1
from .secrecy import asymptotic_outage_bound, exp_bound, sinr_closed_form, tight_bound
from .trial import PLUG_IN_MODES, TrialRecord, run_trial

AXES = ("M", "K", "N_d", "delta", "w2_db")
METRICS = ("nmse", "sinr_bob", "sinr_eve", "p_out", "outage_freq", "rs_margin", "rs_known",
           "key_bits", "w_hat")
COMPLEX_FIELDS = ("g_true", "g_hat", "g_e_true", "g_e_hat")
Z95 = 1.959963984540054


@dataclass(frozen=True)
class SweepSpec:
    base: SystemConfig
    axis: str
    values: tuple
    trials: int = 10_000
    metrics: tuple = METRICS
    plug_in: str = "estimated"

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        values = tuple(self.values)
        if not values:
            raise ValueError("a sweep needs at least one value")
        object.__setattr__(self, "values", values)
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError("trials must be a positive integer")
        unknown = set(self.metrics) - set(METRICS)
        if unknown:
            raise ValueError(f"unknown metrics {sorted(unknown)}; choose from {METRICS}")
        if self.plug_in not in PLUG_IN_MODES:
            raise ValueError(f"plug_in must be one of {PLUG_IN_MODES}")

    def configs(self):
        return [config_at(self.base, self.axis, v) for v in self.values]


def _uniform(values, name):
    if len(set(values)) != 1:
        raise ConfigError(f"cannot change K with per-user {name}; use uniform values")
    return values[0]


def config_at(base: SystemConfig, axis: str, value) -> SystemConfig:
    """``base`` with one parameter moved to ``value``."""
    if axis in ("M", "N_d"):
        return base.replace(**{axis: int(value)})
    if axis == "K":
        w2 = float(np.square(_uniform(tuple(base.w), "attack")))
        config = base.replace(K=int(value), beta=_uniform(base.beta, "beta"),
                              beta_e=_uniform(base.beta_e, "beta_e"), p_e=0.0)
        return config.with_attack(10.0 * math.log10(w2) if w2 > 0 else None)
    if axis == "delta":
        return base.replace(delta=float(value))
    if axis == "w2_db":
        return base.with_attack(None if np.isneginf(value) else float(value))
    raise ValueError(f"axis must be one of {AXES}, got {axis!r}")


def _run_chunk(config: SystemConfig, trial_ids, plug_in: str):
    return [run_trial(config, t, plug_in) for t in trial_ids]


def run_trials(config: SystemConfig, trials: int, workers: int = 1, plug_in: str = "estimated",
               first_trial: int = 0) -> list[TrialRecord]:
    """Records for trial ids ``first_trial .. first_trial + trials - 1`` in id order."""
    ids = list(range(first_trial, first_trial + int(trials)))
    if workers <= 1 or len(ids) < 2:
        return _run_chunk(config, ids, plug_in)
    size = max(1, math.ceil(len(ids) / (4 * workers)))
    chunks = [ids[i:i + size] for i in range(0, len(ids), size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_run_chunk, [config] * len(chunks), chunks, [plug_in] * len(chunks))
        records = [r for part in parts for r in part]
    return sorted(records, key=lambda r: r.trial_id)


def pool_records(records: list[TrialRecord]) -> dict[str, np.ndarray]:
    """Concatenate per-user fields in (trial, user) order."""
    if not records:
        raise ValueError("no records to pool")
    records = sorted(records, key=lambda r: r.trial_id)
    return {name: np.concatenate([np.atleast_1d(getattr(r, name)) for r in records])
            for name in TrialRecord.array_fields()}


def _mean_ci(x):
    x = np.asarray(x, dtype=float)
    n = x.size
    half = Z95 * x.std(ddof=1) / math.sqrt(n) if n > 1 else float("nan")
    return float(x.mean()), float(half)


def _ratio_ci(num, den):
    """Ratio of means with a delta-method interval."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    ratio = num.mean() / den.mean()
    n = num.size
    if n < 2:
        return float(ratio), float("nan")
    resid = (num - ratio * den) / den.mean()
    return float(ratio), float(Z95 * resid.std(ddof=1) / math.sqrt(n))


def aggregate(config: SystemConfig, pooled: dict[str, np.ndarray],
              metrics=METRICS) -> dict[str, tuple[float, float]]:
    """Metric name -> (mean, 95% half-width) over pooled user samples."""
    K = config.K
    reps = pooled["w_true"].size // K
    power = np.tile(eve_gain_power(config.c, config.M, config.w), reps)
    out = {}
    for name in metrics:
        if name == "nmse":
            out[name] = _mean_ci(np.abs(pooled["g_e_hat"] - pooled["g_e_true"]) ** 2 / power)
        elif name == "sinr_bob":
            out[name] = _ratio_ci(np.abs(pooled["g_true"]) ** 2, pooled["impair_bob"])
        elif name == "sinr_eve":
            out[name] = _ratio_ci(np.abs(pooled["g_e_true"]) ** 2, pooled["impair_eve"])
        elif name == "p_out":
            out[name] = _mean_ci(pooled["p_out_analytic"])
        elif name == "outage_freq":
            out[name] = _mean_ci(pooled["outage_flag"])
        elif name == "rs_margin":
            out[name] = _mean_ci(np.maximum(pooled["i_bob"] - pooled["i_eve_hat"], 0.0))
        elif name == "rs_known":
            out[name] = _mean_ci(np.maximum(pooled["i_bob"] - pooled["i_eve_true"], 0.0))
        elif name == "key_bits":
            out[name] = _mean_ci(pooled["s_hat"])
        elif name == "w_hat":
            out[name] = _mean_ci(pooled["w_hat"])
        else:
            raise ValueError(f"unknown metric {name!r}")
    return out


@dataclass
class Table:
    """Rows of named columns with a fixed order."""

    columns: list[str]
    rows: list[list] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows])


def run_sweep(spec: SweepSpec, workers: int = 1) -> Table:
    columns = [spec.axis, "samples"]
    for m in spec.metrics:
        columns += [m, f"{m}_ci"]
    table = Table(columns)
    for value, config in zip(spec.values, spec.configs()):
        records = run_trials(config, spec.trials, workers, spec.plug_in)
        stats = aggregate(config, pool_records(records), spec.metrics)
        row = [value, spec.trials * config.K]
        for m in spec.metrics:
            row += list(stats[m])
        table.rows.append(row)
    return table


def raw_table(records: list[TrialRecord]) -> Table:
    """One row per (trial, user); complex gains split into real and imaginary parts."""
    columns = ["trial_id", "user"]
    for name in TrialRecord.array_fields():
        columns += [f"{name}_re", f"{name}_im"] if name in COMPLEX_FIELDS else [name]
    table = Table(columns)
    for rec in sorted(records, key=lambda r: r.trial_id):
        for k in range(len(rec.w_true)):
            row = [rec.trial_id, k]
            for name in TrialRecord.array_fields():
                v = getattr(rec, name)[k]
                row += [v.real, v.imag] if name in COMPLEX_FIELDS else [v]
            table.rows.append(row)
    return table


ANALYTIC_COLUMNS = ("sinr_bob", "sinr_eve", "sinr_ratio", "mse_eve", "nmse", "nmse_ideal",
                    "pout_typical", "pout_exp_bound", "pout_tight_bound", "pout_asymptotic")


def analytic_point(config: SystemConfig, k: int = 0) -> dict[str, float]:
    """Closed-form curves for user ``k`` with the true attack strength.

    The outage columns sit at the large-M operating point: posterior mean of
    magnitude sqrt(w^2 c / (1 + (1 + w^2) c)), estimate equal to that mean and
    the known-w posterior variance.
    """
    c = float(config.c[k])
    w = float(config.w[k])
    M, K, N_d, load = config.M, config.K, config.N_d, float(config.interference_load[k])
    bob, eve = sinr_closed_form(c, M, K, load, w)
    mse = float(mse_eve(c, M, N_d, load, w))
    power = float(eve_gain_power(c, M, w))
    w2c = w * w * c
    coef = w * c / (1.0 + w2c)
    var_g = (1.0 + w2c) / ((1.0 + c + w2c) * M)
    var_post = 1.0 / ((1.0 + w2c) * M) + coef ** 2 * var_g * (load / M) / (var_g * N_d + load / M)
    a = math.sqrt(2.0 * w2c / (1.0 + c + w2c) / var_post)
    b = (1.0 + config.delta) * a
    p_d_beta = config.p_d * float(config.beta[k])
    return {
        "sinr_bob": float(bob), "sinr_eve": float(eve), "sinr_ratio": float(bob / eve),
        "mse_eve": mse, "nmse": mse / power,
        "nmse_ideal": 1.0 / ((1.0 + w2c) * M) / power,
        "pout_typical": float(marcum_q1(a, b)),
        "pout_exp_bound": float(exp_bound(a, b)),
        "pout_tight_bound": float(tight_bound(a, b)),
        "pout_asymptotic": float(asymptotic_outage_bound(w, c, M, K, p_d_beta, N_d, config.delta)),
    }


def emit_analytics(config: SystemConfig, axis: str, values, k: int = 0) -> Table:
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    table = Table([axis, *ANALYTIC_COLUMNS])
    for v in values:
        point = analytic_point(config_at(config, axis, v), k)
        table.rows.append([v] + [point[col] for col in ANALYTIC_COLUMNS])
    return table


def format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".9g")
    return str(value)


def write_csv(table: Table, out) -> None:
    """UTF-8 CSV with a header row; floats at 9 significant digits.

    ``out`` is a path or an open text stream.
    """
    if isinstance(out, (str, Path)):
        with open(out, "w", encoding="utf-8", newline="") as fh:
            write_csv(table, fh)
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([format_cell(v) for v in row])
