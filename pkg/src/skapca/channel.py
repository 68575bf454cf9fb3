"""System parameters, small-scale fading and the uplink training statistic.

The N_u x M training matrix is never built. With orthonormal pilots the
per-user projection ``y_k`` is all that matters, so it is drawn directly as
``sqrt(c_k) (h_k + w_k h^e_k) + u_k``. ``pilot_matrix_statistic`` builds the
full matrix with Walsh-Hadamard pilots for checking that shortcut.
"""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import hadamard

from .mathkit import RngStream, sample_cscg

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Invalid system configuration."""


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def _per_user(value, K: int, name: str) -> tuple[float, ...]:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.repeat(arr, K)
    if arr.size != K:
        raise ConfigError(f"{name} needs 1 or K={K} entries, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} must be finite")
    return tuple(float(v) for v in arr)


@dataclass(frozen=True)
class SystemConfig:
    """Protocol and attack parameters for one cell.

    Powers are linear ratios to the unit noise variance. ``beta``, ``beta_e``
    and ``p_e`` accept a scalar (shared by all users) or K values; they are
    stored as tuples so configs stay hashable and cheap to ship to workers.
    """

    M: int
    K: int
    N_u: int
    N_d: int
    p_u: float
    p_d: float
    beta: tuple = 1.0
    beta_e: tuple = 1.0
    p_e: tuple = 0.0
    delta: float = 0.0
    a_slack: float = 0.0
    b_slack: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("M", "K", "N_u", "N_d", "seed"):
            value = getattr(self, name)
            if int(value) != value:
                raise ConfigError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.M < 1:
            raise ConfigError("M must be >= 1")
        if self.K < 2:
            raise ConfigError("K must be >= 2 so that Eve's interference variance is positive")
        if self.N_u < self.K:
            raise ConfigError(f"N_u={self.N_u} < K={self.K}: orthonormal pilots do not exist")
        if self.N_d < 1:
            raise ConfigError("N_d must be >= 1")
        for name in ("p_u", "p_d"):
            value = float(getattr(self, name))
            if not (np.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be positive and finite")
            object.__setattr__(self, name, value)
        for name in ("beta", "beta_e", "p_e"):
            object.__setattr__(self, name, _per_user(getattr(self, name), self.K, name))
        if min(self.beta) <= 0 or min(self.beta_e) <= 0:
            raise ConfigError("large-scale gains must be positive")
        if min(self.p_e) < 0:
            raise ConfigError("attack powers must be non-negative")
        for name in ("delta", "a_slack", "b_slack"):
            value = float(getattr(self, name))
            if not (np.isfinite(value) and value >= 0):
                raise ConfigError(f"{name} must be a finite non-negative number")
            object.__setattr__(self, name, value)
        if np.any(self.w > 1.0):
            log.warning("attack strength w > 1 for users %s", np.nonzero(self.w > 1.0)[0].tolist())

    @classmethod
    def default_setup(cls, M=500, K=10, N_d=1000, w2_db=-6.0, **kw) -> "SystemConfig":
        """10 dB uplink, 20 dB downlink, N_u = 100, unit large-scale gains."""
        base = dict(M=M, K=K, N_u=100, N_d=N_d, p_u=10.0, p_d=100.0, beta=1.0, beta_e=1.0)
        base.update(kw)
        return cls(**base).with_attack(w2_db)

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    def with_attack(self, w2_db) -> "SystemConfig":
        """Set every eavesdropper's power so that w_k^2 equals ``w2_db`` (dB).

        ``-inf`` (or None) selects passive eavesdropping.
        """
        if w2_db is None:
            w2 = 0.0
        else:
            w2 = db_to_linear(w2_db)
        p_e = w2 * self.p_u * self.beta_arr / self.beta_e_arr
        return self.replace(p_e=tuple(p_e.tolist()))

    @property
    def beta_arr(self) -> np.ndarray:
        return np.asarray(self.beta)

    @property
    def beta_e_arr(self) -> np.ndarray:
        return np.asarray(self.beta_e)

    @property
    def p_e_arr(self) -> np.ndarray:
        return np.asarray(self.p_e)

    @property
    def c(self) -> np.ndarray:
        """Per-user uplink training SNR c_k = p_u beta_k N_u."""
        return self.p_u * self.beta_arr * self.N_u

    @property
    def w(self) -> np.ndarray:
        return np.sqrt(self.p_e_arr * self.beta_e_arr / (self.p_u * self.beta_arr))

    @property
    def interference_load(self) -> np.ndarray:
        """K - 1 + 1/(p_d beta_k), the per-user downlink impairment budget."""
        return self.K - 1 + 1.0 / (self.p_d * self.beta_arr)

    @property
    def sigma2_n(self) -> np.ndarray:
        """Bob's interference-plus-noise variance per symbol."""
        return self.interference_load / self.M

    @property
    def sigma2_ne(self) -> float:
        """Eve's interference-only variance per symbol (no thermal noise)."""
        return (self.K - 1) / self.M


@dataclass(frozen=True)
class ChannelState:
    """Small-scale fading of one coherence block; rows are users."""

    h: np.ndarray    # (K, M)
    h_e: np.ndarray  # (K, M)


@dataclass(frozen=True)
class UplinkObservation:
    y: np.ndarray     # (K, M) sufficient statistics
    zeta: np.ndarray  # (K,) norms of y
    c: np.ndarray     # (K,)


def generate_channels(config: SystemConfig, rng: RngStream) -> ChannelState:
    shape = (config.K, config.M)
    h = sample_cscg(shape, 1.0, rng)
    h_e = sample_cscg(shape, 1.0, rng)
    return ChannelState(h, h_e)


def effective_attack_strength(config: SystemConfig, k: int) -> float:
    if not 0 <= k < config.K:
        raise IndexError(f"user index {k} outside 0..{config.K - 1}")
    return float(config.w[k])


def uplink_observation(config: SystemConfig, ch: ChannelState, rng: RngStream,
                       noise: bool = True) -> UplinkObservation:
    """Pilot-correlated training statistic for every user.

    ``noise=False`` is a test hook that drops the thermal term ``u_k``.
    """
    c = config.c
    y = np.sqrt(c)[:, None] * (ch.h + config.w[:, None] * ch.h_e)
    if noise:
        y = y + sample_cscg(y.shape, 1.0, rng)
    return UplinkObservation(y=y, zeta=np.linalg.norm(y, axis=1), c=c)


def walsh_pilots(K: int, N_u: int) -> np.ndarray:
    """K orthonormal binary pilots of length N_u (rows of a Hadamard matrix)."""
    n = 1 << max(0, (N_u - 1).bit_length())
    if n != N_u:
        raise ConfigError(f"Walsh-Hadamard pilots need N_u to be a power of two, got {N_u}")
    return hadamard(N_u)[:K].astype(float) / np.sqrt(N_u)


def pilot_matrix_statistic(config: SystemConfig, ch: ChannelState, rng: RngStream) -> np.ndarray:
    """Build the full received training matrix and project it on each pilot.

    Debug path only: the result has the same law as ``uplink_observation``.
    """
    psi = walsh_pilots(config.K, config.N_u)
    users = np.sqrt(config.p_u * config.beta_arr * config.N_u)[:, None] * ch.h
    eves = np.sqrt(config.p_e_arr * config.beta_e_arr * config.N_u)[:, None] * ch.h_e
    Y = (users + eves).T @ psi + sample_cscg((config.M, config.N_u), 1.0, rng)
    return (Y @ psi.conj().T).T
