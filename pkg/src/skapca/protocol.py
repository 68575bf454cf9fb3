"""Alice's side of common-randomness sharing: channel estimate, matched-filter
precoding and the precoded BPSK downlink seen by every Bob and Eve.

Gains are Hermitian inner products, ``g_k = h_k^H a_k / sqrt(M)``. With
``a_k`` proportional to ``y_k`` this is the only convention under which the
target user's gain has the non-zero conditional mean the estimators rely on.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelState, SystemConfig
from .mathkit import RngStream, sample_cscg


@dataclass(frozen=True)
class Precoder:
    a: np.ndarray

    def __post_init__(self):
        norm = np.linalg.norm(self.a)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"precoder must have unit norm, got {norm}")


@dataclass(frozen=True)
class DownlinkFrame:
    bits: np.ndarray       # (K, N_d) int8
    q: np.ndarray          # (K, N_d) +-1 symbols
    g: np.ndarray          # (K,) complex gains at Bobs
    g_e: np.ndarray        # (K,) complex gains at Eves
    r: np.ndarray          # (K, N_d) Bob receptions
    r_e: np.ndarray        # (K, N_d) Eve receptions
    sigma2_n: np.ndarray   # (K,)
    sigma2_ne: float
    coupling: np.ndarray   # (K, K) h_k^H a_l / sqrt(M)
    coupling_e: np.ndarray  # (K, K) h^e_k^H a_l / sqrt(M)

    def interference_power(self, thermal=0.0):
        """Realised per-symbol impairment power at each Bob and each Eve.

        Sums the squared cross gains of the other users' beams; ``thermal``
        (Bob's noise variance) is added to Bob's value.
        """
        return cross_power(self.coupling) + thermal, cross_power(self.coupling_e)


def cross_power(coupling: np.ndarray) -> np.ndarray:
    """Row sums of |coupling|^2 excluding the diagonal."""
    p = np.abs(coupling) ** 2
    return p.sum(axis=1) - np.diag(p)


def mmse_channel_estimate(y, c, w_assumed=0.0):
    """Linear MMSE estimate of h from ``y = sqrt(c)(h + w h_e) + u``.

    ``y`` may be a single vector or a (K, M) stack with ``c`` per row.
    """
    c = np.asarray(c, dtype=float)
    scale = np.sqrt(c) / (1.0 + (1.0 + np.square(w_assumed)) * c)
    y = np.asarray(y)
    if y.ndim == 2 and scale.ndim == 1:
        scale = scale[:, None]
    return scale * y


def mf_precoder(h_hat) -> Precoder:
    h_hat = np.asarray(h_hat)
    norm = np.linalg.norm(h_hat)
    if not norm > 0:
        raise ValueError("matched filter undefined for a zero channel estimate")
    return Precoder(h_hat / norm)


def mf_precoders(h_hat: np.ndarray) -> np.ndarray:
    """Row-wise matched filters for a (K, M) stack of estimates."""
    norms = np.linalg.norm(h_hat, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("matched filter undefined for a zero channel estimate")
    return h_hat / norms


def generate_random_sequence(N_d: int, rng: RngStream, K: int | None = None):
    """Uniform bits and their BPSK image ``q = 1 - 2 b``.

    Returns one sequence, or a (K, N_d) block when ``K`` is given.
    """
    if int(N_d) != N_d or N_d < 1:
        raise ValueError(f"N_d must be a positive integer, got {N_d!r}")
    shape = int(N_d) if K is None else (int(K), int(N_d))
    bits = rng.bits(shape)
    return bits, bpsk(bits)


def bpsk(bits) -> np.ndarray:
    return 1.0 - 2.0 * np.asarray(bits, dtype=float)


def downlink_transmit(config: SystemConfig, ch: ChannelState, precoders, q, rng: RngStream,
                      bits=None, noise: bool = True, interference: bool = True) -> DownlinkFrame:
    """Precoded downlink of all K sequences, normalised per receiver.

    ``noise`` and ``interference`` are test hooks; with both off ``r_k`` is
    exactly ``g_k q_k``. Eve never sees thermal noise.
    """
    if isinstance(precoders, (list, tuple)):
        A = np.stack([p.a if isinstance(p, Precoder) else np.asarray(p) for p in precoders])
    else:
        A = np.asarray(precoders)
    q = np.asarray(q)
    K, M = config.K, config.M
    if A.shape != (K, M):
        raise ValueError(f"precoders must be {(K, M)}, got {A.shape}")
    if q.shape != (K, config.N_d):
        raise ValueError(f"sequences must be {(K, config.N_d)}, got {q.shape}")
    if ch.h.shape != (K, M) or ch.h_e.shape != (K, M):
        raise ValueError("channel state does not match the configuration")

    root_m = np.sqrt(M)
    C = ch.h.conj() @ A.T / root_m
    Ce = ch.h_e.conj() @ A.T / root_m
    g = np.diag(C).copy()
    g_e = np.diag(Ce).copy()
    if interference:
        # q is real, so one stacked real product replaces two complex ones
        parts = np.concatenate([C.real, C.imag, Ce.real, Ce.imag]) @ q.real
        r = parts[:K] + 1j * parts[K:2 * K]
        r_e = parts[2 * K:3 * K] + 1j * parts[3 * K:]
    else:
        r = g[:, None] * q
        r_e = g_e[:, None] * q
    if noise:
        thermal = 1.0 / (config.p_d * config.beta_arr * M)
        r = r + np.sqrt(thermal)[:, None] * sample_cscg(q.shape, 1.0, rng)
    if bits is None:
        bits = ((1.0 - q.real) / 2.0).astype(np.int8)
    return DownlinkFrame(bits=bits, q=q, g=g, g_e=g_e, r=r, r_e=r_e,
                         sigma2_n=config.sigma2_n, sigma2_ne=config.sigma2_ne,
                         coupling=C, coupling_e=Ce)
