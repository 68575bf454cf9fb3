"""Key-rate and secrecy-outage analytics.

Mutual informations treat each link as a coherent BPSK channel: derotate by
the gain's phase and keep the real part, which leaves a binary-input real
AWGN channel with amplitude |g| and noise variance ``noise_var / 2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import SystemConfig
from .estimation import eve_gain_power
from .mathkit import bessel_i0e, erfc, gauss_hermite, marcum_q1

MI_NODES = 96
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class SinrPair:
    sinr_bob: float
    sinr_eve: float

    @property
    def ratio(self) -> float:
        return self.sinr_bob / self.sinr_eve


@dataclass(frozen=True)
class KeyOutcome:
    i_bob: np.ndarray
    i_eve_hat: np.ndarray
    i_eve_true: np.ndarray
    s_hat: np.ndarray
    p_out: np.ndarray
    outage: np.ndarray


def sinr_closed_form(c, M, K, load, w):
    """Average SINRs at Bob and Eve as arrays (vectorised helper)."""
    c = np.asarray(c, dtype=float)
    w2c = np.square(w) * c
    denom = 1.0 + c + w2c
    bob = (M * c + w2c + 1.0) / (denom * load)
    eve = (M * w2c + c + 1.0) / (denom * (K - 1))
    return bob, eve


def sinr_analytic(config: SystemConfig, k: int, w=None) -> SinrPair:
    if w is None:
        w = config.w[k]
    if w < 0:
        raise ValueError("w must be non-negative")
    bob, eve = sinr_closed_form(config.c[k], config.M, config.K, config.interference_load[k], w)
    return SinrPair(float(bob), float(eve))


def bi_awgn_mutual_information(gain_mag, noise_var):
    """I(Q; R) in bits for equiprobable +-1 over ``R = g Q + N``, N ~ CN(0, noise_var).

    Gauss-Hermite with 96 nodes; absolute error below 1e-6.
    """
    gain = np.abs(np.asarray(gain_mag, dtype=float))
    noise_var = np.asarray(noise_var, dtype=float)
    if np.any(noise_var <= 0):
        raise ValueError("noise_var must be positive")
    gain, noise_var = np.broadcast_arrays(gain, noise_var)
    s2 = noise_var / 2.0
    snr = gain ** 2 / s2
    root = np.sqrt(snr)[..., None]
    quad = gauss_hermite(MI_NODES)
    # 1 - E[log2(1 + exp(-2 snr - 2 sqrt(snr) Z))]
    loss = quad.expect_standard_normal(
        lambda z: np.logaddexp(0.0, -2.0 * root * (root + z)) / _LN2)
    return np.clip(1.0 - loss, 0.0, 1.0)


def key_length(i_bob, i_eve, N_d, a_slack=0.0, b_slack=0.0):
    """Adaptive secret-key length in bits, floor of the clipped budget."""
    raw = N_d * (np.asarray(i_bob) - np.asarray(i_eve)) - 2.0 * a_slack - 2.0 - b_slack
    # 1e-9 bits absorbs rounding in N_d * (i_bob - i_eve) before the floor
    out = np.floor(np.maximum(raw, 0.0) + 1e-9).astype(np.int64)
    return out if out.ndim else int(out)


def outage_probability(g_e_hat, mu_ge_hat, sigma2_ge_hat, delta):
    """P(|g_e| > (1 + delta)|g_e_hat| | observables) under the Rician posterior."""
    sigma2 = np.asarray(sigma2_ge_hat, dtype=float)
    if np.any(sigma2 <= 0):
        raise ValueError("posterior variance must be positive")
    delta = np.asarray(delta, dtype=float)
    a = np.sqrt(2.0 * np.abs(mu_ge_hat) ** 2 / sigma2)
    with np.errstate(invalid="ignore"):
        b = np.where(np.isinf(delta), np.inf,
                     np.sqrt(2.0 * np.abs((1.0 + delta) * np.asarray(g_e_hat)) ** 2 / sigma2))
    return marcum_q1(a, b)


def exp_bound(a, b):
    """exp(-(b - a)^2 / 2), an upper bound on Q1(a, b) for a <= b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a > b):
        raise ValueError("exponential bound holds only for a <= b")
    return np.exp(-0.5 * (b - a) ** 2)


def tight_bound(a, b):
    """Bessel-weighted bound on Q1(a, b) for a <= b, via the scaled I0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a > b):
        raise ValueError("bound holds only for a <= b")
    gap = b - a
    return bessel_i0e(a * b) * (np.exp(-0.5 * gap ** 2)
                                + a * np.sqrt(np.pi / 2.0) * erfc(gap / np.sqrt(2.0)))


def asymptotic_outage_bound(w, c, M, K, p_d_beta, N_d, delta, gain_weighted=False):
    """Large-M bound on the average outage probability.

    The exponent is delta^2 divided by the normalised posterior variance of
    Eve's gain. ``gain_weighted`` multiplies it by the limiting |mu_ge|^2 =
    w^2 c / (1 + (1 + w^2) c), which the plain form omits.
    """
    c = np.asarray(c, dtype=float)
    w2c = np.square(w) * c
    load = K - 1 + 1.0 / np.asarray(p_d_beta, dtype=float)
    inflate = 1.0 + w2c * c * load / (N_d * (1.0 + w2c) + load * (1.0 + c + w2c))
    exponent = (1.0 + w2c) * M * np.square(delta) / inflate
    if gain_weighted:
        exponent = exponent * w2c / (1.0 + c + w2c)
    return np.exp(-exponent)


def outage_bounds(a, b, w, c, M, K, p_d_beta, N_d, delta):
    """(exponential, Bessel-weighted, asymptotic) outage bounds."""
    return (exp_bound(a, b), tight_bound(a, b),
            asymptotic_outage_bound(w, c, M, K, p_d_beta, N_d, delta))


def nmse_ideal(config: SystemConfig, k: int, w=None):
    """NMSE floor reached when Bob knows his own gain exactly."""
    if w is None:
        w = config.w[k]
    c = config.c[k]
    return 1.0 / ((1.0 + w * w * c) * config.M) / eve_gain_power(c, config.M, w)


def key_outcome(config: SystemConfig, g, g_e, g_e_hat, mu_ge_hat, sigma2_ge_hat) -> KeyOutcome:
    """Per-user information rates, key length and outage status."""
    delta = config.delta
    i_bob = bi_awgn_mutual_information(np.abs(g), config.sigma2_n)
    i_eve_hat = bi_awgn_mutual_information((1.0 + delta) * np.abs(g_e_hat), config.sigma2_ne)
    i_eve_true = bi_awgn_mutual_information(np.abs(g_e), config.sigma2_ne)
    s_hat = key_length(i_bob, i_eve_hat, config.N_d, config.a_slack, config.b_slack)
    p_out = outage_probability(g_e_hat, mu_ge_hat, sigma2_ge_hat, delta)
    outage = np.abs(g_e) > (1.0 + delta) * np.abs(g_e_hat)
    return KeyOutcome(i_bob=i_bob, i_eve_hat=i_eve_hat, i_eve_true=i_eve_true,
                      s_hat=np.atleast_1d(s_hat), p_out=np.atleast_1d(p_out), outage=outage)
