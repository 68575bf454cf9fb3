"""Bob's estimate of the information leaked to his eavesdropper.

Three stages, each a closed form:

1. attack strength ``w`` from the drop of Bob's received strength against the
   level promised by Alice's side information ``zeta = ||y||``;
2. MMSE estimate of Bob's own effective gain ``g`` (Gaussian prior given
   ``zeta``, Gaussian likelihood from the received sequence);
3. MMSE estimate of Eve's gain ``g_e``, which is linear in the deficit
   ``zeta / sqrt(cM) - g_hat``.

All functions broadcast over users. Received blocks ``r`` and ``q`` carry
symbols on the last axis. Correlations use ``q^H r``; with real ``q`` and a
real prior mean this estimates ``g`` itself, not its conjugate.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import SystemConfig, UplinkObservation

LS_FLOOR = 1e-6


def _sequence_stats(r, q):
    r = np.asarray(r)
    q = np.asarray(q)
    qq = np.sum(np.abs(q) ** 2, axis=-1)
    qr = np.sum(np.conj(q) * r, axis=-1)
    return qq, qr


def estimate_attack_strength(r, q, zeta, c, M, eps: float = LS_FLOOR):
    """Closed-form large-M maximum-likelihood estimate of ``w``.

    The least-squares gain is taken on the real axis and floored at ``eps``,
    so a vanishing received strength reads as a very strong (finite) attack.
    """
    qq, qr = _sequence_stats(r, q)
    if np.any(qq <= 0):
        raise ValueError("q must have positive energy")
    g_ls = np.maximum(np.real(qr) / qq, eps)
    c = np.asarray(c, dtype=float)
    excess = np.asarray(zeta) / (g_ls * np.sqrt(c * M)) - (1.0 + 1.0 / c)
    return np.sqrt(np.maximum(excess, 0.0))


def prior_bob_gain(zeta, c, M, w):
    """Mean and variance of ``g`` given ``zeta`` under attack strength ``w``."""
    c = np.asarray(c, dtype=float)
    w2 = np.square(w)
    denom = 1.0 + (1.0 + w2) * c
    mu = np.sqrt(c) / denom * np.asarray(zeta) / np.sqrt(M)
    var = (1.0 + w2 * c) / (denom * M)
    return mu, var


def prior_eve_gain(zeta, c, M, w):
    """Mean and variance of ``g_e`` given ``zeta`` alone."""
    c = np.asarray(c, dtype=float)
    w = np.asarray(w, dtype=float)
    denom = 1.0 + (1.0 + w * w) * c
    mu = w * np.sqrt(c) / denom * np.asarray(zeta) / np.sqrt(M)
    var = (1.0 + c) / (denom * M)
    return mu, var


def estimate_edcg_bob(r, q, zeta, c, M, sigma2_n, w):
    """MMSE estimate of Bob's gain and its posterior (mean, variance).

    Returns ``(g_hat, mu_g_hat, sigma2_g_hat)``; the first two coincide since
    the MMSE estimate is the posterior mean.
    """
    qq, qr = _sequence_stats(r, q)
    if np.any(qq <= 0):
        raise ValueError("q must have positive energy")
    sigma2_n = np.asarray(sigma2_n, dtype=float)
    if np.any(sigma2_n <= 0):
        raise ValueError("sigma2_n must be positive")
    mu_g, var_g = prior_bob_gain(zeta, c, M, w)
    if np.any(var_g <= 0):
        raise ValueError("prior variance must be positive")
    shrink = sigma2_n / var_g
    g_hat = (qr + shrink * mu_g) / (qq + shrink)
    var_post = sigma2_n * var_g / (qq * var_g + sigma2_n)
    return g_hat, g_hat, var_post


def eve_coefficient(c, w):
    """Slope w c / (1 + w^2 c) linking Bob's gain deficit to Eve's gain."""
    c = np.asarray(c, dtype=float)
    return w * c / (1.0 + np.square(w) * c)


def estimate_edcg_eve(g_hat, zeta, c, M, w):
    c = np.asarray(c, dtype=float)
    if np.any(np.asarray(w) < 0):
        raise ValueError("w must be non-negative")
    return eve_coefficient(c, w) * (np.asarray(zeta) / np.sqrt(c * M) - g_hat)


def posterior_eve(r, q, zeta, c, M, sigma2_n, w):
    """Posterior mean and variance of ``g_e`` given (r, q, zeta)."""
    qq, _ = _sequence_stats(r, q)
    mu_g_hat = estimate_edcg_bob(r, q, zeta, c, M, sigma2_n, w)[1]
    _, var_g = prior_bob_gain(zeta, c, M, w)
    c = np.asarray(c, dtype=float)
    coef = eve_coefficient(c, w)
    mu = coef * (np.asarray(zeta) / np.sqrt(c * M) - mu_g_hat)
    var = 1.0 / ((1.0 + np.square(w) * c) * M) + coef ** 2 * var_g * sigma2_n / (var_g * qq + sigma2_n)
    return mu, var


def mse_eve(c, M, N_d, load, w):
    """MSE of the Eve-gain estimator for known ``w``.

    ``load`` is K - 1 + 1/(p_d beta); ``N_d`` stands in for q^H q.
    """
    c = np.asarray(c, dtype=float)
    w2c = np.square(w) * c
    coef = eve_coefficient(c, w)
    second = coef ** 2 / (N_d / load + (1.0 + c + w2c) / (1.0 + w2c))
    return (1.0 / (1.0 + w2c) + second) / M


def analytic_mse_eve(config: SystemConfig, k: int, w=None):
    """Closed-form E|g_e_hat - g_e|^2 for user ``k`` (true ``w`` by default)."""
    if w is None:
        w = config.w[k]
    return mse_eve(config.c[k], config.M, config.N_d, config.interference_load[k], w)


def eve_gain_power(c, M, w):
    """Unconditional E|g_e|^2 = (M w^2 c + c + 1) / (M (1 + (1 + w^2) c))."""
    c = np.asarray(c, dtype=float)
    w2 = np.square(w)
    return (M * w2 * c + c + 1.0) / (M * (1.0 + (1.0 + w2) * c))


def bob_gain_power(c, M, w):
    """Unconditional E|g|^2 = (M c + w^2 c + 1) / (M (1 + (1 + w^2) c))."""
    c = np.asarray(c, dtype=float)
    w2 = np.square(w)
    return (M * c + w2 * c + 1.0) / (M * (1.0 + (1.0 + w2) * c))


@dataclass(frozen=True)
class LeakageEstimate:
    w_hat: np.ndarray
    g_hat: np.ndarray
    g_e_hat: np.ndarray
    mu_g: np.ndarray
    sigma2_g: np.ndarray
    mu_g_hat: np.ndarray
    sigma2_g_hat: np.ndarray
    mu_ge_hat: np.ndarray
    sigma2_ge_hat: np.ndarray


def estimate_leakage(config: SystemConfig, uplink: UplinkObservation, r, q, w=None) -> LeakageEstimate:
    """Run the three estimation stages for every user.

    By default ``w`` is Bob's own estimate; pass the true strengths to
    isolate the plug-in loss.
    """
    M = config.M
    c = uplink.c
    zeta = uplink.zeta
    sigma2_n = config.sigma2_n
    w_hat = estimate_attack_strength(r, q, zeta, c, M)
    w_use = w_hat if w is None else np.broadcast_to(np.asarray(w, dtype=float), w_hat.shape)
    mu_g, var_g = prior_bob_gain(zeta, c, M, w_use)
    g_hat, mu_g_hat, var_g_hat = estimate_edcg_bob(r, q, zeta, c, M, sigma2_n, w_use)
    g_e_hat = estimate_edcg_eve(g_hat, zeta, c, M, w_use)
    mu_ge, var_ge = posterior_eve(r, q, zeta, c, M, sigma2_n, w_use)
    return LeakageEstimate(w_hat=w_hat, g_hat=g_hat, g_e_hat=g_e_hat, mu_g=mu_g, sigma2_g=var_g,
                           mu_g_hat=mu_g_hat, sigma2_g_hat=var_g_hat,
                           mu_ge_hat=mu_ge, sigma2_ge_hat=var_ge)
