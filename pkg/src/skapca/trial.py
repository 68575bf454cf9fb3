"""One coherence block of the key-agreement protocol, end to end."""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .channel import SystemConfig, generate_channels, uplink_observation
from .estimation import estimate_leakage
from .mathkit import RngStream
from .protocol import downlink_transmit, generate_random_sequence, mf_precoders, mmse_channel_estimate
from .secrecy import key_outcome

PLUG_IN_MODES = ("estimated", "true")


@dataclass(frozen=True)
class TrialRecord:
    """Per-user outcome of one trial; every array field has length K."""

    trial_id: int
    w_true: np.ndarray
    w_hat: np.ndarray
    g_true: np.ndarray
    g_hat: np.ndarray
    g_e_true: np.ndarray
    g_e_hat: np.ndarray
    zeta: np.ndarray
    sinr_emp_bob: np.ndarray
    sinr_emp_eve: np.ndarray
    i_bob: np.ndarray
    i_eve_hat: np.ndarray
    i_eve_true: np.ndarray
    s_hat: np.ndarray
    p_out_analytic: np.ndarray
    outage_flag: np.ndarray
    sigma2_ge_hat: np.ndarray
    impair_bob: np.ndarray
    impair_eve: np.ndarray

    @classmethod
    def array_fields(cls) -> list[str]:
        return [f.name for f in fields(cls) if f.name != "trial_id"]


def run_trial(config: SystemConfig, trial_id: int, plug_in: str = "estimated") -> TrialRecord:
    """Channel, uplink, precoding, downlink, leakage estimation, key outcome.

    Deterministic in ``(config.seed, trial_id)``. ``plug_in="true"`` feeds the
    real attack strengths to the estimators instead of Bob's estimates.
    """
    if plug_in not in PLUG_IN_MODES:
        raise ValueError(f"plug_in must be one of {PLUG_IN_MODES}, got {plug_in!r}")
    rng = RngStream(config.seed, trial_id)
    try:
        ch = generate_channels(config, rng)
        up = uplink_observation(config, ch, rng)
        A = mf_precoders(mmse_channel_estimate(up.y, up.c, 0.0))
        bits, q = generate_random_sequence(config.N_d, rng, K=config.K)
        frame = downlink_transmit(config, ch, A, q, rng, bits=bits)
        w = config.w if plug_in == "true" else None
        est = estimate_leakage(config, up, frame.r, frame.q, w=w)
        out = key_outcome(config, frame.g, frame.g_e, est.g_e_hat, est.mu_ge_hat, est.sigma2_ge_hat)
    except (ValueError, FloatingPointError) as exc:
        raise RuntimeError(f"trial {trial_id} (seed {config.seed}) failed: {exc}") from exc

    # realised impairment per symbol, measured on the received blocks
    bob_noise = np.mean(np.abs(frame.r - frame.g[:, None] * frame.q) ** 2, axis=1)
    eve_noise = np.mean(np.abs(frame.r_e - frame.g_e[:, None] * frame.q) ** 2, axis=1)
    with np.errstate(divide="ignore"):
        sinr_eve = np.abs(frame.g_e) ** 2 / eve_noise
    return TrialRecord(
        trial_id=int(trial_id),
        w_true=config.w.copy(),
        w_hat=est.w_hat,
        g_true=frame.g,
        g_hat=est.g_hat,
        g_e_true=frame.g_e,
        g_e_hat=est.g_e_hat,
        zeta=up.zeta,
        sinr_emp_bob=np.abs(frame.g) ** 2 / bob_noise,
        sinr_emp_eve=sinr_eve,
        i_bob=out.i_bob,
        i_eve_hat=out.i_eve_hat,
        i_eve_true=out.i_eve_true,
        s_hat=out.s_hat,
        p_out_analytic=out.p_out,
        outage_flag=out.outage,
        sigma2_ge_hat=est.sigma2_ge_hat,
        impair_bob=bob_noise,
        impair_eve=eve_noise,
    )
