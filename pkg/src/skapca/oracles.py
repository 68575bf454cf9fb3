"""Brute-force reference computations checked against the closed forms.

``verify_oracles`` runs every check and returns a report; nothing here is on
the production path. Estimators are looked up on their modules at call time
so tests can corrupt one and watch the matching check fail.

Tolerances and sample sizes are keyed by check name and can be overridden
with ``tol_<name>`` / ``samples_<name>`` entries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy import integrate, special, stats

from . import estimation, mathkit, secrecy
from .channel import SystemConfig, generate_channels, uplink_observation
from .mathkit import RngStream
from .protocol import downlink_transmit, generate_random_sequence, mf_precoders, mmse_channel_estimate

DEFAULT_TOLERANCES = {
    "marcum": 1e-10,
    "bessel": 1e-12,
    "erfc": 1e-12,
    "hermite": 1e-10,
    "mi": 2e-3,
    "mse": 0.03,
    "sinr": 0.03,
    "mmse_bob": 0.05,
    "posterior_eve": 0.05,
    "ks": 0.01,
    "mle": 0.01,
    "outage_z": 3.0,
    "slope": 0.05,
}
DEFAULT_SAMPLES = {
    "mi": 10_000_000,
    "mse": 20_000,
    "sinr": 20_000,
    "ks": 10_000,
    "mle": 400,
    "outage": 10_000,
    "slope": 2_000,
}
MI_SNRS = (0.1, 0.5, 1.0, 2.0, 5.0)
SLOPE_M = (32, 64, 128, 256, 512, 1024, 2048, 4096)
ORACLE_SEED_OFFSET = 7919


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    reference: float
    tolerance: float
    detail: str = ""


@dataclass
class Report:
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, value, reference, tolerance, ok, detail=""):
        self.checks.append(Check(name, bool(ok), float(value), float(reference), float(tolerance), detail))

    def __getitem__(self, name) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


# ---- reference implementations -------------------------------------------

def marcum_reference(a: float, b: float) -> float:
    """Adaptive quadrature of the Rician tail, with scaled Bessel weights."""
    def f(x):
        return x * math.exp(-0.5 * (x - a) ** 2) * special.i0e(a * x)
    if a <= b:
        val, _ = integrate.quad(f, b, max(a, b) + 40.0, epsabs=1e-14, epsrel=1e-13, limit=400)
        return val
    lo = max(0.0, a - 40.0)
    val, _ = integrate.quad(f, lo, b, epsabs=1e-14, epsrel=1e-13, limit=400) if b > lo else (0.0, 0.0)
    return 1.0 - val


def bessel_i0_series(x: float, terms: int = 30) -> float:
    half2 = (x / 2.0) ** 2
    term, total = 1.0, 1.0
    for k in range(1, terms):
        term *= half2 / (k * k)
        total += term
    return total


def bessel_i0e_asymptotic(x: float, terms: int = 10) -> float:
    """Large-x expansion of exp(-x) I0(x)."""
    term, total = 1.0, 1.0
    for k in range(1, terms):
        term *= (2 * k - 1) ** 2 / (8.0 * k * x)
        total += term
    return total / math.sqrt(2.0 * math.pi * x)


def erfc_reference(x: float) -> float:
    with mpmath.workdps(40):
        return float(mpmath.erfc(x))


def mi_histogram(snr: float, samples: int, rng: RngStream, bins: int = 4000, chunk: int = 1_000_000) -> float:
    """Plug-in MI of equiprobable +-1 through unit-variance real AWGN with amplitude sqrt(snr).

    The output axis is histogrammed and the joint table gives I = H(Y) - H(Y|X).
    """
    amp = math.sqrt(snr)
    edges = np.linspace(-amp - 7.0, amp + 7.0, bins + 1)
    counts = np.zeros((2, bins))
    left = samples
    while left > 0:
        n = min(chunk, left)
        x = rng.bits(n)
        y = amp * (1.0 - 2.0 * x) + rng.normal(n)
        idx = np.clip(np.searchsorted(edges, y) - 1, 0, bins - 1)
        counts += np.bincount(idx * 2 + x, minlength=2 * bins).reshape(bins, 2).T
        left -= n
    joint = counts / counts.sum()
    px = joint.sum(axis=1, keepdims=True)
    py = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    return float(np.sum(joint[nz] * np.log2(joint[nz] / (px @ py)[nz])))


def grid_mle_attack(s, zeta, c, M, sigma2_n, N_d, grid=None):
    """Exact-likelihood attack strength from the correlation ``s = q^H r / N_d``.

    Given zeta, s ~ CN(mu_g(w), sigma2_g(w) + sigma2_n / N_d); the maximiser
    over a grid of w is returned for every user.
    """
    if grid is None:
        grid = np.linspace(0.0, 1.5, 1501)
    mu, var = estimation.prior_bob_gain(np.asarray(zeta)[:, None], np.asarray(c)[:, None], M, grid[None, :])
    v = var + np.asarray(sigma2_n)[:, None] / N_d
    ll = -np.log(v) - np.abs(np.asarray(s)[:, None] - mu) ** 2 / v
    return grid[np.argmax(ll, axis=1)]


def _blocks(config: SystemConfig, n_trials: int, seed: int):
    """Yield (uplink, frame) for ``n_trials`` coherence blocks."""
    for t in range(n_trials):
        rng = RngStream(seed, t)
        ch = generate_channels(config, rng)
        up = uplink_observation(config, ch, rng)
        A = mf_precoders(mmse_channel_estimate(up.y, up.c, 0.0))
        bits, q = generate_random_sequence(config.N_d, rng, K=config.K)
        yield ch, up, A, downlink_transmit(config, ch, A, q, rng, bits=bits)


def _trials_for(samples: int, K: int) -> int:
    return max(1, math.ceil(samples / K))


# ---- checks ----------------------------------------------------------------

def check_special_functions(report: Report, tol: dict) -> None:
    pts = [(0.0, 1.0), (1.0, 2.0), (2.0, 1.0), (5.0, 5.0), (3.0, 8.0), (10.0, 12.0),
           (25.0, 26.0), (30.0, 29.0), (40.0, 41.5)]
    errs = [abs(mathkit.marcum_q1(a, b) - marcum_reference(a, b)) for a, b in pts]
    report.add("marcum_quadrature", max(errs), 0.0, tol["marcum"], max(errs) <= tol["marcum"],
               "max abs error vs adaptive quadrature")

    xs = np.array([0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0])
    rel = [abs(mathkit.bessel_i0(x) / bessel_i0_series(x) - 1.0) for x in xs]
    big = [abs(mathkit.bessel_i0e(x) / bessel_i0e_asymptotic(x) - 1.0) for x in (50.0, 200.0, 700.0)]
    worst = max(rel + big)
    report.add("bessel_series", worst, 0.0, tol["bessel"], worst <= tol["bessel"],
               "relative error vs power series and asymptotic expansion")

    xs = np.concatenate([np.linspace(-5.0, 5.0, 41), [10.0, 20.0, 26.0]])
    rel = max(abs(mathkit.erfc(x) / erfc_reference(x) - 1.0) for x in xs)
    report.add("erfc_reference", rel, 0.0, tol["erfc"], rel <= tol["erfc"], "relative error vs 40-digit erfc")

    quad = mathkit.gauss_hermite(64)
    errs = [abs(np.sum(quad.weights * quad.nodes ** (2 * j)) - special.gamma(j + 0.5)) / special.gamma(j + 0.5)
            for j in range(8)]
    report.add("hermite_moments", max(errs), 0.0, tol["hermite"], max(errs) <= tol["hermite"],
               "even moments of the 64-node rule")


def check_mutual_information(report: Report, tol: dict, samples: dict, seed: int) -> None:
    worst = 0.0
    for i, snr in enumerate(MI_SNRS):
        # amplitude sqrt(snr / 2) against complex noise of unit variance gives real SNR `snr`
        quad = float(secrecy.bi_awgn_mutual_information(math.sqrt(snr / 2.0), 1.0))
        hist = mi_histogram(snr, samples["mi"], RngStream(seed, 10_000 + i))
        worst = max(worst, abs(quad - hist))
    report.add("mi_histogram", worst, 0.0, tol["mi"], worst <= tol["mi"],
               f"max |quadrature - histogram| over SNRs {MI_SNRS}")


def check_estimators(report: Report, config: SystemConfig, tol: dict, samples: dict, seed: int) -> None:
    """MSE, SINR, posterior variances and KS tests from one batch of blocks."""
    K, M = config.K, config.M
    n = _trials_for(max(samples["mse"], samples["sinr"], samples["ks"]), K)
    w, c = config.w, config.c
    err_e, norm_e, err_b, norm_b = [], [], [], []
    g2, ge2, imp_b, imp_e, proj, yre = [], [], [], [], [], []
    for ch, up, A, fr in _blocks(config, n, seed):
        r, q = fr.r, fr.q
        g_hat, _, var_g_hat = estimation.estimate_edcg_bob(r, q, up.zeta, c, M, config.sigma2_n, w)
        g_e_hat = estimation.estimate_edcg_eve(g_hat, up.zeta, c, M, w)
        mu_e, var_e = estimation.posterior_eve(r, q, up.zeta, c, M, config.sigma2_n, w)
        err_e.append(np.abs(g_e_hat - fr.g_e) ** 2)
        norm_e.append(np.abs(fr.g_e - mu_e) ** 2 / var_e)
        err_b.append(np.abs(g_hat - fr.g) ** 2 / var_g_hat)
        g2.append(np.abs(fr.g) ** 2)
        ge2.append(np.abs(fr.g_e) ** 2)
        imp_b.append(np.mean(np.abs(r - fr.g[:, None] * q) ** 2, axis=1))
        imp_e.append(np.mean(np.abs(fr.r_e - fr.g_e[:, None] * q) ** 2, axis=1))
        # h_k^H a_l for disjoint pairs (0,1), (2,3), ...; CN(0, 1) by the projection lemma
        pairs = np.diag(fr.coupling[0::2, 1::2])
        proj.append(np.sqrt(2.0 * M) * pairs)
        yre.append(up.y[:, 0].real / np.sqrt((1.0 + (1.0 + w ** 2) * c) / 2.0))

    mse_emp = np.concatenate(err_e).reshape(n, K).mean(axis=0)
    mse_ref = np.array([estimation.mse_eve(c[k], M, config.N_d, config.interference_load[k], w[k])
                        for k in range(K)])
    rel = float(np.max(np.abs(mse_emp.mean() / mse_ref.mean() - 1.0)))
    report.add("mse_eve", mse_emp.mean(), mse_ref.mean(), tol["mse"], rel <= tol["mse"],
               f"{n * K} samples, true-w plug-in")

    sb = np.sum(g2) / np.sum(imp_b)
    se = np.sum(ge2) / np.sum(imp_e)
    ref_b, ref_e = secrecy.sinr_closed_form(c[0], M, K, config.interference_load[0], w[0])
    rel_b, rel_e = abs(sb / ref_b - 1.0), abs(se / ref_e - 1.0)
    report.add("sinr_bob", sb, ref_b, tol["sinr"], rel_b <= tol["sinr"], "ratio of means")
    report.add("sinr_eve", se, ref_e, tol["sinr"], rel_e <= tol["sinr"], "ratio of means")

    nb = float(np.mean(np.concatenate(err_b)))
    ne = float(np.mean(np.concatenate(norm_e)))
    report.add("mmse_bob_variance", nb, 1.0, tol["mmse_bob"], abs(nb - 1.0) <= tol["mmse_bob"],
               "mean |g_hat - g|^2 / posterior variance")
    report.add("posterior_eve_variance", ne, 1.0, tol["posterior_eve"], abs(ne - 1.0) <= tol["posterior_eve"],
               "mean |g_e - mu|^2 / posterior variance")

    proj = np.concatenate(proj)[: samples["ks"]]
    p_proj = min(stats.kstest(proj.real, "norm").pvalue, stats.kstest(proj.imag, "norm").pvalue)
    report.add("ks_projection", p_proj, tol["ks"], tol["ks"], p_proj >= tol["ks"],
               f"KS p-value, {proj.size} samples")
    yre = np.concatenate(yre)[: samples["ks"]]
    p_y = stats.kstest(yre, "norm").pvalue
    report.add("ks_uplink", p_y, tol["ks"], tol["ks"], p_y >= tol["ks"], f"KS p-value, {yre.size} samples")


def check_mle(report: Report, config: SystemConfig, tol: dict, samples: dict, seed: int) -> None:
    """Closed-form attack strength against the exact-likelihood grid search at large M."""
    big = config.replace(M=max(config.M, 4096))
    w = big.w
    if np.all(w == 0):
        big = big.with_attack(-6.0)
        w = big.w
    diffs = []
    for ch, up, A, fr in _blocks(big, _trials_for(samples["mle"], big.K), seed + 1):
        closed = estimation.estimate_attack_strength(fr.r, fr.q, up.zeta, up.c, big.M)
        s = np.sum(fr.q * fr.r, axis=1) / big.N_d
        exact = grid_mle_attack(s, up.zeta, up.c, big.M, big.sigma2_n, big.N_d)
        diffs.append(np.abs(closed - exact) / w)
    d = float(np.mean(np.concatenate(diffs)))
    report.add("mle_grid_reference", d, 0.0, tol["mle"], d <= tol["mle"],
               f"mean relative gap at M={big.M}")


def check_outage(report: Report, config: SystemConfig, tol: dict, samples: dict, seed: int) -> None:
    from .harness import pool_records, run_trials
    n = _trials_for(samples["outage"], config.K)
    pooled = pool_records(run_trials(config, n, plug_in="true", first_trial=seed))
    freq = float(np.mean(pooled["outage_flag"]))
    p = float(np.mean(pooled["p_out_analytic"]))
    half = tol["outage_z"] * math.sqrt(max(p * (1 - p), 1e-12) / pooled["outage_flag"].size)
    report.add("outage_calibration", freq, p, half, abs(freq - p) <= half,
               f"{pooled['outage_flag'].size} samples at delta={config.delta}")

    grid = np.linspace(0.0, 12.0, 100)
    a, b = np.meshgrid(grid, grid, indexing="ij")
    keep = a <= b
    a, b = a[keep], b[keep]
    q = mathkit.marcum_q1(a, b)
    slack = min(np.min(secrecy.exp_bound(a, b) - q), np.min(secrecy.tight_bound(a, b) - q))
    report.add("bound_dominance", slack, 0.0, 1e-12, slack >= -1e-12, "min(bound - Q1) over the grid")


def conditional_variance_slope(config: SystemConfig, samples: int, seed: int, Ms=SLOPE_M) -> float:
    """Log-log slope of E|g - mu_g(zeta)|^2 against M."""
    vals = []
    base = config.replace(K=2, N_u=max(config.N_u, 2), beta=config.beta[0], beta_e=config.beta_e[0],
                          p_e=config.p_e[0])
    for M in Ms:
        cfg = base.replace(M=M)
        acc = []
        for t in range(_trials_for(samples, 2)):
            rng = RngStream(seed, t)
            ch = generate_channels(cfg, rng)
            up = uplink_observation(cfg, ch, rng)
            A = mf_precoders(up.y)
            g = np.einsum("km,km->k", ch.h.conj(), A) / np.sqrt(M)
            mu, _ = estimation.prior_bob_gain(up.zeta, up.c, M, cfg.w)
            acc.append(np.abs(g - mu) ** 2)
        vals.append(np.mean(np.concatenate(acc)))
    return float(np.polyfit(np.log(Ms), np.log(vals), 1)[0])


def verify_oracles(config: SystemConfig | None = None, tolerances: dict | None = None,
                   samples: dict | None = None, include_mi: bool = True) -> Report:
    """Run the reference suite; ``Report.passed`` is False if any check fails."""
    if config is None:
        config = SystemConfig.default_setup(M=500, K=10, N_d=1000, w2_db=-6.0)
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    n = dict(DEFAULT_SAMPLES)
    n.update(samples or {})
    unknown = (set(tol) - set(DEFAULT_TOLERANCES)) | (set(n) - set(DEFAULT_SAMPLES))
    if unknown:
        raise ValueError(f"unknown oracle keys {sorted(unknown)}")
    seed = config.seed + ORACLE_SEED_OFFSET
    report = Report()
    check_special_functions(report, tol)
    if include_mi:
        check_mutual_information(report, tol, n, seed)
    check_estimators(report, config, tol, n, seed)
    check_mle(report, config, tol, n, seed)
    check_outage(report, config, tol, n, seed)
    slope = conditional_variance_slope(config, n["slope"], seed)
    report.add("conditional_variance_slope", slope, -1.0, tol["slope"], abs(slope + 1.0) <= tol["slope"],
               f"M in {SLOPE_M[0]}..{SLOPE_M[-1]}")
    return report


def split_overrides(extras: dict[str, str]) -> tuple[dict, dict]:
    """Turn ``tol_*`` / ``samples_*`` config entries into override dicts."""
    tol, n = {}, {}
    for key, raw in extras.items():
        if key.startswith("tol_"):
            tol[key[4:]] = float(raw)
        elif key.startswith("samples_"):
            n[key[8:]] = int(float(raw))
    return tol, n
