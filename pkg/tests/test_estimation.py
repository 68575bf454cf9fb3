import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from skapca.channel import SystemConfig, generate_channels, uplink_observation
from skapca.estimation import (LS_FLOOR, analytic_mse_eve, estimate_attack_strength, estimate_edcg_bob,
                               estimate_edcg_eve, estimate_leakage, eve_coefficient, eve_gain_power, mse_eve,
                               posterior_eve, prior_bob_gain)
from skapca.harness import aggregate, pool_records, run_trials
from skapca.mathkit import RngStream
from skapca.oracles import conditional_variance_slope
from skapca.protocol import downlink_transmit, generate_random_sequence, mf_precoders, mmse_channel_estimate
from skapca.secrecy import nmse_ideal

ws = st.floats(0.0, 2.0)
cs = st.floats(1.0, 1e4)
Ms = st.integers(1, 10_000)


def blocks(cfg, n):
    for t in range(n):
        rng = RngStream(cfg.seed, t)
        ch = generate_channels(cfg, rng)
        up = uplink_observation(cfg, ch, rng)
        A = mf_precoders(mmse_channel_estimate(up.y, up.c))
        bits, q = generate_random_sequence(cfg.N_d, rng, K=cfg.K)
        yield up, downlink_transmit(cfg, ch, A, q, rng, bits=bits)


def noise_free_fixture(w, c=1000.0, M=500, N=64):
    """Received block whose least-squares gain equals the large-M limit of the mean."""
    denom = 1 + (1 + w * w) * c
    zeta = math.sqrt(M * denom)
    g = math.sqrt(c / denom)
    q = np.where(np.arange(N) % 2 == 0, 1.0, -1.0)
    return g * q, q, zeta, c, M


class TestAttackStrength:
    @pytest.mark.parametrize("w", [0.0, 0.25, 0.5, 1.0])
    def test_noise_free_identity(self, w):
        r, q, zeta, c, M = noise_free_fixture(w)
        assert estimate_attack_strength(r, q, zeta, c, M) == pytest.approx(w, abs=1e-10)

    @given(ws, cs, Ms)
    def test_identity_any_w(self, w, c, M):
        r, q, zeta, c, M = noise_free_fixture(w, c, M)
        assert estimate_attack_strength(r, q, zeta, c, M) == pytest.approx(w, abs=1e-6)

    def test_clamp_to_zero(self):
        q = np.ones(10)
        # zeta / (g sqrt(cM)) well below 1 + 1/c
        assert estimate_attack_strength(2.0 * q, q, 1.0, 1000.0, 100) == 0.0

    def test_vanishing_strength_is_finite(self):
        q = np.ones(10)
        w = estimate_attack_strength(-q, q, 100.0, 1000.0, 100)
        assert np.isfinite(w) and w > 10
        assert w == pytest.approx(math.sqrt(100 / (LS_FLOOR * math.sqrt(1e5)) - 1.001))

    def test_imaginary_part_ignored(self):
        q = np.ones(10)
        a = estimate_attack_strength(0.5 * q, q, 300.0, 1000.0, 100)
        b = estimate_attack_strength((0.5 + 3j) * q, q, 300.0, 1000.0, 100)
        assert a == b

    def test_rejects_empty_sequence(self):
        with pytest.raises(ValueError):
            estimate_attack_strength(np.zeros(3), np.zeros(3), 1.0, 10.0, 10)

    def test_monte_carlo_bias(self, default_config):
        est = [estimate_attack_strength(fr.r, fr.q, up.zeta, up.c, default_config.M)
               for up, fr in blocks(default_config, 1000)]
        w = default_config.w[0]
        assert abs(np.mean(est) / w - 1) < 0.05


class TestBobGain:
    def test_least_squares_limit(self):
        rng = np.random.default_rng(0)
        q = rng.choice([-1.0, 1.0], 50)
        r = (0.8 + 0.1j) * q + 0.01 * rng.normal(size=50)
        g_hat, mu, var = estimate_edcg_bob(r, q, 700.0, 1000.0, 500, 1e-14, 0.5)
        assert g_hat == pytest.approx(np.vdot(q, r) / 50, abs=1e-9)
        assert mu == g_hat
        assert var < 1e-15

    def test_rejects_bad_variances(self):
        q = np.ones(4)
        with pytest.raises(ValueError):
            estimate_edcg_bob(q, q, 700.0, 1000.0, 500, 0.0, 0.5)
        with pytest.raises(ValueError):
            estimate_edcg_bob(q, np.zeros(4), 700.0, 1000.0, 500, 0.1, 0.5)

    def test_prior_values(self):
        mu, var = prior_bob_gain(30.0, 1000.0, 100, 0.0)
        assert mu == pytest.approx(math.sqrt(1000) / 1001 * 3.0)
        assert var == pytest.approx(1 / (1001 * 100))

    def test_error_matches_posterior_variance(self):
        cfg = SystemConfig.default_setup(M=500, K=10, N_d=1000, w2_db=None, seed=11)
        ratios = []
        for up, fr in blocks(cfg, 1000):
            g_hat, _, var = estimate_edcg_bob(fr.r, fr.q, up.zeta, up.c, cfg.M, cfg.sigma2_n, cfg.w)
            ratios.append(np.abs(g_hat - fr.g) ** 2 / var)
        ratios = np.concatenate(ratios)
        assert abs(ratios.mean() - 1) < 3 * ratios.std() / math.sqrt(ratios.size)


class TestEveGain:
    def test_passive_is_zero(self):
        assert estimate_edcg_eve(0.7, 900.0, 1000.0, 500, 0.0) == 0.0

    def test_no_deficit(self):
        c, M, zeta = 1000.0, 500, 800.0
        assert estimate_edcg_eve(zeta / math.sqrt(c * M), zeta, c, M, 0.5) == pytest.approx(0.0, abs=1e-15)

    def test_hand_value(self):
        c, M = 1000.0, 500
        zeta = math.sqrt(c * M)
        assert estimate_edcg_eve(0.9, zeta, c, M, 1.0) == pytest.approx(1000 / 1001 * 0.1, rel=1e-12)
        assert estimate_edcg_eve(0.9, zeta, c, M, 1.0) == pytest.approx(0.09990, abs=1e-5)

    def test_rejects_negative_w(self):
        with pytest.raises(ValueError):
            estimate_edcg_eve(0.9, 1.0, 1.0, 1, -0.1)

    def test_passive_posterior(self):
        mu, var = posterior_eve(np.ones(4), np.ones(4), 10.0, 1000.0, 64, 0.1, 0.0)
        assert mu == 0.0
        assert var == pytest.approx(1 / 64)

    @given(ws, cs, st.integers(1, 1000), st.floats(0.01, 100))
    def test_posterior_variance_vanishes_with_m(self, w, c, N_d, load):
        q = np.ones(N_d)
        small = posterior_eve(q, q, 1.0, c, 100, load / 100, w)[1]
        big = posterior_eve(q, q, 1.0, c, 100_000, load / 100_000, w)[1]
        assert big == pytest.approx(small / 1000, rel=1e-9)

    def test_decomposition_identity(self, small_config):
        c, M = small_config.c, small_config.M
        for up, fr in blocks(small_config, 20):
            est = estimate_leakage(small_config, up, fr.r, fr.q)
            coef = eve_coefficient(c, est.w_hat)
            e1 = fr.g - est.g_hat
            e2 = fr.g_e - coef * (up.zeta / np.sqrt(c * M) - fr.g)
            assert np.allclose(est.g_e_hat, fr.g_e - e2 + coef * e1, rtol=0, atol=1e-10)

    def test_posterior_calibration(self, default_config):
        z = []
        for up, fr in blocks(default_config, 1000):
            mu, var = posterior_eve(fr.r, fr.q, up.zeta, up.c, default_config.M, default_config.sigma2_n,
                                    default_config.w)
            z.append(np.abs(fr.g_e - mu) ** 2 / var)
        z = np.concatenate(z)
        assert abs(z.mean() - 1) < 3 * z.std() / math.sqrt(z.size)


class TestLeakageEstimate:
    def test_invariants(self, small_config):
        c, M = small_config.c, small_config.M
        for up, fr in blocks(small_config, 20):
            est = estimate_leakage(small_config, up, fr.r, fr.q)
            assert np.all(est.sigma2_g_hat < est.sigma2_g)
            assert np.all(est.sigma2_ge_hat > 0)
            expected = est.w_hat * c / (1 + est.w_hat ** 2 * c) * (up.zeta / np.sqrt(c * M) - est.g_hat)
            assert np.allclose(est.g_e_hat, expected, rtol=0, atol=1e-12)
            assert np.array_equal(est.g_hat, est.mu_g_hat)

    def test_diagnostic_mode_uses_given_w(self, small_config):
        up, fr = next(blocks(small_config, 1))
        est = estimate_leakage(small_config, up, fr.r, fr.q, w=small_config.w)
        mu, _ = prior_bob_gain(up.zeta, up.c, small_config.M, small_config.w)
        assert np.allclose(est.mu_g, mu)


class TestAnalyticMse:
    def test_passive(self):
        assert mse_eve(1000.0, 250, 1000, 9.01, 0.0) == pytest.approx(1 / 250)

    @given(ws, cs, st.integers(1, 5000), st.integers(1, 10_000), st.floats(0.01, 200))
    def test_strictly_decreasing_in_m(self, w, c, M, N_d, load):
        assert mse_eve(c, M + 1, N_d, load, w) < mse_eve(c, M, N_d, load, w)

    @given(ws, cs, st.integers(1, 5000), st.integers(1, 10_000), st.floats(0.01, 200))
    def test_ideal_bound_below(self, w, c, M, N_d, load):
        assert 1 / ((1 + w * w * c) * M) <= mse_eve(c, M, N_d, load, w)

    def test_config_wrapper(self, default_config):
        k = 3
        direct = mse_eve(1000.0, 500, 1000, 9.01, default_config.w[k])
        assert analytic_mse_eve(default_config, k) == pytest.approx(direct, rel=1e-14)

    @pytest.mark.parametrize("w2_db", [-6.0, -3.0])
    def test_monte_carlo(self, w2_db):
        cfg = SystemConfig.default_setup(M=500, K=10, N_d=1000, w2_db=w2_db, seed=5)
        pooled = pool_records(run_trials(cfg, 1000, plug_in="true"))
        err = np.abs(pooled["g_e_hat"] - pooled["g_e_true"]) ** 2
        ref = analytic_mse_eve(cfg, 0)
        assert abs(err.mean() / ref - 1) < 3 * err.std() / math.sqrt(err.size) / ref + 0.005


class TestNmseTrends:
    def test_conditional_variance_slope(self, default_config):
        slope = conditional_variance_slope(default_config, 2000, seed=3)
        assert slope == pytest.approx(-1.0, abs=0.05)

    def test_empirical_nmse_above_ideal_and_decreasing(self):
        nmse = {}
        for w2_db in (-10.0, -6.0, -3.0, 0.0):
            cfg = SystemConfig.default_setup(M=500, K=10, N_d=1000, w2_db=w2_db, seed=9)
            stats = aggregate(cfg, pool_records(run_trials(cfg, 300)), ("nmse",))
            nmse[w2_db] = stats["nmse"][0]
            assert nmse[w2_db] > nmse_ideal(cfg, 0)
        vals = [nmse[k] for k in sorted(nmse)]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_empirical_nmse_decreasing_in_n_d(self):
        vals = []
        for N_d in (100, 1000, 10_000):
            cfg = SystemConfig.default_setup(M=500, K=10, N_d=N_d, w2_db=-6.0, seed=9)
            vals.append(aggregate(cfg, pool_records(run_trials(cfg, 200)), ("nmse",))["nmse"][0])
            assert vals[-1] > nmse_ideal(cfg, 0)
        assert vals[0] > vals[1] > vals[2]

    def test_normaliser(self):
        assert eve_gain_power(1000.0, 500, 0.0) == pytest.approx(1 / 500)
