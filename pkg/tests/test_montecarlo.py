import math

import numpy as np
import pytest

from jscc_lab import analysis
from jscc_lab.codec import encode
from jscc_lab.kernels import simulate_chunk_jit, simulate_chunk_np
from jscc_lab.model import BetaSchedule, SchemeParams, SweepGrid, calibrate_sigma_e2, calibrated
from jscc_lab.montecarlo import (
    CalibrationMissingError,
    RngStream,
    _draw,
    awgn_channel,
    empirical_var_qi,
    simulate_point,
    sweep,
)


@pytest.fixture(scope="module")
def p_snr100():
    return calibrated(SchemeParams.from_snr(2, 100.0, beta=2.0), 200_000, 3)


class TestRng:
    def test_same_stream_same_draws(self):
        a = RngStream(7, 3).generator().standard_normal(10)
        b = RngStream(7, 3).generator().standard_normal(10)
        np.testing.assert_array_equal(a, b)

    def test_streams_independent(self):
        a = RngStream(7, 3).generator().standard_normal(200_000)
        b = RngStream(7, 4).generator().standard_normal(200_000)
        assert abs(np.corrcoef(a, b)[0, 1]) < 4 / math.sqrt(a.size)

    def test_seed_range(self):
        RngStream(2**64 - 1, 0)
        with pytest.raises(ValueError):
            RngStream(2**64, 0)


class TestAwgn:
    def test_noiseless(self):
        x = np.arange(5.0)
        np.testing.assert_array_equal(awgn_channel(x, 0.0, RngStream(1)).y, x)

    def test_variance(self):
        y = awgn_channel(np.zeros(1_000_000), 2.5, RngStream(1)).y
        assert y.var() == pytest.approx(2.5, rel=0.005)

    def test_deterministic(self):
        x = np.ones(100)
        np.testing.assert_array_equal(awgn_channel(x, 1.0, RngStream(4, 2)).y, awgn_channel(x, 1.0, RngStream(4, 2)).y)


class TestKernels:
    @pytest.mark.parametrize("n", [1, 2, 4])
    def test_numpy_and_numba_agree(self, n):
        p = SchemeParams.from_snr(n, 300.0, beta=3.0, sigma_e2=0.08 if n > 1 else None)
        rng = np.random.default_rng(n)
        s = rng.standard_normal(40_000)
        z = rng.standard_normal((n, 40_000))
        args = (p.beta, n, p.grid_step, p.gain_e, p.lmmse_coef)
        np.testing.assert_allclose(simulate_chunk_np(s, z, *args), simulate_chunk_jit(s, z, *args), rtol=1e-12)

    def test_fused_kernel_matches_codec(self):
        from jscc_lab.codec import decode

        p = SchemeParams.from_snr(3, 60.0, beta=2.5, sigma_e2=0.08)
        rng = np.random.default_rng(9)
        s = rng.standard_normal(30_000)
        z = rng.standard_normal((3, 30_000))
        stats = simulate_chunk_jit(s, z, p.beta, 3, p.grid_step, p.gain_e, p.lmmse_coef)
        blk = encode(s, p)
        dec = decode(blk.x + z, p)
        assert stats[0] == pytest.approx(np.sum((s - dec.s_hat) ** 2), rel=1e-9)
        assert stats[2] == pytest.approx(np.sum((blk.e_last - dec.e_hat) ** 2), rel=1e-9)
        for i in range(2):
            assert stats[4 + 3 * i] == pytest.approx(np.sum((blk.q[i] - dec.q_hat[i]) ** 2), rel=1e-9)
            assert stats[6 + 3 * i] == np.count_nonzero(blk.q[i] != dec.q_hat[i])


class TestSimulatePoint:
    def test_n1_sdr_law(self):
        bd = simulate_point(SchemeParams.from_snr(1, 99.0), 1_000_000, seed=2)
        assert bd.sdr == pytest.approx(100.0, rel=0.01)
        assert bd.err_q == [] and bd.symbol_error_rates == []
        assert bd.sdr * bd.mse == pytest.approx(1.0, rel=2.3e-16)

    def test_requires_calibration(self):
        with pytest.raises(CalibrationMissingError):
            simulate_point(SchemeParams.from_snr(2, 99.0, beta=2.0), 10_000)

    def test_minimum_samples(self):
        with pytest.raises(ValueError):
            simulate_point(SchemeParams.from_snr(1, 9.0), 10)

    def test_noiseless_channel_leaves_only_shrinkage(self):
        p = SchemeParams.from_snr(2, 100.0, beta=4.0, sigma_e2=1 / 12)
        m = 70_000
        bd = simulate_point(p, m, seed=5, channel_noise_var=0.0, chunk_size=1 << 16)
        s = np.concatenate([_draw(p, 5, c, k, 0.0)[0] for c, k in [(0, 1 << 16), (1, m - (1 << 16))]])
        e = encode(s, p).e_last
        shrink = p.power / (p.power + p.sigma_z2)
        assert bd.mse == pytest.approx(np.mean((e * (shrink - 1) / p.beta) ** 2), rel=1e-10)
        assert bd.err_q == [0.0] and bd.symbol_error_rates == [0.0]

    def test_workers_bit_identical(self, p_snr100):
        a = simulate_point(p_snr100, 300_000, seed=11, workers=1)
        b = simulate_point(p_snr100, 300_000, seed=11, workers=8)
        assert a == b

    def test_symbol_errors_match_closed_form(self, p_snr100):
        bd = simulate_point(p_snr100, 1_000_000, seed=1)
        prob = analysis.symbol_error_prob(100.0, 2.0, 1.0, 0.08)
        se = math.sqrt(prob * (1 - prob) / bd.samples)
        assert abs(bd.symbol_error_rates[0] - prob) <= 3 * se

    def test_err_q_matches_series(self, p_snr100):
        bd = simulate_point(p_snr100, 1_000_000, seed=2)
        exact, _ = analysis.err_q_exact_series(100.0, 2.0, 1.0, 0.08)
        assert abs(bd.err_q[0] - exact) <= 3 * bd.err_q_se[0]

    def test_err_e_matches_lmmse_law(self):
        p = calibrated(SchemeParams.from_snr(2, 100.0, beta=16.0), 1_000_000, 0)
        bd = simulate_point(p, 1_000_000, seed=3)
        assert bd.err_e == pytest.approx(analysis.err_e_exact(p.sigma_e2, 100.0), rel=0.02)

    def test_ci_coverage(self):
        p = calibrated(SchemeParams.from_snr(2, 100.0, beta=4.0), 200_000, 0)
        truth = simulate_point(p, 2_000_000, seed=10_000).mse
        hits = 0
        for seed in range(100):
            bd = simulate_point(p, 20_000, seed=seed)
            hits += abs(bd.mse - truth) <= bd.ci_halfwidth_mse
        assert hits >= 90


class TestVarQ:
    def test_first_stage_converges(self):
        (v,) = empirical_var_qi(SchemeParams(n=2, beta=128.0), 1_000_000, seed=1)
        assert v == pytest.approx(1.0, rel=0.01)

    def test_second_stage_tracks_residual(self):
        v = empirical_var_qi(SchemeParams(n=3, beta=128.0), 1_000_000, seed=1)
        e1 = calibrate_sigma_e2(SchemeParams(n=2, beta=128.0), 1_000_000, seed=1)
        assert v[1] == pytest.approx(e1, rel=0.01)

    def test_bounded(self):
        for beta in (1.0, 2.0, 8.0):
            v = empirical_var_qi(SchemeParams(n=3, beta=beta), 200_000, seed=2)
            assert v[0] <= 1.0 + 0.08 + 1 / (4 * beta**2) + 0.02
            assert v[1] <= 0.25 + 1 / (4 * beta**2) + 0.02


class TestSweep:
    def test_fixed_schedule(self):
        res = sweep(SweepGrid([20, 30], 20_000, 1), SchemeParams(n=2), BetaSchedule.fixed(4.0), 20_000)
        assert [pt.params.beta for pt in res.points] == [4.0, 4.0]
        assert res.ok

    def test_adaptive_monotone_and_opta(self):
        res = sweep(SweepGrid([30, 35, 40, 45], 50_000, 2), SchemeParams(n=2), BetaSchedule.adaptive(), 50_000)
        betas = [pt.params.beta for pt in res.points]
        assert all(b2 > b1 for b1, b2 in zip(betas, betas[1:]))
        for pt in res.points:
            opta_mse = pt.params.sigma_s2 / pt.bound.opta_sdr
            assert pt.breakdown.mse >= opta_mse - 3 * pt.breakdown.ci_halfwidth_mse

    def test_failures_recorded(self):
        res = sweep(SweepGrid([5, 30], 5_000, 2), SchemeParams(n=2), BetaSchedule.adaptive(), 10_000)
        assert [db for db, _ in res.failures] == [5.0]
        assert [pt.snr_db for pt in res.points] == [30.0]
        assert not res.ok

    def test_bound_tracks_simulation(self):
        res = sweep(SweepGrid([30, 40, 50], 1_000_000, 4), SchemeParams(n=2), BetaSchedule.adaptive(), 200_000)
        ratios = []
        for pt in res.points:
            bd = pt.breakdown
            assert pt.bound.total_mse_bound >= bd.mse - 3 * bd.mse_se
            ratios.append(pt.bound.total_mse_bound / bd.mse)
        assert max(ratios) / min(ratios) < 1.05

    def test_reproducible(self):
        grid = SweepGrid([30, 40], 20_000, 8, workers=3)
        a = sweep(grid, SchemeParams(n=3), BetaSchedule.fixed_epsilon(0.5), 20_000)
        b = sweep(grid, SchemeParams(n=3), BetaSchedule.fixed_epsilon(0.5), 20_000)
        assert a == b
