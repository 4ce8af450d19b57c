"""End-to-end acceptance checks.

Each test prints one ``[PASS]``/``[FAIL]`` line (visible even under pytest's
output capture) and then asserts the same condition.
"""

import math
import os
import re
import time

import numpy as np
import pytest

from jscc_lab import analysis
from jscc_lab.cli import parse_config, run_sweep_command
from jscc_lab.codec import quantize_stage, reconstruct
from jscc_lab.model import BetaSchedule, SchemeParams, SweepGrid, calibrated
from jscc_lab.montecarlo import RngStream, simulate_point, sweep

pytestmark = pytest.mark.slow

WORKERS = min(8, os.cpu_count() or 1)


@pytest.fixture
def report(capsys):
    def _report(label, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
        assert ok, f"{label}: {detail}"

    return _report


def test_c1_quantizer_exactness(report):
    t0 = time.perf_counter()
    g = RngStream(101).generator()
    m = 1_000_000
    s = g.standard_normal(m) * 10.0 ** g.uniform(-3, 3, m)
    beta = 10.0 ** g.uniform(0, 4, m)
    e = s
    q = []
    in_range = True
    for _ in range(3):
        qi, e = quantize_stage(e, beta)
        q.append(qi)
        in_range &= bool(np.all((e >= -0.5) & (e < 0.5)))
    rec = reconstruct(np.array(q), e, beta)
    ulps = np.abs(rec - s) / np.spacing(np.abs(s))
    dt = time.perf_counter() - t0
    ok = ulps.max() <= 4 and in_range and dt < 5.0
    report("C1 quantizer exactness", ok, f"max err {ulps.max():.1f} ulp, E in range: {in_range}, {dt:.2f}s")


def test_c2_n1_opta_equality(report):
    t0 = time.perf_counter()
    rel = []
    for snr in (10.0, 100.0, 1000.0):
        bd = simulate_point(SchemeParams.from_snr(1, snr), 1_000_000, seed=7, workers=WORKERS)
        rel.append(abs(bd.sdr / (1 + snr) - 1))
    dt = time.perf_counter() - t0
    ok = max(rel) < 0.01 and dt < 10.0
    report("C2 n=1 OPTA equality", ok, f"max rel dev {max(rel):.2e}, {dt:.2f}s")


def test_c3_lmmse_error_law(report):
    rel = []
    for snr in (1e2, 1e3, 1e4):
        p = calibrated(SchemeParams.from_snr(2, snr, beta=8.0), 1_000_000, 0)
        bd = simulate_point(p, 1_000_000, seed=8, workers=WORKERS)
        rel.append(abs(bd.err_e / analysis.err_e_exact(p.sigma_e2, snr) - 1))
    ok = max(rel) < 0.02
    report("C3 LMMSE error law", ok, "rel dev " + ", ".join(f"{r:.2e}" for r in rel))


def test_c4_symbol_error_exactness(report):
    t0 = time.perf_counter()
    m = 20_000_000
    p = calibrated(SchemeParams.from_snr(2, 400.0, sigma_s2=1.0, delta=0.08, beta=2.0), 1_000_000, 0)
    bd = simulate_point(p, m, seed=9, workers=WORKERS)
    prob = analysis.symbol_error_prob(400.0, 2.0, 1.0, 0.08)
    se = math.sqrt(prob * (1 - prob) / m)
    z = (bd.symbol_error_rates[0] - prob) / se
    dt = time.perf_counter() - t0
    ok = abs(z) <= 3 and dt < 60.0
    report("C4 symbol error exactness", ok,
           f"empirical {bd.symbol_error_rates[0]:.3e} vs {prob:.3e} ({z:+.2f} SE, {m:.0e} samples), {dt:.2f}s")


def test_c5_error_bound_dominance(report):
    grid = SweepGrid([30.0, 40.0, 50.0], 10_000_000, seed=10, workers=WORKERS)
    res = sweep(grid, SchemeParams(n=2), BetaSchedule.fixed_epsilon(0.2), pilot_samples=1_000_000)
    assert res.ok
    emp = [pt.breakdown.err_q[0] for pt in res.points]
    bounds = [pt.bound.err_q_bound for pt in res.points]
    dominated = all(e <= b for e, b in zip(emp, bounds))
    ratios = [a / b for a, b in zip(emp, emp[1:])]
    ok = dominated and min(ratios) >= 10.0
    report("C5 quantization error bound dominance", ok,
           f"dominated: {dominated}, per-10dB decrease " + ", ".join(f"{r:.2f}x" for r in ratios))


def _adaptive_slope(n, dbs, samples):
    grid = SweepGrid(dbs, samples, seed=11, workers=WORKERS)
    res = sweep(grid, SchemeParams(n=n), BetaSchedule.adaptive(), pilot_samples=1_000_000)
    pts = [(pt.bound.snr, pt.breakdown.sdr) for pt in res.points]
    return res, analysis.fit_scaling_exponent(pts).slope, pts


def test_c6_scaling_exponent(report):
    t0 = time.perf_counter()
    dbs2 = np.arange(30.0, 61.0, 5.0)
    res2, slope2, pts2 = _adaptive_slope(2, dbs2, 2_000_000)
    law = float(np.mean(2 - 1 / np.log(10 ** (dbs2 / 10))))
    res3, slope3, pts3 = _adaptive_slope(3, np.arange(30.0, 51.0, 5.0), 2_000_000)
    under_opta = all(sdr <= (1 + snr) ** 2 for snr, sdr in pts2) and all(sdr <= (1 + snr) ** 3 for snr, sdr in pts3)
    dt = time.perf_counter() - t0
    ok = (res2.ok and res3.ok and 1.7 <= slope2 <= 2.0 and abs(slope2 - law) <= 0.15
          and 2.4 <= slope3 <= 3.0 and under_opta and dt < 600)
    report("C6 scaling exponent", ok,
           f"n=2 slope {slope2:.4f} (log law {law:.4f}), n=3 slope {slope3:.4f}, under OPTA: {under_opta}, {dt:.1f}s")


def test_c7_first_stage_variance_convergence(report):
    s = RngStream(12).generator().standard_normal(1_000_000)
    gaps, half = [], []
    for beta in (1.0, 4.0, 16.0, 64.0, 256.0):
        q, _ = quantize_stage(s, beta)
        d = (q - q.mean()) ** 2
        gaps.append(abs(d.mean() * q.size / (q.size - 1) - 1.0))
        half.append(1.96 * d.std() / math.sqrt(q.size))
    nonincreasing = all(g2 <= g1 + math.hypot(h1, h2) for g1, g2, h1, h2 in zip(gaps, gaps[1:], half, half[1:]))
    ok = nonincreasing and gaps[-1] < 0.02
    report("C7 first-stage variance convergence", ok,
           "gaps " + ", ".join(f"{g:.2e}" for g in gaps) + f", nonincreasing within CI: {nonincreasing}")


def test_c8_determinism(report, tmp_path):
    texts = []
    for w in (1, 8):
        out = tmp_path / f"w{w}.csv"
        cfg = parse_config(f'{{"n": 2, "seed": 5, "workers": {w}, "output_path": "{out}"}}')
        assert run_sweep_command(cfg) == 0
        texts.append(re.sub(r'"wall_clock_seconds": [^,}\]]+', "", out.read_text()))
    ok = texts[0] == texts[1]
    report("C8 determinism across workers", ok, f"byte-identical CSV for workers 1 and 8: {ok}")
