"""Acceptance criteria, each at its stated tolerance.

Every test prints one PASS/FAIL line (collected again in the terminal summary).
The Monte Carlo checks are marked ``slow``; deselect them with ``-m "not slow"``.
"""

import math

import numpy as np
import pytest

from ccdi.blocks import AlphabetSpec, count_blocks
from ccdi.causality import (
    TestConfig,
    ccdi_plugin,
    degrees_of_freedom,
    loglik_ratio_oracle,
    normality_check,
    run_test,
)
from ccdi.chi2 import ChiSquare
from ccdi.experiments import rate_dichotomy_study, validate_null
from ccdi.markov import benchmark_process, exact_ccdi_rate, seed_for, simulate_many
from ccdi.parallel import default_workers
from ccdi.spikes import bin_spikes, independent_session, planted_session, scan_pairs

CC = AlphabetSpec(2, 2, 2)
UC = AlphabetSpec(2, 2, 1)
WORKERS = default_workers()


def test_c1_degrees_of_freedom(verdict):
    uc = [degrees_of_freedom(TestConfig(k, UC, mode="uc")) for k in range(6)]
    cc = [degrees_of_freedom(TestConfig(k, CC)) for k in range(6)]
    ok = uc == [1, 6, 28, 120, 496, 2016] and cc == [2, 24, 224, 1920, 15872, 129024]
    assert verdict("C1 dof formula", ok, f"uc={uc} cc={cc}")


def test_c2_likelihood_ratio_identity(verdict):
    rng = np.random.default_rng(20240601)
    worst = 0.0
    for _ in range(100):
        m, ell, t = (int(v) for v in rng.integers(2, 4, 3))
        t = int(rng.integers(1, 4))
        k = int(rng.integers(0, 3))
        length = int(rng.integers(k + 2, 501))
        x, y, z = rng.integers(0, m, length), rng.integers(0, ell, length), rng.integers(0, t, length)
        if rng.random() < 0.5:
            y[1:] = (x[:-1] + (rng.random(length - 1) < 0.2)) % ell
        counts = count_blocks(x, y, z, k=k, alphabet=AlphabetSpec(m, ell, t))
        delta = 2 * counts.n * ccdi_plugin(counts)
        worst = max(worst, abs(loglik_ratio_oracle(counts) - delta) / max(1.0, delta))
    assert verdict("C2 likelihood-ratio identity", worst <= 1e-9, f"worst scaled gap {worst:.2e} over 100 cases")


@pytest.mark.slow
def test_c3_null_calibration(verdict):
    rep = validate_null(benchmark_process(), TestConfig(1, UC, mode="uc"), 30_000, 2000, seed=31, workers=WORKERS)
    ok = rep.ks_distance < 0.0365 and abs(rep.mean - 6) <= 0.05 * 6 and abs(rep.variance - 12) <= 0.15 * 12
    assert verdict("C3 chi2(6) null calibration", ok,
                   f"KS={rep.ks_distance:.4f} (<0.0365) mean={rep.mean:.3f} var={rep.variance:.3f}")


def _benchmark_runs(n_seeds, key):
    x, y, z = simulate_many(benchmark_process(), 200_000, [seed_for(41, key, s) for s in range(n_seeds)])
    return list(zip(x, y, z))


@pytest.mark.slow
def test_c4_cc_detection(verdict):
    alt = _benchmark_runs(20, 3)
    small_p = sum(run_test(x, y, z, TestConfig(3, CC)).p_value < 1e-4 for x, y, z in alt)
    rates = {}
    for k in (0, 1, 2):
        runs = _benchmark_runs(50, 100 + k)
        rates[k] = sum(run_test(x, y, z, TestConfig(k, CC)).reject for x, y, z in runs) / 50
    ok = small_p >= 19 and all(r <= 0.10 for r in rates.values())
    assert verdict("C4 CC detection", ok, f"k=3 p<1e-4 in {small_p}/20; rejection rates k<=2 {rates}")


@pytest.mark.slow
def test_c5_estimator_consistency(verdict):
    model = benchmark_process()
    exact = exact_ccdi_rate(model, 3)
    nulls = [exact_ccdi_rate(model, k) for k in (0, 1, 2)]
    errors = [abs(ccdi_plugin(count_blocks(x, y, z, k=3, alphabet=CC)) - exact) for x, y, z in _benchmark_runs(20, 5)]
    close = sum(e < 0.01 for e in errors)
    ok = abs(exact - 0.6103) <= 5e-4 and close >= 18 and max(nulls) < 1e-12
    assert verdict("C5 estimator consistency", ok,
                   f"I_exact={exact:.6f}; |I_hat-I|<0.01 in {close}/20 (max {max(errors):.4f}); "
                   f"k<=2 rates max {max(nulls):.1e}")


@pytest.mark.slow
def test_c6_rate_dichotomy(verdict):
    grid = [2**e for e in range(10, 18)]
    alt = rate_dichotomy_study(benchmark_process(), TestConfig(3, CC), grid, 200, seed=61, workers=WORKERS)
    null = rate_dichotomy_study(benchmark_process(), TestConfig(1, UC, mode="uc"), grid, 200, seed=62,
                                workers=WORKERS)
    ok_alt = abs(alt.slope + 0.5) <= 0.15
    ok_null = abs(null.slope + 1.0) <= 0.2
    errs = ", ".join(f"{e:.4f}" for e in alt.mean_abs_error)
    verdict("C6 rate dichotomy (null, UC k=1)", ok_null, f"slope {null.slope:.3f} (target -1.0 +- 0.2)")
    verdict("C6 rate dichotomy (alternative, CC k=3)", ok_alt,
            f"slope {alt.slope:.3f} (target -0.5 +- 0.15); mean |I_hat-I| = [{errs}]")
    assert ok_null and ok_alt


@pytest.mark.slow
def test_c7_normality(verdict):
    rep = normality_check(benchmark_process(), TestConfig(3, CC), 100_000, 500, seed=71, workers=WORKERS)
    ok = rep.ks_distance < 0.08 and rep.coverage >= 0.90
    assert verdict("C7 normality", ok,
                   f"KS={rep.ks_distance:.3f} (<0.08) coverage={rep.coverage:.3f} (>=0.90); "
                   f"mean I_hat={rep.mean_estimate:.4f} vs I={rep.exact_rate:.4f}")


def test_c8_chi2_survival(verdict):
    xs = np.linspace(0.0, 100.0, 10001)
    e2 = max(abs(ChiSquare(2).survival(x) - math.exp(-x / 2)) for x in xs)
    e4 = max(abs(ChiSquare(4).survival(x) - (1 + x / 2) * math.exp(-x / 2)) for x in xs)
    mid = ChiSquare(129024).survival(129024)
    ok = e2 <= 1e-10 and e4 <= 1e-10 and 0.45 < mid < 0.55
    assert verdict("C8 chi2 survival", ok, f"max err dof2 {e2:.1e}, dof4 {e4:.1e}; S(129024,129024)={mid:.4f}")


@pytest.mark.slow
def test_c9_spike_pipeline(verdict):
    cfg = TestConfig(2, AlphabetSpec(2, 2), mode="uc")
    planted = scan_pairs(planted_session(length=100_000, seed=91), cfg)
    ab = next(r for r in planted.rows if (r.source, r.target) == ("A", "B"))
    null = scan_pairs(independent_session(length=100_000, seed=92), cfg)
    binned = bin_spikes([0.4, 1.2, 3.7], 1.0, 5.0).values.tolist()
    ok = ab.result.p_value < 1e-4 and null.rejection_fraction <= 0.10 and binned == [1, 1, 0, 1, 0]
    assert verdict("C9 spike pipeline", ok,
                   f"A->B p={ab.result.p_value:.1e}; independent rejections {null.n_rejected}/{null.n_tests}; "
                   f"binning {binned}")
