"""Batch simulation, empirical entropy and importance sampling."""

import json
import warnings

import numpy as np
import pytest

from hlsurn.errors import DegenerateEstimateWarning, ValidationError
from hlsurn.montecarlo import empirical_entropy, importance_estimate, run_batch
from hlsurn.urn import Constant, Linear, Majority, SeedComposition, exact_distribution, simulate

S11 = SeedComposition(1, 1)


def test_runs_reproduce_the_scalar_simulator():
    spec, T, seed = Majority(3), 80, SeedComposition(2, 1)
    b = run_batch(spec, T, seed, R=5000, rng_seed=9, keep_shares=True)
    for r in (0, 1, 4095, 4096, 4999):
        assert b.shares[r] == simulate(spec, T, seed, 9, r).final_share


@pytest.mark.parametrize("workers", [2, 8])
def test_partition_invariance(workers):
    args = (Majority(3), 60, S11, 20_000, 5)
    a = run_batch(*args, workers=1, keep_shares=True)
    b = run_batch(*args, workers=workers, keep_shares=True)
    assert np.array_equal(a.histogram, b.histogram)
    assert np.array_equal(a.shares, b.shares)
    assert a.to_json() == b.to_json()


def test_histogram_conserves_runs():
    b = run_batch(Linear(0.2, 0.6), 37, SeedComposition(3, 2), R=1234, rng_seed=1)
    assert b.histogram.sum() == 1234
    assert b.histogram.size == 38


def test_fair_coin_mean_share():
    b = run_batch(Constant(0.5), 100, S11, R=100_000, rng_seed=3)
    assert abs(b.mean_share() - 0.5) < 5e-4


def test_polya_terminal_law_is_uniform():
    b = run_batch(Linear(0, 1), 1000, S11, R=100_000, rng_seed=4)
    cdf = np.cumsum(b.histogram)[1:1000] / b.R
    assert np.max(np.abs(cdf - np.arange(1, 1000) / 999)) < 0.01


def test_batch_matches_dp_chi_square():
    spec, T = Majority(3), 30
    d = exact_distribution(spec, T, S11)
    b = run_batch(spec, T, S11, R=200_000, rng_seed=8)
    expected = d.probs * b.R
    observed = b.histogram[d.counts]
    chi2 = np.sum((observed - expected) ** 2 / expected)
    assert chi2 < 28 + 5 * np.sqrt(2 * 28)  # 28 dof


def test_json_export():
    b = run_batch(Constant(0.5), 10, S11, R=50, rng_seed=0)
    data = json.loads(b.to_json())
    assert data["R"] == 50 and sum(data["histogram"].values()) == 50


def test_invalid_batch():
    with pytest.raises(ValidationError):
        run_batch(Constant(0.5), 10, S11, R=0)
    with pytest.raises(ValidationError):
        run_batch(Constant(0.5), 2, S11, R=10)


# --- empirical entropy ---------------------------------------------------------

def test_single_run_entropy():
    curve = empirical_entropy(run_batch(Majority(3), 40, S11, R=1, rng_seed=2))
    assert curve.grid.size == 1 and curve.values[0] == 0.0


def test_empty_bins_are_omitted():
    curve = empirical_entropy(run_batch(Constant(0.5), 200, S11, R=1000, rng_seed=2))
    assert np.all(np.isfinite(curve.values))
    assert curve.grid.size < 199


def test_empirical_entropy_matches_dp_and_improves_with_R():
    T = 200
    dp = exact_distribution(Constant(0.5), T, S11)
    dp_curve = dict(zip(np.round(dp.shares * T).astype(int), dp.log_probs / T))

    def errors(R):
        b = run_batch(Constant(0.5), T, S11, R=R, rng_seed=11)
        k = np.flatnonzero(b.histogram >= 100)
        e = empirical_entropy(b)
        emp = dict(zip(np.round(e.grid * T).astype(int), e.values))
        return {int(i): abs(emp[i] - dp_curve[i]) for i in k}

    big, small = errors(1_000_000), errors(10_000)
    assert max(big.values()) < 0.01
    shared = sorted(set(big) & set(small))
    assert max(big[i] for i in shared) < max(small[i] for i in shared)


@pytest.mark.slow
def test_majority_is_bimodal_at_the_dp_scale():
    # the finite-T gap between the monopoly ends and the centre is a few 1e-3,
    # confirmed on the exact law before looking at the simulation
    T = 2000
    dp = exact_distribution(Majority(3), T, S11).entropy()
    ends = max(dp.values[dp.grid <= 0.1].max(), dp.values[dp.grid >= 0.9].max())
    centre = dp.values[np.abs(dp.grid - 0.5) <= 0.05].max()
    gap = ends - centre
    assert gap > 0.003
    mc = empirical_entropy(run_batch(Majority(3), T, S11, R=100_000, rng_seed=21))
    mc_ends = max(mc.values[mc.grid <= 0.1].max(), mc.values[mc.grid >= 0.9].max())
    mid = mc.values[np.abs(mc.grid - 0.5) <= 0.05]
    assert mc_ends > (mid.max() if mid.size else -np.inf) + 0.5 * gap
    assert abs(mc_ends - ends) < 0.002


# --- importance sampling -------------------------------------------------------------

def test_fair_coin_weights_are_one():
    T, R = 30, 5000
    est, se = importance_estimate(Constant(0.5), T, S11, (20, None), R, rng_seed=6)
    b = run_batch(Constant(0.5), T, S11, R, rng_seed=6)
    # the proposal draws black iff u < 1/2, which is also what the fair urn does
    freq = b.histogram[20:].sum() / R
    assert est == pytest.approx(freq, abs=1e-12)
    assert se == pytest.approx(np.sqrt(freq * (1 - freq) / (R - 1)), rel=1e-9)


def test_empty_event():
    assert importance_estimate(Majority(3), 20, S11, (25, 30), 100) == (0.0, 0.0)


def test_zero_weights_warn():
    with pytest.warns(DegenerateEstimateWarning):
        est, se = importance_estimate(Constant(0.0), 20, S11, (5, None), 1000)
    assert est == 0.0


def test_importance_partition_invariance():
    a = importance_estimate(Majority(3), 20, S11, (15, None), 20_000, rng_seed=3, workers=1)
    b = importance_estimate(Majority(3), 20, S11, (15, None), 20_000, rng_seed=3, workers=8)
    assert a == b


def test_importance_central_event_within_three_se():
    spec, T = Majority(3), 20
    truth = exact_distribution(spec, T, S11).prob_of(8, 12)
    est, se = importance_estimate(spec, T, S11, (8, 12), 100_000, rng_seed=1)
    assert abs(est - truth) < 3 * se


@pytest.mark.slow
def test_importance_unbiased_over_repetitions():
    spec, T = Majority(3), 20
    truth = exact_distribution(spec, T, S11).prob_of(15, T)
    ests = np.array([importance_estimate(spec, T, S11, (15, None), 100_000, rng_seed=s)[0] for s in range(100)])
    sem = ests.std(ddof=1) / np.sqrt(ests.size)
    assert abs(ests.mean() - truth) < 3 * sem
