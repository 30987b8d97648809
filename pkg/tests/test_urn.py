"""Urn functions, the simulator, the path embedding and the exact final law."""

import itertools
import math
import re
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hlsurn import rng
from hlsurn.errors import BudgetExceededError, ValidationError
from hlsurn.urn import (Constant, Linear, LipschitzPath, Majority, SeedComposition, Table, embed,
                        eval_urn_function, exact_distribution, share_sequence, simulate,
                        urn_function_from_dict, urn_function_from_json, work_budget)

SPECS = [Constant(0.3), Linear(0.2, 0.6), Linear(0, 1), Majority(3), Majority(5),
         Table((0, 0.5, 1), (0.1, 0.7, 0.6))]


# --- exact oracle: enumerate every colour sequence with rational arithmetic ---

def majority_exact(m, x):
    return sum(math.comb(m, j) * x ** j * (1 - x) ** (m - j) for j in range(m // 2 + 1, m + 1))


def enumerate_law(pi, T, b0, w0):
    law = {}
    for seq in itertools.product((0, 1), repeat=T - b0 - w0):
        k, n, p = b0, b0 + w0, Fraction(1)
        for s in seq:
            q = pi(Fraction(k, n))
            p *= q if s else 1 - q
            k, n = k + s, n + 1
        law[k] = law.get(k, 0) + p
    return law


@pytest.mark.parametrize("spec, exact", [
    (Constant(0.5), lambda x: Fraction(1, 2)),
    (Majority(3), lambda x: majority_exact(3, x)),
    (Majority(5), lambda x: majority_exact(5, x)),
    (Linear(0, 1), lambda x: x),
])
@pytest.mark.parametrize("T, b0, w0", [(8, 1, 1), (10, 2, 1), (9, 0, 3)])
def test_exact_distribution_matches_enumeration(spec, exact, T, b0, w0):
    dist = exact_distribution(spec, T, SeedComposition(b0, w0))
    law = enumerate_law(exact, T, b0, w0)
    for k, p in zip(dist.counts, dist.probs):
        assert p == pytest.approx(float(law.get(int(k), 0)), abs=1e-14)


def test_fair_coin_small_example():
    d = exact_distribution(Constant(0.5), 4, SeedComposition(1, 1))
    assert list(d.counts) == [1, 2, 3]
    np.testing.assert_allclose(d.probs, [0.25, 0.5, 0.25], atol=1e-15)


def test_polya_law_is_uniform():
    d = exact_distribution(Linear(0, 1), 1000, SeedComposition(1, 1))
    assert np.max(np.abs(d.probs - 1 / 999)) < 1e-12


def test_binomial_closed_form():
    T, p = 300, 0.8
    d = exact_distribution(Constant(p), T, SeedComposition(1, 1))
    j = d.counts - 1
    logpmf = [math.lgamma(T - 1) - math.lgamma(i + 1) - math.lgamma(T - 1 - i)
              + i * math.log(p) + (T - 2 - i) * math.log1p(-p) for i in j]
    np.testing.assert_allclose(d.log_probs, logpmf, rtol=1e-11)


@given(st.sampled_from(SPECS), st.integers(3, 200), st.integers(0, 3), st.integers(0, 3))
def test_exact_distribution_is_normalized(spec, T, b0, w0):
    if b0 + w0 == 0 or T <= b0 + w0:
        return
    d = exact_distribution(spec, T, SeedComposition(b0, w0))
    assert abs(d.total() - 1) < 1e-12
    assert np.all(d.probs >= 0)


def test_budget_is_enforced(monkeypatch):
    with pytest.raises(BudgetExceededError) as err:
        exact_distribution(Constant(0.5), 200, budget=1000)
    assert err.value.budget == 1000
    monkeypatch.setenv("HLSURN_WORK_BUDGET", "50")
    assert work_budget() == 50
    with pytest.raises(BudgetExceededError):
        exact_distribution(Constant(0.5), 10)


def test_prob_of_and_entropy_curve():
    d = exact_distribution(Constant(0.5), 6, SeedComposition(1, 1))
    assert d.prob_of(1, 5) == pytest.approx(1.0)
    assert d.prob_of(5, 5) == pytest.approx(1 / 16)
    e = d.entropy()
    np.testing.assert_allclose(e.values, d.log_probs / 6)


# --- urn functions --------------------------------------------------------------

def test_majority_value():
    assert Majority(3)(0.2) == pytest.approx(0.104, abs=1e-15)
    assert Majority(3)(0.5) == pytest.approx(0.5)


@given(st.sampled_from(SPECS), st.lists(st.floats(0, 1), min_size=1, max_size=20))
def test_scalar_and_vector_evaluation_agree_bitwise(spec, xs):
    arr = spec(np.array(xs))
    for x, y in zip(xs, arr):
        assert spec(x) == y
        assert 0.0 <= y <= 1.0


@given(st.sampled_from(SPECS), st.floats(0.01, 0.99))
def test_derivative_matches_finite_difference(spec, x):
    h = 1e-6
    fd = (spec(min(x + h, 1.0)) - spec(max(x - h, 0.0))) / (min(x + h, 1.0) - max(x - h, 0.0))
    if isinstance(spec, Table) and abs(x - 0.5) < 2 * h:
        return
    assert float(spec.derivative(x)) == pytest.approx(fd, abs=1e-5)


@pytest.mark.parametrize("d, msg", [
    ({"family": "majority", "m": 4}, "m must be odd"),
    ({"family": "table", "xs": [0, 1], "ys": [0.2, 1.3]}, "ys outside [0,1]"),
    ({"family": "constant", "p": 1.5}, "p outside"),
    ({"family": "nope"}, "unknown family"),
    ({"family": "constant", "p": 0.5, "q": 1}, "unknown key"),
    ({"family": "table", "xs": [0, 0.7], "ys": [0.2, 0.3]}, "xs must"),
])
def test_invalid_specs_are_rejected(d, msg):
    with pytest.raises(ValidationError, match=re.escape(msg)):
        urn_function_from_dict(d)


@pytest.mark.parametrize("spec", SPECS)
def test_json_round_trip(spec):
    assert urn_function_from_json(spec.to_json()) == spec


def test_malformed_json_and_domain():
    with pytest.raises(ValidationError):
        urn_function_from_json("{family")
    with pytest.raises(ValidationError):
        eval_urn_function(Majority(3), 1.5)


def test_lipschitz_constants():
    assert Majority(3).lipschitz == pytest.approx(1.5)
    assert Linear(0.2, 0.6).lipschitz == pytest.approx(0.6)
    assert Table((0, 0.5, 1), (0.1, 0.7, 0.6)).lipschitz == pytest.approx(1.2)


# --- simulation and embedding ---------------------------------------------------

def test_simulate_follows_its_uniform_stream():
    spec, T, seed = Majority(3), 200, SeedComposition(2, 3)
    h = simulate(spec, T, seed, rng_seed=11, run_index=4)
    u = rng.run_uniforms(11, 4, T - seed.n0)
    k, n = seed.b0, seed.n0
    for i, s in enumerate(h.sigma):
        assert s == (u[i] < majority_exact(3, k / n))
        k, n = k + s, n + 1
    assert h.final_black == k


def test_simulate_is_deterministic_and_seed_sensitive():
    a = simulate(Majority(3), 500, rng_seed=3)
    assert np.array_equal(a.sigma, simulate(Majority(3), 500, rng_seed=3).sigma)
    assert not np.array_equal(a.sigma, simulate(Majority(3), 500, rng_seed=4).sigma)


def test_degenerate_urn_functions_are_deterministic():
    assert simulate(Constant(1.0), 50).final_black == 49
    assert simulate(Constant(0.0), 50).final_black == 1


def test_capacity_must_exceed_seed():
    with pytest.raises(ValidationError):
        simulate(Constant(0.5), 2, SeedComposition(1, 1))


def test_history_csv(tmp_path):
    h = simulate(Constant(0.5), 6, rng_seed=1)
    h.to_csv(tmp_path / "h.csv")
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "n,sigma,psi,phi"
    assert lines[1].startswith("2,,0.5,")
    assert len(lines) == 1 + 5


def test_embedding_matches_counts_and_seed_share():
    h = simulate(Majority(3), 64, SeedComposition(3, 1), rng_seed=5)
    path = embed(h)
    assert path.M == 64
    np.testing.assert_allclose(path.values[4:], h.counts / 64)
    np.testing.assert_allclose(path.slopes[:4], 0.75)
    np.testing.assert_array_equal(path.slopes[4:], h.sigma)
    tr = share_sequence(h)
    np.testing.assert_allclose(tr.psi, h.counts / h.sizes)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=40))
def test_lipschitz_path_round_trip(slopes):
    p = LipschitzPath.from_slopes(slopes)
    np.testing.assert_allclose(p.slopes, slopes, atol=1e-12)
    assert p.values[0] == 0.0


def test_lipschitz_path_rejects_steep_slopes():
    with pytest.raises(ValidationError):
        LipschitzPath(np.array([0.0, 0.9, 1.0]))


def test_seed_at():
    s = SeedComposition.at(0.5, 0.2, 100_000)
    assert (s.b0, s.w0) == (10_000, 40_000)
