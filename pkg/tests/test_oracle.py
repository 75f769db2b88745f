import itertools
import math

import numpy as np
import pytest

from ldselect import empirical as em
from ldselect import markov as mk
from ldselect import oracle, rates
from ldselect.errors import DomainError, SizeError


def _spec(source=None, phi=(0, 1), eta=0.5, eps=0.1):
    return em.selection(source or mk.uniform(2), em.additive(phi), eta, eps)


def test_tiny_count_example():
    spec = _spec()
    assert oracle.enumerate_selected(spec, 2).count == 3
    assert oracle.selected_strings(spec, 2).tolist() == [[0, 1], [1, 0], [1, 1]]


def test_vacuous_and_empty_counts():
    src = mk.iid([0.3, 0.3, 0.4])
    assert oracle.enumerate_selected(em.selection(src, em.additive([1, 2, 3]), 1.0, 50.0), 6).count == 3**6
    assert oracle.enumerate_selected(em.selection(src, em.additive([1, 2, 3]), 3.5, 50.0), 6).count == 0


def test_guards():
    with pytest.raises(SizeError):
        oracle.enumerate_selected(_spec(), 27)
    with pytest.raises(DomainError):
        oracle.enumerate_selected(_spec(), 1)
    with pytest.raises(DomainError):
        oracle.monte_carlo_probability(mk.uniform(2), _spec(), 5, 10, 0)
    with pytest.raises(DomainError):
        oracle.rate_convergence(_spec(), rates.RateResult(0.5, None, rates.OPTIMAL, 0.0), [10, 8])


def test_exact_probability_examples():
    spec = _spec(mk.binary(0.3, 0.4), eta=0.4, eps=0.1)
    e = oracle.enumerate_selected(spec, 10)
    assert oracle.exact_probability(mk.uniform(2), spec, 10) == pytest.approx(e.count / 2**10, abs=1e-12)
    everything = _spec(phi=(1, 1), eta=1.0, eps=50.0)
    assert oracle.exact_probability(mk.binary(0.2, 0.7), everything, 9) == pytest.approx(1.0, abs=1e-12)


def test_exact_probability_independent_path():
    storage = mk.binary(0.2, 0.55, initial=[0.35, 0.65])
    spec = _spec(mk.binary(0.3, 0.4), eta=0.4, eps=0.1)
    P, lam = storage.rows, storage.initial
    total = []
    for x in itertools.product((0, 1), repeat=10):
        if em.select(x, spec):
            p = lam[x[0]]
            for a, b in zip(x, x[1:]):
                p *= P[a, b]
            total.append(p)
    assert oracle.exact_probability(storage, spec, 10) == pytest.approx(math.fsum(total), abs=1e-12)


def test_order_k_storage_probability():
    base = mk.binary(0.2, 0.55)
    spec = _spec(mk.binary(0.3, 0.4), eta=0.4, eps=0.1)
    a = oracle.exact_probability(base, spec, 10)
    b = oracle.exact_probability(mk.lift_first_order(base, 2), spec, 10)
    assert a == pytest.approx(b, abs=1e-12)


def test_uniform_probability_recovers_count():
    for eta in (0.3, 0.5, 0.7):
        spec = _spec(mk.binary(0.3, 0.4), eta=eta, eps=0.05)
        c = oracle.enumerate_selected(spec, 12).count
        p = oracle.exact_probability(mk.uniform(2), spec, 12)
        assert abs(p * 2**12 - c) <= 1e-9 * 2**12


def test_multiplicative_count_matches_log_additive():
    src = mk.binary(0.35, 0.5)
    psi = np.array([0.6, 1.9])
    for n in (4, 8, 12):
        a = oracle.selected_strings(em.selection(src, em.multiplicative(psi), 0.2, 0.1), n)
        b = oracle.selected_strings(em.selection(src, em.additive(np.log(psi)), 0.2, 0.1), n)
        np.testing.assert_array_equal(a, b)


def test_counts_monotone_in_eta_and_eps():
    src = mk.binary(0.25, 0.45)
    etas = [0.3, 0.45, 0.6]
    epss = [0.02, 0.08, 0.2]
    C = np.array([[oracle.enumerate_selected(_spec(src, eta=e, eps=d), 12).count for d in epss] for e in etas])
    assert (np.diff(C, axis=0) <= 0).all()
    assert (np.diff(C, axis=1) >= 0).all()


def test_worker_count_does_not_change_results():
    spec = _spec(mk.binary(0.3, 0.4), eta=0.4, eps=0.1)
    storage = mk.binary(0.2, 0.55)
    a = oracle.enumerate_with_probability(storage, spec, 18, workers=1)
    b = oracle.enumerate_with_probability(storage, spec, 18, workers=4)
    assert (a.count, a.probability) == (b.count, b.probability)
    mc1 = oracle.monte_carlo_probability(storage, spec, 12, 50_000, seed=4, workers=1)
    mc4 = oracle.monte_carlo_probability(storage, spec, 12, 50_000, seed=4, workers=4)
    assert mc1 == mc4


def test_monte_carlo_everything_selected():
    est, se = oracle.monte_carlo_probability(mk.binary(0.2, 0.3), _spec(phi=(1, 1), eta=1, eps=50.0), 8, 5000, 1)
    assert (est, se) == (1.0, 0.0)


def test_monte_carlo_pooled_blocks_equal_manual_concatenation():
    storage = mk.binary(0.2, 0.55)
    spec = _spec(mk.binary(0.3, 0.4), eta=0.4, eps=0.1)
    trials = 4 * oracle.MC_BLOCK
    est, _ = oracle.monte_carlo_probability(storage, spec, 12, trials, seed=9, workers=4)
    hits = 0
    for b in range(4):
        rng = np.random.default_rng(np.random.SeedSequence(9, spawn_key=(b,)))
        X = mk.sample_paths(storage, 12, oracle.MC_BLOCK, rng).astype(np.int64)
        hits += int(em.select_mask(X, spec).sum())
    assert est == hits / trials


def test_monte_carlo_matches_exact():
    storage = mk.binary(0.3, 0.3)
    spec = _spec(mk.uniform(2), eta=0.6, eps=0.2)
    exact = oracle.exact_probability(storage, spec, 12)
    est, se = oracle.monte_carlo_probability(storage, spec, 12, 200_000, seed=2)
    assert abs(est - exact) <= 3 * se


def test_convergence_rows():
    spec = _spec(eta=0.75, eps=0.2)
    S = rates.build_set_D(mk.uniform(2), em.additive([0, 1]), 0.75, 0.2)
    rows = oracle.rate_convergence(spec, rates.gamma_max_entropy(S), [8, 12])
    assert [r.n for r in rows] == [8, 12]
    assert rows[0].empirical == pytest.approx(math.log(oracle.enumerate_selected(spec, 8).count) / 8)
    assert rows[1].gap < rows[0].gap
