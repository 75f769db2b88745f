import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ldselect import ldr
from ldselect import markov as mk
from ldselect.errors import DomainError, SpecError

from helpers import random_rows, random_simplex

probs = st.floats(0.02, 0.98)


def test_m_star_examples(example_chain):
    assert ldr.m_star(example_chain, [1 / 6, 5 / 6]) <= 1e-8
    assert ldr.m_star(example_chain, [0.0, 1.0]) == pytest.approx(-math.log(0.9), abs=1e-9)
    p = np.array([0.2, 0.3, 0.5])
    y = np.array([0.6, 0.1, 0.3])
    assert ldr.m_star(mk.iid(p), y) == pytest.approx(float(np.sum(y * np.log(y / p))), abs=1e-9)


def test_closed_form_examples():
    a, b = 0.5, 0.1
    assert ldr.m_star_binary(a, b, 1 / 6) <= 1e-10
    assert ldr.m_star_binary(a, b, 1.0) == pytest.approx(-math.log(1 - a), abs=1e-12)
    assert ldr.m_star_binary(a, b, 0.0) == pytest.approx(-math.log(1 - b), abs=1e-12)
    assert ldr.binary_root(a, b, 0.5) == pytest.approx(math.sqrt(b * (1 - a) / (a * (1 - b))), rel=1e-14)


def test_closed_form_domain():
    with pytest.raises(DomainError):
        ldr.m_star_binary(0.0, 0.5, 0.3)
    with pytest.raises(DomainError):
        ldr.m_star_binary(0.5, 0.5, 1.2)


def test_pi_star_examples(example_chain):
    z = mk.pair_measure(example_chain)
    assert ldr.pi_star(example_chain, z.ravel()) <= 1e-8
    assert ldr.pi_star(example_chain, [0.25] * 4) == ldr.m_star(example_chain, [0.5, 0.5])


def test_relative_entropy_and_entropy():
    assert ldr.relative_entropy([0.4, 0.6], [0.4, 0.6]) == 0.0
    assert ldr.relative_entropy([1, 0], [0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-15)
    y = [0.3, 0.7]
    assert ldr.relative_entropy(y, [0.5, 0.5]) == pytest.approx(math.log(2) - ldr.entropy(y), abs=1e-15)
    assert ldr.relative_entropy([0.5, 0.5], [1.0, 0.0]) == math.inf
    assert ldr.entropy([0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-15)
    assert ldr.entropy([0, 1, 0]) == 0.0
    assert ldr.entropy([0.25, 0.75]) == pytest.approx(0.5623351446188083, abs=1e-15)


def test_simplex_validation(example_chain):
    with pytest.raises(SpecError):
        ldr.m_star(example_chain, [0.5, 0.6])
    with pytest.raises(SpecError):
        ldr.m_star(example_chain, [1.0, 0.0, 0.0])


def test_curve_shape():
    data = ldr.curve(0.5, 0.1, 99)
    assert data.shape == (99, 4)
    assert data[:, 3].max() <= 1e-6
    # zero of the curve sits at the stationary mass 1/6
    assert abs(data[np.argmin(data[:, 1]), 0] - 1 / 6) < 0.01


@given(probs, probs, st.floats(0.0, 1.0))
def test_closed_form_matches_numeric(a, b, y0):
    numeric = ldr.m_star(mk.binary(a, b), [y0, 1.0 - y0])
    assert abs(ldr.m_star_binary(a, b, y0) - numeric) <= 1e-6


@given(st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_m_star_nonnegative_and_zero_only_at_stationary(ell, seed):
    rng = np.random.default_rng(seed)
    m = mk.markov(random_rows(rng, ell))
    pi = mk.stationary_distribution(m)
    assert ldr.m_star(m, pi) <= 1e-8
    y = random_simplex(rng, ell)
    val = ldr.m_star(m, y)
    assert val >= 0.0
    if np.abs(y - pi).sum() >= 0.05:
        assert val > 0.0


@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_sanov_and_uniform_specialisations(ell, seed):
    rng = np.random.default_rng(seed)
    p = random_simplex(rng, ell) * 0.9 + 0.1 / ell
    y = random_simplex(rng, ell)
    assert abs(ldr.m_star(mk.iid(p), y) - ldr.relative_entropy(y, p)) <= 1e-9
    assert abs(ldr.m_star(mk.uniform(ell), y) - (math.log(ell) - ldr.entropy(y))) <= 1e-9


@given(st.integers(2, 3), st.integers(0, 2**32 - 1))
def test_pi_star_marginal_reduction(ell, seed):
    rng = np.random.default_rng(seed)
    m = mk.markov(random_rows(rng, ell))
    z = random_simplex(rng, ell * ell)
    assert abs(ldr.pi_star(m, z) - ldr.m_star(m, z.reshape(ell, ell).sum(axis=0))) <= 1e-12


@given(st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_m_star_convex_along_segments(ell, seed):
    rng = np.random.default_rng(seed)
    m = mk.markov(random_rows(rng, ell))
    y1, y2 = random_simplex(rng, ell), random_simplex(rng, ell)
    f1, f2 = ldr.m_star(m, y1), ldr.m_star(m, y2)
    for t in np.linspace(0, 1, 11):
        assert ldr.m_star(m, (1 - t) * y1 + t * y2) <= (1 - t) * f1 + t * f2 + 1e-8


def test_rate_and_argmax_paths_agree():
    m = mk.binary(0.3, 0.7)
    y = np.array([0.2, 0.8])
    fast, u_fast = ldr.rate_and_argmax(m, y)
    slow, u_slow = ldr.inner_sup(m.rows, y)
    assert fast == pytest.approx(slow, abs=1e-12)
    np.testing.assert_allclose(u_fast, u_slow, atol=1e-6)
