"""Tests for the privatization channels.

The enumeration oracle below rebuilds each channel's distribution from its
two-line definition (unnormalized weights over explicit atoms), independently
of the closed-form expressions in the library, and the closed forms are
checked against it exhaustively for small g.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lgdp_stats import mechanisms as mech_mod
from lgdp_stats.mechanisms import (
    EnumerationTooLargeError,
    MechanismSpec,
    binomial,
    bit_flip,
    column_total,
    diag_offdiag_probabilities,
    marginal_matrix,
    marginal_probabilities,
    optimal_subset_k,
    pair_matrix,
    pair_probabilities,
    pair_tensor,
    privatize,
    privatize_batch,
    rand_response,
    subset,
    verify_ldp,
)


def enumerate_channel(mech: MechanismSpec) -> tuple[np.ndarray, np.ndarray]:
    """(atoms, probs) with probs[i, j] = P[atoms[i] | true group j], built by
    brute force from the channel definitions."""
    g = mech.g
    if mech.kind == "rr":
        atoms = np.eye(g, dtype=int)
        # reporting ell given truth j: weight e^eps if ell == j, else 1
        weights = np.full((g, g), 1.0)
        np.fill_diagonal(weights, math.exp(mech.epsilon))
    elif mech.kind == "bitflip":
        atoms = np.array(list(itertools.product((0, 1), repeat=g)))
        keep = math.exp(mech.epsilon / 2.0) / (math.exp(mech.epsilon / 2.0) + 1.0)
        onehots = np.eye(g, dtype=int)
        match = atoms[:, None, :] == onehots[None, :, :]
        weights = np.where(match, keep, 1.0 - keep).prod(axis=2)
    else:
        atoms = np.array(
            [
                [1 if i in combo else 0 for i in range(g)]
                for combo in itertools.combinations(range(g), mech.k)
            ]
        )
        # weight e^eps for every set containing the true group, else 1
        weights = np.stack(
            [
                np.where(atoms[:, j] == 1, math.exp(mech.epsilon), 1.0)
                for j in range(g)
            ],
            axis=1,
        )
    return atoms, weights / weights.sum(axis=0, keepdims=True)


def all_mechanisms(g: int, epsilon: float) -> list[MechanismSpec]:
    out = [rand_response(g, epsilon), bit_flip(g, epsilon)]
    out.extend(subset(g, epsilon, k) for k in range(1, g))
    return out


# --- closed forms versus the enumeration oracle -----------------------------


@pytest.mark.parametrize("g", [2, 3, 4, 5, 8])
@pytest.mark.parametrize("epsilon", [0.25, 1.0, 2.5])
def test_marginals_match_enumeration(g, epsilon):
    for mech in all_mechanisms(g, epsilon):
        atoms, probs = enumerate_channel(mech)
        expected = atoms.T.astype(float) @ probs  # [a, j] = P[bit a | truth j]
        for j in range(g):
            np.testing.assert_allclose(
                marginal_probabilities(mech, j), expected[:, j], atol=1e-12
            )
        np.testing.assert_allclose(marginal_matrix(mech), expected, atol=1e-12)


@pytest.mark.parametrize("g", [2, 3, 4, 5, 8])
@pytest.mark.parametrize("epsilon", [0.25, 1.0, 2.5])
def test_pairs_match_enumeration(g, epsilon):
    for mech in all_mechanisms(g, epsilon):
        atoms, probs = enumerate_channel(mech)
        for j in range(g):
            expected = np.zeros((g, g))
            for a in range(g):
                for b in range(g):
                    bits = atoms[:, a] * atoms[:, b]
                    expected[a, b] = float(bits @ probs[:, j])
            got = pair_matrix(mech, j)
            np.testing.assert_allclose(got, expected, atol=1e-12)
            for a in range(g):
                for b in range(g):
                    if a != b:
                        assert pair_probabilities(mech, j, a, b) == pytest.approx(
                            expected[a, b], abs=1e-12
                        )
    last = all_mechanisms(g, epsilon)[-1]
    np.testing.assert_allclose(
        pair_tensor(last), np.stack([pair_matrix(last, m) for m in range(g)])
    )


@pytest.mark.parametrize("g", [2, 4, 6])
@pytest.mark.parametrize("epsilon", [0.5, 1.5])
def test_subset_k1_equals_randomized_response(g, epsilon):
    rr = rand_response(g, epsilon)
    sub = subset(g, epsilon, 1)
    np.testing.assert_allclose(marginal_matrix(sub), marginal_matrix(rr), atol=1e-14)
    for j in range(g):
        np.testing.assert_allclose(pair_matrix(sub, j), pair_matrix(rr, j), atol=1e-14)


# --- frozen values ----------------------------------------------------------


def test_optimal_subset_k_frozen():
    assert optimal_subset_k(10, 3.0) == 1
    assert optimal_subset_k(10, 1.0) == 3
    assert optimal_subset_k(2, 0.05) == 1
    assert optimal_subset_k(2, 4.0) == 1
    assert optimal_subset_k(12, 0.8) == 4  # 12 / (e^0.8 + 1) = 3.71...


def test_randomized_response_marginal_frozen():
    mech = rand_response(4, math.log(3.0))
    np.testing.assert_allclose(
        marginal_probabilities(mech, 0),
        [0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0],
        atol=1e-15,
    )
    assert column_total(mech) == pytest.approx(1.0, abs=1e-15)


def test_bit_flip_frozen():
    mech = bit_flip(3, 2.0 * math.log(3.0))
    diag, off = diag_offdiag_probabilities(mech)
    assert diag == pytest.approx(0.75, abs=1e-15)
    assert off == pytest.approx(0.25, abs=1e-15)
    # coordinates are independent, so the identity atom has probability
    # 0.75 * (1 - 0.25)^2
    margins = marginal_probabilities(mech, 0)
    atom_prob = margins[0] * (1.0 - margins[1]) * (1.0 - margins[2])
    assert atom_prob == pytest.approx(0.421875, abs=1e-15)
    assert pair_probabilities(mech, 0, 0, 1) == pytest.approx(0.1875, abs=1e-15)


def test_subset_pair_frozen():
    e = math.exp(1.0)
    mech = subset(5, 1.0, 2)
    expected = (2.0 * e / (2.0 * e + 3.0)) / 4.0
    assert pair_probabilities(mech, 0, 0, 1) == pytest.approx(expected, abs=1e-15)
    assert pair_probabilities(mech, 0, 1, 0) == pytest.approx(expected, abs=1e-15)


def test_binomial_convention():
    assert binomial(5, -1) == 0.0
    assert binomial(5, 6) == 0.0
    assert binomial(-1, 0) == 0.0
    assert binomial(5, 2) == 10.0
    assert binomial(0, 0) == 1.0
    assert binomial(25, 12) == pytest.approx(math.comb(25, 12), rel=1e-12)


def test_column_total_by_kind():
    assert column_total(rand_response(7, 1.2)) == pytest.approx(1.0, abs=1e-12)
    assert column_total(subset(7, 1.2, 3)) == pytest.approx(3.0, abs=1e-12)
    s = math.exp(0.6)
    expected = (s + 7 - 1) / (s + 1.0)
    assert column_total(bit_flip(7, 1.2)) == pytest.approx(expected, abs=1e-12)


# --- sampling ---------------------------------------------------------------


def empirical_check(mech: MechanismSpec, n: int, seed: int) -> None:
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, mech.g, size=n)
    out = privatize_batch(mech, labels, rng)
    assert out.shape == (n, mech.g)
    assert set(np.unique(out)) <= {0, 1}
    for j in range(mech.g):
        rows = out[labels == j]
        m = len(rows)
        expected = marginal_probabilities(mech, j)
        se = np.sqrt(expected * (1.0 - expected) / m)
        np.testing.assert_array_less(
            np.abs(rows.mean(axis=0) - expected), 4.0 * se + 1e-12
        )
        pair_expected = pair_probabilities(mech, j, 0, mech.g - 1)
        pair_freq = float((rows[:, 0] * rows[:, -1]).mean())
        pair_se = math.sqrt(max(pair_expected * (1 - pair_expected), 1e-12) / m)
        assert abs(pair_freq - pair_expected) < 4.0 * pair_se + 1e-12


def test_privatize_batch_randomized_response():
    mech = rand_response(5, 1.0)
    empirical_check(mech, 100_000, seed=20260823)
    rng = np.random.default_rng(1)
    out = privatize_batch(mech, np.zeros(1000, dtype=int), rng)
    assert (out.sum(axis=1) == 1).all()


def test_privatize_batch_bit_flip():
    empirical_check(bit_flip(5, 1.0), 100_000, seed=7)


def test_privatize_batch_subset():
    mech = subset(5, 1.0, 2)
    empirical_check(mech, 100_000, seed=11)
    rng = np.random.default_rng(2)
    out = privatize_batch(mech, np.full(1000, 3), rng)
    assert (out.sum(axis=1) == mech.k).all()


def test_privatize_batch_subset_large_outcome_space():
    # C(25, 12) is far beyond the enumerated-sampling cutoff, forcing the
    # two-stage path; g = 25 also exercises the log-gamma binomial branch.
    mech = subset(25, 1.0, 12)
    rng = np.random.default_rng(3)
    labels = np.zeros(20_000, dtype=int)
    out = privatize_batch(mech, labels, rng)
    assert (out.sum(axis=1) == 12).all()
    diag, off = diag_offdiag_probabilities(mech)
    se_diag = math.sqrt(diag * (1 - diag) / len(labels))
    assert abs(out[:, 0].mean() - diag) < 4.0 * se_diag
    se_off = math.sqrt(off * (1 - off) / len(labels))
    assert abs(out[:, 1].mean() - off) < 4.0 * se_off


def test_privatize_single_matches_marginals():
    for mech in [rand_response(4, 0.8), bit_flip(4, 0.8), subset(4, 0.8, 2)]:
        rng = np.random.default_rng(17)
        draws = np.array([privatize(mech, 2, rng) for _ in range(20_000)])
        expected = marginal_probabilities(mech, 2)
        se = np.sqrt(expected * (1 - expected) / len(draws))
        np.testing.assert_array_less(np.abs(draws.mean(axis=0) - expected), 4.0 * se)


def test_privatize_deterministic_under_seed():
    mech = subset(6, 1.0, 2)
    labels = np.arange(6).repeat(10)
    a = privatize_batch(mech, labels, np.random.default_rng(42))
    b = privatize_batch(mech, labels, np.random.default_rng(42))
    np.testing.assert_array_equal(a, b)


# --- privacy verification ---------------------------------------------------


@pytest.mark.parametrize("g", [2, 5, 8])
@pytest.mark.parametrize("epsilon", [0.5, 1.0, 2.0, 3.0, 50.0])
def test_verify_ldp_randomized_response_exact(g, epsilon):
    assert verify_ldp(rand_response(g, epsilon)) == math.exp(epsilon)


@pytest.mark.parametrize("g", [2, 5, 8])
@pytest.mark.parametrize("epsilon", [0.5, 1.0, 2.0, 3.0])
def test_verify_ldp_all_mechanisms_tight(g, epsilon):
    for mech in all_mechanisms(g, epsilon):
        ratio = verify_ldp(mech)
        assert ratio <= math.exp(epsilon) + 1e-9
        assert ratio >= math.exp(epsilon) - 1e-9  # the bound is attained


@pytest.mark.parametrize("g", [2, 3, 4, 6])
def test_verify_ldp_matches_brute_force(g):
    epsilon = 1.3
    for mech in all_mechanisms(g, epsilon):
        _, probs = enumerate_channel(mech)
        ratios = probs.max(axis=1) / probs.min(axis=1)
        assert verify_ldp(mech) == pytest.approx(float(ratios.max()), rel=1e-12)


def test_verify_ldp_enumeration_guard():
    with pytest.raises(EnumerationTooLargeError):
        verify_ldp(bit_flip(21, 1.0))


# --- validation and properties ----------------------------------------------


def test_mechanism_spec_validation():
    with pytest.raises(ValueError):
        MechanismSpec("laplace", 3, 1.0)
    with pytest.raises(ValueError):
        rand_response(1, 1.0)
    with pytest.raises(ValueError):
        bit_flip(3, 0.0)
    with pytest.raises(ValueError):
        subset(3, 1.0, 3)
    with pytest.raises(ValueError):
        subset(3, 1.0, 0)
    with pytest.raises(ValueError):
        MechanismSpec("rr", 3, 1.0, k=1)
    with pytest.raises(ValueError):
        MechanismSpec("subset", 3, 1.0)
    with pytest.raises(IndexError):
        marginal_probabilities(rand_response(3, 1.0), 3)
    with pytest.raises(ValueError):
        pair_probabilities(rand_response(3, 1.0), 0, 1, 1)


@settings(deadline=None, max_examples=60)
@given(
    g=st.integers(min_value=2, max_value=7),
    epsilon=st.floats(min_value=0.05, max_value=6.0),
    data=st.data(),
)
def test_channel_properties(g, epsilon, data):
    for mech in all_mechanisms(g, epsilon):
        diag, off = diag_offdiag_probabilities(mech)
        assert 0.0 < off < diag < 1.0
        j = data.draw(st.integers(min_value=0, max_value=g - 1))
        margins = marginal_probabilities(mech, j)
        assert ((margins >= 0.0) & (margins <= 1.0)).all()
        assert margins.sum() == pytest.approx(column_total(mech), rel=1e-12)
        if mech.kind == "subset":
            assert margins.sum() == pytest.approx(float(mech.k), rel=1e-12)
        if g >= 3:
            a, b = 0, g - 1
            p = pair_probabilities(mech, j, a, b)
            assert 0.0 <= p <= min(margins[a], margins[b]) + 1e-15
            assert p == pytest.approx(pair_probabilities(mech, j, b, a), abs=0.0)


@settings(deadline=None, max_examples=25)
@given(
    g=st.integers(min_value=2, max_value=8),
    epsilon=st.floats(min_value=0.1, max_value=4.0),
    seed=st.integers(min_value=0, max_value=2**31),
)
def test_popcount_invariants(g, epsilon, seed):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, g, size=50)
    rr_out = privatize_batch(rand_response(g, epsilon), labels, rng)
    assert (rr_out.sum(axis=1) == 1).all()
    k = optimal_subset_k(g, epsilon)
    sub_out = privatize_batch(subset(g, epsilon, k), labels, rng)
    assert (sub_out.sum(axis=1) == k).all()
