"""Tests for the difference-in-proportions module.

Closed-form oracles: the non-private minimum chi-square statistic at zero
difference must coincide with the classical Pearson statistic on the 2x2
table, and the corrected z interval is checked by Monte Carlo coverage on a
privatized synthetic population.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from lgdp_stats.chisq_engine import GROUP_TOO_SMALL, ObservedMoments, ci_search, general_chisq
from lgdp_stats.mechanisms import privatize_batch, rand_response
from lgdp_stats.numerics import normal_quantile
from lgdp_stats.proportions import (
    PropCounts,
    attenuation_factor,
    corrected_delta,
    corrected_ztest_ci,
    estimate_pi_private,
    prop_model,
    ztest_ci,
    ztest_statistic,
)


def pearson_2x2(counts: PropCounts) -> float:
    a, b = counts.success1, counts.failure1
    c, d = counts.success2, counts.failure2
    n = a + b + c + d
    return (
        n
        * (a * d - b * c) ** 2
        / ((a + b) * (c + d) * (a + c) * (b + d))
    )


# --- z machinery ------------------------------------------------------------


def test_ztest_statistic_frozen():
    assert ztest_statistic(0.30, 0.25, 5000, 5000) == pytest.approx(
        5.607721540920443, rel=1e-12
    )
    assert ztest_statistic(0.30, 0.25, 5000, 5000, pooled=True) == pytest.approx(
        5.598925109558544, rel=1e-12
    )
    # shifting the null to the observed difference zeroes the statistic
    assert ztest_statistic(0.30, 0.25, 5000, 5000, delta=0.05) == pytest.approx(
        0.0, abs=1e-12
    )
    assert ztest_statistic(0.25, 0.30, 5000, 5000) == pytest.approx(
        -5.607721540920443, rel=1e-12
    )


def test_ztest_statistic_validation():
    with pytest.raises(ValueError):
        ztest_statistic(0.3, 0.25, 0, 100)
    with pytest.raises(ValueError):
        ztest_statistic(0.0, 0.0, 100, 100)


def test_ztest_ci_matches_wald():
    counts = PropCounts(success1=300, failure1=700, success2=250, failure2=750)
    interval = ztest_ci(counts)
    se = math.sqrt(0.3 * 0.7 / 1000 + 0.25 * 0.75 / 1000)
    z = normal_quantile(0.975)
    assert interval.lower == pytest.approx(0.05 - z * se, rel=1e-12)
    assert interval.upper == pytest.approx(0.05 + z * se, rel=1e-12)


# --- bias correction --------------------------------------------------------


def test_corrected_delta_balanced_frozen():
    counts = PropCounts(success1=100, failure1=400, success2=90, failure2=410)
    e = math.e
    expected_factor = (e - 1.0) / (e + 1.0)
    assert attenuation_factor(0.5, counts, 1.0) == pytest.approx(
        0.46211715726000974, rel=1e-12
    )
    assert corrected_delta(0.2, 0.5, counts, 1.0) == pytest.approx(
        0.2 * expected_factor, rel=1e-12
    )


def test_attenuation_factor_unbalanced_frozen():
    counts = PropCounts(success1=200, failure1=220, success2=280, failure2=300)
    assert counts.n1 == 420 and counts.n2 == 580
    assert attenuation_factor(0.3, counts, 1.0) == pytest.approx(
        0.38307706727833113, rel=1e-12
    )


def test_estimate_pi_private_frozen():
    counts = PropCounts(success1=300, failure1=300, success2=200, failure2=200)
    assert estimate_pi_private(counts, math.log(3.0)) == pytest.approx(0.7, abs=1e-12)
    with pytest.raises(ValueError):
        estimate_pi_private(counts, 0.0)


def test_estimate_pi_private_consistency():
    rng = np.random.default_rng(314)
    n, pi, epsilon = 200_000, 0.3, 1.0
    labels = (rng.random(n) >= pi).astype(int)  # 0 = group 1 with prob pi
    reported = np.argmax(privatize_batch(rand_response(2, epsilon), labels, rng), axis=1)
    counts = PropCounts.from_arrays(reported, np.zeros(n, dtype=int))
    e = math.e
    share = (e / (e + 1)) * pi + (1 / (e + 1)) * (1 - pi)
    se = ((e + 1) / (e - 1)) * math.sqrt(share * (1 - share) / n)
    assert abs(estimate_pi_private(counts, epsilon) - pi) < 4.0 * se


def test_corrected_ci_covers_monte_carlo():
    rng = np.random.default_rng(2026)
    n, pi, p2, delta, epsilon = 5000, 0.5, 0.25, 0.1, 1.0
    mech = rand_response(2, epsilon)
    corrected_hits = uncorrected_hits = 0
    trials = 50
    for _ in range(trials):
        labels = (rng.random(n) >= pi).astype(int)
        p = np.where(labels == 0, p2 + delta, p2)
        outcomes = (rng.random(n) < p).astype(int)
        reported = np.argmax(privatize_batch(mech, labels, rng), axis=1)
        counts = PropCounts.from_arrays(reported, outcomes)
        corrected = corrected_ztest_ci(counts, epsilon)
        uncorrected = ztest_ci(counts)
        corrected_hits += corrected.contains(delta)
        uncorrected_hits += uncorrected.contains(delta)
    assert corrected_hits >= 40  # nominal 95% coverage
    assert uncorrected_hits <= 20  # attenuation pulls the naive CI off target


# --- minimum chi-square model -----------------------------------------------


def test_prop_model_zero_delta_equals_pearson():
    for counts in [
        PropCounts(30, 20, 20, 30),
        PropCounts(37, 63, 21, 79),
        PropCounts(120, 380, 110, 390),
    ]:
        result = general_chisq(prop_model(0.0), counts.to_moments())
        assert result.statistic == pytest.approx(pearson_2x2(counts), abs=1e-5)
        assert result.dof == 1


def test_prop_model_recovers_population_null():
    pi, p2, delta = 0.4, 0.3, 0.1
    theta = np.array(
        [
            pi * (p2 + delta),
            (1 - pi) * p2,
            pi * (1 - p2 - delta),
            (1 - pi) * (1 - p2),
        ]
    )
    result = general_chisq(prop_model(delta), ObservedMoments(theta, n=10_000))
    assert result.statistic == pytest.approx(0.0, abs=1e-9)
    assert not result.reject
    np.testing.assert_allclose(result.minimizer, [pi, p2], atol=1e-4)


def test_prop_model_private_recovers_population_null():
    pi, p2, delta, epsilon = 0.4, 0.3, 0.1, 1.0
    p1 = p2 + delta
    base = np.array([pi * p1, (1 - pi) * p2, pi * (1 - p1), (1 - pi) * (1 - p2)])
    q = math.exp(epsilon) / (math.exp(epsilon) + 1.0)
    mixed = np.array(
        [
            q * base[0] + (1 - q) * base[1],
            (1 - q) * base[0] + q * base[1],
            q * base[2] + (1 - q) * base[3],
            (1 - q) * base[2] + q * base[3],
        ]
    )
    moments = ObservedMoments(mixed, n=10_000)
    result = general_chisq(prop_model(delta, epsilon), moments)
    assert result.statistic == pytest.approx(0.0, abs=1e-9)
    np.testing.assert_allclose(result.minimizer, [pi, p2], atol=1e-4)
    # the same moments strongly contradict a zero-difference null
    wrong = general_chisq(prop_model(0.0, epsilon), moments)
    assert wrong.reject
    assert wrong.statistic > 10.0


def test_prop_model_private_type_one_error_sane():
    rng = np.random.default_rng(7)
    n, pi, p2, epsilon = 10_000, 0.5, 0.25, 1.0
    mech = rand_response(2, epsilon)
    rejections = 0
    trials = 100
    for _ in range(trials):
        labels = (rng.random(n) >= pi).astype(int)
        outcomes = (rng.random(n) < p2).astype(int)
        reported = np.argmax(privatize_batch(mech, labels, rng), axis=1)
        counts = PropCounts.from_arrays(reported, outcomes)
        result = general_chisq(prop_model(0.0, epsilon), counts.to_moments())
        rejections += result.reject
    assert rejections <= 12  # loose bound around the nominal 5% level


def test_prop_model_guard_non_private():
    counts = PropCounts(success1=2, failure1=1, success2=48, failure2=49)
    result = general_chisq(prop_model(0.0), counts.to_moments())
    assert result.guard == GROUP_TOO_SMALL
    assert result.statistic == 0.0
    assert not result.reject


def test_prop_model_guard_private():
    # reported share barely above the all-group-2 baseline 1/(e+1) implies a
    # debiased group-1 share of ~1e-4, far below five expected samples
    counts = PropCounts(success1=135, failure1=134, success2=366, failure2=365)
    result = general_chisq(prop_model(0.0, 1.0), counts.to_moments())
    assert result.guard == GROUP_TOO_SMALL
    assert not result.reject


def test_prop_model_validation():
    with pytest.raises(ValueError):
        prop_model(1.0)
    with pytest.raises(ValueError):
        prop_model(-1.2)
    with pytest.raises(ValueError):
        prop_model(0.1, epsilon=-1.0)


def test_prop_model_ci_matches_wald_closely():
    counts = PropCounts(success1=300, failure1=700, success2=250, failure2=750)
    interval = ci_search(
        lambda d: prop_model(d),
        counts.to_moments(),
        bounds=(-0.998, 0.998),
        tolerance=1e-3,
    )
    wald = ztest_ci(counts)
    assert interval.lower == pytest.approx(wald.lower, abs=6e-3)
    assert interval.upper == pytest.approx(wald.upper, abs=6e-3)
    assert interval.contains(0.05)
    assert not interval.contains(0.0)
