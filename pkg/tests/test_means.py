"""Tests for the group-means module (two-group difference, ANOVA, pairwise).

Oracles: exact population moments (assembled in this file from the channel
matrix, independently of the models) must give zero statistics and recover
the generating parameters; Welch and F machinery is checked against scipy;
covariances are checked against Monte Carlo and for their structural null
vectors.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats

from lgdp_stats.chisq_engine import (
    GROUP_TOO_SMALL,
    INFEASIBLE_VARIANCE,
    ObservedMoments,
    ci_search,
    general_chisq,
)
from lgdp_stats.means import (
    anova_model,
    anova_test,
    bit_group_stats,
    build_moments,
    classical_anova,
    corrected_ttest_ci,
    diff_means_model,
    means_covariance,
    pairwise_ci_bounds,
    pairwise_within_g,
    ttest_statistic,
    welch_ci,
    welch_ci_from_stats,
    welch_ttest,
    welch_ttest_from_stats,
)
from lgdp_stats.mechanisms import (
    bit_flip,
    marginal_matrix,
    privatize_batch,
    rand_response,
    subset,
)

MECHS = [None, rand_response(4, 1.0), bit_flip(4, 1.0), subset(4, 1.0, 2)]


def population_moments(pi, mu, sigma2, mech, n=10_000):
    """Exact expected observable for shares pi, per-group means mu, and
    per-group variances sigma2, composed directly from the channel matrix."""
    pi = np.asarray(pi, dtype=float)
    mu = np.asarray(mu, dtype=float)
    sigma2 = np.broadcast_to(np.asarray(sigma2, dtype=float), pi.shape)
    g = len(pi)
    b = np.eye(g) if mech is None else marginal_matrix(mech)
    ybar = np.concatenate([b @ pi, b @ (pi * mu)])
    second = np.concatenate([b @ pi, b @ (pi * (mu**2 + sigma2))])
    return ObservedMoments(ybar=ybar, n=n, second_moments=second)


def sample_moments(rng, pi, mu, sigma, mech, n):
    g = len(pi)
    labels = rng.choice(g, size=n, p=pi)
    outcomes = rng.normal(np.asarray(mu)[labels], sigma)
    if mech is None:
        bits = np.zeros((n, g))
        bits[np.arange(n), labels] = 1.0
    else:
        bits = privatize_batch(mech, labels, rng)
    return build_moments(bits, outcomes)


# --- moments and t machinery ------------------------------------------------


def test_build_moments_frozen():
    bits = np.array([[1, 0], [0, 1], [1, 0]])
    outcomes = np.array([2.0, 3.0, 4.0])
    moments = build_moments(bits, outcomes)
    np.testing.assert_allclose(moments.ybar, [2 / 3, 1 / 3, 2.0, 1.0])
    np.testing.assert_allclose(moments.second_moments, [2 / 3, 1 / 3, 20 / 3, 3.0])
    assert moments.n == 3


def test_ttest_statistic_frozen():
    assert ttest_statistic(1.1, 1.0, 1.0, 1.0, 5000, 5000) == pytest.approx(
        5.0, rel=1e-12
    )
    assert ttest_statistic(1.1, 1.0, 1.0, 1.0, 5000, 5000, delta=0.1) == pytest.approx(
        0.0, abs=1e-12
    )
    with pytest.raises(ValueError):
        ttest_statistic(1.0, 1.0, 1.0, 1.0, 0, 10)


def test_welch_matches_scipy():
    result = welch_ttest_from_stats(1.3, 2.1, 40, 0.9, 0.8, 55)
    expected = stats.ttest_ind_from_stats(
        1.3, math.sqrt(2.1), 40, 0.9, math.sqrt(0.8), 55, equal_var=False
    )
    assert result.statistic == pytest.approx(expected.statistic, rel=1e-12)
    assert result.p_value == pytest.approx(expected.pvalue, rel=1e-10)


def test_welch_ci_contains_difference():
    interval = welch_ci_from_stats(1.3, 2.1, 40, 0.9, 0.8, 55)
    assert interval.contains(0.4)
    t = welch_ttest_from_stats(1.3, 2.1, 40, 0.9, 0.8, 55, delta=interval.lower)
    assert t.p_value == pytest.approx(0.05, abs=1e-9)


def test_welch_ttest_from_moments():
    rng = np.random.default_rng(3)
    moments = sample_moments(
        rng, [0.5, 0.5], [1.0, 1.0], 1.0, None, 4000
    )
    result = welch_ttest(moments)
    assert abs(result.statistic) < 4.0
    assert result.dof > 1000


def test_classical_anova_matches_scipy():
    rng = np.random.default_rng(17)
    labels = rng.choice(3, size=300)
    outcomes = rng.normal(labels * 0.1, 1.0)
    bits = np.zeros((300, 3))
    bits[np.arange(300), labels] = 1.0
    result = classical_anova(bits, outcomes)
    groups = [outcomes[labels == m] for m in range(3)]
    expected = stats.f_oneway(*groups)
    assert result.statistic == pytest.approx(expected.statistic, rel=1e-10)
    assert result.p_value == pytest.approx(expected.pvalue, rel=1e-8)
    assert result.dof_between == 2
    assert result.dof_within == 297


def test_bit_group_stats_hand_example():
    bits = np.array([[1, 1], [1, 0], [0, 1], [1, 1]])
    outcomes = np.array([1.0, 2.0, 3.0, 5.0])
    means, variances, counts = bit_group_stats(bits, outcomes)
    np.testing.assert_allclose(counts, [3, 3])
    np.testing.assert_allclose(means, [8 / 3, 3.0])
    np.testing.assert_allclose(variances, [np.var([1, 2, 5], ddof=1), 4.0])


# --- covariance structure ---------------------------------------------------


def test_means_covariance_monte_carlo():
    rng = np.random.default_rng(41)
    mech = subset(3, 1.0, 1)
    pi = np.array([0.5, 0.3, 0.2])
    mu = np.array([1.0, 2.0, 0.5])
    n = 80_000
    labels = rng.choice(3, size=n, p=pi)
    outcomes = rng.normal(mu[labels], 1.0)
    bits = privatize_batch(mech, labels, rng)
    y = np.concatenate([bits, bits * outcomes[:, None]], axis=1).astype(float)
    empirical = np.cov(y.T)
    theoretical = means_covariance(pi, mu, 1.0, mech)
    np.testing.assert_allclose(empirical, theoretical, atol=0.02)


def test_means_covariance_null_vectors():
    pi = np.array([0.4, 0.3, 0.2, 0.1])
    mu = np.array([1.0, 1.2, 0.8, 1.0])
    v = np.concatenate([np.ones(4), np.zeros(4)])
    for mech in [None, rand_response(4, 1.0), subset(4, 1.0, 2)]:
        c = means_covariance(pi, mu, 1.0, mech)
        assert np.abs(c @ v).max() <= 1e-10 * np.abs(c).max()
        assert np.linalg.matrix_rank(c) == 7
    c_flip = means_covariance(pi, mu, 1.0, bit_flip(4, 1.0))
    assert np.linalg.matrix_rank(c_flip) == 8


# --- two-group difference in means ------------------------------------------


def test_diff_means_population_null_non_private():
    moments = population_moments(
        [0.4, 0.6], [1.5, 1.0], [2.0, 0.5], None, n=10_000
    )
    result = general_chisq(diff_means_model(0.5), moments)
    assert result.statistic == pytest.approx(0.0, abs=1e-8)
    assert not result.reject
    np.testing.assert_allclose(result.minimizer, [0.4, 1.0], atol=1e-4)


def test_diff_means_population_null_private():
    mech = rand_response(2, 1.0)
    moments = population_moments(
        [0.4, 0.6], [1.5, 1.0], [2.0, 0.5], mech, n=10_000
    )
    result = general_chisq(diff_means_model(0.5, epsilon=1.0), moments)
    assert result.statistic == pytest.approx(0.0, abs=1e-8)
    np.testing.assert_allclose(result.minimizer, [0.4, 1.0], atol=1e-4)
    wrong = general_chisq(diff_means_model(0.0, epsilon=1.0), moments)
    assert wrong.reject


def test_diff_means_rejects_wrong_null():
    moments = population_moments([0.5, 0.5], [1.0, 1.0], 1.0, None, n=5000)
    result = general_chisq(diff_means_model(0.4), moments)
    assert result.reject
    assert result.guard is None


def test_diff_means_infeasible_variance_guard():
    moments = population_moments([0.5, 0.5], [0.0, 0.0], 1.0, None, n=5000)
    result = general_chisq(diff_means_model(5.0), moments)
    assert result.guard == INFEASIBLE_VARIANCE
    assert result.statistic == 20.0  # ten per group
    assert result.reject


def test_diff_means_group_too_small_guard():
    moments = population_moments([0.0004, 0.9996], [1.0, 1.0], 1.0, None, n=1000)
    result = general_chisq(diff_means_model(0.0), moments)
    assert result.guard == GROUP_TOO_SMALL
    assert not result.reject


def test_diff_means_agrees_with_welch_non_private():
    rng = np.random.default_rng(110)
    agree = 0
    trials = 30
    for trial in range(trials):
        gap = 0.08 if trial % 2 else 0.0
        moments = sample_moments(
            rng, [0.5, 0.5], [1.0 + gap, 1.0], 1.0, None, 2000
        )
        chisq = general_chisq(diff_means_model(0.0), moments)
        welch = welch_ttest(moments)
        agree += chisq.reject == welch.reject
    assert agree >= 28


def test_corrected_ttest_ci_coverage():
    rng = np.random.default_rng(2027)
    mech = rand_response(2, 1.0)
    delta = 1.0
    covered = uncorrected_covered = 0
    trials = 30
    for _ in range(trials):
        moments = sample_moments(
            rng, [0.5, 0.5], [1.0 + delta, 1.0], 1.0, mech, 5000
        )
        interval = corrected_ttest_ci(moments, epsilon=1.0)
        covered += interval.contains(delta)
        uncorrected_covered += welch_ci(moments).contains(delta)
    assert covered >= 24
    assert uncorrected_covered <= 10


def test_diff_means_validation():
    with pytest.raises(ValueError):
        diff_means_model(0.0, epsilon=0.0)
    moments = ObservedMoments(np.array([0.5, 0.5, 1.0, 1.0]), 100)
    with pytest.raises(ValueError):
        general_chisq(diff_means_model(0.0), moments)  # no second moments


# --- ANOVA ------------------------------------------------------------------


PI4 = np.array([0.4, 0.3, 0.2, 0.1])


@pytest.mark.parametrize("mech", MECHS)
def test_anova_population_null(mech):
    moments = population_moments(PI4, np.full(4, 1.2), 1.0, mech, n=10_000)
    result = anova_test(moments, mech)
    assert result.statistic == pytest.approx(0.0, abs=1e-7)
    assert not result.reject
    assert result.guard is None


@pytest.mark.parametrize("mech", MECHS)
def test_anova_rejects_unequal_means(mech):
    moments = population_moments(
        PI4, np.array([1.5, 1.0, 1.0, 1.0]), 1.0, mech, n=10_000
    )
    result = anova_test(moments, mech)
    assert result.reject


def test_anova_dof_bookkeeping():
    assert anova_model(4, None).dof == 3
    assert anova_model(4, rand_response(4, 1.0)).dof == 3
    assert anova_model(4, bit_flip(4, 1.0)).dof == 4
    assert anova_model(4, subset(4, 1.0, 2)).dof == 3


def test_anova_guard():
    pi = np.array([0.001, 0.499, 0.3, 0.2])
    moments = population_moments(pi, np.full(4, 1.0), 1.0, None, n=1000)
    result = anova_test(moments, None)
    assert result.guard == GROUP_TOO_SMALL


def test_anova_type_one_error_sane():
    rng = np.random.default_rng(606)
    mech = rand_response(3, 1.0)
    rejections = 0
    trials = 50
    for _ in range(trials):
        moments = sample_moments(
            rng, [0.5, 0.3, 0.2], np.ones(3), 1.0, mech, 5000
        )
        rejections += anova_test(moments, mech).reject
    assert rejections <= 10


def test_anova_validation():
    with pytest.raises(ValueError):
        anova_model(1, None)
    with pytest.raises(ValueError):
        anova_model(3, rand_response(4, 1.0))


# --- pairwise contrasts -----------------------------------------------------


def test_pairwise_population_null():
    mech = subset(4, 1.0, 2)
    pi = np.array([0.3, 0.3, 0.2, 0.2])
    mu = np.array([1.0, 0.8, 1.2, 1.5])
    moments = population_moments(pi, mu, 1.0, mech, n=10_000)
    model = pairwise_within_g(4, j=3, ell=0, delta=0.5, mech=mech)
    result = general_chisq(model, moments)
    assert result.statistic == pytest.approx(0.0, abs=1e-6)
    assert not result.reject
    wrong = general_chisq(
        pairwise_within_g(4, j=3, ell=0, delta=0.0, mech=mech), moments
    )
    assert wrong.reject


def test_pairwise_non_private_and_dof():
    assert pairwise_within_g(4, 0, 1, 0.0).dof == 1
    assert pairwise_within_g(4, 0, 1, 0.0, subset(4, 1.0, 2)).dof == 1
    assert pairwise_within_g(4, 0, 1, 0.0, rand_response(4, 1.0)).dof == 1
    assert pairwise_within_g(4, 0, 1, 0.0, bit_flip(4, 1.0)).dof == 2
    moments = population_moments(PI4, np.array([1.0, 1.3, 0.9, 1.1]), 1.0, None)
    result = general_chisq(pairwise_within_g(4, 1, 0, 0.3), moments)
    assert result.statistic == pytest.approx(0.0, abs=1e-6)


def test_pairwise_validation():
    with pytest.raises(ValueError):
        pairwise_within_g(4, 2, 2, 0.0)
    with pytest.raises(ValueError):
        pairwise_within_g(4, 0, 4, 0.0)
    with pytest.raises(ValueError):
        pairwise_within_g(3, 0, 1, 0.0, subset(4, 1.0, 2))


def test_pairwise_demixed_means_exact_on_population():
    mech = subset(4, 1.0, 2)
    pi = np.array([0.3, 0.3, 0.2, 0.2])
    mu = np.array([1.0, 0.8, 1.2, 1.5])
    moments = population_moments(pi, mu, 1.0, mech)
    model = pairwise_within_g(4, 3, 0, 0.5, mech=mech)
    np.testing.assert_allclose(model.estimate_group_means(moments), mu, atol=1e-9)


def test_pairwise_demixed_means_monte_carlo():
    rng = np.random.default_rng(500)
    mech = subset(4, 1.0, 2)
    pi = [0.3, 0.3, 0.2, 0.2]
    mu = np.array([1.0, 0.8, 1.2, 1.5])
    moments = sample_moments(rng, pi, mu, 1.0, mech, 100_000)
    model = pairwise_within_g(4, 3, 0, 0.5, mech=mech)
    np.testing.assert_allclose(model.estimate_group_means(moments), mu, atol=0.1)


def test_pairwise_ci_covers_true_gap():
    rng = np.random.default_rng(808)
    mech = subset(4, 1.0, 2)
    pi = [0.3, 0.3, 0.2, 0.2]
    mu = np.array([1.0, 1.0, 1.0, 1.5])
    moments = sample_moments(rng, pi, mu, 1.0, mech, 20_000)
    interval = ci_search(
        lambda d: pairwise_within_g(4, 3, 0, d, mech=mech),
        moments,
        bounds=pairwise_ci_bounds(moments, mech, scale=3.0),
    )
    assert interval.contains(0.5)
    assert interval.width < 1.5


def test_bit_membership_t_interval_misses_true_gap():
    # the naive baseline: Welch interval between the members of bit 3 and
    # bit 0 of the privatized labels; mixing pulls it far below the true gap
    rng = np.random.default_rng(808)
    mech = subset(4, 1.0, 2)
    labels = rng.choice(4, size=20_000, p=[0.3, 0.3, 0.2, 0.2])
    outcomes = rng.normal(np.array([1.0, 1.0, 1.0, 1.5])[labels], 1.0)
    bits = privatize_batch(mech, labels, rng)
    means, variances, counts = bit_group_stats(bits, outcomes)
    naive = welch_ci_from_stats(
        means[3], variances[3], counts[3], means[0], variances[0], counts[0]
    )
    assert not naive.contains(0.5)
    assert naive.upper < 0.3
