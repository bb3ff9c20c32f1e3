"""Tests on group means of a real-valued outcome.

Covers three testing problems, all driven by the same observable: the
privatized label bits and the bits multiplied by the outcome,

    Y = (Z, Z * X)  in R^(2g),

with per-coordinate second moments retained so variances can be estimated
(bits are 0/1, so (Z_j X)^2 = Z_j X^2 is itself observable).

- :func:`diff_means_model`: two groups, H0: mu1 - mu2 = delta, with
  group-specific variances.  Non-private data can reveal the null to be
  impossible (a negative implied variance), which is reported through the
  ``InfeasibleVariance`` guard; on privatized data the variance slots are
  estimated from samples and floored at their zero-variance theoretical
  minimum instead.
- :func:`anova_model`: g groups, H0: all group means equal, pooled variance.
- :func:`pairwise_within_g`: g groups, H0: mu_j - mu_ell = delta with the
  remaining group means free.

Classical baselines (Welch t machinery, one-way F) are included so the
privacy-aware tests can be compared against what an analyst would naively run
on reported labels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .chisq_engine import (
    GROUP_TOO_SMALL,
    INFEASIBLE_VARIANCE,
    ConfidenceInterval,
    GuardDecision,
    MIN_EXPECTED_PER_GROUP,
    ObservedMoments,
    TestResult,
    general_chisq,
)
from .mechanisms import (
    MechanismSpec,
    column_total,
    diag_offdiag_probabilities,
    marginal_matrix,
    pair_tensor,
)
from .numerics import (
    CompositeTransform,
    IdentityTransform,
    LogitTransform,
    SimplexTransform,
    clamp_probability,
    pseudo_inverse,
)

INFEASIBLE_SENTINEL_PER_GROUP = 10.0


def build_moments(bits: np.ndarray, outcomes: np.ndarray) -> ObservedMoments:
    """Observed first and second moments of (Z, Z * X) from an (n, g) 0/1
    label matrix and real-valued outcomes."""
    bits = np.asarray(bits, dtype=float)
    outcomes = np.asarray(outcomes, dtype=float)
    if bits.ndim != 2 or len(bits) != len(outcomes):
        raise ValueError("need an (n, g) bit matrix and n outcomes")
    weighted = bits * outcomes[:, None]
    squared = bits * (outcomes**2)[:, None]
    ybar = np.concatenate([bits.mean(axis=0), weighted.mean(axis=0)])
    second = np.concatenate([bits.mean(axis=0), squared.mean(axis=0)])
    return ObservedMoments(ybar=ybar, n=len(bits), second_moments=second)


def _require_second_moments(moments: ObservedMoments) -> np.ndarray:
    if moments.second_moments is None:
        raise ValueError(
            "means models need second moments; build the input with build_moments"
        )
    return np.asarray(moments.second_moments, dtype=float)


# --- t machinery ------------------------------------------------------------


@dataclass(frozen=True)
class TTestResult:
    __test__ = False  # not a pytest class, despite the name

    statistic: float
    dof: float
    p_value: float
    reject: bool


@dataclass(frozen=True)
class FTestResult:
    statistic: float
    dof_between: int
    dof_within: float
    p_value: float
    reject: bool


def ttest_statistic(
    mean1: float,
    mean2: float,
    var1: float,
    var2: float,
    n1: float,
    n2: float,
    delta: float = 0.0,
) -> float:
    """Welch t statistic for H0: mu1 - mu2 = delta from group summaries."""
    if min(n1, n2) <= 0:
        raise ValueError("need positive sample counts")
    se2 = var1 / n1 + var2 / n2
    if se2 <= 0.0:
        raise ValueError("degenerate variances give a zero standard error")
    return (mean1 - mean2 - delta) / math.sqrt(se2)


def _welch_dof(var1: float, var2: float, n1: float, n2: float) -> float:
    a, b = var1 / n1, var2 / n2
    return (a + b) ** 2 / (a**2 / (n1 - 1.0) + b**2 / (n2 - 1.0))


def welch_ttest_from_stats(
    mean1: float,
    var1: float,
    n1: float,
    mean2: float,
    var2: float,
    n2: float,
    delta: float = 0.0,
    alpha: float = 0.05,
) -> TTestResult:
    """Welch two-sample t test from group summaries (sample variances)."""
    t = ttest_statistic(mean1, mean2, var1, var2, n1, n2, delta)
    dof = _welch_dof(var1, var2, n1, n2)
    p = 2.0 * float(stats.t.sf(abs(t), dof))
    return TTestResult(statistic=t, dof=dof, p_value=p, reject=bool(p < alpha))


def welch_ci_from_stats(
    mean1: float,
    var1: float,
    n1: float,
    mean2: float,
    var2: float,
    n2: float,
    alpha: float = 0.05,
) -> ConfidenceInterval:
    """Welch interval for mu1 - mu2 from group summaries."""
    dof = _welch_dof(var1, var2, n1, n2)
    se = math.sqrt(var1 / n1 + var2 / n2)
    half = float(stats.t.ppf(1.0 - alpha / 2.0, dof)) * se
    diff = mean1 - mean2
    return ConfidenceInterval(diff - half, diff + half, alpha, tolerance=0.0)


def bit_group_stats(
    bits: np.ndarray, outcomes: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(means, sample variances, counts) of the outcome within each bit's
    membership; multi-hot rows contribute to every set bit."""
    bits = np.asarray(bits, dtype=float)
    outcomes = np.asarray(outcomes, dtype=float)
    counts = bits.sum(axis=0)
    if (counts < 2).any():
        raise ValueError("every bit needs at least two member samples")
    means = (bits * outcomes[:, None]).sum(axis=0) / counts
    centered_sq = bits * (outcomes[:, None] - means[None, :]) ** 2
    variances = centered_sq.sum(axis=0) / (counts - 1.0)
    return means, variances, counts


def welch_ttest(
    moments: ObservedMoments, delta: float = 0.0, alpha: float = 0.05
) -> TTestResult:
    """Welch t test between the two (reported) groups encoded in two-group
    moments from :func:`build_moments`."""
    mean1, var1, n1, mean2, var2, n2 = _two_group_stats(moments)
    return welch_ttest_from_stats(mean1, var1, n1, mean2, var2, n2, delta, alpha)


def _two_group_stats(moments: ObservedMoments):
    y = np.asarray(moments.ybar, dtype=float)
    second = _require_second_moments(moments)
    if len(y) != 4:
        raise ValueError("expected two-group moments (4 coordinates)")
    share1, share2 = y[0], y[1]
    if share1 <= 0.0 or share2 <= 0.0:
        raise ValueError("both groups need samples")
    n1, n2 = moments.n * share1, moments.n * share2
    mean1, mean2 = y[2] / share1, y[3] / share2
    var1 = max(second[2] / share1 - mean1**2, 0.0) * n1 / max(n1 - 1.0, 1.0)
    var2 = max(second[3] / share2 - mean2**2, 0.0) * n2 / max(n2 - 1.0, 1.0)
    return mean1, var1, n1, mean2, var2, n2


def welch_ci(moments: ObservedMoments, alpha: float = 0.05) -> ConfidenceInterval:
    """Welch interval between the two (reported) groups encoded in two-group
    moments from :func:`build_moments`."""
    mean1, var1, n1, mean2, var2, n2 = _two_group_stats(moments)
    return welch_ci_from_stats(mean1, var1, n1, mean2, var2, n2, alpha)


def corrected_ttest_ci(
    moments: ObservedMoments, epsilon: float, alpha: float = 0.05
) -> ConfidenceInterval:
    """Bias-corrected Welch interval for the true difference in means under
    two-group randomized response: the reported-group interval divided by the
    channel's attenuation factor."""
    mean1, var1, n1, mean2, var2, n2 = _two_group_stats(moments)
    e = math.exp(epsilon)
    share1 = float(moments.ybar[0])
    pi = float(clamp_probability(((e + 1.0) * share1 - 1.0) / (e - 1.0)))
    a1, b1 = pi * e / (e + 1.0), (1.0 - pi) / (e + 1.0)
    a2, b2 = pi / (e + 1.0), (1.0 - pi) * e / (e + 1.0)
    factor = a1 / (a1 + b1) - a2 / (a2 + b2)
    if factor <= 0.0:
        raise ValueError(
            "attenuation factor is not positive; the correction is undefined"
        )
    raw = welch_ci_from_stats(mean1, var1, n1, mean2, var2, n2, alpha)
    return ConfidenceInterval(
        raw.lower / factor, raw.upper / factor, alpha, tolerance=0.0
    )


def classical_anova(
    bits: np.ndarray, outcomes: np.ndarray, alpha: float = 0.05
) -> FTestResult:
    """One-way F test treating each bit as a group membership.  On one-hot
    labels this is the textbook ANOVA; on multi-hot labels it is the naive
    baseline that double-counts samples."""
    means, variances, counts = bit_group_stats(bits, outcomes)
    total = counts.sum()
    grand = float((counts * means).sum() / total)
    between = float((counts * (means - grand) ** 2).sum())
    within = float(((counts - 1.0) * variances).sum())
    dof_between = len(counts) - 1
    dof_within = float(total - len(counts))
    if within <= 0.0 or dof_within <= 0:
        raise ValueError("within-group variance is degenerate")
    f = (between / dof_between) / (within / dof_within)
    p = float(stats.f.sf(f, dof_between, dof_within))
    return FTestResult(
        statistic=f,
        dof_between=dof_between,
        dof_within=dof_within,
        p_value=p,
        reject=bool(p < alpha),
    )


# --- shared channel algebra -------------------------------------------------


def _channel_matrix(mech: MechanismSpec | None, g: int) -> np.ndarray:
    return np.eye(g) if mech is None else marginal_matrix(mech)


def _channel_pairs(mech: MechanismSpec | None, g: int) -> np.ndarray:
    if mech is None:
        tensor = np.zeros((g, g, g))
        for m in range(g):
            tensor[m, m, m] = 1.0
        return tensor
    return pair_tensor(mech)


def _channel_total(mech: MechanismSpec | None) -> float:
    return 1.0 if mech is None else column_total(mech)


def _debias_shares(ind: np.ndarray, mech: MechanismSpec | None) -> np.ndarray:
    if mech is None:
        return np.asarray(ind, dtype=float).copy()
    diag, off = diag_offdiag_probabilities(mech)
    return (np.asarray(ind, dtype=float) - off) / (diag - off)


def _one_hot(mech: MechanismSpec | None) -> bool:
    return mech is None or mech.kind == "rr"


def means_covariance(
    pi: np.ndarray,
    mu: np.ndarray,
    sigma2: np.ndarray | float,
    mech: MechanismSpec | None = None,
) -> np.ndarray:
    """Covariance of (Z, Z * X) for group shares pi, per-group outcome means
    mu, and outcome variances sigma2 (scalar = shared by all groups)."""
    pi = np.asarray(pi, dtype=float)
    mu = np.asarray(mu, dtype=float)
    g = len(pi)
    sigma2 = np.broadcast_to(np.asarray(sigma2, dtype=float), (g,))
    pairs = _channel_pairs(mech, g)
    t_mix = np.tensordot(pi, pairs, axes=(0, 0))
    m_mix = np.tensordot(pi * mu, pairs, axes=(0, 0))
    s_mix = np.tensordot(pi * (mu**2 + sigma2), pairs, axes=(0, 0))
    b = _channel_matrix(mech, g)
    q = b @ pi
    theta2 = b @ (pi * mu)
    c_bits = t_mix - np.outer(q, q)
    c_cross = m_mix - np.outer(q, theta2)
    c_outcome = s_mix - np.outer(theta2, theta2)
    return np.block([[c_bits, c_cross], [c_cross.T, c_outcome]])


def _sample_variances(moments: ObservedMoments) -> np.ndarray:
    """Per-coordinate variance of the Z * X block."""
    y = np.asarray(moments.ybar, dtype=float)
    second = _require_second_moments(moments)
    g = len(y) // 2
    return second[g:] - y[g:] ** 2


# --- two-group difference in means ------------------------------------------


@dataclass
class DifferenceInMeansModel:
    """Minimum chi-square model for H0: mu1 - mu2 = delta with two groups.

    Free parameters: (pi, mu2).  The observable is (Z1, Z2, Z1*X, Z2*X); the
    one-hot label constraint makes the covariance rank 3, which the
    pseudo-inverse weighting absorbs, leaving one degree of freedom.
    """

    delta: float
    epsilon: float | None = None

    def __post_init__(self):
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValueError("privacy loss must be positive")
        self.g = 2
        self.d = 4
        self.nu = 2
        self.dof = 1
        self.transform = CompositeTransform([LogitTransform(1), IdentityTransform(1)])

    def _mix_coefficients(self, pi: float) -> tuple[float, float, float, float]:
        """Weights (a1, b1, a2, b2) of the true group means inside the two
        reported-group outcome coordinates."""
        if self.epsilon is None:
            return pi, 0.0, 0.0, 1.0 - pi
        e = math.exp(self.epsilon)
        return (
            pi * e / (e + 1.0),
            (1.0 - pi) / (e + 1.0),
            pi / (e + 1.0),
            (1.0 - pi) * e / (e + 1.0),
        )

    def theta_of(self, free_params: np.ndarray) -> np.ndarray:
        pi, mu2 = float(free_params[0]), float(free_params[1])
        mu1 = mu2 + self.delta
        a1, b1, a2, b2 = self._mix_coefficients(pi)
        return np.array([a1 + b1, a2 + b2, a1 * mu1 + b1 * mu2, a2 * mu1 + b2 * mu2])

    def plugin_estimate(self, moments: ObservedMoments) -> np.ndarray:
        y = np.asarray(moments.ybar, dtype=float)
        if self.epsilon is None:
            pi = float(clamp_probability(y[0]))
            mu = y[2] + y[3]
            mu1 = mu + (1.0 - pi) * self.delta
            mu2 = mu - pi * self.delta
            second = _require_second_moments(moments)
            v1 = second[2] / pi - mu1**2
            v2 = second[3] / (1.0 - pi) - mu2**2
            return np.array([pi, mu1, mu2, v1, v2])
        e = math.exp(self.epsilon)
        pi = float(clamp_probability(((e + 1.0) * y[0] - 1.0) / (e - 1.0)))
        a1, b1, a2, b2 = self._mix_coefficients(pi)
        c1, c2 = a1 + b1, a2 + b2
        d1, d2 = y[2] - a1 * self.delta, y[3] - a2 * self.delta
        mu2 = (c1 * d1 + c2 * d2) / (c1**2 + c2**2)
        mu1 = mu2 + self.delta
        sample = _sample_variances(moments)
        floor1 = (
            a1 * (1.0 - a1) * mu1**2
            + b1 * (1.0 - b1) * mu2**2
            - 2.0 * a1 * b1 * mu1 * mu2
        )
        floor2 = (
            a2 * (1.0 - a2) * mu1**2
            + b2 * (1.0 - b2) * mu2**2
            - 2.0 * a2 * b2 * mu1 * mu2
        )
        v1 = max(float(sample[0]), floor1)
        v2 = max(float(sample[1]), floor2)
        return np.array([pi, mu1, mu2, v1, v2])

    def middle_matrix(self, estimates: np.ndarray) -> np.ndarray:
        pi, mu1, mu2, v1, v2 = (float(x) for x in estimates)
        a1, b1, a2, b2 = self._mix_coefficients(pi)
        q = np.array([a1 + b1, a2 + b2])
        theta2 = np.array([a1 * mu1 + b1 * mu2, a2 * mu1 + b2 * mu2])
        c_bits = np.diag(q) - np.outer(q, q)
        c_cross = np.diag(theta2) - np.outer(q, theta2)
        if self.epsilon is None:
            pis = np.array([pi, 1.0 - pi])
            mus = np.array([mu1, mu2])
            raw = pis * (mus**2 + np.array([v1, v2]))
            c_outcome = np.diag(raw) - np.outer(theta2, theta2)
        else:
            c_outcome = -np.outer(theta2, theta2)
            np.fill_diagonal(c_outcome, [v1, v2])
        c = np.block([[c_bits, c_cross], [c_cross.T, c_outcome]])
        return pseudo_inverse(c)

    def free_start(self, estimates: np.ndarray) -> np.ndarray:
        return np.array([float(estimates[0]), float(estimates[2])])

    def guards(
        self, estimates: np.ndarray, moments: ObservedMoments
    ) -> GuardDecision | None:
        pi = float(estimates[0])
        if min(pi, 1.0 - pi) * moments.n < MIN_EXPECTED_PER_GROUP:
            return GuardDecision(GROUP_TOO_SMALL, 0.0, reject=False)
        if self.epsilon is None:
            v1, v2 = float(estimates[3]), float(estimates[4])
            if v1 < 0.0 or v2 < 0.0:
                sentinel = INFEASIBLE_SENTINEL_PER_GROUP * self.g
                return GuardDecision(INFEASIBLE_VARIANCE, sentinel, reject=True)
        return None


def diff_means_model(
    delta: float, epsilon: float | None = None
) -> DifferenceInMeansModel:
    """Test model for H0: mu1 - mu2 = delta; private when ``epsilon`` is set
    (two-group randomized response on the labels)."""
    return DifferenceInMeansModel(delta=delta, epsilon=epsilon)


# --- g-group ANOVA ----------------------------------------------------------


@dataclass
class AnovaModel:
    """Minimum chi-square model for H0: all g group means are equal.

    Free parameters: the group-share simplex and the common mean.  One-hot
    channels (none / randomized response) optimize over the reported-group
    distribution and estimate the outcome-block variance slots from samples;
    multi-hot channels optimize over the true distribution and use the fully
    theoretical covariance with a pooled variance estimate.
    """

    g: int
    mech: MechanismSpec | None = None

    def __post_init__(self):
        if self.g < 2:
            raise ValueError("need at least two groups")
        if self.mech is not None and self.mech.g != self.g:
            raise ValueError("mechanism group count disagrees with g")
        self.d = 2 * self.g
        self.nu = self.g
        if self.mech is not None and self.mech.kind == "bitflip":
            self.dof = self.g  # full-rank covariance
        else:
            self.dof = self.g - 1  # fixed popcount costs one rank
        self.transform = CompositeTransform(
            [SimplexTransform(self.g), IdentityTransform(1)]
        )

    def theta_of(self, free_params: np.ndarray) -> np.ndarray:
        share = np.asarray(free_params[: self.g], dtype=float)
        mu = float(free_params[self.g])
        if _one_hot(self.mech):
            mixed = share  # reported-group distribution is the parameter
        else:
            mixed = _channel_matrix(self.mech, self.g) @ share
        return np.concatenate([mixed, mu * mixed])

    def plugin_estimate(self, moments: ObservedMoments) -> np.ndarray:
        y = np.asarray(moments.ybar, dtype=float)
        g = self.g
        ind = y[:g]
        total = _channel_total(self.mech)
        mu = float(y[g:].sum() / total)
        if _one_hot(self.mech):
            share = np.clip(ind, 1e-6, None)
        else:
            share = np.clip(_debias_shares(ind, self.mech), 1e-6, None)
        share = share / share.sum()
        sample = _sample_variances(moments)
        if _one_hot(self.mech):
            q = share
        else:
            q = _channel_matrix(self.mech, g) @ share
        s_sq = float((q**2).sum())
        sigma2 = max((sample.sum() - mu**2 * (total - s_sq)) / total, 0.0)
        return np.concatenate([share, [mu, sigma2], sample])

    def middle_matrix(self, estimates: np.ndarray) -> np.ndarray:
        g = self.g
        share = np.asarray(estimates[:g], dtype=float)
        mu = float(estimates[g])
        sigma2 = float(estimates[g + 1])
        sample = np.asarray(estimates[g + 2 :], dtype=float)
        if _one_hot(self.mech):
            # reported-space covariance: one-hot bits, sample variance slots
            q = share
            theta2 = mu * q
            c_bits = np.diag(q) - np.outer(q, q)
            c_cross = mu * c_bits
            c_outcome = -np.outer(theta2, theta2)
            np.fill_diagonal(c_outcome, np.maximum(sample, 1e-12))
            c = np.block([[c_bits, c_cross], [c_cross.T, c_outcome]])
        else:
            c = means_covariance(share, np.full(g, mu), sigma2, self.mech)
        return pseudo_inverse(c)

    def free_start(self, estimates: np.ndarray) -> np.ndarray:
        return np.asarray(estimates[: self.g + 1], dtype=float)

    def guards(
        self, estimates: np.ndarray, moments: ObservedMoments
    ) -> GuardDecision | None:
        share = np.asarray(estimates[: self.g], dtype=float)
        pi_hat = _debias_shares(share, self.mech) if _one_hot(self.mech) else share
        if float(pi_hat.min()) * moments.n < MIN_EXPECTED_PER_GROUP:
            return GuardDecision(GROUP_TOO_SMALL, 0.0, reject=False)
        return None


def anova_model(g: int, mech: MechanismSpec | None = None) -> AnovaModel:
    """Equal-means test model for g groups under the given channel."""
    return AnovaModel(g=g, mech=mech)


def anova_test(
    moments: ObservedMoments,
    mech: MechanismSpec | None = None,
    alpha: float = 0.05,
    g: int | None = None,
) -> TestResult:
    if g is None:
        g = len(moments.ybar) // 2
    return general_chisq(anova_model(g, mech), moments, alpha)


# --- pairwise contrast within g groups --------------------------------------


@dataclass
class PairwiseMeansModel:
    """Minimum chi-square model for H0: mu_j - mu_ell = delta among g groups.

    All other group means stay free, so the null costs exactly one dimension;
    free parameters are the share simplex and the g - 1 unconstrained means.
    """

    g: int
    j: int
    ell: int
    delta: float
    mech: MechanismSpec | None = None

    def __post_init__(self):
        g = self.g
        if g < 2:
            raise ValueError("need at least two groups")
        if not (0 <= self.j < g and 0 <= self.ell < g) or self.j == self.ell:
            raise ValueError("need two distinct group indices inside range")
        if self.mech is not None and self.mech.g != g:
            raise ValueError("mechanism group count disagrees with g")
        self.d = 2 * g
        self.nu = 2 * g - 2
        if self.mech is not None and self.mech.kind == "bitflip":
            self.dof = 2
        else:
            self.dof = 1
        self.transform = CompositeTransform(
            [SimplexTransform(g), IdentityTransform(g - 1)]
        )

    def _full_means(self, free_means: np.ndarray) -> np.ndarray:
        """Insert the constrained mean mu_j = mu_ell + delta into the vector
        of free means (all groups except j, in index order)."""
        mu = np.empty(self.g)
        positions = [m for m in range(self.g) if m != self.j]
        mu[positions] = np.asarray(free_means, dtype=float)
        mu[self.j] = mu[self.ell] + self.delta
        return mu

    def theta_of(self, free_params: np.ndarray) -> np.ndarray:
        share = np.asarray(free_params[: self.g], dtype=float)
        mu = self._full_means(free_params[self.g :])
        b = _channel_matrix(self.mech, self.g)
        return np.concatenate([b @ share, b @ (share * mu)])

    def estimate_group_means(self, moments: ObservedMoments) -> np.ndarray:
        """Unconstrained de-mixed per-group outcome means."""
        y = np.asarray(moments.ybar, dtype=float)
        g = self.g
        pi_hat = np.clip(_debias_shares(y[:g], self.mech), 1e-6, None)
        if self.mech is None:
            product = y[g:]
        else:
            b_inv = np.linalg.inv(_channel_matrix(self.mech, g))
            product = b_inv @ y[g:]
        return product / pi_hat

    def plugin_estimate(self, moments: ObservedMoments) -> np.ndarray:
        y = np.asarray(moments.ybar, dtype=float)
        g = self.g
        pi_raw = _debias_shares(y[:g], self.mech)
        share = np.clip(pi_raw, 1e-6, None)
        share = share / share.sum()
        mu = self.estimate_group_means(moments)
        # project the pair onto the null, weighting by estimated group size
        wj, wl = share[self.j], share[self.ell]
        pooled = (wj * (mu[self.j] - self.delta) + wl * mu[self.ell]) / (wj + wl)
        mu = mu.copy()
        mu[self.ell] = pooled
        mu[self.j] = pooled + self.delta
        total = _channel_total(self.mech)
        theta2 = _channel_matrix(self.mech, g) @ (share * mu)
        sample = _sample_variances(moments)
        sigma2 = max(
            (sample.sum() + float((theta2**2).sum()) - total * float((share * mu**2).sum()))
            / total,
            0.0,
        )
        return np.concatenate([share, mu, [sigma2]])

    def middle_matrix(self, estimates: np.ndarray) -> np.ndarray:
        g = self.g
        share = np.asarray(estimates[:g], dtype=float)
        mu = np.asarray(estimates[g : 2 * g], dtype=float)
        sigma2 = float(estimates[2 * g])
        return pseudo_inverse(means_covariance(share, mu, sigma2, self.mech))

    def free_start(self, estimates: np.ndarray) -> np.ndarray:
        share = np.asarray(estimates[: self.g], dtype=float)
        mu = np.asarray(estimates[self.g : 2 * self.g], dtype=float)
        free_means = [mu[m] for m in range(self.g) if m != self.j]
        return np.concatenate([share, free_means])

    def guards(
        self, estimates: np.ndarray, moments: ObservedMoments
    ) -> GuardDecision | None:
        share = np.asarray(estimates[: self.g], dtype=float)
        if float(share.min()) * moments.n < MIN_EXPECTED_PER_GROUP:
            return GuardDecision(GROUP_TOO_SMALL, 0.0, reject=False)
        return None


def pairwise_within_g(
    g: int,
    j: int,
    ell: int,
    delta: float,
    mech: MechanismSpec | None = None,
) -> PairwiseMeansModel:
    """Test model for H0: mu_j - mu_ell = delta with other means free."""
    return PairwiseMeansModel(g=g, j=j, ell=ell, delta=delta, mech=mech)


def pairwise_ci_bounds(
    moments: ObservedMoments,
    mech: MechanismSpec | None = None,
    scale: float = 10.0,
) -> tuple[float, float]:
    """Generous symmetric search bounds for a difference in means: +/- scale
    pooled outcome standard deviations."""
    y = np.asarray(moments.ybar, dtype=float)
    second = _require_second_moments(moments)
    g = len(y) // 2
    total = _channel_total(mech)
    mean = y[g:].sum() / total
    raw_second = second[g:].sum() / total
    spread = math.sqrt(max(raw_second - mean**2, 1e-12))
    return -scale * spread, scale * spread
