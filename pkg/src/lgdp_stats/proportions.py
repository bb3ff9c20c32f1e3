"""Difference in success proportions between two groups.

Each sample has a binary group label and a binary outcome.  When the label is
privatized (two-group randomized response), the naive z-test computed on
reported groups is both biased and over-dispersed; this module provides

- the classical z machinery (:func:`ztest_statistic`, :func:`ztest_ci`),
- a bias correction that divides the observed difference by the channel's
  attenuation factor (:func:`corrected_delta`, :func:`corrected_ztest_ci`),
- a minimum chi-square test model (:func:`prop_model`) that writes the
  expected 2x2 cell probabilities as an explicit function of the channel and
  needs no post-hoc correction.

The observable vector is the flattened group-by-outcome table in the order
(group-1 successes, group-2 successes, group-1 failures, group-2 failures),
normalized by the total sample count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chisq_engine import (
    GROUP_TOO_SMALL,
    ConfidenceInterval,
    GuardDecision,
    MIN_EXPECTED_PER_GROUP,
    ObservedMoments,
)
from .numerics import (
    CompositeTransform,
    IntervalTransform,
    LogitTransform,
    clamp_probability,
    normal_quantile,
)


@dataclass(frozen=True)
class PropCounts:
    """2x2 counts of (reported) group versus binary outcome."""

    success1: int
    failure1: int
    success2: int
    failure2: int

    @classmethod
    def from_arrays(cls, groups: np.ndarray, outcomes: np.ndarray) -> "PropCounts":
        """Build counts from 0/1 group labels and 0/1 outcomes."""
        groups = np.asarray(groups)
        outcomes = np.asarray(outcomes)
        if groups.shape != outcomes.shape:
            raise ValueError("groups and outcomes must have matching length")
        if groups.size and not set(np.unique(groups)) <= {0, 1}:
            raise ValueError("group labels must be 0 or 1")
        in1 = groups == 0
        return cls(
            success1=int((outcomes[in1] == 1).sum()),
            failure1=int((outcomes[in1] == 0).sum()),
            success2=int((outcomes[~in1] == 1).sum()),
            failure2=int((outcomes[~in1] == 0).sum()),
        )

    @property
    def n1(self) -> int:
        return self.success1 + self.failure1

    @property
    def n2(self) -> int:
        return self.success2 + self.failure2

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    def rates(self) -> tuple[float, float]:
        """(success rate in group 1, success rate in group 2)."""
        if self.n1 == 0 or self.n2 == 0:
            raise ValueError("both groups need at least one sample")
        return self.success1 / self.n1, self.success2 / self.n2

    def to_moments(self) -> ObservedMoments:
        ybar = (
            np.array(
                [self.success1, self.success2, self.failure1, self.failure2],
                dtype=float,
            )
            / self.n
        )
        return ObservedMoments(ybar=ybar, n=self.n)


def ztest_statistic(
    p1: float,
    p2: float,
    n1: int,
    n2: int,
    delta: float = 0.0,
    pooled: bool = False,
) -> float:
    """Two-sample z statistic for H0: p1 - p2 = delta.

    Uses the unpooled standard error by default; ``pooled`` switches to the
    pooled estimate (only meaningful for delta = 0).
    """
    if min(n1, n2) <= 0:
        raise ValueError("need positive sample counts")
    if pooled:
        p = (p1 * n1 + p2 * n2) / (n1 + n2)
        variance = p * (1.0 - p) * (1.0 / n1 + 1.0 / n2)
    else:
        variance = p1 * (1.0 - p1) / n1 + p2 * (1.0 - p2) / n2
    if variance <= 0.0:
        raise ValueError("degenerate proportions give a zero standard error")
    return (p1 - p2 - delta) / math.sqrt(variance)


def ztest_ci(counts: PropCounts, alpha: float = 0.05) -> ConfidenceInterval:
    """Wald interval for the difference in success rates between the two
    (reported) groups, with no privacy correction."""
    p1, p2 = counts.rates()
    se = math.sqrt(
        p1 * (1.0 - p1) / counts.n1 + p2 * (1.0 - p2) / counts.n2
    )
    z = normal_quantile(1.0 - alpha / 2.0)
    diff = p1 - p2
    return ConfidenceInterval(diff - z * se, diff + z * se, alpha, tolerance=0.0)


def estimate_pi_private(counts: PropCounts, epsilon: float) -> float:
    """Debiased estimate of the true share of group 1 from the reported
    group margin under two-group randomized response."""
    if epsilon <= 0:
        raise ValueError("privacy loss must be positive")
    e = math.exp(epsilon)
    reported_share = counts.n1 / counts.n
    pi = ((e + 1.0) * reported_share - 1.0) / (e - 1.0)
    return float(min(max(pi, 0.0), 1.0))


def attenuation_factor(pi_hat: float, counts: PropCounts, epsilon: float) -> float:
    """Multiplier relating the true difference in success rates to the
    expected difference computed on reported groups."""
    e = math.exp(epsilon)
    n = counts.n
    return (
        n * pi_hat * e / ((1.0 + e) * counts.n1)
        - n * pi_hat / ((1.0 + e) * counts.n2)
    )


def corrected_delta(
    delta: float, pi_hat: float, counts: PropCounts, epsilon: float
) -> float:
    """Expected reported-group difference when the true difference is
    ``delta`` (the attenuation the bias correction divides out).  With
    balanced reported groups and pi_hat = 1/2 the factor is
    (e^eps - 1)/(e^eps + 1)."""
    return attenuation_factor(pi_hat, counts, epsilon) * delta


def corrected_ztest_ci(
    counts: PropCounts, epsilon: float, alpha: float = 0.05
) -> ConfidenceInterval:
    """Bias-corrected z interval for the true difference in success rates.

    Computes the Wald interval on reported groups and divides both endpoints
    by the attenuation factor evaluated at the debiased group share."""
    pi_hat = estimate_pi_private(counts, epsilon)
    factor = attenuation_factor(pi_hat, counts, epsilon)
    if factor <= 0.0:
        raise ValueError(
            "attenuation factor is not positive; the correction is undefined"
        )
    raw = ztest_ci(counts, alpha)
    return ConfidenceInterval(
        raw.lower / factor, raw.upper / factor, alpha, tolerance=0.0
    )


@dataclass
class DifferenceInProportionsModel:
    """Minimum chi-square model for H0: p1 - p2 = delta on the 2x2 table.

    Free parameters are (pi, p2): the share of group 1 and the group-2
    success rate.  With ``epsilon`` set, the expected cell probabilities are
    pushed through two-group randomized response, so the test acts on
    privatized tables without any separate correction step.
    """

    delta: float
    epsilon: float | None = None
    d: int = field(default=4, init=False)
    nu: int = field(default=2, init=False)
    dof: int = field(default=1, init=False)

    def __post_init__(self):
        if not -1.0 < self.delta < 1.0:
            raise ValueError("difference in proportions must lie in (-1, 1)")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValueError("privacy loss must be positive")
        self._p2_lo = max(0.0, -self.delta)
        self._p2_hi = min(1.0, 1.0 - self.delta)
        self.transform = CompositeTransform(
            [LogitTransform(1), IntervalTransform([self._p2_lo], [self._p2_hi])]
        )

    def _keep_probability(self) -> float:
        e = math.exp(self.epsilon)
        return e / (e + 1.0)

    def theta_of(self, free_params: np.ndarray) -> np.ndarray:
        pi, p2 = float(free_params[0]), float(free_params[1])
        p1 = p2 + self.delta
        theta = np.array(
            [
                pi * p1,
                (1.0 - pi) * p2,
                pi * (1.0 - p1),
                (1.0 - pi) * (1.0 - p2),
            ]
        )
        if self.epsilon is None:
            return theta
        q = self._keep_probability()
        mixed = theta.copy()
        mixed[0] = q * theta[0] + (1.0 - q) * theta[1]
        mixed[1] = (1.0 - q) * theta[0] + q * theta[1]
        mixed[2] = q * theta[2] + (1.0 - q) * theta[3]
        mixed[3] = (1.0 - q) * theta[2] + q * theta[3]
        return mixed

    def plugin_estimate(self, moments: ObservedMoments) -> np.ndarray:
        y = np.asarray(moments.ybar, dtype=float)
        reported_share = y[0] + y[2]
        success_rate = y[0] + y[1]
        if self.epsilon is None:
            pi = reported_share
        else:
            e = math.exp(self.epsilon)
            pi = ((e + 1.0) * reported_share - 1.0) / (e - 1.0)
        pi = float(clamp_probability(pi))
        p2 = success_rate - pi * self.delta
        margin = 1e-6 * (self._p2_hi - self._p2_lo)
        p2 = float(np.clip(p2, self._p2_lo + margin, self._p2_hi - margin))
        return np.array([pi, p2])

    def middle_matrix(self, estimates: np.ndarray) -> np.ndarray:
        theta = np.clip(self.theta_of(estimates), 1e-12, None)
        return np.diag(1.0 / theta)

    def free_start(self, estimates: np.ndarray) -> np.ndarray:
        return np.asarray(estimates, dtype=float)

    def guards(
        self, estimates: np.ndarray, moments: ObservedMoments
    ) -> GuardDecision | None:
        pi = float(estimates[0])
        smallest = min(pi, 1.0 - pi) * moments.n
        if smallest < MIN_EXPECTED_PER_GROUP:
            return GuardDecision(GROUP_TOO_SMALL, 0.0, reject=False)
        return None


def prop_model(
    delta: float, epsilon: float | None = None
) -> DifferenceInProportionsModel:
    """Test model for H0: p1 - p2 = delta; private when ``epsilon`` is set."""
    return DifferenceInProportionsModel(delta=delta, epsilon=epsilon)
