"""Difference-in-differences testing when group labels are privatized.

Setting: each sample carries a public treatment indicator, a two-group label
privatized by randomized response, and a real outcome.  The null hypothesis is
that the gap between the two groups' mean outcomes changes by ``delta``
between treatment and control,

    (mu_{1,t} - mu_{2,t}) - (mu_{1,c} - mu_{2,c}) = delta.

The observable per sample is five-dimensional: the first label bit, and the
outcome routed by (treatment arm) x (label bit),

    Y = (Z1, T*Z1*X, T*Z2*X, (1-T)*Z1*X, (1-T)*Z2*X).

Because exactly one label bit is set and each sample is in exactly one arm,
all cross products among the four outcome coordinates vanish sample by
sample, which makes the covariance nearly diagonal.  The treatment
probability is a known design constant and is not estimated.

A naive baseline (:func:`diff_in_diff_ttest`) that runs the classical
four-cell Welch difference-in-differences on the reported labels is included
for comparison; its estimate is attenuated toward zero by the channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .chisq_engine import (
    GROUP_TOO_SMALL,
    ConfidenceInterval,
    GuardDecision,
    MIN_EXPECTED_PER_GROUP,
    ObservedMoments,
    ci_search,
)
from .means import TTestResult
from .numerics import (
    CompositeTransform,
    IdentityTransform,
    LogitTransform,
    clamp_probability,
    pseudo_inverse,
)


@dataclass(frozen=True)
class ABSample:
    """One experiment record: public treatment flag, privatized two-group
    label (one-hot bit pair), and real outcome."""

    treated: bool
    label: tuple[int, int]
    outcome: float

    def __post_init__(self):
        label = tuple(int(b) for b in self.label)
        if len(label) != 2 or any(b not in (0, 1) for b in label):
            raise ValueError("label must be a pair of 0/1 bits")
        if sum(label) != 1:
            raise ValueError("two-group randomized response sets exactly one bit")
        object.__setattr__(self, "label", label)


def ab_moments(samples: list[ABSample]) -> ObservedMoments:
    """Observed first and second moments of the five-coordinate observable."""
    if not samples:
        raise ValueError("need at least one sample")
    treated = np.array([s.treated for s in samples], dtype=float)
    bits = np.array([s.label for s in samples], dtype=float)
    outcomes = np.array([s.outcome for s in samples], dtype=float)
    return ab_moments_from_arrays(treated, bits, outcomes)


def ab_moments_from_arrays(
    treated: np.ndarray, bits: np.ndarray, outcomes: np.ndarray
) -> ObservedMoments:
    """Array-shaped variant of :func:`ab_moments` for bulk simulation."""
    t = np.asarray(treated, dtype=float)
    bits = np.asarray(bits, dtype=float)
    outcomes = np.asarray(outcomes, dtype=float)
    if bits.ndim != 2 or bits.shape[1] != 2 or len(bits) != len(t) != 0:
        raise ValueError("need aligned treatment flags, (n, 2) bits, outcomes")
    y = np.column_stack(
        [
            bits[:, 0],
            t * bits[:, 0] * outcomes,
            t * bits[:, 1] * outcomes,
            (1.0 - t) * bits[:, 0] * outcomes,
            (1.0 - t) * bits[:, 1] * outcomes,
        ]
    )
    return ObservedMoments(
        ybar=y.mean(axis=0), n=len(y), second_moments=(y**2).mean(axis=0)
    )


def _require_second_moments(moments: ObservedMoments) -> np.ndarray:
    if moments.second_moments is None:
        raise ValueError(
            "the A/B model needs second moments; build inputs with ab_moments"
        )
    return np.asarray(moments.second_moments, dtype=float)


@dataclass
class ABTestModel:
    """Minimum chi-square model for the privatized difference-in-differences.

    Free parameters: (pi, mu_2t, mu_1c, mu_2c); the treated group-1 mean is
    eliminated through the null constraint.  Plug-in means come from solving
    the first three mean equations exactly; the four outcome-coordinate
    variance slots use sample variances floored at their zero-outcome-variance
    theoretical minimum.
    """

    __test__ = False  # not a pytest class, despite the name

    lam: float
    epsilon: float
    delta: float

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ValueError("treatment probability must lie strictly in (0, 1)")
        if self.epsilon <= 0.0:
            raise ValueError("privacy loss must be positive")
        self.d = 5
        self.nu = 4
        self.dof = 1
        self.transform = CompositeTransform([LogitTransform(1), IdentityTransform(3)])

    def _weights(self, pi: float) -> tuple[float, float, float, float]:
        """Mixing weights of the true group means inside the two reported-bit
        outcome coordinates: (a, b) for bit 1, (a2, b2) for bit 2."""
        e = math.exp(self.epsilon)
        return (
            pi * e / (e + 1.0),
            (1.0 - pi) / (e + 1.0),
            pi / (e + 1.0),
            (1.0 - pi) * e / (e + 1.0),
        )

    def _route(self, pi: float, values) -> np.ndarray:
        """Route per-(group, arm) values (v1t, v2t, v1c, v2c) through the
        channel weights and arm probabilities into the five coordinates."""
        a, b, a2, b2 = self._weights(pi)
        v1t, v2t, v1c, v2c = values
        lam = self.lam
        return np.array(
            [
                a + b,
                lam * (a * v1t + b * v2t),
                lam * (a2 * v1t + b2 * v2t),
                (1.0 - lam) * (a * v1c + b * v2c),
                (1.0 - lam) * (a2 * v1c + b2 * v2c),
            ]
        )

    def _display(self, pi: float, mu) -> np.ndarray:
        """Expected observable at group-1 share pi and cell means mu."""
        return self._route(pi, mu)

    def _display_second(self, pi: float, mu, sigma2) -> np.ndarray:
        """Expected squared observable (bits are idempotent, so the outcome
        coordinates route mu^2 + sigma^2 through the same weights)."""
        m1t, m2t, m1c, m2c = mu
        s1t, s2t, s1c, s2c = sigma2
        return self._route(
            pi,
            (m1t**2 + s1t, m2t**2 + s2t, m1c**2 + s1c, m2c**2 + s2c),
        )

    def theta_of(self, free_params: np.ndarray) -> np.ndarray:
        pi, m2t, m1c, m2c = (float(x) for x in free_params)
        m1t = m2t + m1c - m2c + self.delta
        return self._display(pi, (m1t, m2t, m1c, m2c))

    def plugin_estimate(self, moments: ObservedMoments) -> np.ndarray:
        y = np.asarray(moments.ybar, dtype=float)
        second = _require_second_moments(moments)
        e = math.exp(self.epsilon)
        pi = float(clamp_probability(((e + 1.0) * y[0] - 1.0) / (e - 1.0)))
        a, b, a2, b2 = self._weights(pi)
        r2, r3 = y[1] / self.lam, y[2] / self.lam
        r4 = y[3] / (1.0 - self.lam)
        coefficients = np.array(
            [[a + b, a, -a], [a2 + b2, a2, -a2], [0.0, a, b]]
        )
        rhs = np.array([r2 - a * self.delta, r3 - a2 * self.delta, r4])
        m2t, m1c, m2c = np.linalg.solve(coefficients, rhs)
        m1t = m2t + m1c - m2c + self.delta
        mu = (m1t, m2t, m1c, m2c)
        theta = self._display(pi, mu)
        # smallest variance consistent with the estimated means: all four
        # outcome variances zero, leaving only the mixing spread
        floors = self._display_second(pi, mu, (0.0,) * 4)[1:] - theta[1:] ** 2
        sample = second[1:] - y[1:] ** 2
        variances = np.maximum(sample, floors)
        return np.concatenate([[pi], mu, variances])

    def middle_matrix(self, estimates: np.ndarray) -> np.ndarray:
        pi = float(estimates[0])
        mu = tuple(float(x) for x in estimates[1:5])
        variances = np.asarray(estimates[5:9], dtype=float)
        theta = self._display(pi, mu)
        c = -np.outer(theta, theta)
        c[0, 0] = theta[0] * (1.0 - theta[0])
        for i in (1, 3):  # coordinates sharing the reported bit with Y1
            c[0, i] = c[i, 0] = theta[i] * (1.0 - theta[0])
        c[np.arange(1, 5), np.arange(1, 5)] = np.maximum(variances, 1e-12)
        return pseudo_inverse(c)

    def free_start(self, estimates: np.ndarray) -> np.ndarray:
        return np.asarray(estimates, dtype=float)[[0, 2, 3, 4]]

    def guards(
        self, estimates: np.ndarray, moments: ObservedMoments
    ) -> GuardDecision | None:
        pi = float(estimates[0])
        cells = moments.n * np.array(
            [
                self.lam * pi,
                self.lam * (1.0 - pi),
                (1.0 - self.lam) * pi,
                (1.0 - self.lam) * (1.0 - pi),
            ]
        )
        if float(cells.min()) < MIN_EXPECTED_PER_GROUP:
            return GuardDecision(GROUP_TOO_SMALL, 0.0, reject=False)
        return None


def ab_model(lam: float, epsilon: float, delta: float) -> ABTestModel:
    """Test model for H0: the treatment/control gap between the two groups'
    means equals ``delta``, with labels privatized at privacy loss
    ``epsilon`` and known treatment probability ``lam``."""
    return ABTestModel(lam=lam, epsilon=epsilon, delta=delta)


def ab_ci_bounds(
    moments: ObservedMoments, scale: float = 10.0
) -> tuple[float, float]:
    """Generous symmetric search bounds: +/- scale pooled outcome standard
    deviations (the four routed coordinates partition every outcome)."""
    y = np.asarray(moments.ybar, dtype=float)
    second = _require_second_moments(moments)
    mean = float(y[1:].sum())
    spread = math.sqrt(max(float(second[1:].sum()) - mean**2, 1e-12))
    return -scale * spread, scale * spread


def ab_ci(
    samples: list[ABSample],
    lam: float,
    epsilon: float,
    alpha: float = 0.05,
    bounds: tuple[float, float] | None = None,
    tolerance: float = 1e-3,
) -> ConfidenceInterval:
    """Confidence interval for the difference-in-differences by inverting the
    chi-square test over candidate effect sizes."""
    moments = ab_moments(samples)
    if bounds is None:
        bounds = ab_ci_bounds(moments)
    return ci_search(
        lambda delta: ab_model(lam, epsilon, delta),
        moments,
        bounds,
        alpha,
        tolerance,
    )


# --- naive reported-label baseline ------------------------------------------


def ab_cell_stats(treated: np.ndarray, bits: np.ndarray, outcomes: np.ndarray):
    """Outcome mean, sample variance, and count in the four cells
    (treated x reported bit), ordered (t,1), (t,2), (c,1), (c,2)."""
    t = np.asarray(treated).astype(bool)
    bits = np.asarray(bits)
    x = np.asarray(outcomes, dtype=float)
    masks = [
        t & (bits[:, 0] == 1),
        t & (bits[:, 1] == 1),
        ~t & (bits[:, 0] == 1),
        ~t & (bits[:, 1] == 1),
    ]
    counts = np.array([int(m.sum()) for m in masks], dtype=float)
    if (counts < 2).any():
        raise ValueError("every (arm, reported group) cell needs two samples")
    means = np.array([x[m].mean() for m in masks])
    variances = np.array([x[m].var(ddof=1) for m in masks])
    return means, variances, counts


def _cell_stats(samples: list[ABSample]):
    treated = np.array([s.treated for s in samples])
    bits = np.array([s.label for s in samples])
    outcomes = np.array([s.outcome for s in samples], dtype=float)
    return ab_cell_stats(treated, bits, outcomes)


def _did_welch(means, variances, counts) -> tuple[float, float, float]:
    """(estimate, squared standard error, Welch degrees of freedom) of the
    four-cell difference-in-differences."""
    contributions = np.asarray(variances, dtype=float) / np.asarray(counts, float)
    se2 = float(contributions.sum())
    if se2 <= 0.0:
        raise ValueError("degenerate cell variances give a zero standard error")
    dof = se2**2 / float((contributions**2 / (np.asarray(counts) - 1.0)).sum())
    did = float((means[0] - means[1]) - (means[2] - means[3]))
    return did, se2, dof


def ab_diff_estimate(samples: list[ABSample]) -> float:
    """Naive difference-in-differences of cell means on reported labels."""
    means, _, _ = _cell_stats(samples)
    return float((means[0] - means[1]) - (means[2] - means[3]))


def did_ttest_from_cells(
    means, variances, counts, delta: float = 0.0, alpha: float = 0.05
) -> TTestResult:
    """Four-cell Welch difference-in-differences t test from cell summaries."""
    did, se2, dof = _did_welch(means, variances, counts)
    t = (did - delta) / math.sqrt(se2)
    p = 2.0 * float(stats.t.sf(abs(t), dof))
    return TTestResult(statistic=float(t), dof=dof, p_value=p, reject=bool(p < alpha))


def did_ci_from_cells(means, variances, counts, alpha: float = 0.05) -> ConfidenceInterval:
    """Welch-style interval around the four-cell difference-in-differences."""
    did, se2, dof = _did_welch(means, variances, counts)
    half = float(stats.t.ppf(1.0 - alpha / 2.0, dof)) * math.sqrt(se2)
    return ConfidenceInterval(did - half, did + half, alpha, tolerance=0.0)


def diff_in_diff_ttest(
    samples: list[ABSample], delta: float = 0.0, alpha: float = 0.05
) -> TTestResult:
    """Classical four-cell Welch difference-in-differences t test run on the
    reported labels as if they were true (the unmodified baseline)."""
    return did_ttest_from_cells(*_cell_stats(samples), delta=delta, alpha=alpha)


def diff_in_diff_ci(
    samples: list[ABSample], alpha: float = 0.05
) -> ConfidenceInterval:
    """Welch-style interval around the naive difference-in-differences."""
    return did_ci_from_cells(*_cell_stats(samples), alpha=alpha)
