"""Independence of a binary outcome from a g-level group label.

The null hypothesis is that every group shares one success probability.  The
observable per sample is the privatized label vector split by outcome,

    Y = (X * Z, (1 - X) * Z)  in R^(2g),

where Z is the (possibly multi-hot) reported label and X the public binary
outcome.  Expected values and covariances of Y are explicit functions of the
channel's marginal and pairwise bit probabilities, which is all the minimum
chi-square engine needs.

Two model families cover the three mechanisms:

- randomized response emits one-hot labels, so Y is a 2g-cell multinomial and
  the classical inverse-expected-cell weighting applies; the model optimizes
  over the reported-group distribution directly (mixing a distribution
  through the channel is a simplex bijection, and the null survives it).
- bit flipping and the subset mechanism emit multi-hot labels; their models
  optimize over the true group distribution and weight residuals by the
  pseudo-inverse of the observable's covariance.

``pearson_independence`` provides the classical contingency-table test used
as a baseline when someone runs it directly on privatized tables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chisq_engine import (
    GROUP_TOO_SMALL,
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
    LogitTransform,
    SimplexTransform,
    chi2_quantile,
    chi2_sf,
    clamp_probability,
    pseudo_inverse,
)


def _channel_matrix(mech: MechanismSpec | None, g: int) -> np.ndarray:
    return np.eye(g) if mech is None else marginal_matrix(mech)


def _channel_pairs(mech: MechanismSpec | None, g: int) -> np.ndarray:
    """tensor[m] = pairwise bit probabilities given true group m; the
    identity channel reports exactly the true one-hot label."""
    if mech is None:
        tensor = np.zeros((g, g, g))
        for m in range(g):
            tensor[m, m, m] = 1.0
        return tensor
    return pair_tensor(mech)


def _debias(ind: np.ndarray, mech: MechanismSpec | None) -> np.ndarray:
    """Unbiased group-share estimate from mean bit indicators."""
    if mech is None:
        return np.asarray(ind, dtype=float).copy()
    diag, off = diag_offdiag_probabilities(mech)
    return (np.asarray(ind, dtype=float) - off) / (diag - off)


def indep_moments(bits: np.ndarray, outcomes: np.ndarray) -> ObservedMoments:
    """Observed moments from an (n, g) 0/1 label matrix and 0/1 outcomes."""
    bits = np.asarray(bits, dtype=float)
    outcomes = np.asarray(outcomes, dtype=float)
    if bits.ndim != 2 or len(bits) != len(outcomes):
        raise ValueError("need an (n, g) bit matrix and n outcomes")
    success = bits * outcomes[:, None]
    failure = bits * (1.0 - outcomes[:, None])
    ybar = np.concatenate([success.mean(axis=0), failure.mean(axis=0)])
    return ObservedMoments(ybar=ybar, n=len(bits))


def indep_theta(
    pi: np.ndarray, p: float, mech: MechanismSpec | None = None
) -> np.ndarray:
    """Expected observable (success block, failure block) under the null."""
    pi = np.asarray(pi, dtype=float)
    mixed = _channel_matrix(mech, len(pi)) @ pi
    return np.concatenate([p * mixed, (1.0 - p) * mixed])


def indep_covariance(
    pi: np.ndarray, p: float, mech: MechanismSpec | None = None
) -> np.ndarray:
    """Covariance of the observable under the null at parameters (pi, p)."""
    pi = np.asarray(pi, dtype=float)
    g = len(pi)
    pair_mix = np.tensordot(pi, _channel_pairs(mech, g), axes=(0, 0))
    mixed = _channel_matrix(mech, g) @ pi
    theta1, theta2 = p * mixed, (1.0 - p) * mixed
    c11 = p * pair_mix - np.outer(theta1, theta1)
    c22 = (1.0 - p) * pair_mix - np.outer(theta2, theta2)
    c12 = -np.outer(theta1, theta2)
    return np.block([[c11, c12], [c12.T, c22]])


def indep_estimates(
    moments: ObservedMoments, mech: MechanismSpec | None = None
) -> tuple[np.ndarray, float]:
    """(debiased group shares, estimated common success probability).

    The share estimates are raw inversions of the channel and are unbiased;
    individual entries can fall slightly outside [0, 1] in small samples.
    """
    y = np.asarray(moments.ybar, dtype=float)
    g = len(y) // 2
    ind = y[:g] + y[g:]
    pi_hat = _debias(ind, mech)
    total = 1.0 if mech is None else column_total(mech)
    p_hat = float(y[:g].sum() / total)
    return pi_hat, p_hat


@dataclass
class MultinomialIndependenceModel:
    """One-hot labels (randomized response or no privatization): the
    observable is a 2g-cell multinomial, weighted by inverse expected cells.

    Free parameters: the reported-group distribution (g simplex coordinates)
    and the common success probability.
    """

    g: int
    mech: MechanismSpec | None = None

    def __post_init__(self):
        if self.mech is not None and self.mech.kind != "rr":
            raise ValueError("multinomial model requires one-hot labels")
        self.d = 2 * self.g
        self.nu = self.g
        self.dof = self.g - 1  # multinomial rank 2g - 1 minus g free params
        self.transform = CompositeTransform(
            [SimplexTransform(self.g), LogitTransform(1)]
        )

    def theta_of(self, free_params: np.ndarray) -> np.ndarray:
        share = np.asarray(free_params[: self.g], dtype=float)
        p = float(free_params[self.g])
        return np.concatenate([p * share, (1.0 - p) * share])

    def plugin_estimate(self, moments: ObservedMoments) -> np.ndarray:
        y = np.asarray(moments.ybar, dtype=float)
        share = np.clip(y[: self.g] + y[self.g :], 1e-6, None)
        share = share / share.sum()
        p = float(clamp_probability(y[: self.g].sum()))
        return np.concatenate([share, [p]])

    def middle_matrix(self, estimates: np.ndarray) -> np.ndarray:
        theta = np.clip(self.theta_of(estimates), 1e-12, None)
        return np.diag(1.0 / theta)

    def free_start(self, estimates: np.ndarray) -> np.ndarray:
        return np.asarray(estimates, dtype=float)

    def guards(
        self, estimates: np.ndarray, moments: ObservedMoments
    ) -> GuardDecision | None:
        pi_hat = _debias(estimates[: self.g], self.mech)
        if float(pi_hat.min()) * moments.n < MIN_EXPECTED_PER_GROUP:
            return GuardDecision(GROUP_TOO_SMALL, 0.0, reject=False)
        return None


@dataclass
class ChannelIndependenceModel:
    """Multi-hot labels (bit flipping or subset): residuals are weighted by
    the pseudo-inverse of the observable covariance at plug-in estimates.

    Free parameters: the true group distribution and the common success
    probability.
    """

    mech: MechanismSpec

    def __post_init__(self):
        if self.mech.kind not in ("bitflip", "subset"):
            raise ValueError("channel model expects bitflip or subset labels")
        g = self.mech.g
        self.g = g
        self.d = 2 * g
        self.nu = g
        # the subset channel fixes the popcount, costing the covariance one
        # rank; bit flipping keeps full rank
        self.dof = g if self.mech.kind == "bitflip" else g - 1
        self.transform = CompositeTransform([SimplexTransform(g), LogitTransform(1)])

    def theta_of(self, free_params: np.ndarray) -> np.ndarray:
        pi = np.asarray(free_params[: self.g], dtype=float)
        p = float(free_params[self.g])
        return indep_theta(pi, p, self.mech)

    def plugin_estimate(self, moments: ObservedMoments) -> np.ndarray:
        pi_hat, p_hat = indep_estimates(moments, self.mech)
        pi = np.clip(pi_hat, 1e-6, None)
        pi = pi / pi.sum()
        return np.concatenate([pi, [float(clamp_probability(p_hat))]])

    def middle_matrix(self, estimates: np.ndarray) -> np.ndarray:
        pi = np.asarray(estimates[: self.g], dtype=float)
        p = float(estimates[self.g])
        return pseudo_inverse(indep_covariance(pi, p, self.mech))

    def free_start(self, estimates: np.ndarray) -> np.ndarray:
        return np.asarray(estimates, dtype=float)

    def guards(
        self, estimates: np.ndarray, moments: ObservedMoments
    ) -> GuardDecision | None:
        pi_hat, _ = indep_estimates(moments, self.mech)
        if float(pi_hat.min()) * moments.n < MIN_EXPECTED_PER_GROUP:
            return GuardDecision(GROUP_TOO_SMALL, 0.0, reject=False)
        return None


def indep_model(g: int, mech: MechanismSpec | None = None):
    """Independence test model for g groups under the given channel."""
    if mech is None:
        return MultinomialIndependenceModel(g=g)
    if mech.g != g:
        raise ValueError("mechanism group count disagrees with g")
    if mech.kind == "rr":
        return MultinomialIndependenceModel(g=g, mech=mech)
    return ChannelIndependenceModel(mech=mech)


def indep_test(
    moments: ObservedMoments,
    mech: MechanismSpec | None = None,
    alpha: float = 0.05,
    g: int | None = None,
) -> TestResult:
    """Minimum chi-square independence test on observed moments."""
    if g is None:
        g = len(moments.ybar) // 2
    return general_chisq(indep_model(g, mech), moments, alpha)


def pearson_independence(table: np.ndarray, alpha: float = 0.05) -> TestResult:
    """Classical Pearson chi-square test on a (g, 2) contingency table.

    This is the baseline an analyst gets by ignoring privatization and
    feeding reported-label counts straight into the textbook test."""
    table = np.asarray(table, dtype=float)
    if table.ndim != 2 or table.shape[1] != 2:
        raise ValueError("need a (g, 2) table of counts")
    if (table < 0).any():
        raise ValueError("counts must be non-negative")
    n = table.sum()
    row = table.sum(axis=1)
    col = table.sum(axis=0)
    if n <= 0 or (row == 0).any() or (col == 0).any():
        raise ValueError("table has an empty margin")
    expected = np.outer(row, col) / n
    statistic = float(((table - expected) ** 2 / expected).sum())
    dof = table.shape[0] - 1
    return TestResult(
        statistic=statistic,
        dof=dof,
        p_value=chi2_sf(statistic, dof),
        reject=bool(statistic > chi2_quantile(1.0 - alpha, dof)),
    )


def outcome_table(bits: np.ndarray, outcomes: np.ndarray) -> np.ndarray:
    """(g, 2) success/failure membership counts per reported bit; with
    multi-hot labels a sample contributes one count per set bit."""
    bits = np.asarray(bits, dtype=float)
    outcomes = np.asarray(outcomes, dtype=float)
    success = (bits * outcomes[:, None]).sum(axis=0)
    failure = (bits * (1.0 - outcomes[:, None])).sum(axis=0)
    return np.stack([success, failure], axis=1)
