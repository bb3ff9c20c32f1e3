"""Minimum chi-square testing engine.

A test model describes a null hypothesis through the expected observable
vector ``theta(free_params)``, a plug-in weighting matrix, and bookkeeping
(degrees of freedom, a reparametrization to unconstrained coordinates, and
data-quality guards).  The engine minimizes

    n * (ybar - theta(params))' M (ybar - theta(params))

over the null's free parameters and compares the minimum against a chi-square
quantile.  Confidence intervals come from inverting the family of tests
indexed by a scalar effect size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .numerics import Transform, chi2_quantile, chi2_sf, minimize

GROUP_TOO_SMALL = "GroupTooSmall"
INFEASIBLE_VARIANCE = "InfeasibleVariance"

#: Minimum expected sample count per group before the test refuses to run.
MIN_EXPECTED_PER_GROUP = 5.0


class NoAcceptingDeltaError(ValueError):
    """No candidate effect size inside the search bounds is accepted."""

    code = "no-accepting-delta"


@dataclass(frozen=True)
class ObservedMoments:
    """Sample moments of the privatized observable vector.

    ``ybar`` is the per-coordinate mean over the n samples.  Models that
    estimate variances additionally need ``second_moments``, the
    per-coordinate mean of the squared observables.
    """

    ybar: np.ndarray
    n: int
    second_moments: np.ndarray | None = None


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # not a pytest class, despite the name

    statistic: float
    dof: int
    p_value: float
    reject: bool
    guard: str | None = None
    minimizer: np.ndarray | None = None


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    alpha: float
    tolerance: float

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class GuardDecision:
    """A pre-test data-quality check fired: skip optimization and return a
    sentinel statistic with a forced decision."""

    guard: str
    statistic: float
    reject: bool


class TestModel(Protocol):
    """Null-hypothesis description consumed by :func:`general_chisq`.

    ``d`` is the observable dimension, ``nu`` the number of free parameters
    under the null, and ``dof`` the chi-square degrees of freedom (the rank
    of the weighted residual space minus ``nu``; models with a rank-deficient
    covariance account for that here).
    """

    __test__ = False  # not a pytest class, despite the name

    d: int
    nu: int
    dof: int
    transform: Transform

    def theta_of(self, free_params: np.ndarray) -> np.ndarray: ...

    def plugin_estimate(self, moments: ObservedMoments) -> np.ndarray: ...

    def middle_matrix(self, estimates: np.ndarray) -> np.ndarray: ...

    def free_start(self, estimates: np.ndarray) -> np.ndarray: ...

    def guards(
        self, estimates: np.ndarray, moments: ObservedMoments
    ) -> GuardDecision | None: ...


def general_chisq(
    model: TestModel, moments: ObservedMoments, alpha: float = 0.05
) -> TestResult:
    """Run the minimum chi-square test described by ``model`` on ``moments``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    estimates = model.plugin_estimate(moments)
    decision = model.guards(estimates, moments)
    if decision is not None:
        return TestResult(
            statistic=float(decision.statistic),
            dof=model.dof,
            p_value=chi2_sf(decision.statistic, model.dof),
            reject=bool(decision.reject),
            guard=decision.guard,
            minimizer=None,
        )

    middle = model.middle_matrix(estimates)
    ybar = np.asarray(moments.ybar, dtype=float)
    n = moments.n

    def objective(z: np.ndarray) -> float:
        residual = ybar - model.theta_of(model.transform.from_free(z))
        return float(n * residual @ middle @ residual)

    if model.transform.dim_free == 0:
        statistic = objective(np.empty(0))
        minimizer = np.empty(0)
    else:
        z0 = model.transform.to_free(np.asarray(model.free_start(estimates), dtype=float))
        fit = minimize(objective, z0)
        statistic = fit.value
        minimizer = model.transform.from_free(fit.x)

    statistic = max(float(statistic), 0.0)
    return TestResult(
        statistic=statistic,
        dof=model.dof,
        p_value=chi2_sf(statistic, model.dof),
        reject=bool(statistic > chi2_quantile(1.0 - alpha, model.dof)),
        guard=None,
        minimizer=minimizer,
    )


def ci_search(
    model_factory: Callable[[float], TestModel],
    moments: ObservedMoments,
    bounds: tuple[float, float],
    alpha: float = 0.05,
    tolerance: float = 1e-3,
) -> ConfidenceInterval:
    """Confidence interval for a scalar effect size by test inversion.

    ``model_factory(delta)`` must return the null model with the effect fixed
    at ``delta``.  The search scans a 64-point grid over ``bounds``, refines
    the best grid point with golden-section search to locate the most
    acceptable effect, and then bisects on each side for the boundary where
    the statistic crosses the rejection threshold.  Endpoints are resolved to
    within ``tolerance`` in effect-size units.
    """
    lo, hi = float(bounds[0]), float(bounds[1])
    if not hi > lo:
        raise ValueError("need bounds with lower < upper")
    dof = model_factory(0.5 * (lo + hi)).dof
    threshold = chi2_quantile(1.0 - alpha, dof)

    def stat(delta: float) -> float:
        return general_chisq(model_factory(delta), moments, alpha).statistic

    grid = np.linspace(lo, hi, 64)
    values = np.array([stat(d) for d in grid])
    best = int(np.argmin(values))

    a = float(grid[max(best - 1, 0)])
    b = float(grid[min(best + 1, len(grid) - 1)])
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - inv_phi * (b - a), a + inv_phi * (b - a)
    fc, fd = stat(c), stat(d)
    while (b - a) > tolerance:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = stat(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = stat(d)
    best_value, best_delta = min(
        [(float(values[best]), float(grid[best])), (fc, c), (fd, d)]
    )
    if best_value > threshold:
        raise NoAcceptingDeltaError(
            f"smallest statistic {best_value:.3f} exceeds the threshold "
            f"{threshold:.3f}; no effect size in bounds is accepted"
        )

    lower = _crossing(stat, threshold, best_delta, lo, tolerance)
    upper = _crossing(stat, threshold, best_delta, hi, tolerance)
    return ConfidenceInterval(lower, upper, alpha, tolerance)


def _crossing(
    stat: Callable[[float], float],
    threshold: float,
    inside: float,
    outside: float,
    tolerance: float,
) -> float:
    """Bisect between an accepted point and a search bound for the statistic's
    crossing of the threshold; returns the bound itself if it is accepted."""
    if stat(outside) <= threshold:
        return outside
    a, b = inside, outside
    while abs(b - a) > tolerance:
        mid = 0.5 * (a + b)
        if stat(mid) <= threshold:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)
