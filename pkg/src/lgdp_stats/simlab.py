"""Monte Carlo harness for power, interval coverage, and null calibration.

An experiment is a declarative :class:`ExperimentConfig`: a scenario (the
data-generating family), named methods (which decision rule runs, on which
privatization channel), a sweep axis, and a grid of sweep values.  Results
come back as hit rates with binomial standard errors.

Runs reproduce bit for bit: the random stream for a trial is derived from
``(base_seed, grid index, trial index)`` alone.  Within a trial all methods
see the same generated population draw, and methods that share a channel
reuse the same privatized labels, so method comparisons are paired.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .abtest import (
    ab_cell_stats,
    ab_ci_bounds,
    ab_model,
    ab_moments_from_arrays,
    did_ci_from_cells,
    did_ttest_from_cells,
)
from .chisq_engine import (
    ConfidenceInterval,
    NoAcceptingDeltaError,
    TestResult,
    ci_search,
    general_chisq,
)
from .independence import (
    indep_model,
    indep_moments,
    outcome_table,
    pearson_independence,
)
from .means import (
    anova_model,
    bit_group_stats,
    build_moments,
    classical_anova,
    corrected_ttest_ci,
    diff_means_model,
    pairwise_ci_bounds,
    pairwise_within_g,
    welch_ci,
    welch_ci_from_stats,
    welch_ttest,
    welch_ttest_from_stats,
)
from .mechanisms import MechanismSpec, bit_flip, privatize_batch, rand_response, subset
from .numerics import normal_quantile
from .proportions import (
    PropCounts,
    corrected_ztest_ci,
    prop_model,
    ztest_ci,
    ztest_statistic,
)

__all__ = [
    "CalibrationResult",
    "ConfigError",
    "ExperimentConfig",
    "MethodSpec",
    "SweepResult",
    "default_trials",
    "run_coverage_sweep",
    "run_null_calibration",
    "run_power_sweep",
]


def default_trials() -> int:
    """1000 trials normally; 200 when the ``LGDP_FAST`` variable is set."""
    return 200 if os.environ.get("LGDP_FAST") else 1000


class ConfigError(ValueError):
    """An experiment configuration that cannot be run."""

    code = "invalid-config"


_SWEEPS = ("effect", "epsilon", "n")


@dataclass(frozen=True)
class _ScenarioInfo:
    approaches: frozenset[str]
    mechanisms: frozenset[str]
    coverage: bool
    requires_mechanism: bool = False


_SCENARIOS: dict[str, _ScenarioInfo] = {
    "proportions": _ScenarioInfo(
        frozenset({"chisq", "corrected", "naive"}), frozenset({"rr"}), True
    ),
    "independence": _ScenarioInfo(
        frozenset({"chisq", "classical"}),
        frozenset({"rr", "bitflip", "subset"}),
        False,
    ),
    "means": _ScenarioInfo(
        frozenset({"chisq", "corrected", "naive"}), frozenset({"rr"}), True
    ),
    "anova": _ScenarioInfo(
        frozenset({"chisq", "classical"}),
        frozenset({"rr", "bitflip", "subset"}),
        False,
    ),
    "pairwise": _ScenarioInfo(
        frozenset({"chisq", "classical"}),
        frozenset({"rr", "bitflip", "subset"}),
        True,
    ),
    "abtest": _ScenarioInfo(
        frozenset({"chisq", "naive"}),
        frozenset({"rr"}),
        True,
        requires_mechanism=True,
    ),
}


@dataclass(frozen=True)
class MethodSpec:
    """One named method in a sweep: a decision rule plus its channel.

    ``approach`` selects the rule: "chisq" is the minimum chi-square test
    (or its inverted interval), "naive" a classical two-group procedure run
    on reported labels as if they were true, "corrected" the bias-corrected
    classical interval, and "classical" the textbook multi-group test on
    reported labels.  ``mechanism`` is ``None`` for direct access to true
    labels, or one of "rr", "bitflip", "subset"; ``k`` optionally pins the
    subset size.
    """

    name: str
    mechanism: str | None = None
    epsilon: float | None = None
    k: int | None = None
    approach: str = "chisq"


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one Monte Carlo experiment.

    ``sweep`` picks the grid's meaning: "effect" varies the true effect
    size, "epsilon" varies the privacy loss of every method that has a
    mechanism (their own ``epsilon`` may then be left unset), and "n"
    varies the sample size.  For the latter two the true effect is read
    from ``population["effect"]`` (default 0).  Scenario-specific
    population keys name the remaining parameters (group shares, outcome
    rates or means, and so on).
    """

    scenario: str
    methods: tuple[MethodSpec, ...]
    n: int
    base_seed: int
    sweep: str = "effect"
    grid: tuple[float, ...] = ()
    population: dict = field(default_factory=dict)
    trials: int = field(default_factory=default_trials)
    alpha: float = 0.05

    def __post_init__(self) -> None:
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "grid", tuple(self.grid))
        object.__setattr__(self, "population", dict(self.population))
        info = _SCENARIOS.get(self.scenario)
        if info is None:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        if self.sweep not in _SWEEPS:
            raise ConfigError(f"unknown sweep axis {self.sweep!r}")
        if not (isinstance(self.trials, int) and self.trials >= 1):
            raise ConfigError("trials must be a positive integer")
        if not (isinstance(self.n, int) and self.n >= 2):
            raise ConfigError("n must be an integer of at least 2")
        if not self.grid:
            raise ConfigError("the sweep grid must be non-empty")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie strictly between 0 and 1")
        if not self.methods:
            raise ConfigError("need at least one method")
        names = [m.name for m in self.methods]
        if len(set(names)) != len(names):
            raise ConfigError("method names must be unique")
        for method in self.methods:
            self._check_method(method, info)

    def _check_method(self, method: MethodSpec, info: _ScenarioInfo) -> None:
        if method.approach not in info.approaches:
            raise ConfigError(
                f"approach {method.approach!r} is not available for "
                f"scenario {self.scenario!r}"
            )
        if method.mechanism is not None and method.mechanism not in info.mechanisms:
            raise ConfigError(
                f"mechanism {method.mechanism!r} is not available for "
                f"scenario {self.scenario!r}"
            )
        if info.requires_mechanism and method.mechanism is None:
            raise ConfigError(
                f"scenario {self.scenario!r} runs on privatized labels; "
                "every method needs a mechanism"
            )
        if method.approach == "corrected" and method.mechanism is None:
            raise ConfigError("the corrected interval needs a mechanism to undo")
        if method.mechanism is not None:
            if method.epsilon is None and self.sweep != "epsilon":
                raise ConfigError(
                    f"method {method.name!r} has a mechanism but no privacy "
                    "loss; set epsilon or sweep over it"
                )
            if method.epsilon is not None and not method.epsilon > 0.0:
                raise ConfigError("epsilon must be positive")
        if method.k is not None and method.mechanism != "subset":
            raise ConfigError("k only applies to the subset mechanism")


@dataclass(frozen=True)
class SweepResult:
    """Hit counts from a sweep, with derived rates and standard errors.

    ``counts[i, j]`` is how many of ``trials`` trials hit for method ``i``
    at grid point ``j``: rejections for a power sweep, interval misses for
    a coverage sweep.
    """

    kind: str
    sweep: str
    grid: tuple[float, ...]
    methods: tuple[str, ...]
    counts: np.ndarray
    trials: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "grid", tuple(self.grid))
        object.__setattr__(self, "methods", tuple(self.methods))
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (len(self.methods), len(self.grid)):
            raise ValueError("counts must have shape (methods, grid points)")
        object.__setattr__(self, "counts", counts)

    @property
    def fractions(self) -> np.ndarray:
        return self.counts / float(self.trials)

    @property
    def standard_errors(self) -> np.ndarray:
        f = self.fractions
        return np.sqrt(f * (1.0 - f) / float(self.trials))

    def rows(self) -> list[dict]:
        """Flat records (method outer, grid inner) for CSV or JSON output."""
        f, se = self.fractions, self.standard_errors
        return [
            {
                "kind": self.kind,
                "sweep": self.sweep,
                "value": value,
                "method": name,
                "fraction": float(f[i, j]),
                "se": float(se[i, j]),
            }
            for i, name in enumerate(self.methods)
            for j, value in enumerate(self.grid)
        ]


@dataclass(frozen=True)
class CalibrationResult:
    """Null statistics per method plus a Kolmogorov-Smirnov comparison with
    the chi-square reference at the advertised degrees of freedom."""

    methods: tuple[str, ...]
    dof: tuple[int, ...]
    statistics: np.ndarray
    ks_distance: tuple[float, ...]
    ks_p_value: tuple[float, ...]


# --- data generation --------------------------------------------------------


def _pop(population: dict, key: str):
    try:
        return population[key]
    except KeyError:
        raise ConfigError(f"population is missing {key!r}") from None


def _shares(population: dict) -> np.ndarray:
    pi = np.asarray(_pop(population, "pi"), dtype=float)
    if pi.ndim != 1 or len(pi) < 2 or (pi <= 0).any():
        raise ConfigError("population 'pi' must be positive group shares")
    return pi / pi.sum()


def _generate(
    scenario: str, rng: np.random.Generator, n: int, effect: float, population: dict
) -> dict:
    """Draw one population sample; ``truth`` is the realized effect size."""
    if scenario == "proportions":
        pi = float(_pop(population, "pi"))
        p2 = float(_pop(population, "p2"))
        p1 = min(max(p2 + effect, 0.0), 1.0)
        labels = (rng.random(n) >= pi).astype(np.int64)
        success = np.where(labels == 0, p1, p2)
        outcomes = (rng.random(n) < success).astype(np.int64)
        return {"g": 2, "labels": labels, "outcomes": outcomes, "truth": p1 - p2}
    if scenario == "independence":
        pi = _shares(population)
        p = float(_pop(population, "p"))
        p0 = min(max(p + effect, 0.0), 1.0)
        labels = rng.choice(len(pi), size=n, p=pi)
        success = np.where(labels == 0, p0, p)
        outcomes = (rng.random(n) < success).astype(np.int64)
        return {"g": len(pi), "labels": labels, "outcomes": outcomes, "truth": None}
    if scenario == "means":
        pi = float(_pop(population, "pi"))
        mu2 = float(_pop(population, "mu2"))
        sigma1 = float(_pop(population, "sigma1"))
        sigma2 = float(_pop(population, "sigma2"))
        labels = (rng.random(n) >= pi).astype(np.int64)
        outcomes = rng.normal(
            np.where(labels == 0, mu2 + effect, mu2),
            np.where(labels == 0, sigma1, sigma2),
        )
        return {"g": 2, "labels": labels, "outcomes": outcomes, "truth": effect}
    if scenario == "anova":
        pi = _shares(population)
        mu = np.full(len(pi), float(_pop(population, "mu")))
        mu[0] += effect
        labels = rng.choice(len(pi), size=n, p=pi)
        outcomes = rng.normal(mu[labels], float(_pop(population, "sigma")))
        return {"g": len(pi), "labels": labels, "outcomes": outcomes, "truth": None}
    if scenario == "pairwise":
        pi = _shares(population)
        mu = np.array(_pop(population, "mu"), dtype=float)
        j, ell = int(_pop(population, "j")), int(_pop(population, "ell"))
        if not (0 <= j < len(pi) and 0 <= ell < len(pi) and j != ell):
            raise ConfigError("population 'j' and 'ell' must be distinct groups")
        mu[j] = mu[ell] + effect
        labels = rng.choice(len(pi), size=n, p=pi)
        outcomes = rng.normal(mu[labels], float(_pop(population, "sigma")))
        return {
            "g": len(pi),
            "labels": labels,
            "outcomes": outcomes,
            "truth": effect,
            "j": j,
            "ell": ell,
        }
    # A/B test with a binary sensitive attribute
    pi = float(_pop(population, "pi"))
    lam = float(_pop(population, "lam"))
    mu2t = float(_pop(population, "mu2t"))
    mu1c = float(_pop(population, "mu1c"))
    mu2c = float(_pop(population, "mu2c"))
    sigma = float(_pop(population, "sigma"))
    mu1t = mu2t + (mu1c - mu2c) + effect
    labels = (rng.random(n) >= pi).astype(np.int64)
    treated = rng.random(n) < lam
    cell_mean = np.array([mu1t, mu2t, mu1c, mu2c])
    cell = np.where(treated, 0, 2) + labels
    outcomes = rng.normal(cell_mean[cell], sigma)
    return {
        "g": 2,
        "labels": labels,
        "outcomes": outcomes,
        "treated": treated,
        "truth": effect,
        "lam": lam,
    }


# --- channels ---------------------------------------------------------------


def _make_mechanism(
    name: str, g: int, epsilon: float, k: int | None
) -> MechanismSpec:
    if name == "rr":
        return rand_response(g, epsilon)
    if name == "bitflip":
        return bit_flip(g, epsilon)
    return subset(g, epsilon, k)


def _bits_for(
    method: MethodSpec,
    epsilon: float | None,
    data: dict,
    rng: np.random.Generator,
    cache: dict,
) -> tuple[MechanismSpec | None, np.ndarray]:
    """Privatized (or identity) label bits, shared between methods that use
    the same channel so their decisions are paired."""
    key = (method.mechanism, epsilon, method.k)
    if key not in cache:
        if method.mechanism is None:
            mech = None
            bits = np.eye(data["g"], dtype=np.int64)[data["labels"]]
        else:
            mech = _make_mechanism(method.mechanism, data["g"], epsilon, method.k)
            bits = privatize_batch(mech, data["labels"], rng)
        cache[key] = (mech, bits)
    return cache[key]


# --- per-method decisions ---------------------------------------------------


def _chisq_result(
    config: ExperimentConfig,
    epsilon: float | None,
    data: dict,
    bits: np.ndarray,
    mech: MechanismSpec | None,
) -> TestResult:
    alpha, outcomes = config.alpha, data["outcomes"]
    scenario = config.scenario
    if scenario == "proportions":
        counts = PropCounts.from_arrays(bits.argmax(axis=1), outcomes)
        return general_chisq(prop_model(0.0, epsilon), counts.to_moments(), alpha)
    if scenario == "independence":
        return general_chisq(
            indep_model(data["g"], mech), indep_moments(bits, outcomes), alpha
        )
    if scenario == "means":
        return general_chisq(
            diff_means_model(0.0, epsilon), build_moments(bits, outcomes), alpha
        )
    if scenario == "anova":
        return general_chisq(
            anova_model(data["g"], mech), build_moments(bits, outcomes), alpha
        )
    if scenario == "pairwise":
        model = pairwise_within_g(data["g"], data["j"], data["ell"], 0.0, mech)
        return general_chisq(model, build_moments(bits, outcomes), alpha)
    moments = ab_moments_from_arrays(data["treated"], bits, outcomes)
    return general_chisq(ab_model(data["lam"], epsilon, 0.0), moments, alpha)


def _baseline_reject(
    config: ExperimentConfig,
    method: MethodSpec,
    epsilon: float | None,
    data: dict,
    bits: np.ndarray,
) -> bool:
    alpha, outcomes = config.alpha, data["outcomes"]
    scenario = config.scenario
    if scenario == "proportions":
        counts = PropCounts.from_arrays(bits.argmax(axis=1), outcomes)
        if method.approach == "corrected":
            return not corrected_ztest_ci(counts, epsilon, alpha).contains(0.0)
        p1, p2 = counts.rates()
        z = ztest_statistic(p1, p2, counts.n1, counts.n2)
        return abs(z) > normal_quantile(1.0 - alpha / 2.0)
    if scenario == "independence":
        return pearson_independence(outcome_table(bits, outcomes), alpha).reject
    if scenario == "means":
        moments = build_moments(bits, outcomes)
        if method.approach == "corrected":
            return not corrected_ttest_ci(moments, epsilon, alpha).contains(0.0)
        return welch_ttest(moments, 0.0, alpha).reject
    if scenario == "anova":
        return classical_anova(bits, outcomes, alpha).reject
    if scenario == "pairwise":
        means, variances, counts = bit_group_stats(bits, outcomes)
        j, ell = data["j"], data["ell"]
        return welch_ttest_from_stats(
            means[j], variances[j], counts[j],
            means[ell], variances[ell], counts[ell],
            0.0, alpha,
        ).reject
    cells = ab_cell_stats(data["treated"], bits, outcomes)
    return did_ttest_from_cells(*cells, alpha=alpha).reject


def _interval(
    config: ExperimentConfig,
    method: MethodSpec,
    epsilon: float | None,
    data: dict,
    bits: np.ndarray,
    mech: MechanismSpec | None,
) -> ConfidenceInterval:
    alpha, outcomes = config.alpha, data["outcomes"]
    scenario = config.scenario
    if scenario == "proportions":
        counts = PropCounts.from_arrays(bits.argmax(axis=1), outcomes)
        if method.approach == "chisq":
            return ci_search(
                lambda d: prop_model(d, epsilon),
                counts.to_moments(),
                (-0.95, 0.95),
                alpha,
            )
        if method.approach == "corrected":
            return corrected_ztest_ci(counts, epsilon, alpha)
        return ztest_ci(counts, alpha)
    if scenario == "means":
        moments = build_moments(bits, outcomes)
        if method.approach == "chisq":
            bounds = pairwise_ci_bounds(moments, mech)
            return ci_search(
                lambda d: diff_means_model(d, epsilon), moments, bounds, alpha
            )
        if method.approach == "corrected":
            return corrected_ttest_ci(moments, epsilon, alpha)
        return welch_ci(moments, alpha)
    if scenario == "pairwise":
        moments = build_moments(bits, outcomes)
        j, ell = data["j"], data["ell"]
        if method.approach == "chisq":
            bounds = pairwise_ci_bounds(moments, mech)
            return ci_search(
                lambda d: pairwise_within_g(data["g"], j, ell, d, mech),
                moments,
                bounds,
                alpha,
            )
        means, variances, counts = bit_group_stats(bits, outcomes)
        return welch_ci_from_stats(
            means[j], variances[j], counts[j],
            means[ell], variances[ell], counts[ell],
            alpha,
        )
    # A/B test
    if method.approach == "chisq":
        moments = ab_moments_from_arrays(data["treated"], bits, outcomes)
        return ci_search(
            lambda d: ab_model(data["lam"], epsilon, d),
            moments,
            ab_ci_bounds(moments),
            alpha,
        )
    cells = ab_cell_stats(data["treated"], bits, outcomes)
    return did_ci_from_cells(*cells, alpha=alpha)


# --- sweep runners ----------------------------------------------------------


def _trial_rng(base_seed: int, grid_index: int, trial: int) -> np.random.Generator:
    seq = np.random.SeedSequence(base_seed, spawn_key=(grid_index, trial))
    return np.random.default_rng(seq)


def _resolve_point(config: ExperimentConfig, value) -> tuple[int, float]:
    """(sample size, true effect) at one grid value."""
    if config.sweep == "effect":
        return config.n, float(value)
    effect = float(config.population.get("effect", 0.0))
    if config.sweep == "n":
        n = int(value)
        if n < 2:
            raise ConfigError("sample-size grid values must be at least 2")
        return n, effect
    return config.n, effect


def _method_epsilon(
    config: ExperimentConfig, method: MethodSpec, value
) -> float | None:
    if method.mechanism is None:
        return None
    if config.sweep == "epsilon":
        epsilon = float(value)
        if not epsilon > 0.0:
            raise ConfigError("epsilon grid values must be positive")
        return epsilon
    return float(method.epsilon)


def _run_sweep(config: ExperimentConfig, kind: str) -> SweepResult:
    if kind == "coverage" and not _SCENARIOS[config.scenario].coverage:
        raise ConfigError(
            f"scenario {config.scenario!r} has no scalar effect to cover"
        )
    counts = np.zeros((len(config.methods), len(config.grid)), dtype=np.int64)
    for gi, value in enumerate(config.grid):
        n, effect = _resolve_point(config, value)
        epsilons = [_method_epsilon(config, m, value) for m in config.methods]
        for trial in range(config.trials):
            rng = _trial_rng(config.base_seed, gi, trial)
            data = _generate(config.scenario, rng, n, effect, config.population)
            cache: dict = {}
            for mi, method in enumerate(config.methods):
                mech, bits = _bits_for(method, epsilons[mi], data, rng, cache)
                if kind == "power":
                    if method.approach == "chisq":
                        hit = _chisq_result(
                            config, epsilons[mi], data, bits, mech
                        ).reject
                    else:
                        hit = _baseline_reject(
                            config, method, epsilons[mi], data, bits
                        )
                else:
                    try:
                        ci = _interval(config, method, epsilons[mi], data, bits, mech)
                        hit = not ci.contains(data["truth"])
                    except NoAcceptingDeltaError:
                        hit = True
                counts[mi, gi] += int(hit)
    return SweepResult(
        kind=kind,
        sweep=config.sweep,
        grid=config.grid,
        methods=tuple(m.name for m in config.methods),
        counts=counts,
        trials=config.trials,
    )


def run_power_sweep(config: ExperimentConfig) -> SweepResult:
    """Fraction of trials each method rejects, per grid value."""
    return _run_sweep(config, "power")


def run_coverage_sweep(config: ExperimentConfig) -> SweepResult:
    """Fraction of trials each method's interval misses the true effect."""
    return _run_sweep(config, "coverage")


# --- null calibration -------------------------------------------------------


def _calibration_epsilon(method: MethodSpec) -> float | None:
    if method.mechanism is None:
        return None
    if method.epsilon is None:
        raise ConfigError("calibration needs a concrete epsilon per method")
    return float(method.epsilon)


def _reference_dof(
    config: ExperimentConfig, method: MethodSpec, epsilon: float | None
) -> int:
    scenario, population = config.scenario, config.population
    if scenario == "proportions":
        return prop_model(0.0, epsilon).dof
    if scenario == "means":
        return diff_means_model(0.0, epsilon).dof
    if scenario == "abtest":
        return ab_model(float(_pop(population, "lam")), epsilon, 0.0).dof
    g = len(_shares(population))
    mech = (
        None
        if method.mechanism is None
        else _make_mechanism(method.mechanism, g, epsilon, method.k)
    )
    if scenario == "independence":
        return indep_model(g, mech).dof
    if scenario == "anova":
        return anova_model(g, mech).dof
    j, ell = int(_pop(population, "j")), int(_pop(population, "ell"))
    return pairwise_within_g(g, j, ell, 0.0, mech).dof


def run_null_calibration(config: ExperimentConfig) -> CalibrationResult:
    """Statistics of every method under the exact null (effect pinned to
    zero; the grid is not used), with a KS check against the chi-square
    reference at each method's advertised degrees of freedom."""
    for method in config.methods:
        if method.approach != "chisq":
            raise ConfigError("calibration is defined for chi-square methods only")
    epsilons = [_calibration_epsilon(m) for m in config.methods]
    dof = tuple(
        _reference_dof(config, m, e) for m, e in zip(config.methods, epsilons)
    )
    statistics = np.zeros((len(config.methods), config.trials))
    for trial in range(config.trials):
        rng = _trial_rng(config.base_seed, 0, trial)
        data = _generate(config.scenario, rng, config.n, 0.0, config.population)
        cache: dict = {}
        for mi, method in enumerate(config.methods):
            mech, bits = _bits_for(method, epsilons[mi], data, rng, cache)
            statistics[mi, trial] = _chisq_result(
                config, epsilons[mi], data, bits, mech
            ).statistic
    distances, p_values = [], []
    for mi, d in enumerate(dof):
        result = stats.kstest(statistics[mi], stats.chi2(d).cdf)
        distances.append(float(result.statistic))
        p_values.append(float(result.pvalue))
    return CalibrationResult(
        methods=tuple(m.name for m in config.methods),
        dof=dof,
        statistics=statistics,
        ks_distance=tuple(distances),
        ks_p_value=tuple(p_values),
    )
