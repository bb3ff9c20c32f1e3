"""Statistical inference on locally privatized group labels.

Samples carry a sensitive group label and a public outcome.  The label is
pushed through a local-DP channel (randomized response, bit flipping, or the
subset mechanism) before it reaches the analyst; this package privatizes
labels, and runs hypothesis tests and confidence intervals that explicitly
invert the channel so that conclusions refer to the original groups.

The most common entry points are re-exported here; the submodules hold the
full surface (``mechanisms``, ``chisq_engine``, ``proportions``,
``independence``, ``means``, ``abtest``, ``simlab``, ``cli``).
"""

from __future__ import annotations

from .abtest import ab_ci, ab_model, ab_moments, ab_moments_from_arrays
from .chisq_engine import (
    ConfidenceInterval,
    ObservedMoments,
    TestResult,
    ci_search,
    general_chisq,
)
from .independence import indep_estimates, indep_model, indep_moments, indep_test
from .means import (
    anova_model,
    anova_test,
    build_moments,
    diff_means_model,
    pairwise_within_g,
)
from .mechanisms import (
    MechanismSpec,
    bit_flip,
    optimal_subset_k,
    privatize,
    privatize_batch,
    rand_response,
    subset,
    verify_ldp,
)
from .proportions import PropCounts, corrected_ztest_ci, prop_model, ztest_ci
from .simlab import (
    ExperimentConfig,
    MethodSpec,
    run_coverage_sweep,
    run_null_calibration,
    run_power_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "ConfidenceInterval",
    "ExperimentConfig",
    "MechanismSpec",
    "MethodSpec",
    "ObservedMoments",
    "PropCounts",
    "TestResult",
    "ab_ci",
    "ab_model",
    "ab_moments",
    "ab_moments_from_arrays",
    "anova_model",
    "anova_test",
    "bit_flip",
    "build_moments",
    "ci_search",
    "corrected_ztest_ci",
    "diff_means_model",
    "general_chisq",
    "indep_estimates",
    "indep_model",
    "indep_moments",
    "indep_test",
    "optimal_subset_k",
    "pairwise_within_g",
    "privatize",
    "privatize_batch",
    "prop_model",
    "rand_response",
    "run_coverage_sweep",
    "run_null_calibration",
    "run_power_sweep",
    "subset",
    "verify_ldp",
    "ztest_ci",
    "__version__",
]
