"""Privatization channels for sensitive group labels.

Implements three local-DP mechanisms that randomize which of ``g`` groups a
sample reports, while leaving outcomes untouched:

- randomized response (``rr``): keep the true group with elevated probability,
  otherwise report a uniformly random other group; output is one-hot.
- bit flipping (``bitflip``): flip every coordinate of the one-hot label
  independently; output has arbitrary popcount.
- subset (``subset``): report a size-``k`` set of groups that contains the
  true group with elevated probability; output is k-hot.

Alongside sampling, the module exposes the exact channel probabilities
(marginal bit probabilities and pairwise bit co-occurrence probabilities);
every covariance matrix used by the test models downstream is assembled from
these.  Group indices are 0-based throughout.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

RAND_RESPONSE = "rr"
BIT_FLIP = "bitflip"
SUBSET = "subset"

_KINDS = (RAND_RESPONSE, BIT_FLIP, SUBSET)

ENUMERATION_LIMIT = 10**6
_SUBSET_CDF_SAMPLING_LIMIT = 10**4


class EnumerationTooLargeError(ValueError):
    """The mechanism's output space is too large to enumerate exhaustively."""


def binomial(n: int, r: int) -> float:
    """Binomial coefficient C(n, r) with C(n, r) = 0 for r < 0 or r > n.

    Exact integer arithmetic for small n, log-gamma in floating point above
    (the channel formulas only ever use ratios of these).
    """
    if r < 0 or r > n or n < 0:
        return 0.0
    if n < 20:
        return float(math.comb(n, r))
    return math.exp(math.lgamma(n + 1) - math.lgamma(r + 1) - math.lgamma(n - r + 1))


def optimal_subset_k(g: int, epsilon: float) -> int:
    """Power-optimal subset size ceil(g / (e^eps + 1)), clamped to [1, g-1]."""
    if g < 2:
        raise ValueError("need at least two groups")
    if epsilon <= 0:
        raise ValueError("privacy loss must be positive")
    k = math.ceil(g / (math.exp(epsilon) + 1.0))
    return min(max(k, 1), g - 1)


@dataclass(frozen=True)
class MechanismSpec:
    """A privatization channel: mechanism kind, group count g, privacy loss.

    ``k`` is the subset size and must be present exactly for the subset
    mechanism (use :func:`subset` to get the power-optimal default).
    """

    kind: str
    g: int
    epsilon: float
    k: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown mechanism kind {self.kind!r}")
        if self.g < 2:
            raise ValueError("need at least two groups")
        if self.epsilon <= 0:
            raise ValueError("privacy loss must be positive")
        if self.kind == SUBSET:
            if self.k is None:
                raise ValueError("subset mechanism requires a subset size k")
            if not 1 <= self.k < self.g:
                raise ValueError("subset size must satisfy 1 <= k < g")
        elif self.k is not None:
            raise ValueError("subset size only applies to the subset mechanism")


def rand_response(g: int, epsilon: float) -> MechanismSpec:
    """Randomized-response channel over g groups."""
    return MechanismSpec(RAND_RESPONSE, g, epsilon)


def bit_flip(g: int, epsilon: float) -> MechanismSpec:
    """Bit-flipping channel over g groups."""
    return MechanismSpec(BIT_FLIP, g, epsilon)


def subset(g: int, epsilon: float, k: int | None = None) -> MechanismSpec:
    """Subset channel over g groups; k defaults to the power-optimal size."""
    if k is None:
        k = optimal_subset_k(g, epsilon)
    return MechanismSpec(SUBSET, g, epsilon, k)


def _subset_weight_total(mech: MechanismSpec) -> float:
    """Total unnormalized weight over all k-subsets (e^eps per set containing
    the true group, 1 otherwise)."""
    g, k, e = mech.g, mech.k, math.exp(mech.epsilon)
    return binomial(g - 1, k - 1) * e + binomial(g - 1, k)


def diag_offdiag_probabilities(mech: MechanismSpec) -> tuple[float, float]:
    """(P[true bit set], P[specific other bit set]) for one privatized label."""
    g = mech.g
    if mech.kind == RAND_RESPONSE:
        e = math.exp(mech.epsilon)
        return e / (e + g - 1), 1.0 / (e + g - 1)
    if mech.kind == BIT_FLIP:
        s = math.exp(mech.epsilon / 2.0)
        return s / (s + 1.0), 1.0 / (s + 1.0)
    e, k = math.exp(mech.epsilon), mech.k
    total = _subset_weight_total(mech)
    diag = binomial(g - 1, k - 1) * e / total
    off = (binomial(g - 2, k - 2) * e + binomial(g - 2, k - 1)) / total
    return diag, off


def marginal_probabilities(mech: MechanismSpec, j: int) -> np.ndarray:
    """Length-g vector of P[output bit ell is set | true group j]."""
    if not 0 <= j < mech.g:
        raise IndexError(f"group index {j} out of range for g={mech.g}")
    diag, off = diag_offdiag_probabilities(mech)
    probs = np.full(mech.g, off)
    probs[j] = diag
    return probs


def marginal_matrix(mech: MechanismSpec) -> np.ndarray:
    """g x g channel matrix B with B[ell, j] = P[bit ell set | true group j]."""
    diag, off = diag_offdiag_probabilities(mech)
    g = mech.g
    return (diag - off) * np.eye(g) + off * np.ones((g, g))


def column_total(mech: MechanismSpec) -> float:
    """Expected popcount of one privatized label (column sum of the channel
    matrix): 1 for randomized response, k for subset, g-dependent for
    bit flipping."""
    diag, off = diag_offdiag_probabilities(mech)
    return diag + (mech.g - 1) * off


def pair_probabilities(mech: MechanismSpec, j: int, a: int, b: int) -> float:
    """P[output bits a and b are both set | true group j], for a != b."""
    g = mech.g
    for idx in (j, a, b):
        if not 0 <= idx < g:
            raise IndexError(f"index {idx} out of range for g={g}")
    if a == b:
        raise ValueError("pair probabilities need two distinct bit indices")
    if mech.kind == RAND_RESPONSE:
        return 0.0
    if mech.kind == BIT_FLIP:
        margins = marginal_probabilities(mech, j)
        return float(margins[a] * margins[b])
    e, k = math.exp(mech.epsilon), mech.k
    total = _subset_weight_total(mech)
    if j == a or j == b:
        return binomial(g - 2, k - 2) * e / total
    return (binomial(g - 3, k - 3) * e + binomial(g - 3, k - 2)) / total


def pair_matrix(mech: MechanismSpec, j: int) -> np.ndarray:
    """g x g matrix of P[bits a and b set | true group j]; the diagonal holds
    the marginal probabilities (a bit co-occurs with itself trivially)."""
    g = mech.g
    margins = marginal_probabilities(mech, j)
    if mech.kind == RAND_RESPONSE:
        out = np.zeros((g, g))
    elif mech.kind == BIT_FLIP:
        out = np.outer(margins, margins)
    else:
        e, k = math.exp(mech.epsilon), mech.k
        total = _subset_weight_total(mech)
        both_with_true = binomial(g - 2, k - 2) * e / total
        both_without_true = (binomial(g - 3, k - 3) * e + binomial(g - 3, k - 2)) / total
        out = np.full((g, g), both_without_true)
        out[j, :] = both_with_true
        out[:, j] = both_with_true
    out[np.diag_indices(g)] = margins
    return out


def pair_tensor(mech: MechanismSpec) -> np.ndarray:
    """Stack of pair matrices: tensor[m] = pair_matrix(mech, m)."""
    return np.stack([pair_matrix(mech, m) for m in range(mech.g)])


@lru_cache(maxsize=32)
def _subset_outcome_table(g: int, k: int) -> np.ndarray:
    """All k-subsets of g bits as a (C(g,k), g) 0/1 array."""
    combos = list(itertools.combinations(range(g), k))
    table = np.zeros((len(combos), g), dtype=np.uint8)
    for row, combo in enumerate(combos):
        table[row, list(combo)] = 1
    return table


def privatize(mech: MechanismSpec, j: int, rng: np.random.Generator) -> np.ndarray:
    """Draw one privatized label (length-g 0/1 vector) for true group j."""
    if not 0 <= j < mech.g:
        raise IndexError(f"group index {j} out of range for g={mech.g}")
    if mech.kind == SUBSET and binomial(mech.g, mech.k) <= _SUBSET_CDF_SAMPLING_LIMIT:
        table = _subset_outcome_table(mech.g, mech.k)
        weights = np.where(table[:, j] == 1, math.exp(mech.epsilon), 1.0)
        index = rng.choice(len(table), p=weights / weights.sum())
        return table[index].copy()
    return privatize_batch(mech, np.array([j]), rng)[0]


def privatize_batch(
    mech: MechanismSpec, labels: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Privatize many labels at once; returns an (n, g) 0/1 array.

    Distributionally identical to calling :func:`privatize` per row, but
    vectorized for simulation workloads.
    """
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= mech.g):
        raise IndexError("group label out of range")
    n, g = len(labels), mech.g
    diag, _ = diag_offdiag_probabilities(mech)
    out = np.zeros((n, g), dtype=np.uint8)
    if mech.kind == RAND_RESPONSE:
        keep = rng.random(n) < diag
        other = rng.integers(0, g - 1, size=n)
        other = other + (other >= labels)  # skip the true group
        reported = np.where(keep, labels, other)
        out[np.arange(n), reported] = 1
    elif mech.kind == BIT_FLIP:
        onehot = np.zeros((n, g), dtype=bool)
        onehot[np.arange(n), labels] = True
        set_prob = np.where(onehot, diag, 1.0 - diag)
        out = (rng.random((n, g)) < set_prob).astype(np.uint8)
    else:
        k = mech.k
        include_true = rng.random(n) < diag
        fill_count = np.where(include_true, k - 1, k)
        # Rank a uniform draw per row to pick the other bits uniformly at
        # random; the true group is excluded from the ranking.
        noise = rng.random((n, g))
        noise[np.arange(n), labels] = np.inf
        ranks = np.argsort(np.argsort(noise, axis=1), axis=1)
        out = (ranks < fill_count[:, None]).astype(np.uint8)
        out[np.arange(n), labels] = include_true
    return out


def _outcome_count(mech: MechanismSpec) -> float:
    if mech.kind == RAND_RESPONSE:
        return float(mech.g)
    if mech.kind == BIT_FLIP:
        return float(2**mech.g)
    return binomial(mech.g, mech.k)


def verify_ldp(mech: MechanismSpec) -> float:
    """Max over outputs and input pairs of P[output | x] / P[output | x'].

    The mechanism satisfies eps-local DP iff the returned ratio is at most
    e^eps.  Works on log-weights with a shared normalizer per input, so the
    randomized-response ratio comes out exactly e^eps.
    """
    if _outcome_count(mech) > ENUMERATION_LIMIT:
        raise EnumerationTooLargeError(
            f"output space of size {_outcome_count(mech):.3g} exceeds "
            f"{ENUMERATION_LIMIT} atoms"
        )
    g, eps = mech.g, mech.epsilon
    if mech.kind == RAND_RESPONSE:
        # atom = reported one-hot e_ell; log weight eps iff ell == input
        exponents = np.eye(g) * eps
    elif mech.kind == BIT_FLIP:
        atoms = np.array(list(itertools.product((0, 1), repeat=g)))
        onehots = np.eye(g)
        # log weight = (eps/2) * number of coordinates matching the one-hot
        matches = (atoms[:, None, :] == onehots[None, :, :]).sum(axis=2)
        exponents = matches * (eps / 2.0)
    else:
        table = _subset_outcome_table(g, mech.k)
        exponents = table.astype(float) * eps  # column j: eps iff j in the set
    spread = exponents.max(axis=1) - exponents.min(axis=1)
    return math.exp(float(spread.max()))
