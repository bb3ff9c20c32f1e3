"""Numerical workhorses: eigendecomposition pseudo-inverse, chi-square and
normal distribution helpers, a Nelder-Mead minimizer, and smooth reparametrizations
that turn constrained model parameters into unconstrained coordinates.

The covariance matrices this package inverts are symmetric positive
semi-definite by construction but often rank-deficient, so the pseudo-inverse
works on the eigendecomposition and treats eigenvalues near zero as exact
zeros.  A clearly negative eigenvalue means the caller assembled something
that is not a covariance matrix, and is reported as an error rather than
silently clipped.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import numpy as np
from scipy import special, stats

EIGENVALUE_REL_CUTOFF = 1e-10
NEGATIVE_EIGENVALUE_REL_TOL = 1e-6
PROBABILITY_CLAMP = 1e-6


class NumericsError(ValueError):
    """Base class for numerical-input failures; ``code`` is machine readable."""

    code = "numerics-error"


class NotSymmetricError(NumericsError):
    code = "not-symmetric"


class NegativeEigenvalueError(NumericsError):
    code = "significantly-negative-eigenvalue"


def pseudo_inverse(matrix: np.ndarray, rel_cutoff: float = EIGENVALUE_REL_CUTOFF) -> np.ndarray:
    """Moore-Penrose inverse of a symmetric PSD matrix via eigendecomposition.

    Eigenvalues below ``rel_cutoff`` times the largest eigenvalue are treated
    as exact zeros.  Raises :class:`NotSymmetricError` for asymmetric input
    and :class:`NegativeEigenvalueError` when an eigenvalue is negative beyond
    what roundoff in a PSD matrix can explain.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise NumericsError("pseudo_inverse expects a square matrix")
    scale = float(np.abs(matrix).max()) or 1.0
    if float(np.abs(matrix - matrix.T).max()) > 1e-8 * scale:
        raise NotSymmetricError("matrix is not symmetric")
    eigenvalues, eigenvectors = np.linalg.eigh((matrix + matrix.T) / 2.0)
    largest = float(eigenvalues.max(initial=0.0))
    if largest <= 0.0:
        largest = float(np.abs(eigenvalues).max(initial=0.0))
    if largest == 0.0:
        return np.zeros_like(matrix)
    if float(eigenvalues.min()) < -NEGATIVE_EIGENVALUE_REL_TOL * largest:
        raise NegativeEigenvalueError(
            f"eigenvalue {eigenvalues.min():.3e} is significantly negative "
            f"(largest is {largest:.3e})"
        )
    inverted = np.where(
        eigenvalues > rel_cutoff * largest, 1.0 / np.where(eigenvalues == 0, 1.0, eigenvalues), 0.0
    )
    return (eigenvectors * inverted) @ eigenvectors.T


def chi2_sf(x: float, dof: int) -> float:
    """Survival function P[chi-square with ``dof`` degrees of freedom > x]."""
    return float(stats.chi2.sf(x, dof))


def chi2_quantile(p: float, dof: int) -> float:
    """Quantile x with P[chi-square with ``dof`` degrees of freedom <= x] = p."""
    return float(stats.chi2.ppf(p, dof))


def normal_quantile(p: float) -> float:
    """Standard normal quantile."""
    return float(stats.norm.ppf(p))


@dataclass
class MinimizeResult:
    x: np.ndarray
    value: float
    iterations: int
    converged: bool


def _nelder_mead_pass(
    fn: Callable[[np.ndarray], float],
    x0: np.ndarray,
    step: float,
    diameter_tol: float,
    max_iter: int,
) -> MinimizeResult:
    n = len(x0)
    simplex = [np.array(x0, dtype=float)]
    for i in range(n):
        vertex = np.array(x0, dtype=float)
        vertex[i] += step
        simplex.append(vertex)
    simplex = np.array(simplex)
    values = np.array([fn(v) for v in simplex])

    reflection, expansion, contraction, shrink = 1.0, 2.0, 0.5, 0.5
    iterations = 0
    converged = False
    while iterations < max_iter:
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        diameter = float(np.max(np.abs(simplex - simplex[0])))
        if diameter < diameter_tol:
            converged = True
            break
        iterations += 1

        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        reflected = centroid + reflection * (centroid - worst)
        f_reflected = fn(reflected)
        if f_reflected < values[0]:
            expanded = centroid + expansion * (centroid - worst)
            f_expanded = fn(expanded)
            if f_expanded < f_reflected:
                simplex[-1], values[-1] = expanded, f_expanded
            else:
                simplex[-1], values[-1] = reflected, f_reflected
        elif f_reflected < values[-2]:
            simplex[-1], values[-1] = reflected, f_reflected
        else:
            if f_reflected < values[-1]:
                contracted = centroid + contraction * (reflected - centroid)
            else:
                contracted = centroid + contraction * (worst - centroid)
            f_contracted = fn(contracted)
            if f_contracted < min(f_reflected, values[-1]):
                simplex[-1], values[-1] = contracted, f_contracted
            else:
                simplex[1:] = simplex[0] + shrink * (simplex[1:] - simplex[0])
                values[1:] = [fn(v) for v in simplex[1:]]

    best = int(np.argmin(values))
    return MinimizeResult(simplex[best].copy(), float(values[best]), iterations, converged)


def minimize(
    fn: Callable[[np.ndarray], float],
    x0: np.ndarray,
    step: float = 0.05,
    diameter_tol: float = 1e-9,
    max_iter: int = 2000,
    restarts: int = 1,
    max_restarts: int = 8,
) -> MinimizeResult:
    """Derivative-free Nelder-Mead minimization of ``fn`` from ``x0``.

    Runs one simplex pass and then fresh passes seeded at the best point
    found, which recovers from simplexes that collapse early.  At least
    ``restarts`` extra passes always run.  Further passes (up to
    ``max_restarts``) run only while the simplex keeps collapsing below
    ``diameter_tol`` at a point a fresh pass still improves on — the stall
    signature of steep anisotropic objectives; passes that exhaust
    ``max_iter`` instead stop at the mandated count, so the iteration
    budget stays bounded by ``max_iter`` per pass.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    result = _nelder_mead_pass(fn, x0, step, diameter_tol, max_iter)
    done = 0
    while done < max_restarts:
        again = _nelder_mead_pass(fn, result.x, step, diameter_tol, max_iter)
        gain = result.value - again.value
        collapsed = again.converged
        if again.value < result.value:
            again.iterations += result.iterations
            result = again
        else:
            result.iterations += again.iterations
            result.converged = result.converged or again.converged
        done += 1
        if done >= restarts and (
            not collapsed or gain <= 1e-10 * (1.0 + abs(result.value))
        ):
            break
    return result


class Transform(Protocol):
    """Bijection between a constrained parameter block and free coordinates."""

    dim_params: int
    dim_free: int

    def to_free(self, params: np.ndarray) -> np.ndarray: ...

    def from_free(self, z: np.ndarray) -> np.ndarray: ...


class IdentityTransform:
    def __init__(self, n: int):
        self.dim_params = self.dim_free = n

    def to_free(self, params: np.ndarray) -> np.ndarray:
        return np.asarray(params, dtype=float).copy()

    def from_free(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float).copy()


class LogitTransform:
    """Coordinates constrained to the open unit interval."""

    def __init__(self, n: int):
        self.dim_params = self.dim_free = n

    def to_free(self, params: np.ndarray) -> np.ndarray:
        p = np.clip(np.asarray(params, dtype=float), 1e-12, 1.0 - 1e-12)
        return special.logit(p)

    def from_free(self, z: np.ndarray) -> np.ndarray:
        return special.expit(np.asarray(z, dtype=float))


class IntervalTransform:
    """Coordinates constrained to (lo, hi) per coordinate via a scaled logit."""

    def __init__(self, lo, hi):
        self.lo = np.atleast_1d(np.asarray(lo, dtype=float))
        self.hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if self.lo.shape != self.hi.shape or (self.hi <= self.lo).any():
            raise ValueError("need lo < hi per coordinate")
        self.dim_params = self.dim_free = len(self.lo)

    def to_free(self, params: np.ndarray) -> np.ndarray:
        u = (np.asarray(params, dtype=float) - self.lo) / (self.hi - self.lo)
        return special.logit(np.clip(u, 1e-12, 1.0 - 1e-12))

    def from_free(self, z: np.ndarray) -> np.ndarray:
        return self.lo + (self.hi - self.lo) * special.expit(np.asarray(z, dtype=float))


class SimplexTransform:
    """Probability vectors of length g mapped to g-1 additive log-ratio
    coordinates (the last entry is the reference)."""

    def __init__(self, g: int):
        if g < 2:
            raise ValueError("simplex needs at least two categories")
        self.dim_params = g
        self.dim_free = g - 1

    def to_free(self, params: np.ndarray) -> np.ndarray:
        p = np.clip(np.asarray(params, dtype=float), 1e-12, None)
        p = p / p.sum()
        return np.log(p[:-1]) - np.log(p[-1])

    def from_free(self, z: np.ndarray) -> np.ndarray:
        padded = np.append(np.asarray(z, dtype=float), 0.0)
        padded -= padded.max()
        weights = np.exp(padded)
        return weights / weights.sum()


class CompositeTransform:
    """Concatenation of transforms applied block-wise."""

    def __init__(self, blocks: Sequence[Transform]):
        self.blocks = list(blocks)
        self.dim_params = sum(b.dim_params for b in self.blocks)
        self.dim_free = sum(b.dim_free for b in self.blocks)

    def to_free(self, params: np.ndarray) -> np.ndarray:
        params = np.asarray(params, dtype=float)
        if len(params) != self.dim_params:
            raise ValueError("parameter vector has the wrong length")
        out, at = [], 0
        for block in self.blocks:
            out.append(np.atleast_1d(block.to_free(params[at : at + block.dim_params])))
            at += block.dim_params
        return np.concatenate(out) if out else np.empty(0)

    def from_free(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if len(z) != self.dim_free:
            raise ValueError("free vector has the wrong length")
        out, at = [], 0
        for block in self.blocks:
            out.append(np.atleast_1d(block.from_free(z[at : at + block.dim_free])))
            at += block.dim_free
        return np.concatenate(out) if out else np.empty(0)


def clamp_probability(p, lo: float = PROBABILITY_CLAMP):
    """Clamp probabilities into [lo, 1 - lo] so logit starts stay finite."""
    return np.clip(p, lo, 1.0 - lo)
