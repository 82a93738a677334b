"""Generative models, priors and parameter-space discretizations.

A model only needs to simulate; likelihoods are never evaluated.
Parameters are plain 1-d float arrays.  All objects are immutable after
construction and safe to share across threads; rng streams are per-task
values and never stored.
"""

from __future__ import annotations

import math
import statistics as _statistics
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .empirical import Sample

__all__ = [
    "GenerativeModel",
    "Normal1D",
    "BivariateNormal",
    "UniformBox",
    "GridDiscretization",
    "prior_draw",
    "normal_cdf",
]


def normal_cdf(z: float) -> float:
    """Standard normal CDF via the complementary error function.

    Absolute error is below 1e-10 over the whole real line (erfc is
    correctly rounded to double precision).
    """
    z = float(z)
    if not math.isfinite(z):
        raise ValueError("z must be finite")
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def as_parameter(theta, k: int | None = None) -> np.ndarray:
    """Normalize a scalar or vector parameter to a finite 1-d array."""
    arr = np.atleast_1d(np.asarray(theta, dtype=float)).ravel()
    if not np.all(np.isfinite(arr)):
        raise ValueError("parameter entries must be finite")
    if k is not None and arr.shape[0] != k:
        raise ValueError(f"parameter must have {k} component(s), got {arr.shape[0]}")
    return arr


def _check_counts(n: int, m: int) -> tuple[int, int]:
    n, m = int(n), int(m)
    if n < 1 or m < 1:
        raise ValueError("sample size and replicate count must be >= 1")
    return n, m


class GenerativeModel:
    """Interface: simulate i.i.d. samples of size n from the theta model.

    `simulate` and `simulate_batch` consume the rng stream identically for
    m = 1, so batched and one-at-a-time runs reproduce each other.
    """

    dim: ClassVar[int]

    def simulate(self, theta, n: int, rng) -> Sample:
        return Sample(self.simulate_batch(theta, n, 1, rng)[0])

    def simulate_batch(self, theta, n: int, m: int, rng) -> np.ndarray:
        """m independent samples as an (m, n, dim) array."""
        raise NotImplementedError


@dataclass(frozen=True)
class Normal1D(GenerativeModel):
    """N(theta, sd^2) observations; theta is the mean."""

    sd: float = 1.0
    dim: ClassVar[int] = 1

    def __post_init__(self):
        if not (np.isfinite(self.sd) and self.sd > 0):
            raise ValueError("sd must be a positive real")

    def simulate_batch(self, theta, n, m, rng):
        theta = as_parameter(theta, 1)
        n, m = _check_counts(n, m)
        return theta[0] + self.sd * rng.standard_normal((m, n, 1))

    def cdf(self, theta, values) -> np.ndarray:
        theta = as_parameter(theta, 1)
        z = (np.asarray(values, dtype=float) - theta[0]) / self.sd
        return np.array([normal_cdf(v) for v in np.atleast_1d(z)])

    def quasi_sample(self, theta, n: int) -> Sample:
        """Deterministic stand-in sample: inverse CDF at i/(n+1).

        Represents the model CDF with no sampling noise of its own; useful
        as the conditioning sample of calibration tables.
        """
        theta = as_parameter(theta, 1)
        n = int(n)
        if n < 1:
            raise ValueError("n must be >= 1")
        dist = _statistics.NormalDist(mu=theta[0], sigma=self.sd)
        return Sample(np.array([dist.inv_cdf(i / (n + 1)) for i in range(1, n + 1)]))


@dataclass(frozen=True)
class BivariateNormal(GenerativeModel):
    """Bivariate normal with mean theta = (theta1, theta2)."""

    variances: tuple[float, float] = (1.0, 1.0)
    covariance: float = 0.5
    dim: ClassVar[int] = 2

    def __post_init__(self):
        v1, v2 = (float(v) for v in self.variances)
        c = float(self.covariance)
        if not (v1 > 0 and v2 > 0 and v1 * v2 - c * c > 0):
            raise ValueError("covariance matrix must be positive definite")
        object.__setattr__(self, "variances", (v1, v2))
        object.__setattr__(self, "covariance", c)

    def _cholesky(self) -> np.ndarray:
        v1, v2 = self.variances
        cov = np.array([[v1, self.covariance], [self.covariance, v2]])
        return np.linalg.cholesky(cov)

    def simulate_batch(self, theta, n, m, rng):
        theta = as_parameter(theta, 2)
        n, m = _check_counts(n, m)
        z = rng.standard_normal((m, n, 2))
        return theta + z @ self._cholesky().T


@dataclass(frozen=True)
class UniformBox:
    """Uniform prior on a finite box; improper priors are rejected."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float)).ravel()
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float)).ravel()
        if lo.shape != hi.shape or lo.size < 1:
            raise ValueError("lower and upper must be vectors of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box bounds must be finite")
        if np.any(lo >= hi):
            raise ValueError("empty box: lower must be < upper in every axis")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def k(self) -> int:
        return self.lower.size

    def draw(self, count: int, rng) -> np.ndarray:
        count = int(count)
        if count < 1:
            raise ValueError("count must be >= 1")
        return rng.uniform(self.lower, self.upper, size=(count, self.k))


@dataclass(frozen=True)
class GridDiscretization:
    """Equidistant grid over a box, endpoints included.

    `points_per_axis` is a single count applied to every axis or one count
    per axis; the grid enumerates the full cartesian product.
    """

    points_per_axis: tuple[int, ...]
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        ns = self.points_per_axis
        if np.isscalar(ns):
            ns = (int(ns),)
        ns = tuple(int(v) for v in np.atleast_1d(ns))
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float)).ravel()
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float)).ravel()
        if len(ns) == 1 and lo.size > 1:
            ns = ns * lo.size
        if lo.shape != hi.shape or len(ns) != lo.size:
            raise ValueError("points_per_axis and box bounds must agree in length")
        if any(v < 1 for v in ns):
            raise ValueError("need at least one point per axis")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box bounds must be finite")
        if np.any(lo > hi):
            raise ValueError("empty box: lower must be <= upper in every axis")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "points_per_axis", ns)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def k(self) -> int:
        return self.lower.size

    @property
    def size(self) -> int:
        return int(np.prod(self.points_per_axis))

    def points(self) -> np.ndarray:
        """All grid points as an (size, k) array, lexicographic by axis."""
        axes = [
            np.linspace(self.lower[j], self.upper[j], self.points_per_axis[j])
            for j in range(self.k)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])


def prior_draw(prior, count: int, rng) -> np.ndarray:
    """Candidate parameters as an (N, k) array.

    UniformBox draws `count` i.i.d. points; GridDiscretization returns the
    full grid and ignores `count`.
    """
    if isinstance(prior, GridDiscretization):
        return prior.points()
    if isinstance(prior, UniformBox):
        return prior.draw(count, rng)
    raise TypeError(f"unknown prior type: {type(prior).__name__}")
