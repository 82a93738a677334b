"""Samples, empirical CDFs and the distances used to match them.

The two-sample Kolmogorov distance is computed exactly: counts are
accumulated with a single sorted-merge scan and the gap |F_x - F_y| is
read only after every copy of a tied value has been consumed, so the
result is an exact integer multiple of 1/(n*m) (of 1/n when n = m).

For multivariate samples the half-space distance is approximated by the
maximum Kolmogorov distance over finitely many one-dimensional
projections; the half-space empirical mass at (a, t) coincides with the
ECDF of the projected sample evaluated at t.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .rng import as_generator

__all__ = [
    "Sample",
    "EmpiricalCdf",
    "MatchSpec",
    "KS1D",
    "ProjectedTV",
    "ParametricAbs",
    "ecdf_eval",
    "ks_distance",
    "ks_distance_to_cdf",
    "project",
    "sample_directions",
    "projected_tv",
    "match",
    "sample_to_csv",
    "sample_from_csv",
]

UNIT_NORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Sample:
    """n observations in R^d stored as an immutable (n, d) float array."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("sample must be a nonempty (n, d) array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("sample entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def column(self) -> np.ndarray:
        """The sample as a flat vector; only defined for d = 1."""
        if self.d != 1:
            raise ValueError(f"expected a 1-d sample, got d={self.d}")
        return self.data[:, 0]


class EmpiricalCdf:
    """Right-continuous step function t -> #{values <= t} / n."""

    __slots__ = ("sorted_values",)

    def __init__(self, values):
        if isinstance(values, Sample):
            values = values.column()
        arr = np.asarray(values, dtype=float).ravel()
        if arr.size == 0:
            raise ValueError("empirical cdf needs at least one value")
        if not np.all(np.isfinite(arr)):
            raise ValueError("values must be finite")
        arr = np.sort(arr)
        arr.setflags(write=False)
        self.sorted_values = arr

    @property
    def n(self) -> int:
        return self.sorted_values.size

    def __call__(self, t):
        counts = np.searchsorted(self.sorted_values, t, side="right")
        return counts / self.n


def ecdf_eval(cdf: EmpiricalCdf, t: float) -> float:
    """Fraction of the sample at or below t."""
    return float(cdf(t))


def _as_1d(sample_like) -> np.ndarray:
    if isinstance(sample_like, Sample):
        return sample_like.column()
    arr = np.asarray(sample_like, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("empty sample")
    if not np.all(np.isfinite(arr)):
        raise ValueError("sample entries must be finite")
    return arr


def ks_distance(x, y) -> float:
    """Exact sup_t |F_x(t) - F_y(t)| between two 1-d empirical CDFs.

    Sizes may differ. The supremum is evaluated on the distinct merged
    values, counting ties with <=, and returned as the exactly-rounded
    float of an integer ratio.
    """
    a = np.sort(_as_1d(x))
    b = np.sort(_as_1d(y))
    n, m = a.size, b.size
    grid = np.unique(np.concatenate([a, b]))
    ca = np.searchsorted(a, grid, side="right").astype(np.int64)
    cb = np.searchsorted(b, grid, side="right").astype(np.int64)
    num = int(np.max(np.abs(ca * m - cb * n)))
    return num / (n * m)


def _ks_batch(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise exact two-sample Kolmogorov distances.

    a has shape (B, n) and b has shape (B, m); rows need not be sorted.
    Ties are handled as in `ks_distance`: the gap after a merged value is
    readable only once all equal values from both rows are consumed.
    """
    if a.ndim != 2 or b.ndim != 2 or a.shape[0] != b.shape[0]:
        raise ValueError("batch shapes must be (B, n) and (B, m)")
    n, m = a.shape[1], b.shape[1]
    z = np.concatenate([a, b], axis=1)
    order = np.argsort(z, axis=1, kind="stable")
    zs = np.take_along_axis(z, order, axis=1)
    from_a = order < n
    ca = np.cumsum(from_a, axis=1, dtype=np.int64)
    cb = np.cumsum(~from_a, axis=1, dtype=np.int64)
    gap = np.abs(ca * m - cb * n)
    readable = np.empty_like(gap, dtype=bool)
    readable[:, -1] = True
    readable[:, :-1] = zs[:, 1:] != zs[:, :-1]
    num = np.max(np.where(readable, gap, 0), axis=1)
    return num / (n * m)


def ks_distance_to_cdf(x, cdf) -> float:
    """Exact sup_t |F_x_hat(t) - F(t)| against a continuous CDF callable.

    The supremum over t is attained at the sample points, comparing F
    there with the ECDF value and its left limit.
    """
    xs = np.sort(_as_1d(x))
    n = xs.size
    u = np.asarray(cdf(xs), dtype=float)
    upper = np.arange(1, n + 1) / n - u
    lower = u - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def project(x: Sample, a) -> Sample:
    """1-d sample of inner products <a, X_i>, observation order preserved."""
    a = np.asarray(a, dtype=float).ravel()
    if a.shape[0] != x.d:
        raise ValueError(f"direction has dimension {a.shape[0]}, sample has d={x.d}")
    return Sample(x.data @ a)


def sample_directions(d: int, k: int, rng=None, equispaced: bool = False) -> np.ndarray:
    """k unit vectors in R^d, returned as a (k, d) array.

    d = 2 draws angles uniformly on [0, pi) (each direction represents the
    antipodal pair; the Kolmogorov distance of projections is invariant
    under a -> -a).  d > 2 uses normalized standard Gaussians, i.e. the
    uniform law on the unit sphere.  `equispaced` (d = 2 only) uses the
    deterministic angles i*pi/k.
    """
    if d < 2:
        raise ValueError("directions need d >= 2; match 1-d samples directly")
    if k < 1:
        raise ValueError("need at least one direction")
    if equispaced:
        if d != 2:
            raise ValueError("equispaced directions are only defined for d=2")
        phi = np.arange(k) * np.pi / k
    elif d == 2:
        phi = as_generator(rng).uniform(0.0, np.pi, size=k)
    else:
        v = as_generator(rng).standard_normal((k, d))
        norms = np.linalg.norm(v, axis=1, keepdims=True)
        return v / norms
    return np.column_stack([np.cos(phi), np.sin(phi)])


def _as_directions(directions, d: int) -> np.ndarray:
    dirs = np.asarray(directions, dtype=float)
    if dirs.ndim == 1:
        dirs = dirs[None, :]
    if dirs.ndim != 2 or dirs.shape[0] < 1:
        raise ValueError("directions must be a nonempty (k, d) array")
    if dirs.shape[1] != d:
        raise ValueError(f"directions have dimension {dirs.shape[1]}, samples have d={d}")
    norms = np.linalg.norm(dirs, axis=1)
    if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
        raise ValueError("directions must be unit vectors")
    return dirs


def projected_tv(x: Sample, y: Sample, directions) -> float:
    """Max over directions of the Kolmogorov distance between projections.

    Approximates the total-variation-over-half-spaces distance between the
    empirical measures of x and y; monotone nondecreasing in the direction
    set and bounded by 1.
    """
    if x.d != y.d:
        raise ValueError(f"dimension mismatch: {x.d} vs {y.d}")
    dirs = _as_directions(directions, x.d)
    px = x.data @ dirs.T  # (n, k)
    py = y.data @ dirs.T  # (m, k)
    d = _ks_batch(px.T, py.T)
    return float(np.max(d))


@dataclass(frozen=True)
class KS1D:
    """Two-sample Kolmogorov distance on 1-d samples."""

    label = "ks"

    def distance(self, x: Sample, y: Sample) -> float:
        if x.d != 1 or y.d != 1:
            raise ValueError("ks matching requires 1-d samples")
        return ks_distance(x, y)

    def distances(self, x: Sample, batch: np.ndarray) -> np.ndarray:
        """Distances from x to each sample of a (m, n, 1) batch."""
        if x.d != 1 or batch.ndim != 3 or batch.shape[2] != 1:
            raise ValueError("ks matching requires 1-d samples")
        a = np.broadcast_to(x.column(), (batch.shape[0], x.n))
        return _ks_batch(a, batch[:, :, 0])


@dataclass(frozen=True)
class ProjectedTV:
    """Half-space distance approximated over a fixed set of directions."""

    directions: np.ndarray

    def __post_init__(self):
        dirs = np.asarray(self.directions, dtype=float)
        if dirs.ndim != 2 or dirs.shape[0] < 1 or dirs.shape[1] < 2:
            raise ValueError("directions must be a nonempty (k, d) array with d >= 2")
        norms = np.linalg.norm(dirs, axis=1)
        if not np.all(np.isfinite(dirs)) or np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
            raise ValueError("directions must be finite unit vectors")
        dirs = dirs.copy()
        dirs.setflags(write=False)
        object.__setattr__(self, "directions", dirs)

    @property
    def label(self) -> str:
        return "projected-tv"

    @property
    def k(self) -> int:
        return self.directions.shape[0]

    def distance(self, x: Sample, y: Sample) -> float:
        return projected_tv(x, y, self.directions)

    def distances(self, x: Sample, batch: np.ndarray) -> np.ndarray:
        d = self.directions.shape[1]
        if x.d != d or batch.ndim != 3 or batch.shape[2] != d:
            raise ValueError("sample dimension does not match the directions")
        m, n2 = batch.shape[0], batch.shape[1]
        if m == 0:
            return np.empty(0)
        px = x.data @ self.directions.T            # (n, k)
        pb = np.einsum("mnd,kd->mkn", batch, self.directions)  # (m, k, n2)
        a = np.broadcast_to(px.T, (m, self.k, x.n)).reshape(m * self.k, x.n)
        d_flat = _ks_batch(a, pb.reshape(m * self.k, n2))
        return d_flat.reshape(m, self.k).max(axis=1)


@dataclass(frozen=True)
class ParametricAbs:
    """|sample mean - reference|, the flat-kernel parametric baseline."""

    reference: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.reference):
            raise ValueError("reference must be finite")

    @property
    def label(self) -> str:
        return "parametric-abs"

    def distance(self, x: Sample, y: Sample) -> float:
        if y.d != 1:
            raise ValueError("the sample-mean summary is defined for d=1")
        return abs(float(np.mean(y.column())) - self.reference)

    def distances(self, x: Sample, batch: np.ndarray) -> np.ndarray:
        if batch.ndim != 3 or batch.shape[2] != 1:
            raise ValueError("the sample-mean summary is defined for d=1")
        return np.abs(batch[:, :, 0].mean(axis=1) - self.reference)


@dataclass(frozen=True)
class MatchSpec:
    """A matcher plus its tolerance; matching uses the closed inequality."""

    matcher: object
    epsilon: float

    def __post_init__(self):
        eps = float(self.epsilon)
        if not np.isfinite(eps) or eps < 0:
            raise ValueError("epsilon must be finite and >= 0")
        object.__setattr__(self, "epsilon", eps)


def match(x: Sample, y: Sample, spec: MatchSpec) -> bool:
    """True iff the matcher distance from x to y is <= epsilon."""
    return spec.matcher.distance(x, y) <= spec.epsilon


def sample_to_csv(sample: Sample, path) -> None:
    """One observation per row, full float precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in sample.data:
            writer.writerow([str(float(v)) for v in row])


def sample_from_csv(path) -> Sample:
    if isinstance(path, io.TextIOBase):
        rows = [[float(v) for v in row] for row in csv.reader(path) if row]
    else:
        with open(path, newline="") as fh:
            rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    return Sample(np.asarray(rows))
