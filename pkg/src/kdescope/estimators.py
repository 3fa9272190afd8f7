"""Density and distribution-function estimators.

Every ``*_at`` function accepts a scalar or an array of evaluation points and
returns a float or an array of the same shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.integrate import trapezoid

from . import kernels as K
from .errors import DegenerateBandwidth, DomainViolation, InvalidArgument, InvalidBandwidth
from .histogram import HistogramSpec, bin_counts
from .kernels import Kernel, parse_kernel
from .sample import Sample, as_sample

__all__ = [
    "DensityEstimate",
    "Constant",
    "KNearest",
    "Explicit",
    "default_grid",
    "kde_at",
    "kde_grid",
    "kde_bruteforce",
    "balloon_bandwidth",
    "balloon_at",
    "sample_point_kde_at",
    "sample_point_bandwidths",
    "binned_kde",
    "gamma_kde_at",
    "gamma_kde_grid",
    "kdfe_at",
    "kdfe_grid",
]

DEFAULT_GRID_SIZE = 401
# cap on the number of (point, datum) pairs materialised at once
_CHUNK_PAIRS = 2_000_000


@dataclass(frozen=True, eq=False)
class DensityEstimate:
    grid: np.ndarray
    values: np.ndarray
    bandwidth: Union[float, np.ndarray]
    kernel: Union[Kernel, str]

    def __len__(self):
        return self.grid.size

    def integral(self) -> float:
        """Trapezoid integral of the estimate over its grid."""
        return float(trapezoid(self.values, self.grid))


def check_bandwidth(h) -> float:
    h = float(h)
    if not (h > 0 and math.isfinite(h)):
        raise InvalidBandwidth(f"bandwidth must be positive and finite, got {h}")
    return h


def _scalar_or_array(x_in, out):
    return float(out) if np.ndim(x_in) == 0 else out


def _chunks(m: int, n: int):
    step = max(1, _CHUNK_PAIRS // max(n, 1))
    for start in range(0, m, step):
        yield slice(start, min(start + step, m))


def _kernel_sums(values: np.ndarray, kernel: Kernel, x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """sum_i K((x_j - X_i) / h_j) for each query x_j, with per-query h_j.

    Compact kernels only touch data inside [x_j - h_j, x_j + h_j], located by
    binary search on the sorted sample.
    """
    out = np.zeros(x.size)
    if kernel is Kernel.GAUSSIAN:
        for sl in _chunks(x.size, values.size):
            u = (x[sl, None] - values[None, :]) / h[sl, None]
            out[sl] = K.evaluate(kernel, u).sum(axis=1)
        return out
    lo = np.searchsorted(values, x - h, side="left")
    hi = np.searchsorted(values, x + h, side="right")
    counts = hi - lo
    total = int(counts.sum())
    if total == 0:
        return out
    rows = np.repeat(np.arange(x.size), counts)
    starts = np.cumsum(counts) - counts
    cols = np.arange(total) - np.repeat(starts, counts) + np.repeat(lo, counts)
    u = (x[rows] - values[cols]) / h[rows]
    return np.bincount(rows, weights=K.evaluate(kernel, u), minlength=x.size)


def kde_at(data, kernel, h, x):
    """Fixed-bandwidth kernel estimate (1/(n h)) sum K((x - X_i)/h)."""
    sample = as_sample(data)
    kernel = parse_kernel(kernel)
    h = check_bandwidth(h)
    xa = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    vals = _kernel_sums(sample.values, kernel, xa, np.full(xa.size, h)) / (sample.n * h)
    return _scalar_or_array(x, vals.reshape(np.shape(x)))


def kde_bruteforce(data, kernel, h, x):
    """Reference O(n * m) evaluation without windowing."""
    sample = as_sample(data)
    h = check_bandwidth(h)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    u = (xa[:, None] - sample.values[None, :]) / h
    return K.evaluate(kernel, u).sum(axis=1) / (sample.n * h)


def default_grid(data, h: float, size: int = DEFAULT_GRID_SIZE, pad: float = 3.0) -> np.ndarray:
    sample = as_sample(data)
    return np.linspace(sample.min - pad * h, sample.max + pad * h, size)


def kde_grid(data, kernel, h, grid=None) -> DensityEstimate:
    sample = as_sample(data)
    kernel = parse_kernel(kernel)
    h = check_bandwidth(h)
    grid = default_grid(sample, h) if grid is None else np.asarray(grid, dtype=float)
    if grid.size > 1 and np.any(np.diff(grid) < 0):
        raise InvalidArgument("evaluation grid must be ascending")
    return DensityEstimate(grid, np.asarray(kde_at(sample, kernel, h, grid)), h, kernel)


# -- variable bandwidth ----------------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    h: float


@dataclass(frozen=True)
class KNearest:
    """h(x) = distance from x to its k-th nearest observation."""

    k: int


@dataclass(frozen=True)
class Explicit:
    """Per-query bandwidths: a callable h(x) or an array aligned with the queries."""

    h: Union[Callable, np.ndarray, float]


BandwidthFunction = Union[Constant, KNearest, Explicit]


def _kth_nearest(values: np.ndarray, x: np.ndarray, k: int) -> np.ndarray:
    out = np.empty(x.size)
    for sl in _chunks(x.size, values.size):
        d = np.abs(x[sl, None] - values[None, :])
        out[sl] = np.partition(d, k - 1, axis=1)[:, k - 1]
    return out


def balloon_bandwidth(data, bw: BandwidthFunction, x):
    """Evaluate h(x) for the balloon estimator."""
    sample = as_sample(data)
    xa = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    if isinstance(bw, Constant):
        h = np.full(xa.size, check_bandwidth(bw.h))
    elif isinstance(bw, KNearest):
        if not 1 <= bw.k <= sample.n:
            raise InvalidArgument(f"k must lie in [1, {sample.n}], got {bw.k}")
        h = _kth_nearest(sample.values, xa, bw.k)
    elif isinstance(bw, Explicit):
        raw = bw.h(xa) if callable(bw.h) else bw.h
        h = np.broadcast_to(np.asarray(raw, dtype=float), xa.shape).copy()
    else:
        raise InvalidArgument(f"unsupported bandwidth function {bw!r}")
    if np.any(h == 0):
        raise DegenerateBandwidth(f"h(x) = 0 at x = {xa[h == 0][:5].tolist()}")
    if np.any(~(h > 0)) or not np.all(np.isfinite(h)):
        raise InvalidBandwidth("bandwidth function produced non-positive or non-finite values")
    return _scalar_or_array(x, h.reshape(np.shape(x)))


def balloon_at(data, kernel, bw: BandwidthFunction, x):
    """Balloon estimate (1/(n h(x))) sum K((x - X_i)/h(x))."""
    sample = as_sample(data)
    kernel = parse_kernel(kernel)
    xa = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    h = np.atleast_1d(balloon_bandwidth(sample, bw, xa))
    vals = _kernel_sums(sample.values, kernel, xa, h) / (sample.n * h)
    return _scalar_or_array(x, vals.reshape(np.shape(x)))


def sample_point_kde_at(data, kernel, per_datum_h, x):
    """Sample-point estimate (1/n) sum K((x - X_i)/h_i) / h_i.

    ``per_datum_h`` is aligned with the sorted sample values.
    """
    sample = as_sample(data)
    kernel = parse_kernel(kernel)
    hs = np.asarray(per_datum_h, dtype=float).ravel()
    if hs.size != sample.n:
        raise InvalidArgument(f"expected {sample.n} per-datum bandwidths, got {hs.size}")
    if np.any(~(hs > 0)) or not np.all(np.isfinite(hs)):
        raise InvalidBandwidth("per-datum bandwidths must be positive and finite")
    xa = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    out = np.empty(xa.size)
    for sl in _chunks(xa.size, sample.n):
        u = (xa[sl, None] - sample.values[None, :]) / hs[None, :]
        out[sl] = (K.evaluate(kernel, u) / hs[None, :]).sum(axis=1) / sample.n
    return _scalar_or_array(x, out.reshape(np.shape(x)))


def sample_point_bandwidths(data, kernel=Kernel.GAUSSIAN, h: float | None = None) -> np.ndarray:
    """Square-root-law per-datum bandwidths h * (pilot(X_i) / g)^(-1/2).

    The pilot is a fixed-bandwidth estimate at ``h`` (rule of thumb when None)
    and g is the geometric mean of the pilot values at the data.
    """
    sample = as_sample(data)
    if h is None:
        from .bandwidth import rule_of_thumb

        h = rule_of_thumb(sample).h
    pilot = np.asarray(kde_at(sample, kernel, h, sample.values))
    g = math.exp(np.mean(np.log(pilot)))
    return h * (pilot / g) ** -0.5


def binned_kde(data, kernel, h, bins: HistogramSpec, grid=None) -> DensityEstimate:
    """Kernel estimate on binned data: (1/n) sum_bins n_i K((x - t_i)/h_i) / h_i.

    ``h`` is a scalar or one bandwidth per bin (evaluated at the bin centre).
    """
    sample = as_sample(data)
    kernel = parse_kernel(kernel)
    counts = bin_counts(sample, bins)
    hs = np.asarray(h, dtype=float)
    if hs.ndim == 0:
        check_bandwidth(hs)
        hs = np.full(bins.bin_count, float(hs))
    elif hs.size != bins.bin_count:
        raise InvalidArgument(f"expected {bins.bin_count} per-bin bandwidths, got {hs.size}")
    elif np.any(~(hs > 0)):
        raise InvalidBandwidth("per-bin bandwidths must be positive")
    keep = counts > 0
    centers, n_i, h_i = bins.centers[keep], counts[keep], hs[keep]
    if grid is None:
        grid = default_grid(sample, float(h_i.max()))
    grid = np.asarray(grid, dtype=float)
    u = (grid[:, None] - centers[None, :]) / h_i[None, :]
    values = (K.evaluate(kernel, u) * (n_i / h_i)[None, :]).sum(axis=1) / sample.n
    bw = float(hs[0]) if np.ndim(h) == 0 else hs
    return DensityEstimate(grid, values, bw, kernel)


# -- boundary-aware and distribution-function estimators --------------------------------


def _positive_sample(data) -> Sample:
    sample = as_sample(data)
    if sample.min <= 0:
        raise DomainViolation(f"gamma-kernel estimation needs strictly positive data, min = {sample.min}")
    return sample


def gamma_kde_at(data, b, x):
    """Gamma-kernel estimate (1/n) sum K_{x/b+1, b}(X_i) for x >= 0."""
    sample = _positive_sample(data)
    b = check_bandwidth(b)
    xa = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    if np.any(xa < 0):
        raise DomainViolation("gamma-kernel estimate is defined for x >= 0 only")
    out = np.empty(xa.size)
    for sl in _chunks(xa.size, sample.n):
        out[sl] = K.gamma_kernel(xa[sl, None], b, sample.values[None, :]).mean(axis=1)
    return _scalar_or_array(x, out.reshape(np.shape(x)))


def gamma_kde_grid(data, b, grid=None, size: int = DEFAULT_GRID_SIZE) -> DensityEstimate:
    sample = _positive_sample(data)
    b = check_bandwidth(b)
    if grid is None:
        grid = np.linspace(0.0, sample.max + 3 * math.sqrt(sample.max * b + b * b), size)
    grid = np.asarray(grid, dtype=float)
    return DensityEstimate(grid, np.asarray(gamma_kde_at(sample, b, grid)), b, "gamma")


def kdfe_at(data, kernel, h, x):
    """Kernel distribution function estimate (1/n) sum Kcdf((x - X_i)/h)."""
    sample = as_sample(data)
    h = check_bandwidth(h)
    xa = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    out = np.empty(xa.size)
    for sl in _chunks(xa.size, sample.n):
        out[sl] = K.antiderivative(kernel, (xa[sl, None] - sample.values[None, :]) / h).mean(axis=1)
    return _scalar_or_array(x, out.reshape(np.shape(x)))


def kdfe_grid(data, kernel, h, grid=None) -> DensityEstimate:
    sample = as_sample(data)
    kernel = parse_kernel(kernel)
    h = check_bandwidth(h)
    grid = default_grid(sample, h) if grid is None else np.asarray(grid, dtype=float)
    return DensityEstimate(grid, np.asarray(kdfe_at(sample, kernel, h, grid)), h, kernel)
