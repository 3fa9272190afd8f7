"""SiZer: significance of zero crossings of derivatives across scales.

For each (x, h) pixel the Gaussian-kernel estimate of the m-th derivative is
tested against zero with a Gaussian interval whose critical value is
corrected, row by row, for the number of roughly independent blocks of width
h. Pixels are then classified as significantly increasing, significantly
decreasing, indeterminate, or data-starved.
"""

from __future__ import annotations

import enum
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from . import kernels as K
from .errors import InvalidArgument
from .estimators import check_bandwidth
from .sample import as_sample

__all__ = [
    "PixelClass",
    "ScaleSpaceGrid",
    "SizerMap",
    "MIN_ESS",
    "default_scale_grid",
    "derivative_estimate",
    "derivative_se",
    "effective_sample_size",
    "classify_pixel",
    "critical_value",
    "sizer_map",
    "sign_change_count",
    "mode_transitions",
    "write_ppm",
    "write_csv",
]

MIN_ESS = 5.0


class PixelClass(enum.IntEnum):
    INCREASING = 0
    DECREASING = 1
    INDETERMINATE = 2
    INSUFFICIENT_DATA = 3

    @property
    def color(self) -> tuple[int, int, int]:
        return _COLORS[self]

    @property
    def label(self) -> str:
        return self.name.lower()


_COLORS = {
    PixelClass.INCREASING: (0, 0, 255),
    PixelClass.DECREASING: (255, 0, 0),
    PixelClass.INDETERMINATE: (160, 32, 240),
    PixelClass.INSUFFICIENT_DATA: (128, 128, 128),
}
_PALETTE = np.array([_COLORS[c] for c in PixelClass], dtype=np.uint8)


@dataclass(frozen=True, eq=False)
class ScaleSpaceGrid:
    x_grid: np.ndarray
    h_grid: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x_grid, dtype=float).ravel()
        h = np.asarray(self.h_grid, dtype=float).ravel()
        if x.size == 0 or h.size == 0:
            raise InvalidArgument("scale-space grid axes must be non-empty")
        if np.any(~(h > 0)):
            raise InvalidArgument("bandwidths must be positive")
        if x.size > 1 and np.any(np.diff(x) <= 0):
            raise InvalidArgument("x grid must be strictly ascending")
        if h.size > 1 and np.any(np.diff(h) <= 0):
            raise InvalidArgument("h grid must be strictly ascending")
        object.__setattr__(self, "x_grid", x)
        object.__setattr__(self, "h_grid", h)


@dataclass(frozen=True, eq=False)
class SizerMap:
    """Pixel classes, shape (len(h_grid), len(x_grid)); row i belongs to h_grid[i]."""

    grid: ScaleSpaceGrid
    pixels: np.ndarray
    alpha: float
    derivative_order: int
    critical_values: np.ndarray

    @property
    def shape(self):
        return self.pixels.shape

    def row(self, i: int) -> list[PixelClass]:
        return [PixelClass(v) for v in self.pixels[i]]

    def to_rgb(self) -> np.ndarray:
        """RGB image with the largest bandwidth in the top row."""
        return _PALETTE[self.pixels[::-1]]


def default_scale_grid(data, nx: int = 101, nh: int = 21) -> ScaleSpaceGrid:
    """x over the data range padded by 10%; h log-spaced from twice the median gap to the range."""
    sample = as_sample(data)
    span = sample.max - sample.min
    if span == 0:
        raise InvalidArgument("cannot build a scale-space grid for data with zero range")
    gaps = np.diff(sample.values)
    gaps = gaps[gaps > 0]
    h_lo = 2.0 * float(np.median(gaps))
    if not h_lo < span:
        h_lo = span / 100.0
    x = np.linspace(sample.min - 0.1 * span, sample.max + 0.1 * span, nx)
    return ScaleSpaceGrid(x, np.geomspace(h_lo, span, nh))


def _summands(values, h, x, m):
    # (1/h^(m+1)) K^(m)((x - X_i)/h), shape (len(x), n)
    u = (np.asarray(x, dtype=float).reshape(-1, 1) - values[None, :]) / h
    return K.gaussian_derivative(u, m) / h ** (m + 1)


def _reshape(x, arr):
    return float(arr[0]) if np.ndim(x) == 0 else arr.reshape(np.shape(x))


def derivative_estimate(data, h: float, x, m: int = 1):
    """m-th derivative of the Gaussian kernel estimate at x."""
    sample = as_sample(data)
    h = check_bandwidth(h)
    if m < 0:
        raise InvalidArgument("derivative order must be >= 0")
    return _reshape(x, _summands(sample.values, h, x, m).mean(axis=1))


def derivative_se(data, h: float, x, m: int = 1):
    """Standard error of the derivative estimate: sd of the n summands over sqrt(n)."""
    sample = as_sample(data)
    h = check_bandwidth(h)
    if sample.n < 2:
        raise InvalidArgument("standard error needs at least two observations")
    s = _summands(sample.values, h, x, m)
    return _reshape(x, s.std(axis=1, ddof=1) / math.sqrt(sample.n))


def effective_sample_size(data, h: float, x):
    """Kernel-weighted local count sum K_h(x - X_i) / K_h(0)."""
    sample = as_sample(data)
    h = check_bandwidth(h)
    u = (np.asarray(x, dtype=float).reshape(-1, 1) - sample.values[None, :]) / h
    return _reshape(x, np.exp(-0.5 * u * u).sum(axis=1))


def _classify(est, se, ess, q):
    est, se, ess = np.broadcast_arrays(np.asarray(est), np.asarray(se), np.asarray(ess))
    out = np.full(est.shape, int(PixelClass.INDETERMINATE), dtype=np.uint8)
    out[est - q * se > 0] = PixelClass.INCREASING
    out[est + q * se < 0] = PixelClass.DECREASING
    out[ess < MIN_ESS] = PixelClass.INSUFFICIENT_DATA
    return out


def classify_pixel(data, h: float, x: float, m: int, alpha: float, q: float) -> PixelClass:
    """Class of one pixel given the row's simultaneous critical value ``q``.

    ``alpha`` only documents the level ``q`` was computed for.
    """
    sample = as_sample(data)
    ess = effective_sample_size(sample, h, x)
    if ess < MIN_ESS:
        return PixelClass.INSUFFICIENT_DATA
    est = derivative_estimate(sample, h, x, m)
    se = derivative_se(sample, h, x, m) if sample.n > 1 else 0.0
    return PixelClass(int(_classify(est, se, ess, q)))


def _independent_blocks(x_grid, ess_row, h) -> int:
    count = 0
    last = -math.inf
    for x in x_grid[ess_row >= MIN_ESS]:
        if x - last >= h:
            count += 1
            last = x
    return min(max(count, 1), x_grid.size)


def critical_value(x_grid, ess_row, h: float, alpha: float) -> float:
    """Normal quantile 1 - alpha / (2 l), l = number of data-rich x points spaced >= h apart."""
    ell = _independent_blocks(np.asarray(x_grid, dtype=float), np.asarray(ess_row), h)
    return float(ndtri(1.0 - alpha / (2.0 * ell)))


def _row(values, x_grid, h, m, alpha):
    s = _summands(values, h, x_grid, m)
    n = values.size
    est = s.mean(axis=1)
    se = s.std(axis=1, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(est)
    u = (x_grid[:, None] - values[None, :]) / h
    ess = np.exp(-0.5 * u * u).sum(axis=1)
    q = critical_value(x_grid, ess, h, alpha)
    return _classify(est, se, ess, q), q


def sizer_map(data, grid: ScaleSpaceGrid | None = None, m: int = 1, alpha: float = 0.05, workers: int = 1) -> SizerMap:
    """Classify every (h, x) pixel of the scale-space grid.

    Rows are independent; ``workers > 1`` evaluates them on a thread pool.
    Output does not depend on ``workers``.
    """
    sample = as_sample(data)
    if not 0 < alpha < 1:
        raise InvalidArgument("alpha must lie in (0, 1)")
    if m < 1:
        raise InvalidArgument("derivative order m must be >= 1")
    grid = grid or default_scale_grid(sample)
    values = sample.values

    def job(h):
        return _row(values, grid.x_grid, float(h), m, alpha)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(job, grid.h_grid))
    else:
        rows = [job(h) for h in grid.h_grid]
    pixels = np.vstack([r[0] for r in rows])
    qs = np.array([r[1] for r in rows])
    return SizerMap(grid, pixels, alpha, m, qs)


def sign_change_count(data, h: float, x_grid, m: int = 1) -> int:
    """Number of sign changes of the m-th derivative estimate along x_grid (zeros skipped)."""
    d = np.atleast_1d(derivative_estimate(data, h, np.asarray(x_grid, dtype=float), m))
    s = np.sign(d)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def mode_transitions(row) -> int:
    """Count increasing-to-decreasing changes along a row, ignoring other classes."""
    sig = [int(c) for c in row if int(c) in (PixelClass.INCREASING, PixelClass.DECREASING)]
    return sum(1 for a, b in zip(sig, sig[1:]) if a == PixelClass.INCREASING and b == PixelClass.DECREASING)


def write_ppm(smap: SizerMap, path) -> None:
    """Binary PPM (P6), one pixel per cell, largest bandwidth on top."""
    rgb = smap.to_rgb()
    height, width = rgb.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(rgb).tobytes())


def write_csv(smap: SizerMap, path_or_buf) -> None:
    """Long-format CSV with columns x, h, class (rows ordered by h, then x)."""
    buf = io.StringIO()
    buf.write("x,h,class\n")
    for i, h in enumerate(smap.grid.h_grid):
        for j, x in enumerate(smap.grid.x_grid):
            buf.write(f"{x:.9g},{h:.9g},{PixelClass(int(smap.pixels[i, j])).label}\n")
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(buf.getvalue())
    else:
        with open(path_or_buf, "w", newline="") as fh:
            fh.write(buf.getvalue())
