"""Fixed-width histogram density estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, OutOfRange
from .sample import as_sample

__all__ = ["HistogramSpec", "Histogram", "sturges", "default_spec", "build_histogram", "bin_counts"]


@dataclass(frozen=True)
class HistogramSpec:
    origin: float
    bin_width: float
    bin_count: int

    def __post_init__(self):
        if not (self.bin_width > 0 and math.isfinite(self.bin_width)):
            raise InvalidArgument(f"bin_width must be positive, got {self.bin_width}")
        if self.bin_count < 1:
            raise InvalidArgument(f"bin_count must be >= 1, got {self.bin_count}")
        if not math.isfinite(self.origin):
            raise InvalidArgument("origin must be finite")

    @property
    def edges(self) -> np.ndarray:
        return self.origin + self.bin_width * np.arange(self.bin_count + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.origin + self.bin_width * (np.arange(self.bin_count) + 0.5)

    @property
    def right(self) -> float:
        return self.origin + self.bin_count * self.bin_width


@dataclass(frozen=True, eq=False)
class Histogram:
    spec: HistogramSpec
    heights: np.ndarray
    counts: np.ndarray

    def __call__(self, x):
        """Height of the bin containing each x (0 outside the bins)."""
        x = np.asarray(x, dtype=float)
        idx = _bin_index(self.spec, x)
        ok = (idx >= 0) & (idx < self.spec.bin_count)
        return np.where(ok, self.heights[np.clip(idx, 0, self.spec.bin_count - 1)], 0.0)

    def total_mass(self) -> float:
        return float(self.heights.sum() * self.spec.bin_width)


def sturges(n: int) -> int:
    """Sturges' bin count, ceil(1 + log2 n)."""
    if n < 1:
        raise InvalidArgument(f"Sturges' rule needs n >= 1, got {n}")
    return math.ceil(1 + math.log2(n))


def default_spec(data, bin_count: int | None = None) -> HistogramSpec:
    """Origin at the minimum, Sturges bin count, width stretched so the max fits."""
    sample = as_sample(data)
    k = sturges(sample.n) if bin_count is None else int(bin_count)
    span = sample.max - sample.min
    if span == 0:
        return HistogramSpec(sample.min - 0.5, 1.0 / k, k)
    return HistogramSpec(sample.min, span / k * (1 + 1e-9), k)


def _bin_index(spec: HistogramSpec, x):
    idx = np.floor((x - spec.origin) / spec.bin_width).astype(int)
    # the global right edge belongs to the last bin
    at_right = (idx == spec.bin_count) & np.isclose(x, spec.right, rtol=0, atol=1e-12 * max(1.0, abs(spec.right)))
    return np.where(at_right, spec.bin_count - 1, idx)


def bin_counts(data, spec: HistogramSpec) -> np.ndarray:
    values = np.asarray(as_sample(data).values)
    idx = _bin_index(spec, values)
    outside = (idx < 0) | (idx >= spec.bin_count)
    if outside.any():
        bad = values[outside]
        raise OutOfRange(
            f"{bad.size} observation(s) outside [{spec.origin}, {spec.right}): {bad[:10].tolist()}",
            bad.tolist(),
        )
    return np.bincount(idx, minlength=spec.bin_count)


def build_histogram(data, spec: HistogramSpec | None = None) -> Histogram:
    sample = as_sample(data)
    if spec is None:
        spec = default_spec(sample)
    counts = bin_counts(sample, spec)
    heights = counts / (sample.n * spec.bin_width)
    return Histogram(spec, heights, counts)
