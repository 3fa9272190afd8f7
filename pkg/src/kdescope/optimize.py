"""Bounded scalar minimisation for bandwidth criteria."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import CriterionFailure, InvalidArgument

__all__ = ["SearchInterval", "SelectorReport", "minimize_scalar"]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SearchInterval:
    lo: float
    hi: float
    grid_size: int = 64

    def __post_init__(self):
        if not (0 < self.lo < self.hi) or not math.isfinite(self.hi):
            raise InvalidArgument(f"need 0 < lo < hi, got [{self.lo}, {self.hi}]")
        if self.grid_size < 16:
            raise InvalidArgument(f"grid_size must be >= 16, got {self.grid_size}")

    def candidates(self) -> np.ndarray:
        return np.geomspace(self.lo, self.hi, self.grid_size)

    def scaled(self, c: float) -> "SearchInterval":
        return SearchInterval(self.lo * c, self.hi * c, self.grid_size)


@dataclass(frozen=True)
class SelectorReport:
    """Outcome of a bandwidth selector.

    ``trace`` holds (candidate h, score) pairs in evaluation order. ``flags``
    is non-empty whenever ``converged`` is False (e.g. ``"boundary"``).
    """

    h: float
    method: str = ""
    trace: tuple = ()
    iterations: int = 0
    converged: bool = True
    flags: tuple = ()
    details: dict = field(default_factory=dict)

    @property
    def boundary(self) -> bool:
        return "boundary" in self.flags

    def trace_array(self) -> np.ndarray:
        return np.array(self.trace, dtype=float).reshape(-1, 2)


def minimize_scalar(
    criterion: Callable[[float], float],
    interval: SearchInterval,
    rtol: float = 1e-5,
    maximize: bool = False,
    method: str = "",
    max_iter: int = 200,
) -> SelectorReport:
    """Global-over-grid minimiser of ``criterion`` on ``interval``.

    A log-spaced scan picks the best candidate; golden-section search on
    log(h) then refines inside the neighbouring grid cells until the bracket
    is narrower than ``rtol`` in relative terms. Non-finite scores count as
    the worst possible value. When the optimum sits on an end of the interval
    the report is flagged ``boundary`` and ``converged`` is False.
    """
    sign = -1.0 if maximize else 1.0
    trace = []

    def f(h):
        val = float(criterion(h))
        trace.append((float(h), val))
        return sign * val if math.isfinite(val) else math.inf

    grid = interval.candidates()
    scores = np.array([f(h) for h in grid])
    if not np.isfinite(scores).any():
        raise CriterionFailure(f"criterion is non-finite at every candidate in [{interval.lo}, {interval.hi}]")
    i = int(np.argmin(scores))
    best_h, best_f = float(grid[i]), float(scores[i])

    a = math.log(grid[max(i - 1, 0)])
    b = math.log(grid[min(i + 1, grid.size - 1)])
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(math.exp(c)), f(math.exp(d))
    iterations = 0
    while b - a > rtol and iterations < max_iter:
        iterations += 1
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(math.exp(d))
    for x_, f_ in ((c, fc), (d, fd)):
        if f_ < best_f:
            best_h, best_f = math.exp(x_), f_

    flags = []
    if best_h == interval.lo or best_h == interval.hi:
        flags.append("boundary")
    if iterations >= max_iter and b - a > rtol:
        flags.append("max_iter")
    return SelectorReport(
        h=best_h,
        method=method,
        trace=tuple(trace),
        iterations=iterations,
        converged=not flags,
        flags=tuple(flags),
    )
