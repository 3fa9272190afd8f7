from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument


@dataclass(frozen=True, eq=False)
class Sample:
    """Sorted, finite, non-empty vector of observations.

    Construct with :meth:`from_values`; every estimator also accepts a plain
    array and converts it through :func:`as_sample`.
    """

    values: np.ndarray

    @classmethod
    def from_values(cls, values) -> "Sample":
        arr = np.array(values, dtype=float).ravel()
        if arr.size == 0:
            raise InvalidArgument("sample is empty")
        bad = ~np.isfinite(arr)
        if bad.any():
            raise InvalidArgument(f"sample contains non-finite values: {arr[bad][:5].tolist()}")
        arr.sort()
        arr.flags.writeable = False
        return cls(arr)

    @property
    def n(self) -> int:
        return self.values.size

    def __len__(self) -> int:
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    @property
    def min(self) -> float:
        return float(self.values[0])

    @property
    def max(self) -> float:
        return float(self.values[-1])

    def std(self) -> float:
        """Sample standard deviation with divisor n - 1."""
        return float(np.std(self.values, ddof=1)) if self.n > 1 else 0.0

    def iqr(self) -> float:
        q1, q3 = np.percentile(self.values, [25, 75])
        return float(q3 - q1)


def as_sample(data) -> Sample:
    return data if isinstance(data, Sample) else Sample.from_values(data)
