"""Uniformly ordered time series with integer-nanosecond timestamps."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import UsageError
from ..timebase import NS_PER_SEC


@dataclass(frozen=True)
class TimeSeries:
    """Timestamps (ns, strictly increasing) with scalar or vector values.

    ``values`` has shape (n,) for a single channel or (n, c) for c
    channels; ``channels`` optionally names them.
    """

    timestamps: np.ndarray
    values: np.ndarray
    channels: tuple[str, ...] | None = None

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64)
        vals = np.asarray(self.values, dtype=float)
        if ts.ndim != 1:
            raise UsageError("timestamps must be one-dimensional")
        if len(ts) == 0:
            raise UsageError("series must not be empty")
        if vals.shape[0] != len(ts):
            raise UsageError("values and timestamps must have equal length")
        if vals.ndim not in (1, 2):
            raise UsageError("values must be 1-d or 2-d")
        if len(ts) > 1 and np.any(np.diff(ts) <= 0):
            raise UsageError("timestamps must be strictly increasing")
        if self.channels is not None:
            width = 1 if vals.ndim == 1 else vals.shape[1]
            if len(self.channels) != width:
                raise UsageError("channel labels must match value width")
        ts.flags.writeable = False
        vals.flags.writeable = False
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def start(self) -> int:
        return int(self.timestamps[0])

    @property
    def end(self) -> int:
        return int(self.timestamps[-1])

    def median_period_ns(self) -> int:
        if len(self) < 2:
            raise UsageError("need at least two samples to infer a period")
        return int(np.median(np.diff(self.timestamps)))

    def sample_rate_hz(self) -> float:
        return NS_PER_SEC / self.median_period_ns()

    def slice_time(self, t0: int, t1: int) -> "TimeSeries":
        """Samples with t0 <= timestamp < t1."""
        lo = int(np.searchsorted(self.timestamps, t0, side="left"))
        hi = int(np.searchsorted(self.timestamps, t1, side="left"))
        if hi <= lo:
            raise UsageError("time slice contains no samples")
        return replace(self, timestamps=self.timestamps[lo:hi], values=self.values[lo:hi])

    def magnitude(self) -> "TimeSeries":
        """Per-sample Euclidean norm across channels; identity for 1-d."""
        if self.values.ndim == 1:
            return self
        mag = np.linalg.norm(self.values, axis=1)
        return TimeSeries(self.timestamps, mag)

    def shifted(self, delta_ns: int) -> "TimeSeries":
        """Same values on timestamps moved by delta_ns."""
        return replace(self, timestamps=self.timestamps + int(delta_ns))
