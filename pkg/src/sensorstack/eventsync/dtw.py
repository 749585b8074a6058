"""Dynamic time warping and barycenter averaging for gesture templates."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Callable, Sequence

import numpy as np

from ..errors import UsageError
from ..timebase import NS_PER_SEC
from .series import TimeSeries

PointMetric = Callable[[np.ndarray, np.ndarray], float]


def _as_values(seq) -> np.ndarray:
    if isinstance(seq, TimeSeries):
        vals = seq.values
    else:
        vals = np.asarray(seq, dtype=float)
    if vals.ndim not in (1, 2) or vals.shape[0] == 0:
        raise UsageError("sequence must be a non-empty 1-d or 2-d array")
    return vals.astype(float, copy=False)


def _pairwise_cost(s: np.ndarray, t: np.ndarray, metric) -> np.ndarray:
    if callable(metric):
        return np.array([[float(metric(a, b)) for b in t] for a in s])
    if s.ndim == 1:
        s2 = s[:, None]
        t2 = t[None, :]
        if metric == "abs":
            return np.abs(s2 - t2)
        if metric == "sqeuclidean":
            return (s2 - t2) ** 2
        if metric == "euclidean":
            return np.abs(s2 - t2)
    else:
        diff = s[:, None, :] - t[None, :, :]
        if metric == "sqeuclidean":
            return (diff**2).sum(axis=2)
        if metric == "euclidean":
            return np.sqrt((diff**2).sum(axis=2))
        if metric == "abs":
            return np.abs(diff).sum(axis=2)
    raise UsageError(f"unknown point metric {metric!r}")


def _cumulative(d: np.ndarray) -> np.ndarray:
    """Cumulative DTW cost with steps (1,0), (0,1), (1,1).

    Each row is computed with a prefix-scan: within a row the recurrence
    D[i,j] = d[i,j] + min(M[j], D[i,j-1]) collapses to a cumulative sum
    plus a running minimum, so the whole table is O(n) vectorized row
    updates instead of a scalar double loop.
    """
    n, m = d.shape
    out = np.empty((n, m))
    prev = np.cumsum(d[0])
    out[0] = prev
    shifted = np.empty(m)
    for i in range(1, n):
        row = d[i]
        cs = np.cumsum(row)
        m_arr = np.empty(m)
        m_arr[0] = prev[0]
        np.minimum(prev[1:], prev[:-1], out=m_arr[1:])
        shifted[0] = 0.0
        shifted[1:] = cs[:-1]
        cur = cs + np.minimum.accumulate(m_arr - shifted)
        out[i] = cur
        prev = cur
    return out


def _backtrack(cumulative: np.ndarray) -> list[tuple[int, int]]:
    """Recover one optimal path, preferring diagonal steps on ties."""
    i = cumulative.shape[0] - 1
    j = cumulative.shape[1] - 1
    path = [(i, j)]
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            diag = cumulative[i - 1, j - 1]
            up = cumulative[i - 1, j]
            left = cumulative[i, j - 1]
            best = min(diag, up, left)
            if diag == best:
                i -= 1
                j -= 1
            elif up == best:
                i -= 1
            else:
                j -= 1
        path.append((i, j))
    path.reverse()
    return path


@dataclass(frozen=True)
class DtwResult:
    cost: float
    path: tuple[tuple[int, int], ...]


def default_metric(values: np.ndarray) -> str:
    return "abs" if values.ndim == 1 else "euclidean"


def dtw_distance(s, t, point_metric=None) -> DtwResult:
    """Minimum cumulative warp cost and one optimal path.

    The path starts at (0, 0), ends at (len(s)-1, len(t)-1), and moves
    by (1,0), (0,1) or (1,1) only. ``point_metric`` is "abs",
    "euclidean", "sqeuclidean", or a callable on value pairs; scalars
    default to absolute difference, vectors to euclidean distance.
    """
    sv = _as_values(s)
    tv = _as_values(t)
    if (sv.ndim == 2) != (tv.ndim == 2):
        raise UsageError("sequences must have matching dimensionality")
    metric = point_metric or default_metric(sv)
    d = _pairwise_cost(sv, tv, metric)
    cum = _cumulative(d)
    path = _backtrack(cum)
    return DtwResult(cost=float(cum[-1, -1]), path=tuple(path))


def dtw_cost(s, t, point_metric=None) -> float:
    """Cost-only variant; skips path recovery."""
    sv = _as_values(s)
    tv = _as_values(t)
    metric = point_metric or default_metric(sv)
    d = _pairwise_cost(sv, tv, metric)
    return float(_cumulative(d)[-1, -1])


# ---------------------------------------------------------------------------
# barycenter averaging


@dataclass(frozen=True)
class DbaResult:
    barycenter: np.ndarray
    costs: tuple[float, ...]


def _dba_objective(barycenter: np.ndarray, sequences: list[np.ndarray]) -> float:
    return sum(dtw_cost(barycenter, s, "sqeuclidean") for s in sequences)


def dba(sequences: Sequence, iterations: int) -> DbaResult:
    """Barycenter averaging under DTW with squared point distance.

    Starts from the medoid and alternates between aligning every
    sequence to the barycenter and replacing each barycenter point with
    the mean of its aligned values. The recorded objective (total
    squared-distance DTW cost to the set) never increases; a single
    input is its own fixed point.
    """
    seqs = [_as_values(s) for s in sequences]
    if not seqs:
        raise UsageError("need at least one sequence")
    if any(s.ndim != 1 for s in seqs):
        raise UsageError("barycenter averaging expects scalar sequences")
    if iterations < 1:
        raise UsageError("iterations must be at least 1")

    totals = [
        sum(dtw_cost(seqs[i], seqs[j], "sqeuclidean") for j in range(len(seqs)))
        for i in range(len(seqs))
    ]
    barycenter = seqs[int(np.argmin(totals))].copy()

    costs = [_dba_objective(barycenter, seqs)]
    for _ in range(iterations):
        sums = np.zeros_like(barycenter)
        counts = np.zeros(len(barycenter))
        for seq in seqs:
            result = dtw_distance(barycenter, seq, "sqeuclidean")
            for i, j in result.path:
                sums[i] += seq[j]
                counts[i] += 1
        barycenter = sums / counts
        costs.append(_dba_objective(barycenter, seqs))
    return DbaResult(barycenter=barycenter, costs=tuple(costs))


@dataclass(frozen=True)
class GestureTemplate:
    """Reference gesture shape for sliding-window matching.

    ``values`` keep the original signal units; detection rescales both
    window and template by the template's own mean and standard
    deviation, then compares ``dtw_threshold`` against the resulting
    per-template-sample DTW distance.
    """

    values: np.ndarray
    sample_rate_hz: float
    dtw_threshold: float = 0.8

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or len(vals) < 2:
            raise UsageError("template needs at least two scalar values")
        if not np.all(np.isfinite(vals)):
            raise UsageError("template values must be finite")
        if float(vals.std()) == 0.0:
            raise UsageError("template values must not be constant")
        if not self.sample_rate_hz > 0:
            raise UsageError("template sample rate must be positive")
        if not self.dtw_threshold > 0:
            raise UsageError("dtw threshold must be positive")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def duration_ns(self) -> int:
        return round(len(self.values) / self.sample_rate_hz * NS_PER_SEC)

    def to_json(self, fp: IO[str] | None = None) -> str:
        payload = json.dumps(
            {
                "version": 1,
                "kind": "gesture_template",
                "sample_rate_hz": self.sample_rate_hz,
                "dtw_threshold": self.dtw_threshold,
                "values": self.values.tolist(),
            },
            sort_keys=True,
        )
        if fp is not None:
            fp.write(payload)
        return payload

    @classmethod
    def from_json(cls, text: str) -> "GestureTemplate":
        data = json.loads(text)
        if data.get("version") != 1 or data.get("kind") != "gesture_template":
            raise UsageError("unrecognized template serialization")
        return cls(
            values=np.asarray(data["values"], dtype=float),
            sample_rate_hz=float(data["sample_rate_hz"]),
            dtw_threshold=float(data["dtw_threshold"]),
        )


def dba_template(
    sequences: Sequence,
    iterations: int = 10,
    *,
    sample_rate_hz: float | None = None,
    dtw_threshold: float = 0.8,
) -> GestureTemplate:
    """Average aligned gesture instances into a matching template.

    The sample rate is inferred from the first TimeSeries input unless
    given explicitly.
    """
    if sample_rate_hz is None:
        first = sequences[0] if len(sequences) else None
        if not isinstance(first, TimeSeries):
            raise UsageError("sample_rate_hz required when sequences are bare arrays")
        sample_rate_hz = first.sample_rate_hz()
    result = dba(sequences, iterations)
    return GestureTemplate(result.barycenter, sample_rate_hz, dtw_threshold)
