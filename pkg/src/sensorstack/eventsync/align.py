"""Coarse event matching, entropy-onset refinement, and stream shifting."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..errors import UsageError
from ..timebase import SampleStream
from .detect import EventDetection
from .features import sliding_entropy
from .filters import butterworth_lowpass
from .series import TimeSeries

COARSE_TOLERANCE_NS = 500_000_000


@dataclass(frozen=True)
class MatchedPair:
    """A cross-stream event correspondence from coarse alignment."""

    a: EventDetection
    b: EventDetection

    @property
    def delta_ns(self) -> int:
        return self.a.start - self.b.start


def coarse_align(
    events_a: Sequence[EventDetection],
    events_b: Sequence[EventDetection],
    tolerance_ns: int = COARSE_TOLERANCE_NS,
) -> tuple[MatchedPair, ...]:
    """Greedy one-to-one matching of event starts within a tolerance.

    Candidate pairs are taken closest first; each event participates in
    at most one pair. Pairs are returned ordered by the first stream's
    event start.
    """
    if tolerance_ns < 0:
        raise UsageError("tolerance must be non-negative")
    candidates = []
    for i, ea in enumerate(events_a):
        for j, eb in enumerate(events_b):
            gap = abs(ea.start - eb.start)
            if gap <= tolerance_ns:
                candidates.append((gap, i, j))
    candidates.sort()
    used_a: set[int] = set()
    used_b: set[int] = set()
    pairs: list[MatchedPair] = []
    for _, i, j in candidates:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        pairs.append(MatchedPair(events_a[i], events_b[j]))
    pairs.sort(key=lambda p: p.a.start)
    return tuple(pairs)


@dataclass(frozen=True)
class FineTuneConfig:
    """Knobs for the filter + sliding-entropy onset search.

    The search window is coarse start +/- ``search_half_width_ns``. The
    onset threshold is the mean plus ``k_sigma`` standard deviations of
    the entropy over the leading ``baseline_fraction`` of the window.
    """

    search_half_width_ns: int = 1_000_000_000
    filter_order: int = 4
    cutoff_hz: float = 5.0
    entropy_window_ns: int = 300_000_000
    entropy_stride_ns: int | None = None
    baseline_fraction: float = 0.25
    k_sigma: float = 2.0


@dataclass(frozen=True)
class RefinedStart:
    stream_id: str
    refined_ns: int
    fallback: bool


def fine_tune_event(
    series_per_stream: Mapping[str, TimeSeries],
    coarse_starts: Mapping[str, int],
    config: FineTuneConfig = FineTuneConfig(),
) -> dict[str, RefinedStart]:
    """Refine a coarsely matched event start in every stream.

    Per stream: low-pass the activity signal around the coarse start,
    slide an entropy window over it, locate the entropy peak, then walk
    back to where the entropy first rose above the baseline threshold.
    That rise marks the movement onset. When no sample exceeds the
    threshold the coarse start is returned with the fallback flag set.
    """
    refined: dict[str, RefinedStart] = {}
    for stream_id, coarse in coarse_starts.items():
        series = series_per_stream.get(stream_id)
        if series is None:
            raise UsageError(f"no series provided for stream {stream_id}")
        lo = coarse - config.search_half_width_ns
        hi = coarse + config.search_half_width_ns
        window = series.magnitude().slice_time(lo, hi)
        if len(window) < 8:
            raise UsageError(f"series for {stream_id} does not cover the search window")

        rate = window.sample_rate_hz()
        cutoff = min(config.cutoff_hz, 0.45 * rate)
        smooth = butterworth_lowpass(window, config.filter_order, cutoff)
        stride = config.entropy_stride_ns or smooth.median_period_ns()
        entropy = sliding_entropy(smooth, config.entropy_window_ns, stride)

        values = entropy.values
        baseline_n = max(2, int(len(values) * config.baseline_fraction))
        baseline = values[:baseline_n]
        threshold = float(baseline.mean() + config.k_sigma * baseline.std())

        peak = int(np.argmax(values))
        if values[peak] <= threshold:
            refined[stream_id] = RefinedStart(stream_id, coarse, fallback=True)
            continue
        rise = peak
        while rise > 0 and values[rise - 1] > threshold:
            rise -= 1

        # The rise window brackets the onset to one entropy window; pin
        # the instant inside it to where the raw signal leaves its quiet
        # band. The zero-phase filter smears edges backward in time, so
        # the filtered signal only localizes; the unfiltered one decides.
        window_start = int(entropy.timestamps[rise]) - config.entropy_window_ns // 2
        onset = _first_departure(window, window_start, config)
        onset = min(max(onset, lo), hi)
        refined[stream_id] = RefinedStart(stream_id, onset, fallback=False)
    return refined


def _first_departure(raw: TimeSeries, window_start: int, config: FineTuneConfig) -> int:
    """First sustained departure from the quiet band at or after window_start.

    The band is centered on the mean of the samples preceding
    window_start (or the leading fraction when too few precede it) and
    is the wider of k_sigma baseline deviations and 5% of the peak
    excursion, so it works for noisy and noiseless signals alike.
    Departure is judged on the absolute deviation over two consecutive
    samples, which ignores single-sample noise spikes.
    """
    ts = raw.timestamps
    sig = raw.values
    split = int(np.searchsorted(ts, window_start, side="left"))
    baseline = sig[:split]
    if len(baseline) < 4:
        baseline = sig[: max(2, int(len(sig) * config.baseline_fraction))]
    center = float(baseline.mean())
    deviation = np.abs(sig[split:] - center)
    if len(deviation) < 2:
        return window_start
    peak = float(deviation.max())
    if peak == 0.0:
        return window_start
    band = max(config.k_sigma * float(baseline.std()), 0.05 * peak)
    departed = deviation > band
    hits = np.nonzero(departed[:-1] & departed[1:])[0]
    if len(hits) == 0:
        return window_start
    return int(ts[split + int(hits[0])])


def apply_sync(
    streams: Mapping[str, SampleStream],
    refined_starts: Mapping[str, int | Sequence[int]],
    reference_stream_id: str,
) -> dict[str, SampleStream]:
    """Shift corrected timestamps so refined starts line up.

    Each non-reference stream moves by (reference start - its start).
    A stream may supply several refined starts, paired by position with
    the reference's; the shift is then the median of the pairwise
    differences, which tolerates the odd bad refinement.
    """
    if reference_stream_id not in streams:
        raise UsageError("reference stream missing from streams")
    if reference_stream_id not in refined_starts:
        raise UsageError("reference stream missing from refined starts")

    def as_list(v) -> list[int]:
        if isinstance(v, (int, np.integer)):
            return [int(v)]
        return [int(x) for x in v]

    ref = as_list(refined_starts[reference_stream_id])
    out: dict[str, SampleStream] = {reference_stream_id: streams[reference_stream_id]}
    for stream_id, stream in streams.items():
        if stream_id == reference_stream_id:
            continue
        if stream_id not in refined_starts:
            raise UsageError(f"no refined start for stream {stream_id}")
        own = as_list(refined_starts[stream_id])
        if len(own) != len(ref):
            raise UsageError("refined start lists must pair up with the reference")
        deltas = [r - o for r, o in zip(ref, own)]
        shift = int(np.median(deltas))
        out[stream_id] = stream.shifted(shift)
    return out
