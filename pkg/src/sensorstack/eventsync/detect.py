"""Sliding-window gesture spotting on camera-derived height series."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from ..errors import UsageError
from .dtw import GestureTemplate, dtw_distance
from .series import TimeSeries

STAGES = ("coarse", "fine")


@dataclass(frozen=True)
class EventDetection:
    """One detected event occurrence within a stream.

    ``score`` is the normalized DTW distance of the best window (lower
    is better); ``stage`` records whether the bounds come from coarse
    detection or fine refinement.
    """

    stream_id: str
    start: int
    end: int
    score: float
    stage: str = "coarse"

    def __post_init__(self):
        if self.start > self.end:
            raise UsageError("event start must not exceed its end")
        if not np.isfinite(self.score):
            raise UsageError("event score must be finite")
        if self.stage not in STAGES:
            raise UsageError(f"unknown stage {self.stage!r}")


def _scored_match(values: np.ndarray, template: GestureTemplate):
    """Score a window against a template and locate the match inside it.

    Both sides are expressed on the template's own amplitude scale (its
    mean and standard deviation), so the score is invariant to a joint
    rescaling of signal and template but still distinguishes a
    gesture-sized excursion from the quiet baseline. Dividing by the
    template length makes the value independent of window size, which
    lets one threshold work across window configurations. A window
    sitting at the quiet baseline scores roughly mean/std of the
    template; matching windows score far below that.

    The warp path also bounds the match: samples before the gesture
    all pair with the template's first point and samples after it with
    the last, so the gesture spans the last window index paired with
    template index 0 through the first index paired with the final
    template index.
    """
    mu = float(template.values.mean())
    sd = float(template.values.std())
    scaled = (np.asarray(values, dtype=float) - mu) / sd
    template_scaled = (template.values - mu) / sd
    result = dtw_distance(scaled, template_scaled, "abs")
    score = result.cost / len(template.values)
    last_j = len(template.values) - 1
    onset_idx = max(i for i, j in result.path if j == 0)
    end_idx = min(i for i, j in result.path if j == last_j)
    return score, onset_idx, end_idx


def normalized_dtw_score(window, template: GestureTemplate) -> float:
    """DTW distance from a window to a template, per template sample."""
    values = window.values if isinstance(window, TimeSeries) else window
    return _scored_match(values, template)[0]


def detect_gesture_video(
    z_series: TimeSeries,
    template: GestureTemplate,
    window_ns: int = 4_000_000_000,
    stride_ns: int = 250_000_000,
    stream_id: str = "",
) -> tuple[EventDetection, ...]:
    """Scan a height series for template-shaped gestures.

    Every window whose normalized DTW score falls below the template
    threshold becomes a candidate carrying the estimated gesture bounds
    from the warp path; overlapping candidates are reduced to the
    lowest-scoring one. Quiet and flat windows score near the
    template's baseline distance, well above any sensible threshold,
    so they produce no events.
    """
    if window_ns <= 0 or stride_ns <= 0:
        raise UsageError("window and stride must be positive")
    ts = z_series.timestamps
    period = z_series.median_period_ns()
    if int(ts[-1]) - int(ts[0]) + period < window_ns:
        raise UsageError("series is shorter than the detection window")

    hits: list[EventDetection] = []
    t = int(ts[0])
    last_start = int(ts[-1]) - window_ns + period
    while t <= last_start:
        lo = int(np.searchsorted(ts, t, side="left"))
        hi = int(np.searchsorted(ts, t + window_ns, side="left"))
        if hi - lo >= 4:
            score, onset_idx, end_idx = _scored_match(z_series.values[lo:hi], template)
            if score < template.dtw_threshold:
                hits.append(
                    EventDetection(
                        stream_id=stream_id,
                        start=int(ts[lo + onset_idx]),
                        end=int(ts[lo + end_idx]),
                        score=score,
                        stage="coarse",
                    )
                )
        t += stride_ns

    return suppress_overlaps(hits)


def suppress_overlaps(hits: Iterable[EventDetection]) -> tuple[EventDetection, ...]:
    """Keep the best-scoring detection out of each overlapping run."""
    kept: list[EventDetection] = []
    for hit in sorted(hits, key=lambda h: (h.score, h.start)):
        if all(hit.end <= k.start or hit.start >= k.end for k in kept):
            kept.append(hit)
    kept.sort(key=lambda h: h.start)
    return tuple(kept)


def write_events_ndjson(events: Iterable[EventDetection], fp: IO[str]) -> None:
    for event in events:
        fp.write(
            json.dumps(
                {
                    "stream_id": event.stream_id,
                    "start_ns": event.start,
                    "end_ns": event.end,
                    "score": event.score,
                    "stage": event.stage,
                },
                sort_keys=True,
            )
        )
        fp.write("\n")


def read_events_ndjson(fp: IO[str]) -> tuple[EventDetection, ...]:
    events = []
    for line in fp:
        line = line.strip()
        if not line:
            continue
        rec = json.loads(line)
        events.append(
            EventDetection(
                stream_id=rec["stream_id"],
                start=int(rec["start_ns"]),
                end=int(rec["end_ns"]),
                score=float(rec["score"]),
                stage=rec["stage"],
            )
        )
    return tuple(events)
