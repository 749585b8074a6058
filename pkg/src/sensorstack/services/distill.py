"""Privacy-utility trade-offs for captured data.

Three composable mechanisms: identifier hashing with location rounding,
per-window aggregation that strips identity entirely, and a temporal
delay that withholds fresh samples.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ConfigError
from .types import CaptureRecord


@dataclass(frozen=True)
class DistillPolicy:
    """What to strip, coarsen, or withhold.

    ``location_decimals`` sets the rounding grid for anonymized
    locations (3 decimals is roughly a 110 m cell). ``aggregate`` with
    a window replaces samples by per-window statistics with no device
    identity at all. ``delay_ns`` hides samples younger than the delay.
    """

    anonymize: bool = False
    location_decimals: int = 3
    aggregate_window_ns: int | None = None
    delay_ns: int = 0

    def __post_init__(self):
        if self.location_decimals < 0:
            raise ConfigError("location_decimals must be non-negative")
        if self.aggregate_window_ns is not None and self.aggregate_window_ns <= 0:
            raise ConfigError("aggregate_window_ns must be positive")
        if self.delay_ns < 0:
            raise ConfigError("delay_ns must be non-negative")


def hash_identifier(identifier: str) -> str:
    return hashlib.sha256(identifier.encode()).hexdigest()


def distill(
    records: Sequence[CaptureRecord],
    policy: DistillPolicy,
    now_ns: int | None = None,
) -> tuple[dict, ...]:
    """Apply a distillation policy; rows come back time-sorted."""
    moment = time.time_ns() if now_ns is None else now_ns
    visible = sorted(
        (r for r in records if r.corrected_ts + policy.delay_ns <= moment),
        key=lambda r: (r.corrected_ts, r.capture_id),
    )

    if policy.aggregate_window_ns:
        window = policy.aggregate_window_ns
        rows: list[dict] = []
        for start in sorted({(r.corrected_ts // window) * window for r in visible}):
            members = [r for r in visible if start <= r.corrected_ts < start + window]
            values = np.array([v for r in members for v in r.payload], dtype=float)
            if values.size == 0:
                values = np.array([0.0])
            rows.append({
                "window_start_ns": start,
                "window_end_ns": start + window,
                "count": len(members),
                "value_mean": float(values.mean()),
                "value_min": float(values.min()),
                "value_max": float(values.max()),
            })
        return tuple(rows)

    out = []
    for r in visible:
        if policy.anonymize:
            device = hash_identifier(r.device_id)
            location = [
                round(r.location[0], policy.location_decimals),
                round(r.location[1], policy.location_decimals),
            ]
        else:
            device = r.device_id
            location = list(r.location)
        out.append({
            "device_id": device,
            "t_ns": r.corrected_ts,
            "location": location,
            "payload": list(r.payload),
        })
    return tuple(out)
