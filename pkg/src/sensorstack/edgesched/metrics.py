"""Rebuild SimMetrics from an event log alone.

This is a second, independent accounting path: the simulator keeps
live counters while it runs, and this module recomputes the same
numbers by replaying the log. Tests hold the two equal. Wall-clock
scheduling overhead is the one quantity a deterministic log cannot
carry, so it is reported as zero here.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import IntegrityError
from ..timebase import NS_PER_SEC
from .types import ClassStats, SimMetrics


def compute_metrics(records: Sequence[dict]) -> SimMetrics:
    """Replay an event log into aggregate metrics.

    The log must be complete: it ends with an "end" record, every
    dispatch refers to a logged arrival, and every completion refers to
    a logged dispatch. Anything else means the log was truncated or
    reordered and raises an integrity error.
    """
    records = list(records)
    if not records or records[-1]["event"] != "end":
        raise IntegrityError("event log is truncated: no end record")
    duration_ns = records[-1]["t_ns"]

    p_initial: dict[str, float] = {}
    entry: dict[str, int] = {}
    queued: set[str] = set()
    dispatched: set[str] = set()
    completions = 0
    dispatch_count = 0
    offload_count = 0
    inversion_count = 0
    waits_by_class: dict[float, list[int]] = {}
    latencies_by_class: dict[float, list[int]] = {}

    index = 0
    while index < len(records):
        record = records[index]
        event = record["event"]
        if event == "arrival":
            task_id = record["task_id"]
            p_initial[task_id] = record["p_initial"]
            entry[task_id] = record["t_ns"]
            queued.add(task_id)
            index += 1
        elif event == "dispatch":
            group = [record]
            while (
                index + len(group) < len(records)
                and records[index + len(group)]["event"] == "dispatch"
                and records[index + len(group)]["t_ns"] == record["t_ns"]
            ):
                group.append(records[index + len(group)])
            for item in group:
                task_id = item["task_id"]
                if task_id not in queued:
                    raise IntegrityError(f"dispatch of unknown or finished task {task_id}")
                queued.discard(task_id)
                dispatched.add(task_id)
            remaining_best = min((p_initial[t] for t in queued), default=np.inf)
            for item in group:
                dispatch_count += 1
                if item["node_kind"] == "computation_unit":
                    offload_count += 1
                if remaining_best < p_initial[item["task_id"]]:
                    inversion_count += 1
                waits_by_class.setdefault(p_initial[item["task_id"]], []).append(
                    item["t_ns"] - entry[item["task_id"]]
                )
            index += len(group)
        elif event == "complete":
            task_id = record["task_id"]
            if task_id not in dispatched:
                raise IntegrityError(f"completion of undispatched task {task_id}")
            dispatched.discard(task_id)
            completions += 1
            latencies_by_class.setdefault(p_initial[task_id], []).append(
                record["t_ns"] - entry[task_id]
            )
            index += 1
        elif event == "end":
            index += 1
        else:
            raise IntegrityError(f"unknown event type {event!r}")

    duration_s = duration_ns / NS_PER_SEC
    class_stats = {}
    for p in sorted(set(waits_by_class) | set(latencies_by_class)):
        latencies = latencies_by_class.get(p, [])
        waits = waits_by_class.get(p, [])
        class_stats[p] = ClassStats(
            count=len(latencies),
            mean_latency_s=float(np.mean(latencies) / NS_PER_SEC) if latencies else 0.0,
            wait_variance_s2=float(np.var(np.array(waits) / NS_PER_SEC)) if waits else 0.0,
        )
    return SimMetrics(
        duration_s=duration_s,
        completed=completions,
        throughput_per_s=completions / duration_s,
        class_stats=class_stats,
        inversion_rate=inversion_count / dispatch_count if dispatch_count else 0.0,
        offload_fraction=offload_count / dispatch_count if dispatch_count else 0.0,
        overhead_ms_mean=0.0,
    )


def conservation_check(records: Sequence[dict]) -> dict[str, int]:
    """Count where every submitted task ended up.

    Returns arrivals, completions, in-flight, and still-queued counts;
    the caller can assert arrived == completed + in_flight + queued.
    """
    arrived: set[str] = set()
    dispatched: set[str] = set()
    completed: set[str] = set()
    for record in records:
        if record["event"] == "arrival":
            arrived.add(record["task_id"])
        elif record["event"] == "dispatch":
            dispatched.add(record["task_id"])
        elif record["event"] == "complete":
            completed.add(record["task_id"])
    if not dispatched <= arrived or not completed <= dispatched:
        raise IntegrityError("log references tasks outside their lifecycle")
    return {
        "arrived": len(arrived),
        "completed": len(completed),
        "in_flight": len(dispatched - completed),
        "queued": len(arrived - dispatched),
    }
