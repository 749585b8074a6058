"""Merging of detections that several cameras report for one object."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import UsageError
from .types import Detection, FusedDetection


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def deduplicate(detections: Sequence[Detection], threshold: float) -> tuple[FusedDetection, ...]:
    """Group detections closer than ``threshold`` and merge each group.

    Two detections join the same group only when they share a category
    and come from different cameras; a single camera never produces
    duplicates of one object, so near-misses within a camera stay
    separate. Grouping is transitive. Each merged center is the
    confidence-weighted mean of the group and the merged confidence is
    the group maximum.
    """
    if threshold < 0:
        raise UsageError("threshold must be non-negative")
    dets = list(detections)
    if not dets:
        return ()
    if len({d.frame_ts for d in dets}) > 1:
        raise UsageError("deduplicate works on one frame at a time")
    uf = _UnionFind(len(dets))
    for i in range(len(dets)):
        for j in range(i + 1, len(dets)):
            a, b = dets[i], dets[j]
            if a.category != b.category or a.camera_id == b.camera_id:
                continue
            dist = float(np.hypot(a.center[0] - b.center[0], a.center[1] - b.center[1]))
            if dist < threshold:
                uf.union(i, j)

    groups: dict[int, list[int]] = {}
    for i in range(len(dets)):
        groups.setdefault(uf.find(i), []).append(i)

    fused = []
    for members in groups.values():
        group = [dets[i] for i in members]
        weights = np.array([d.confidence for d in group])
        if weights.sum() <= 0:
            weights = np.ones(len(group))
        weights = weights / weights.sum()
        centers = np.array([d.center for d in group])
        merged = weights @ centers
        fused.append(
            FusedDetection(
                category=group[0].category,
                center=(float(merged[0]), float(merged[1])),
                confidence=max(d.confidence for d in group),
                cameras=tuple(sorted({d.camera_id for d in group})),
                threshold=float(threshold),
                merged_count=len(group),
            )
        )
    fused.sort(key=lambda f: (f.center[0], f.center[1], f.category))
    return tuple(fused)
