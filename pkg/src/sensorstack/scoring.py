"""Precision/recall bookkeeping and one-to-one nearest matching.

Both the event-alignment metrics and the fused-detection metrics need the
same greedy matcher: candidate pairs sorted by distance, each side used at
most once, pairs beyond the cutoff discarded.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import UsageError


@dataclass(frozen=True)
class DetectionScores:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int


def prf_scores(tp: int, fp: int, fn: int) -> DetectionScores:
    """Build a score record from raw counts.

    Vacuous cases follow the usual convention: no predictions means no
    false alarms (precision 1), no truth means nothing was missed
    (recall 1).
    """
    precision = 1.0 if tp + fp == 0 else tp / (tp + fp)
    recall = 1.0 if tp + fn == 0 else tp / (tp + fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return DetectionScores(precision, recall, f1, tp, fp, fn)


def greedy_match(
    predicted: Sequence,
    truth: Sequence,
    max_distance: float,
    distance: Callable,
) -> list[tuple[int, int]]:
    """Match predictions to truth one-to-one, nearest pairs first.

    Returns (predicted_index, truth_index) pairs with
    distance <= max_distance. Ties break on the lower index pair so the
    result is deterministic.
    """
    if max_distance < 0:
        raise UsageError("max_distance must be non-negative")
    candidates = []
    for i, p in enumerate(predicted):
        for j, t in enumerate(truth):
            d = distance(p, t)
            if d <= max_distance:
                candidates.append((d, i, j))
    candidates.sort()
    used_p: set[int] = set()
    used_t: set[int] = set()
    pairs: list[tuple[int, int]] = []
    for _, i, j in candidates:
        if i in used_p or j in used_t:
            continue
        used_p.add(i)
        used_t.add(j)
        pairs.append((i, j))
    pairs.sort()
    return pairs
