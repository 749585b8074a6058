"""One dispatcher pass: age, sort, route, and place queued tasks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .priority import effective_urgency
from .routing import classify_and_route
from .types import NodeState, SchedulerConfig, Task


@dataclass(frozen=True)
class Dispatch:
    task: Task
    node_id: str
    p_eff: float
    redirected: bool


def _default_accepts(node: NodeState, task: Task) -> bool:
    return node.busy_slots < node.capacity


def _default_occupy(node: NodeState, task: Task):
    node.busy_slots += 1
    node.in_flight += 1


def schedule_cycle(
    queue: list[Task],
    nodes: Sequence[NodeState],
    now_ns: int,
    config: SchedulerConfig,
    accepts: Callable[[NodeState, Task], bool] = _default_accepts,
    occupy: Callable[[NodeState, Task], None] = _default_occupy,
) -> list[Dispatch]:
    """Dispatch the most urgent queued tasks onto willing nodes.

    Every queued task is re-aged at ``now_ns``, the queue is walked in
    urgency order (ties broken per config), and each task is placed on
    the node the routing rule picks, provided that node still accepts
    work. Placed tasks leave the queue; occupancy is updated through
    ``occupy`` between placements so later routing sees the load added
    earlier in the same cycle. Callers with richer node semantics (such
    as batch buffers) substitute their own ``accepts``/``occupy``.
    """
    by_id = {n.node_id: n for n in nodes}

    def sort_key(task: Task):
        urgency = effective_urgency(task, now_ns, config)
        if config.tie_break == "fifo":
            return (urgency, task.entry_time_ns, task.task_id)
        return (urgency, task.task_id)

    dispatches: list[Dispatch] = []
    taken: set[str] = set()
    for task in sorted(queue, key=sort_key):
        decision = classify_and_route(task, nodes)
        node = by_id[decision.node_id]
        if not accepts(node, task):
            continue
        occupy(node, task)
        taken.add(task.task_id)
        dispatches.append(
            Dispatch(
                task=task,
                node_id=node.node_id,
                p_eff=effective_urgency(task, now_ns, config),
                redirected=decision.redirected,
            )
        )
    if taken:
        queue[:] = [t for t in queue if t.task_id not in taken]
    return dispatches
