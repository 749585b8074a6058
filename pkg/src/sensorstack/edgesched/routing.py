"""Task-to-node placement and the utilization monitor."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..errors import TopologyError
from .types import NodeState, Task


@dataclass(frozen=True)
class RouteDecision:
    node_id: str
    redirected: bool


def _least_utilized(nodes: Sequence[NodeState], kind: str) -> NodeState | None:
    candidates = [n for n in nodes if n.kind == kind]
    if not candidates:
        return None
    return min(candidates, key=lambda n: (n.utilization, n.node_id))


def classify_and_route(task: Task, nodes: Sequence[NodeState]) -> RouteDecision:
    """Pick a node by compute class, spilling over under load.

    Light tasks prefer the least-utilized medium node; if even that one
    sits above its overload threshold the task is redirected to a
    computation unit. Heavy tasks always go to the least-utilized
    computation unit.
    """
    unit = _least_utilized(nodes, "computation_unit")
    if task.compute_class == "heavy":
        if unit is None:
            raise TopologyError("no computation unit available for a heavy task")
        return RouteDecision(unit.node_id, redirected=False)
    medium = _least_utilized(nodes, "medium")
    if medium is None:
        raise TopologyError("no medium node available for a light task")
    if medium.utilization > medium.spec.overload_threshold:
        if unit is None:
            raise TopologyError("medium nodes overloaded and no computation unit to redirect to")
        return RouteDecision(unit.node_id, redirected=True)
    return RouteDecision(medium.node_id, redirected=False)


@dataclass(frozen=True)
class NodeSnapshot:
    node_id: str
    kind: str
    utilization: float
    busy_slots: int
    in_flight: int
    queue_length: int


@dataclass(frozen=True)
class MonitorSnapshot:
    taken_at_ns: int
    nodes: tuple[NodeSnapshot, ...]

    @property
    def total_in_flight(self) -> int:
        return sum(n.in_flight for n in self.nodes)


def monitor_snapshot(nodes: Sequence[NodeState], now_ns: int) -> MonitorSnapshot:
    """Point-in-time utilization and queue depth across the topology."""
    return MonitorSnapshot(
        taken_at_ns=now_ns,
        nodes=tuple(
            NodeSnapshot(
                node_id=n.node_id,
                kind=n.kind,
                utilization=n.utilization,
                busy_slots=n.busy_slots,
                in_flight=n.in_flight,
                queue_length=n.queue_length,
            )
            for n in sorted(nodes, key=lambda n: n.node_id)
        ),
    )
