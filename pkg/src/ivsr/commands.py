"""Expert approval loop: recommendations, command tickets, override ledger
and 3D drone route planning over a voxel grid.
"""

from __future__ import annotations

import heapq
import itertools
import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import (IllegalTransition, MissingModifiedPlan, NoMatches,
                     RouteBlocked, UnknownScenario)
from .geometry import Scene, Vec3, tessellate
from .library import InterventionPlan, Library, MatchResult
from .spread import SpreadState

REJECTION_PENALTY = 0.8       # multiplicative, per rejection
PENALTY_FLOOR = 0.2
DEFAULT_SCORE_WEIGHTS = (0.5, 0.25, 0.25)   # effectiveness, cost, speed
DEFAULT_VOXEL = 0.5
DEFAULT_CLEARANCE = 1.0


class TicketState(str, Enum):
    Proposed = "Proposed"
    PendingApproval = "PendingApproval"
    Approved = "Approved"
    Rejected = "Rejected"
    Dispatched = "Dispatched"
    Executed = "Executed"
    Failed = "Failed"


class Verdict(str, Enum):
    approve = "approve"
    reject = "reject"
    modify = "modify"


@dataclass(frozen=True)
class Decision:
    approver_id: str
    verdict: Verdict
    timestamp: datetime
    modified_plan: Optional[InterventionPlan] = None


@dataclass
class RoutePlan:
    waypoints: list[Vec3]
    total_length: float
    clearance: float


@dataclass
class CommandTicket:
    id: str
    plan: InterventionPlan
    scenario_id: str
    state: TicketState = TicketState.PendingApproval
    decisions: list[Decision] = field(default_factory=list)
    routes: list[RoutePlan] = field(default_factory=list)
    outcome: Optional[dict] = None
    dispatched_at: Optional[datetime] = None


class OverrideLedger:
    """Rejections and modifications, with a derived score penalty."""

    def __init__(self):
        self.entries: list[dict] = []

    def record(self, scenario_id: str, plan_id: str, verdict: Verdict,
               timestamp: Optional[datetime] = None) -> None:
        self.entries.append({
            "scenario_id": scenario_id,
            "plan_id": plan_id,
            "verdict": verdict.value,
            "timestamp": (timestamp or datetime.now(timezone.utc)).isoformat(),
        })

    def penalty(self, scenario_id: str, plan_id: str) -> float:
        rejections = sum(1 for e in self.entries
                         if e["scenario_id"] == scenario_id
                         and e["plan_id"] == plan_id
                         and e["verdict"] == Verdict.reject.value)
        return max(PENALTY_FLOOR, REJECTION_PENALTY ** rejections)


def recommend(matches: Sequence[MatchResult], library: Library,
              ledger: Optional[OverrideLedger] = None,
              weights: tuple[float, float, float] = DEFAULT_SCORE_WEIGHTS
              ) -> list[tuple[InterventionPlan, float]]:
    """Plans of the best-matching scenario, scored and sorted descending.

    score = (w_e*effectiveness + w_c*cost_efficiency + w_s*response_speed)
            * ledger penalty.  Ties break by plan id.
    """
    if not matches:
        raise NoMatches("no scenario matches to recommend from")
    w_e, w_c, w_s = weights
    top = matches[0]
    scenario = library.get(top.scenario_id)
    scored = []
    for plan in scenario.plans:
        score = w_e * plan.effectiveness + w_c * plan.cost_efficiency \
            + w_s * plan.response_speed
        if ledger is not None:
            score *= ledger.penalty(scenario.id, plan.id)
        scored.append((plan, score))
    scored.sort(key=lambda ps: (-ps[1], ps[0].id))
    return scored


class CommandCenter:
    """Single logical writer for tickets; transitions append to an event log."""

    def __init__(self, library: Library, ledger: Optional[OverrideLedger] = None,
                 event_log_path: Optional[str] = None, quorum: int = 1):
        self.library = library
        self.ledger = ledger if ledger is not None else OverrideLedger()
        self.tickets: dict[str, CommandTicket] = {}
        self.quorum = quorum
        self._counter = itertools.count(1)
        self._event_log_path = event_log_path
        self._listeners = []

    def on_transition(self, fn) -> None:
        self._listeners.append(fn)

    def _emit(self, ticket: CommandTicket, event: str, **payload) -> None:
        record = {"ticket_id": ticket.id, "event": event,
                  "state": ticket.state.value,
                  "timestamp": datetime.now(timezone.utc).isoformat(), **payload}
        if self._event_log_path:
            with open(self._event_log_path, "a", encoding="utf-8") as f:
                f.write(json.dumps(record) + "\n")
        for fn in self._listeners:
            fn(ticket, record)

    def get(self, ticket_id: str) -> CommandTicket:
        return self.tickets[ticket_id]

    def submit(self, plan: InterventionPlan, scenario_id: str) -> CommandTicket:
        if scenario_id not in self.library:
            raise UnknownScenario(scenario_id)
        ticket = CommandTicket(id=f"ticket-{next(self._counter)}",
                               plan=plan, scenario_id=scenario_id,
                               state=TicketState.PendingApproval)
        self.tickets[ticket.id] = ticket
        self._emit(ticket, "submitted", plan_id=plan.id, scenario_id=scenario_id)
        return ticket

    def decide(self, ticket: CommandTicket, approver_id: str, verdict: Verdict,
               modified_plan: Optional[InterventionPlan] = None) -> CommandTicket:
        if ticket.state != TicketState.PendingApproval:
            raise IllegalTransition(
                f"cannot decide a ticket in state {ticket.state.value}")
        now = datetime.now(timezone.utc)
        if verdict == Verdict.modify and modified_plan is None:
            raise MissingModifiedPlan("modify verdict requires a modified plan")
        decision = Decision(approver_id=approver_id, verdict=verdict,
                            timestamp=now, modified_plan=modified_plan)
        ticket.decisions.append(decision)
        if verdict == Verdict.reject:
            ticket.state = TicketState.Rejected
            self.ledger.record(ticket.scenario_id, ticket.plan.id, verdict, now)
        else:
            if verdict == Verdict.modify:
                self.ledger.record(ticket.scenario_id, ticket.plan.id, verdict, now)
                ticket.plan = modified_plan
            approvals = sum(1 for d in ticket.decisions
                            if d.verdict in (Verdict.approve, Verdict.modify))
            if approvals >= self.quorum:
                ticket.state = TicketState.Approved
        self._emit(ticket, "decision", verdict=verdict.value,
                   approver_id=approver_id)
        return ticket

    def dispatch(self, ticket: CommandTicket, scene: Optional[Scene] = None,
                 spread_snapshot: Optional[SpreadState] = None,
                 drone_start: Optional[Vec3] = None,
                 clearance: float = DEFAULT_CLEARANCE,
                 voxel: float = DEFAULT_VOXEL) -> CommandTicket:
        if ticket.state != TicketState.Approved:
            raise IllegalTransition(
                f"cannot dispatch a ticket in state {ticket.state.value}")
        routes = []
        if scene is not None:
            for action in ticket.plan.actions:
                if action.kind == "deploy_drone" and isinstance(action.target, Vec3):
                    start = drone_start if drone_start is not None else _default_start(scene)
                    routes.append(plan_drone_route(
                        scene, spread_snapshot, start, action.target,
                        clearance=clearance, voxel=voxel))
        ticket.routes = routes
        ticket.state = TicketState.Dispatched
        ticket.dispatched_at = datetime.now(timezone.utc)
        self._emit(ticket, "dispatched", routes=len(routes))
        return ticket

    def report_outcome(self, ticket: CommandTicket, success: bool,
                       note: str = "") -> CommandTicket:
        if ticket.state != TicketState.Dispatched:
            raise IllegalTransition(
                f"cannot report outcome for state {ticket.state.value}")
        ticket.state = TicketState.Executed if success else TicketState.Failed
        ticket.outcome = {"success": success, "note": note}
        self._emit(ticket, "outcome", success=success, note=note)
        return ticket


def _default_start(scene: Scene) -> Vec3:
    lo, hi = scene.bounds
    return Vec3((lo.x + hi.x) / 2, (lo.y + hi.y) / 2, (lo.z + hi.z) / 2)


# ---------------------------------------------------------------------------
# voxel-grid A* routing

_NEIGHBORS = [(dx, dy, dz)
              for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)
              if (dx, dy, dz) != (0, 0, 0)]
_STEP_COST = {sum(abs(c) for c in n): math.sqrt(sum(abs(c) for c in n))
              for n in _NEIGHBORS}


class VoxelGrid:
    """Occupancy grid over the scene bounds; voxels blocked by geometry
    and by flame spheres inflated by the requested clearance."""

    def __init__(self, scene: Scene, spread_snapshot: Optional[SpreadState],
                 clearance: float, voxel: float):
        self.voxel = voxel
        lo, hi = scene.bounds
        self.origin = lo.as_array()
        extent = hi.as_array() - self.origin
        self.dims = np.maximum(1, np.ceil(extent / voxel - 1e-9).astype(int))
        self.blocked = np.zeros(self.dims, dtype=bool)
        # geometry: mark voxels containing sub-voxel surface samples
        if scene.collidable_surfaces():
            tess = tessellate(scene, voxel / 2.0)
            for p in tess:
                self._block_point(p.centroid.as_array())
        if spread_snapshot is not None:
            centers = [(s.center.as_array(), s.radius) for s in spread_snapshot.sources]
            if centers:
                idx = np.indices(self.dims).reshape(3, -1).T
                pts = self.origin + (idx + 0.5) * voxel
                for c, r in centers:
                    d = np.linalg.norm(pts - c, axis=1)
                    hits = idx[d <= r + clearance]
                    self.blocked[hits[:, 0], hits[:, 1], hits[:, 2]] = True

    def _block_point(self, p: np.ndarray) -> None:
        i = np.floor((p - self.origin) / self.voxel).astype(int)
        i = np.clip(i, 0, self.dims - 1)
        self.blocked[tuple(i)] = True

    def voxel_of(self, p: Vec3) -> tuple[int, int, int]:
        i = np.floor((p.as_array() - self.origin) / self.voxel).astype(int)
        if (i < 0).any() or (i >= self.dims).any():
            raise RouteBlocked(f"point {p} outside the routing grid")
        return tuple(int(x) for x in i)

    def center(self, v: tuple[int, int, int]) -> Vec3:
        return Vec3.from_array(self.origin + (np.array(v) + 0.5) * self.voxel)


def astar_grid(blocked: np.ndarray, start: tuple, goal: tuple
               ) -> tuple[list[tuple], float]:
    """A* with 26-connectivity and Euclidean costs; returns (path, cost)
    in voxel units.  Ties break lexicographically on voxel index."""
    dims = blocked.shape
    if blocked[start] or blocked[goal]:
        raise RouteBlocked("start or goal voxel is blocked")

    def h(v):
        return math.dist(v, goal)

    open_heap = [(h(start), start)]
    g = {start: 0.0}
    came: dict[tuple, tuple] = {}
    closed = set()
    while open_heap:
        f, current = heapq.heappop(open_heap)
        if current in closed:
            continue
        if current == goal:
            path = [current]
            while current in came:
                current = came[current]
                path.append(current)
            return path[::-1], g[goal]
        closed.add(current)
        for dx, dy, dz in _NEIGHBORS:
            nb = (current[0] + dx, current[1] + dy, current[2] + dz)
            if not (0 <= nb[0] < dims[0] and 0 <= nb[1] < dims[1]
                    and 0 <= nb[2] < dims[2]):
                continue
            if blocked[nb]:
                continue
            tentative = g[current] + _STEP_COST[abs(dx) + abs(dy) + abs(dz)]
            if tentative < g.get(nb, math.inf) - 1e-12:
                g[nb] = tentative
                came[nb] = current
                heapq.heappush(open_heap, (tentative + h(nb), nb))
    raise RouteBlocked("no path between start and goal")


def plan_drone_route(scene: Scene, spread_snapshot: Optional[SpreadState],
                     start: Vec3, goal: Vec3,
                     clearance: float = DEFAULT_CLEARANCE,
                     voxel: float = DEFAULT_VOXEL) -> RoutePlan:
    grid = VoxelGrid(scene, spread_snapshot, clearance, voxel)
    path, cost = astar_grid(grid.blocked, grid.voxel_of(start), grid.voxel_of(goal))
    return RoutePlan(waypoints=[grid.center(v) for v in path],
                     total_length=cost * voxel, clearance=clearance)
