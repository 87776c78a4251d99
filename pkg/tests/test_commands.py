import heapq
import itertools
import math

import numpy as np
import pytest

from conftest import floor_scene, object_box
from ivsr.commands import (CommandCenter, CommandTicket, OverrideLedger,
                           RoutePlan, TicketState, Verdict, astar_grid,
                           plan_drone_route, recommend)
from ivsr.errors import (IllegalTransition, MissingModifiedPlan, NoMatches,
                         RouteBlocked, UnknownScenario)
from ivsr.geometry import Scene, Vec3
from ivsr.library import (Action, FeatureVector, InterventionPlan, Library,
                          MatchResult, ScenarioRecord)


def make_plan(pid="plan-a", eff=0.8, cost=0.4, speed=0.6, action=None):
    action = action or Action("deploy_crew", "zone-1")
    return InterventionPlan(id=pid, actions=(action,), effectiveness=eff,
                            cost_efficiency=cost, response_speed=speed)


def make_library(plans=None):
    plans = plans or [make_plan()]
    return Library([ScenarioRecord(id="s-1", features=FeatureVector(),
                                   growth=[0.0, 1.0], plans=plans)])


def match_for(sid="s-1"):
    return MatchResult(scenario_id=sid, static_distance=0.0,
                       temporal_distance=0.0, combined=0.0)


def dijkstra_grid(blocked, start, goal):
    """Independent shortest-path oracle on the same 26-connected grid."""
    dims = blocked.shape
    moves = [(dx, dy, dz) for dx in (-1, 0, 1) for dy in (-1, 0, 1)
             for dz in (-1, 0, 1) if (dx, dy, dz) != (0, 0, 0)]
    dist = {start: 0.0}
    heap = [(0.0, start)]
    seen = set()
    while heap:
        d, cur = heapq.heappop(heap)
        if cur in seen:
            continue
        if cur == goal:
            return d
        seen.add(cur)
        for dx, dy, dz in moves:
            nb = (cur[0] + dx, cur[1] + dy, cur[2] + dz)
            if not (0 <= nb[0] < dims[0] and 0 <= nb[1] < dims[1]
                    and 0 <= nb[2] < dims[2]) or blocked[nb]:
                continue
            nd = d + math.sqrt(abs(dx) + abs(dy) + abs(dz))
            if nd < dist.get(nb, math.inf) - 1e-12:
                dist[nb] = nd
                heapq.heappush(heap, (nd, nb))
    return None


class TestLedger:
    def test_no_entries_no_penalty(self):
        assert OverrideLedger().penalty("s", "p") == 1.0

    def test_rejections_compound(self):
        ledger = OverrideLedger()
        ledger.record("s", "p", Verdict.reject)
        assert ledger.penalty("s", "p") == pytest.approx(0.8)
        ledger.record("s", "p", Verdict.reject)
        assert ledger.penalty("s", "p") == pytest.approx(0.64)

    def test_floor(self):
        ledger = OverrideLedger()
        for _ in range(20):
            ledger.record("s", "p", Verdict.reject)
        assert ledger.penalty("s", "p") == 0.2

    def test_modify_does_not_penalize(self):
        ledger = OverrideLedger()
        ledger.record("s", "p", Verdict.modify)
        assert ledger.penalty("s", "p") == 1.0

    def test_scoped_per_plan(self):
        ledger = OverrideLedger()
        ledger.record("s", "p1", Verdict.reject)
        assert ledger.penalty("s", "p2") == 1.0
        assert ledger.penalty("other", "p1") == 1.0

    def test_monotone_non_increasing(self):
        ledger = OverrideLedger()
        prev = ledger.penalty("s", "p")
        for _ in range(10):
            ledger.record("s", "p", Verdict.reject)
            cur = ledger.penalty("s", "p")
            assert cur <= prev
            prev = cur


class TestRecommend:
    def test_score_formula(self):
        lib = make_library([make_plan(eff=0.8, cost=0.4, speed=0.6)])
        out = recommend([match_for()], lib)
        assert out[0][1] == pytest.approx(0.5 * 0.8 + 0.25 * 0.4 + 0.25 * 0.6)
        assert out[0][1] == pytest.approx(0.65)

    def test_sorted_descending_tie_by_id(self):
        plans = [make_plan("p-b", 0.6, 0.6, 0.6),
                 make_plan("p-a", 0.6, 0.6, 0.6),
                 make_plan("p-c", 0.9, 0.9, 0.9)]
        out = recommend([match_for()], make_library(plans))
        assert [p.id for p, _ in out] == ["p-c", "p-a", "p-b"]

    def test_penalty_applied(self):
        lib = make_library([make_plan("p-good", 0.9, 0.9, 0.9),
                            make_plan("p-meh", 0.7, 0.7, 0.7)])
        ledger = OverrideLedger()
        for _ in range(3):
            ledger.record("s-1", "p-good", Verdict.reject)
        out = recommend([match_for()], lib, ledger)
        # 0.9 * 0.8^3 = 0.4608 < 0.7 -> rejected plan drops below
        assert out[0][0].id == "p-meh"
        assert out[1][1] == pytest.approx(0.9 * 0.8 ** 3)

    def test_no_matches(self):
        with pytest.raises(NoMatches):
            recommend([], make_library())


class TestTicketLifecycle:
    def setup_method(self):
        self.center = CommandCenter(make_library())

    def submit(self):
        return self.center.submit(make_plan(), "s-1")

    def test_submit_assigns_sequential_ids(self):
        a, b = self.submit(), self.submit()
        assert (a.id, b.id) == ("ticket-1", "ticket-2")
        assert a.state == TicketState.PendingApproval

    def test_unknown_scenario(self):
        with pytest.raises(UnknownScenario):
            self.center.submit(make_plan(), "nope")

    def test_approve_then_dispatch_then_execute(self):
        t = self.submit()
        self.center.decide(t, "chief", Verdict.approve)
        assert t.state == TicketState.Approved
        self.center.dispatch(t)
        assert t.state == TicketState.Dispatched
        self.center.report_outcome(t, success=True)
        assert t.state == TicketState.Executed

    def test_reject_is_terminal_and_ledgered(self):
        t = self.submit()
        self.center.decide(t, "chief", Verdict.reject)
        assert t.state == TicketState.Rejected
        assert self.center.ledger.penalty("s-1", t.plan.id) == pytest.approx(0.8)
        with pytest.raises(IllegalTransition):
            self.center.dispatch(t)

    def test_modify_replaces_plan_and_approves(self):
        t = self.submit()
        replacement = make_plan("plan-b", 0.9, 0.9, 0.9)
        self.center.decide(t, "chief", Verdict.modify, modified_plan=replacement)
        assert t.state == TicketState.Approved
        assert t.plan is replacement
        assert self.center.ledger.entries[-1]["verdict"] == "modify"

    def test_modify_without_plan(self):
        t = self.submit()
        with pytest.raises(MissingModifiedPlan):
            self.center.decide(t, "chief", Verdict.modify)
        assert t.state == TicketState.PendingApproval

    def test_failed_outcome(self):
        t = self.submit()
        self.center.decide(t, "chief", Verdict.approve)
        self.center.dispatch(t)
        self.center.report_outcome(t, success=False, note="wind shift")
        assert t.state == TicketState.Failed
        assert t.outcome == {"success": False, "note": "wind shift"}

    def test_quorum_two(self):
        center = CommandCenter(make_library(), quorum=2)
        t = center.submit(make_plan(), "s-1")
        center.decide(t, "a", Verdict.approve)
        assert t.state == TicketState.PendingApproval
        center.decide(t, "b", Verdict.approve)
        assert t.state == TicketState.Approved

    def test_transition_events_logged(self, tmp_path):
        import json
        log = tmp_path / "events.jsonl"
        center = CommandCenter(make_library(), event_log_path=str(log))
        t = center.submit(make_plan(), "s-1")
        center.decide(t, "chief", Verdict.approve)
        center.dispatch(t)
        events = [json.loads(line) for line in log.read_text().splitlines()]
        assert [e["event"] for e in events] == ["submitted", "decision", "dispatched"]
        assert all(e["ticket_id"] == t.id for e in events)


# every (state, action) combination and its expected legality
ACTIONS = ("approve", "reject", "modify", "dispatch", "outcome")
LEGAL = {
    TicketState.PendingApproval: {"approve", "reject", "modify"},
    TicketState.Approved: {"dispatch"},
    TicketState.Rejected: set(),
    TicketState.Dispatched: {"outcome"},
    TicketState.Executed: set(),
    TicketState.Failed: set(),
}


def drive_to(center, state):
    t = center.submit(make_plan(), "s-1")
    if state == TicketState.PendingApproval:
        return t
    if state == TicketState.Rejected:
        center.decide(t, "x", Verdict.reject)
        return t
    center.decide(t, "x", Verdict.approve)
    if state == TicketState.Approved:
        return t
    center.dispatch(t)
    if state == TicketState.Dispatched:
        return t
    center.report_outcome(t, success=(state == TicketState.Executed))
    return t


def apply_action(center, t, action):
    if action == "approve":
        center.decide(t, "x", Verdict.approve)
    elif action == "reject":
        center.decide(t, "x", Verdict.reject)
    elif action == "modify":
        center.decide(t, "x", Verdict.modify, modified_plan=make_plan("m"))
    elif action == "dispatch":
        center.dispatch(t)
    elif action == "outcome":
        center.report_outcome(t, success=True)


class TestStateTable:
    @pytest.mark.parametrize("state", list(LEGAL))
    @pytest.mark.parametrize("action", ACTIONS)
    def test_every_state_action_pair(self, state, action):
        center = CommandCenter(make_library())
        t = drive_to(center, state)
        assert t.state == state
        if action in LEGAL[state]:
            apply_action(center, t, action)
            assert t.state != state or action == "approve"
        else:
            with pytest.raises(IllegalTransition):
                apply_action(center, t, action)
            assert t.state == state

    def test_random_action_sequences_never_corrupt(self):
        rng = np.random.default_rng(17)
        terminal = {TicketState.Rejected, TicketState.Executed, TicketState.Failed}
        for _ in range(300):
            center = CommandCenter(make_library())
            t = center.submit(make_plan(), "s-1")
            for _ in range(12):
                action = ACTIONS[rng.integers(0, len(ACTIONS))]
                before = t.state
                try:
                    apply_action(center, t, action)
                except IllegalTransition:
                    assert t.state == before
                    continue
                assert action in LEGAL[before]
                if before in terminal:
                    pytest.fail("terminal state accepted an action")
            assert t.state in LEGAL  # always a known state


class TestRouting:
    def test_straight_line_empty_grid(self):
        blocked = np.zeros((10, 10, 10), dtype=bool)
        path, cost = astar_grid(blocked, (0, 0, 0), (7, 7, 0))
        assert cost == pytest.approx(7 * math.sqrt(2))
        assert path[0] == (0, 0, 0) and path[-1] == (7, 7, 0)

    def test_blocked_start(self):
        blocked = np.zeros((4, 4, 4), dtype=bool)
        blocked[0, 0, 0] = True
        with pytest.raises(RouteBlocked):
            astar_grid(blocked, (0, 0, 0), (3, 3, 3))

    def test_walled_off_goal(self):
        blocked = np.zeros((9, 9, 1), dtype=bool)
        blocked[4, :, :] = True  # full wall splits the grid
        with pytest.raises(RouteBlocked):
            astar_grid(blocked, (0, 0, 0), (8, 0, 0))

    def test_matches_dijkstra_random_grids(self):
        rng = np.random.default_rng(23)
        for _ in range(30):
            blocked = rng.random((12, 12, 6)) < 0.25
            blocked[0, 0, 0] = blocked[11, 11, 5] = False
            oracle = dijkstra_grid(blocked, (0, 0, 0), (11, 11, 5))
            if oracle is None:
                with pytest.raises(RouteBlocked):
                    astar_grid(blocked, (0, 0, 0), (11, 11, 5))
            else:
                _, cost = astar_grid(blocked, (0, 0, 0), (11, 11, 5))
                assert cost == pytest.approx(oracle)

    def test_deterministic_path(self):
        blocked = np.zeros((8, 8, 2), dtype=bool)
        blocked[3, 2:6, :] = True
        a = astar_grid(blocked, (0, 0, 0), (7, 4, 0))
        b = astar_grid(blocked, (0, 0, 0), (7, 4, 0))
        assert a == b

    def test_route_avoids_flames(self):
        from ivsr.spread import Environment, MaterialProfile, init
        scene = floor_scene(20, 20, material="dry-vegetation")
        state = init(scene, [MaterialProfile("dry-vegetation", 2.0, 1.0)],
                     [(Vec3(10, 10, 0), 0.0)], Environment(), patch_size=1.0)
        state.run(4.0, 0.5)
        route = plan_drone_route(scene, state, Vec3(2, 10, 2), Vec3(18, 10, 2),
                                 clearance=1.0, voxel=1.0)
        radius = max(s.radius for s in state.sources)
        for wp in route.waypoints:
            assert wp.distance(Vec3(10, 10, 0)) > radius  # outside the flame
        assert route.total_length >= Vec3(2, 10, 2).distance(Vec3(18, 10, 2)) - 1.0

    def test_clear_scene_route_near_euclidean(self):
        scene = floor_scene(20, 20)
        route = plan_drone_route(scene, None, Vec3(2, 2, 2), Vec3(18, 18, 2),
                                 voxel=1.0)
        straight = Vec3(2, 2, 2).distance(Vec3(18, 18, 2))
        assert route.total_length == pytest.approx(straight, rel=0.1)

    def test_dispatch_plans_drone_routes(self):
        plan = make_plan(action=Action("deploy_drone", Vec3(15, 15, 2)))
        center = CommandCenter(make_library([plan]))
        scene = floor_scene(20, 20)
        t = center.submit(plan, "s-1")
        center.decide(t, "chief", Verdict.approve)
        center.dispatch(t, scene=scene, drone_start=Vec3(5, 5, 2), voxel=1.0)
        assert len(t.routes) == 1
        assert t.routes[0].total_length > 0
