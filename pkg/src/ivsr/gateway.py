"""HTTP/WebSocket service binding the twin together.

One logical writer (the Twin) owns mutable state; request handlers apply
writes synchronously on the event loop and read snapshots.  The /stream
websocket fans out every state transition in sequence order.
"""

from __future__ import annotations

import asyncio
import itertools
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

from fastapi import FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from . import spread as spread_mod
from .commands import (CommandCenter, CommandTicket, OverrideLedger,
                       RoutePlan, TicketState, Verdict, recommend)
from .coverage import CameraPose
from .errors import (EmptyLibrary, IllegalTransition, LocalizationMiss,
                     MissingModifiedPlan, NoMatches, NotFound, ParseError,
                     RouteBlocked, SchemaError, UnknownScenario)
from .geometry import Scene, Tessellation, Vec3, tessellate
from .incident_log import LogStore, ReplayEvent, serialize_detection, parse_detection
from .library import (InterventionPlan, Library, match, scenario_to_dict)
from .localization import FireEvent, localize, merge_events
from .spread import Environment, MaterialProfile, SpreadState
from .status import Resource, StatusLog

STREAM_BUFFER = 1024
DEFAULT_TICK_HZ = 2.0

THREAT_ALERT = {"probable fire": 2, "fire hazard": 1}


def _vec(v: Vec3) -> list[float]:
    return [v.x, v.y, v.z]


def _event_doc(e: FireEvent) -> dict:
    return {
        "id": e.id, "position": _vec(e.position), "surface_id": e.surface_id,
        "threat_level": e.threat_level, "peak_temp": e.peak_temp,
        "pixel_count": e.pixel_count,
        "timestamp": e.timestamp.strftime("%Y-%m-%d %H:%M:%S.%f"),
        "sensor_id": e.sensor_id,
    }


def _plan_doc(p: InterventionPlan) -> dict:
    return {
        "id": p.id,
        "actions": [{"kind": a.kind,
                     "target": _vec(a.target) if isinstance(a.target, Vec3) else a.target,
                     "quantity": a.quantity} for a in p.actions],
        "effectiveness": p.effectiveness,
        "cost_efficiency": p.cost_efficiency,
        "response_speed": p.response_speed,
    }


def _route_doc(r: RoutePlan) -> dict:
    return {"waypoints": [_vec(w) for w in r.waypoints],
            "total_length": r.total_length, "clearance": r.clearance}


def _ticket_doc(t: CommandTicket) -> dict:
    return {
        "id": t.id, "state": t.state.value, "scenario_id": t.scenario_id,
        "plan": _plan_doc(t.plan),
        "decisions": [{"approver_id": d.approver_id, "verdict": d.verdict.value,
                       "timestamp": d.timestamp.isoformat()} for d in t.decisions],
        "routes": [_route_doc(r) for r in t.routes],
        "outcome": t.outcome,
    }


class Broadcaster:
    """Sequence-ordered event fan-out with bounded per-subscriber buffers."""

    def __init__(self, buffer: int = STREAM_BUFFER):
        self._seq = itertools.count(1)
        self._subscribers: dict[int, asyncio.Queue] = {}
        self._sub_ids = itertools.count(1)
        self._buffer = buffer
        self.history: list[dict] = []

    def subscribe(self) -> tuple[int, asyncio.Queue]:
        sid = next(self._sub_ids)
        q: asyncio.Queue = asyncio.Queue(maxsize=self._buffer)
        self._subscribers[sid] = q
        return sid, q

    def unsubscribe(self, sid: int) -> None:
        self._subscribers.pop(sid, None)

    def emit(self, kind: str, payload: dict) -> dict:
        event = {"seq": next(self._seq), "kind": kind, "payload": payload,
                 "timestamp": datetime.now(timezone.utc).isoformat()}
        self.history.append(event)
        for sid, q in list(self._subscribers.items()):
            try:
                q.put_nowait(event)
            except asyncio.QueueFull:
                # slow consumer: drop the subscriber rather than stall
                self.unsubscribe(sid)
                try:
                    q.get_nowait()
                    q.put_nowait(None)
                except (asyncio.QueueEmpty, asyncio.QueueFull):
                    pass
        return event


class Twin:
    """The live digital twin: scene, log, spread state, library, tickets."""

    def __init__(self, scene: Scene, cameras: dict[str, CameraPose],
                 materials: list[MaterialProfile], library: Library,
                 log_path: str, patch_size: float = 0.5, dt: float = 0.5,
                 resources: Optional[list[Resource]] = None,
                 ticket_log_path: Optional[str] = None):
        self.scene = scene
        self.cameras = cameras
        self.materials = materials
        self.library = library
        self.dt = dt
        self.tess = tessellate(scene, patch_size)
        self.log = LogStore(log_path)
        self.spread = spread_mod.SpreadState(
            scene, self.tess, materials, [], Environment())
        self.fire_events: list[FireEvent] = []
        self.resources = resources or []
        self.ledger = OverrideLedger()
        self.commands = CommandCenter(library, self.ledger,
                                      event_log_path=ticket_log_path)
        self.broadcaster = Broadcaster()
        self.commands.on_transition(
            lambda t, rec: self.broadcaster.emit("ticket_transition",
                                                 _ticket_doc(t)))
        self.replays: list[ReplayEvent] = []

    # -- state transitions ------------------------------------------------

    def alert_level(self) -> int:
        levels = [THREAT_ALERT.get(e.threat_level, 1) for e in self.fire_events]
        return max(levels, default=0)

    def ingest_detection(self, line: str) -> dict:
        record = parse_detection(line)
        record_id = self.log.append(record)
        self.broadcaster.emit("detection", {"record_id": record_id,
                                            "line": serialize_detection(record)})
        camera = self.cameras.get(record.sensor_id)
        if camera is None:
            raise LocalizationMiss(
                f"no camera bound for sensor {record.sensor_id!r}")
        event = localize(self.scene, camera, record)
        self.fire_events = merge_events(self.fire_events + [event])
        spread_mod.add_ignition(self.spread, event.position, self.spread.sim_time)
        self.broadcaster.emit("fire_event", _event_doc(event))
        return {"record_id": record_id, "event_id": event.id}

    def ingest_environment(self, env: Environment) -> None:
        self.spread.set_environment(env)

    def tick(self, n: int = 1) -> None:
        for _ in range(n):
            self.spread.step(self.dt)
            self.broadcaster.emit("spread_tick", {
                "sim_time": self.spread.sim_time,
                "burning_area": self.spread.burning_area()})

    def status_log(self) -> StatusLog:
        return StatusLog(fire_events=list(self.fire_events),
                         spread_snapshot=self.spread,
                         env=self.spread.env,
                         resources=list(self.resources),
                         alert_level=self.alert_level())

    def status_doc(self) -> dict:
        env = self.spread.env
        return {
            "fire_events": [_event_doc(e) for e in self.fire_events],
            "sim_time": self.spread.sim_time,
            "burning_area": self.spread.burning_area(),
            "env": {"air_temp": env.air_temp, "humidity": env.humidity,
                    "wind_speed": env.wind_speed,
                    "wind_direction": env.wind_direction},
            "resources": [{"kind": r.kind, "count": r.count,
                           "position": _vec(r.position) if r.position else None,
                           "available": r.available} for r in self.resources],
            "alert_level": self.alert_level(),
            "tickets": [_ticket_doc(t) for t in self.commands.tickets.values()],
        }

    def recommendations(self, k: int) -> dict:
        if not self.fire_events:
            return {"reason": "no_matches", "matches": [], "plans": []}
        try:
            results = match(self.library, self.status_log(), k=k)
        except EmptyLibrary:
            return {"reason": "no_matches", "matches": [], "plans": []}
        plans = recommend(results, self.library, self.ledger)
        event = {
            "matches": [{"scenario_id": r.scenario_id,
                         "static_distance": r.static_distance,
                         "temporal_distance": r.temporal_distance,
                         "combined": r.combined} for r in results],
            "plans": [{"plan": _plan_doc(p), "score": s,
                       "scenario_id": results[0].scenario_id}
                      for p, s in plans],
        }
        self.broadcaster.emit("recommendation", event)
        return event

    def replay(self, record_id: int) -> ReplayEvent:
        rp = self.log.replay(record_id, self.scene, self.cameras)
        self.replays.append(rp)
        self.broadcaster.emit("replay", {
            "source_record_id": rp.source_record_id,
            "fire_event": _event_doc(rp.fire_event),
            "lifetime": rp.lifetime})
        return rp

    def projection(self, horizon_s: float) -> dict:
        if horizon_s <= 0:
            raise ValueError("horizon must be positive")
        clone = self.spread.clone()
        clone.run(clone.sim_time + horizon_s, self.dt)
        return {"sim_time": clone.sim_time,
                "arrival_map": {str(k): v for k, v in clone.arrival_map().items()},
                "burning_area": clone.burning_area()}


def _parse_plan(doc: dict) -> InterventionPlan:
    from .library import _action_from_dict
    return InterventionPlan(
        id=doc["id"],
        actions=tuple(_action_from_dict(a) for a in doc["actions"]),
        effectiveness=doc["effectiveness"],
        cost_efficiency=doc["cost_efficiency"],
        response_speed=doc["response_speed"])


def create_app(twin: Optional[Twin], tick_hz: float = DEFAULT_TICK_HZ,
               sim_speed: float = 0.0) -> FastAPI:
    """sim_speed > 0 starts the background tick driver at
    tick_hz * sim_speed wall rate; 0 leaves ticking to explicit /tick calls."""
    app = FastAPI(title="ivsr")
    app.state.twin = twin

    def ready() -> Twin:
        if app.state.twin is None:
            raise _NotReady()
        return app.state.twin

    class _NotReady(Exception):
        pass

    @app.exception_handler(_NotReady)
    async def _not_ready(request, exc):
        return JSONResponse(status_code=503,
                            content={"error": "engine not initialized"})

    if sim_speed > 0:
        @app.on_event("startup")
        async def _start_ticker():
            async def drive():
                interval = 1.0 / (tick_hz * sim_speed)
                while True:
                    await asyncio.sleep(interval)
                    if app.state.twin is not None:
                        app.state.twin.tick()
            app.state.ticker = asyncio.create_task(drive())

        @app.on_event("shutdown")
        async def _stop_ticker():
            app.state.ticker.cancel()

    @app.post("/ingest/detection", status_code=202)
    async def ingest_detection(request: Request):
        twin = ready()
        body = (await request.body()).decode("utf-8")
        try:
            return twin.ingest_detection(body)
        except (ParseError, SchemaError) as e:
            return JSONResponse(status_code=400, content={"error": str(e)})
        except LocalizationMiss as e:
            return JSONResponse(status_code=422,
                                content={"error": str(e), "stored": True})

    @app.post("/ingest/environment", status_code=202)
    async def ingest_environment(request: Request):
        twin = ready()
        body = await request.json()
        try:
            env = Environment(air_temp=body.get("air_temp", 20.0),
                              humidity=body["humidity"],
                              wind_speed=body["wind_speed"],
                              wind_direction=body.get("wind_direction", 0.0))
        except (KeyError, TypeError, ValueError) as e:
            return JSONResponse(status_code=400, content={"error": str(e)})
        twin.ingest_environment(env)
        return {"accepted": True}

    @app.get("/status")
    async def get_status():
        return ready().status_doc()

    @app.get("/recommendations")
    async def get_recommendations(k: int = 3):
        twin = ready()
        if k < 1:
            return JSONResponse(status_code=400,
                                content={"error": "k must be >= 1"})
        return twin.recommendations(k)

    @app.post("/plans/{plan_id}/submit")
    async def submit_plan(plan_id: str, request: Request):
        twin = ready()
        found = twin.library.find_plan(plan_id)
        if found is None:
            return JSONResponse(status_code=404,
                                content={"error": f"no plan {plan_id}"})
        scenario, plan = found
        body = {}
        if await request.body():
            body = await request.json()
        scenario_id = body.get("scenario_id", scenario.id)
        try:
            ticket = twin.commands.submit(plan, scenario_id)
        except UnknownScenario as e:
            return JSONResponse(status_code=404, content={"error": str(e)})
        return _ticket_doc(ticket)

    @app.post("/tickets/{ticket_id}/decision")
    async def post_decision(ticket_id: str, request: Request):
        twin = ready()
        if ticket_id not in twin.commands.tickets:
            return JSONResponse(status_code=404,
                                content={"error": f"no ticket {ticket_id}"})
        body = await request.json()
        modified = body.get("modified_plan")
        try:
            ticket = twin.commands.decide(
                twin.commands.get(ticket_id),
                approver_id=body.get("approver_id", "unknown"),
                verdict=Verdict(body["verdict"]),
                modified_plan=_parse_plan(modified) if modified else None)
        except IllegalTransition as e:
            return JSONResponse(status_code=409, content={"error": str(e)})
        except (MissingModifiedPlan, KeyError, ValueError) as e:
            return JSONResponse(status_code=400, content={"error": str(e)})
        return _ticket_doc(ticket)

    @app.post("/tickets/{ticket_id}/dispatch")
    async def post_dispatch(ticket_id: str, request: Request):
        twin = ready()
        if ticket_id not in twin.commands.tickets:
            return JSONResponse(status_code=404,
                                content={"error": f"no ticket {ticket_id}"})
        body = {}
        if await request.body():
            body = await request.json()
        start = body.get("drone_start")
        try:
            ticket = twin.commands.dispatch(
                twin.commands.get(ticket_id), scene=twin.scene,
                spread_snapshot=twin.spread,
                drone_start=Vec3(*start) if start else None,
                clearance=body.get("clearance", 1.0),
                voxel=body.get("voxel", 0.5))
        except IllegalTransition as e:
            return JSONResponse(status_code=409, content={"error": str(e)})
        except RouteBlocked as e:
            return JSONResponse(status_code=422, content={"error": str(e)})
        return _ticket_doc(ticket)

    @app.post("/tickets/{ticket_id}/outcome")
    async def post_outcome(ticket_id: str, request: Request):
        twin = ready()
        if ticket_id not in twin.commands.tickets:
            return JSONResponse(status_code=404,
                                content={"error": f"no ticket {ticket_id}"})
        body = await request.json()
        try:
            ticket = twin.commands.report_outcome(
                twin.commands.get(ticket_id),
                success=bool(body.get("success", False)),
                note=body.get("note", ""))
        except IllegalTransition as e:
            return JSONResponse(status_code=409, content={"error": str(e)})
        return _ticket_doc(ticket)

    @app.get("/replay/{record_id}")
    async def get_replay(record_id: int):
        twin = ready()
        try:
            rp = twin.replay(record_id)
        except NotFound as e:
            return JSONResponse(status_code=404, content={"error": str(e)})
        except LocalizationMiss as e:
            return JSONResponse(status_code=422, content={"error": str(e)})
        return {"source_record_id": rp.source_record_id,
                "fire_event": _event_doc(rp.fire_event),
                "lifetime": rp.lifetime}

    @app.get("/projection")
    async def get_projection(horizon_s: float):
        twin = ready()
        if horizon_s <= 0:
            return JSONResponse(status_code=400,
                                content={"error": "horizon must be positive"})
        return twin.projection(horizon_s)

    @app.post("/tick")
    async def post_tick(n: int = 1):
        # simulated-time driver for tests and sim-speed mode
        twin = ready()
        twin.tick(n)
        return {"sim_time": twin.spread.sim_time}

    @app.websocket("/stream")
    async def stream(ws: WebSocket):
        twin = app.state.twin
        if twin is None:
            await ws.close(code=1013)
            return
        await ws.accept()
        sid, q = twin.broadcaster.subscribe()
        try:
            while True:
                event = await q.get()
                if event is None:
                    break
                await ws.send_text(json.dumps(event))
        except WebSocketDisconnect:
            pass
        finally:
            twin.broadcaster.unsubscribe(sid)

    return app
