"""Live steering bridge: a deterministic session core plus a WebSocket app.

TeleopSession owns all simulation state and advances one tick at a time. Its
command mailbox applies exactly the resolution rule of the batch external
reference (zero-order hold, stopping input before the first command and after
the hold timeout), so a recorded command log replayed through the session
produces the trace sim.run would. The FastAPI app adds transport only: it
paces the session at wall-clock rate, ingests commands (last writer wins),
and broadcasts state frames; no simulation state leaks into handlers.
"""

from __future__ import annotations

import asyncio
import json
import math
from contextlib import asynccontextmanager, suppress
from typing import Optional, Tuple

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .constraints import build_rows
from .kinematics import world_to_sensor
from .sim import Scenario, SimEngine, TraceRecord
from .visibility import visible_mask

__all__ = ["TeleopSession", "create_app"]


def _finite(value: float) -> Optional[float]:
    v = float(value)
    return v if math.isfinite(v) else None


class TeleopSession:
    """Deterministic teleoperation core around a SimEngine."""

    def __init__(self, scenario: Scenario):
        if getattr(scenario.reference, "kind", None) != "external":
            raise ValueError("teleoperation needs a scenario with an "
                             "'external' reference")
        self.engine = SimEngine(scenario)
        self.model = scenario.model
        dt = scenario.filter_cfg.dt
        timeout = scenario.reference.hold_timeout
        self.hold_ticks: Optional[int] = (
            int(round(timeout / dt)) if timeout >= 0.0 else None)
        self._cmd: Optional[Tuple[int, np.ndarray]] = None

    def submit(self, v_ref) -> np.ndarray:
        """Accept an operator command, clamped to the input box; it takes
        effect on the next tick and replaces any previous command."""
        v = self.model.clamp_input(np.asarray(v_ref, dtype=float))
        self._cmd = (self.engine.tick, v)
        return v

    def current_command(self) -> np.ndarray:
        if self._cmd is None:
            return np.zeros(self.model.m)
        since, v = self._cmd
        if self.hold_ticks is not None and self.engine.tick - since > self.hold_ticks:
            return np.zeros(self.model.m)
        return v.copy()

    def step(self) -> TraceRecord:
        return self.engine.step(self.current_command())

    def state_message(self) -> dict:
        """State frame for the UI, evaluated at the live configuration."""
        engine = self.engine
        q = engine.current_q()
        rotation, origin = self.model.sensor_pose(q)
        visible = visible_mask(engine.vis, world_to_sensor(
            rotation, origin, engine.store.positions))

        state = engine.state
        lam_of = {}
        active = frozenset()
        if state is not None:
            active = frozenset(state.active_ids)
            lam_of = dict(zip(state.active_ids, state.aux.lam))
        landmarks = [{
            "id": i,
            "p": [float(c) for c in engine.store.positions[i]],
            "visible": bool(visible[i]),
            "active": i in active,
            "lam": _finite(lam_of[i]) if i in lam_of else None,
        } for i in range(len(engine.store))]

        h_min = {f"h{f}": None for f in range(1, 7)}
        w_hat = None
        if state is not None:
            rows = build_rows(state, self.model, engine.vis,
                              engine.cfg.constraints, engine.world)
            per_family = rows.family_min()
            for f in range(1, 7):
                h_min[f"h{f}"] = _finite(per_family[f])
            w_hat = _finite(state.smoothed_score())
        elif engine.cfg.constraints.collision_enabled:
            h_min["h6"] = _finite(engine._clearance(q))

        record = engine.records[-1] if engine.records else None
        return {
            "type": "state",
            "t": engine.tick * engine.cfg.dt,
            "q": [float(c) for c in q],
            "camera_heading": float(self.model.heading(q)),
            "landmarks": landmarks,
            "w": _finite(engine.full_score(q)),
            "w_hat": w_hat,
            "W": float(engine.cfg.constraints.required_score),
            "h_min": h_min,
            "v_ref": [float(c) for c in self.current_command()],
            "v_star": ([float(c) for c in record.v_star]
                       if record is not None else [0.0] * self.model.m),
            "event": bool(record.event) if record is not None else False,
        }


def _parse_command(raw: str, n_inputs: int) -> np.ndarray:
    msg = json.loads(raw)
    if not isinstance(msg, dict):
        raise ValueError("expected a JSON object")
    if msg.get("type") != "cmd":
        raise ValueError("expected type 'cmd'")
    v_ref = msg.get("v_ref")
    if not isinstance(v_ref, list) or len(v_ref) != n_inputs:
        raise ValueError(f"v_ref must be an array of {n_inputs} numbers")
    values = []
    for c in v_ref:
        if isinstance(c, bool) or not isinstance(c, (int, float)) \
                or not math.isfinite(float(c)):
            raise ValueError("v_ref components must be finite numbers")
        values.append(float(c))
    seq = msg.get("client_seq", 0)
    if isinstance(seq, bool) or not isinstance(seq, int):
        raise ValueError("client_seq must be an integer")
    return np.array(values)


def create_app(scenario: Scenario, resolved: dict,
               broadcast_rate: float = 30.0) -> FastAPI:
    """WebSocket service hosting one session; runs until shutdown, ignoring
    the scenario's batch duration."""
    session = TeleopSession(scenario)
    dt = scenario.filter_cfg.dt
    clients: set = set()

    async def pace():
        loop = asyncio.get_running_loop()
        next_tick = loop.time() + dt
        next_cast = loop.time()
        while True:
            now = loop.time()
            if now >= next_tick:
                session.step()
                next_tick += dt
                if now - next_tick > 1.0:
                    next_tick = now + dt  # fell behind; resynchronize
            if now >= next_cast:
                payload = json.dumps(session.state_message())
                for ws in list(clients):
                    try:
                        await ws.send_text(payload)
                    except Exception:
                        clients.discard(ws)
                next_cast = now + 1.0 / broadcast_rate
            pause = min(next_tick, next_cast) - loop.time()
            await asyncio.sleep(max(0.0, pause))

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        task = asyncio.create_task(pace())
        yield
        task.cancel()
        with suppress(asyncio.CancelledError):
            await task

    app = FastAPI(lifespan=lifespan)
    app.state.session = session

    @app.get("/scenario")
    async def get_scenario():
        return resolved

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        await websocket.accept()
        clients.add(websocket)
        try:
            await websocket.send_text(json.dumps(session.state_message()))
            while True:
                try:
                    raw = await websocket.receive_text()
                except KeyError:
                    await websocket.send_text(json.dumps(
                        {"type": "error", "message": "expected a text frame"}))
                    continue
                try:
                    v_ref = _parse_command(raw, session.model.m)
                except (json.JSONDecodeError, ValueError) as exc:
                    await websocket.send_text(json.dumps(
                        {"type": "error", "message": str(exc)}))
                    continue
                session.submit(v_ref)
        except WebSocketDisconnect:
            pass
        finally:
            clients.discard(websocket)

    return app
