"""Closed-loop simulation: references, tick engine, traces, metrics.

A scenario couples a robot model, visibility model, world, landmark field,
filter configuration, and a reference input policy. The engine advances one
control period at a time; in filtered mode each tick runs the program-based
filter and observation events re-anchor the tracked feature set, in baseline
mode the reference is clamped to the input box and applied directly.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .constraints import (
    AugmentedState,
    ConstraintParams,
    build_rows,
    initialize,
)
from .kinematics import RobotModel, integrate_configuration, wrap_angle, world_to_sensor
from .safety_filter import (
    FilterConfig,
    FilterOutput,
    deviation_cost,
    filter_step,
    run_observation_event,
)
from .visibility import LandmarkStore, VisibilityModel, visible_mask
from .world import World, signed_distance

__all__ = [
    "CircularTracker",
    "WallInspection",
    "ExternalReference",
    "Scenario",
    "TraceRecord",
    "EventRecord",
    "Trace",
    "SimEngine",
    "run",
    "metrics",
]


class CircularTracker:
    """Proportional tracker of a point moving on a circle; the heading input
    channel is left to the filter (zero reference)."""

    kind = "circular_tracker"

    def __init__(self, center=(0.0, 0.0), radius: float = 1.0,
                 angular_rate: float = 1.0, gain: float = 2.0):
        self.center = (float(center[0]), float(center[1]))
        self.radius = float(radius)
        self.angular_rate = float(angular_rate)
        self.gain = float(gain)

    def command(self, tick: int, t: float, q: np.ndarray, dt: float) -> np.ndarray:
        w, r, k = self.angular_rate, self.radius, self.gain
        tx = self.center[0] + r * np.cos(w * t)
        ty = self.center[1] + r * np.sin(w * t)
        return np.array([
            -r * w * np.sin(w * t) + k * (tx - q[0]),
            r * w * np.cos(w * t) + k * (ty - q[1]),
            0.0,
        ])


class WallInspection:
    """Drive along a wall at constant speed while servoing the camera onto the
    wall normal: the base heading is regulated to the wall direction and the
    gimbal to (wall normal - base heading)."""

    kind = "wall_inspection"

    def __init__(self, forward_speed: float = 0.15, heading_gain: float = 2.0,
                 servo_gain: float = 2.0, wall_heading: float = 0.0,
                 normal_heading: float = np.pi / 2):
        self.forward_speed = float(forward_speed)
        self.heading_gain = float(heading_gain)
        self.servo_gain = float(servo_gain)
        self.wall_heading = float(wall_heading)
        self.normal_heading = float(normal_heading)

    def command(self, tick: int, t: float, q: np.ndarray, dt: float) -> np.ndarray:
        return np.array([
            self.forward_speed,
            self.heading_gain * wrap_angle(self.wall_heading - q[2]),
            self.servo_gain * wrap_angle(self.normal_heading - (q[2] + q[3])),
        ])


class ExternalReference:
    """Caller-supplied commands with zero-order hold.

    commands is a sorted sequence of (tick, v) pairs; between entries the last
    command is held, and a command older than hold_timeout (or no command at
    all) yields the stopping input. This is exactly the resolution rule the
    teleoperation service applies to its live mailbox.
    """

    kind = "external"

    def __init__(self, commands: Sequence[Tuple[int, Sequence[float]]] = (),
                 hold_timeout: float = 0.5, n_inputs: int = 3):
        cmds = sorted((int(k), np.asarray(v, dtype=float)) for k, v in commands)
        self.ticks = [k for k, _ in cmds]
        self.values = [v for _, v in cmds]
        self.hold_timeout = float(hold_timeout)
        self.n_inputs = int(n_inputs)

    def command(self, tick: int, t: float, q: np.ndarray, dt: float) -> np.ndarray:
        pos = bisect.bisect_right(self.ticks, tick) - 1
        if pos < 0:
            return np.zeros(self.n_inputs)
        age_ticks = tick - self.ticks[pos]
        if self.hold_timeout >= 0.0 and age_ticks > int(round(self.hold_timeout / dt)):
            return np.zeros(self.n_inputs)
        return self.values[pos].copy()


@dataclass
class Scenario:
    name: str
    model: RobotModel
    vis: VisibilityModel
    world: World
    store: LandmarkStore
    q0: np.ndarray
    filter_cfg: FilterConfig
    reference: object
    duration: float
    mode: str = "filtered"

    def __post_init__(self):
        if self.mode not in ("filtered", "baseline"):
            raise ValueError("mode must be 'filtered' or 'baseline'")
        if self.duration < 0.0:
            raise ValueError("duration must be nonnegative")


@dataclass
class TraceRecord:
    t: float
    q: np.ndarray
    w: float
    w_hat: float
    h_min: Dict[int, float]
    v_ref: np.ndarray
    v_star: np.ndarray
    deviation: float
    event: bool
    iterations: int
    active_ids: Tuple[int, ...] = ()
    lam: Optional[np.ndarray] = None
    mu: Optional[np.ndarray] = None
    active_labels: Tuple[str, ...] = ()
    breaches: Tuple[str, ...] = ()
    fallback: bool = False


@dataclass
class EventRecord:
    tick: int
    t: float
    event_index: int
    score_pre: float
    score_post: float
    capped_score: float
    min_pre: float
    min_post: float
    n_active_pre: int
    n_active_post: int


@dataclass
class Trace:
    records: List[TraceRecord]
    events: List[EventRecord]
    coord_names: Tuple[str, ...]
    input_names: Tuple[str, ...]
    dt: float
    eps_num: float
    mode: str
    final_q: Optional[np.ndarray] = None
    angle_coords: Tuple[int, ...] = ()

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def columns(self) -> Dict[str, np.ndarray]:
        """Flat column arrays in the delimited-output layout."""
        recs = self.records
        out: Dict[str, np.ndarray] = {"t": np.array([r.t for r in recs])}
        for i, cname in enumerate(self.coord_names):
            out[cname] = np.array([r.q[i] for r in recs])
        out["w"] = np.array([r.w for r in recs])
        out["w_hat"] = np.array([r.w_hat for r in recs])
        for f in range(1, 6):
            out[f"h{f}_min"] = np.array([r.h_min[f] for r in recs])
        out["h6"] = np.array([r.h_min[6] for r in recs])
        for i in range(len(self.input_names)):
            out[f"v_ref_{i}"] = np.array([r.v_ref[i] for r in recs])
        for i in range(len(self.input_names)):
            out[f"v_star_{i}"] = np.array([r.v_star[i] for r in recs])
        out["deviation"] = np.array([r.deviation for r in recs])
        out["event"] = np.array([1.0 if r.event else 0.0 for r in recs])
        out["iters"] = np.array([float(r.iterations) for r in recs])
        return out


class SimEngine:
    """Tick-by-tick driver shared by batch runs and the teleoperation service."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.cfg = scenario.filter_cfg
        self.model = scenario.model
        self.vis = scenario.vis
        self.store = scenario.store
        self.world = scenario.world
        self.tick = 0
        self.event_count = 0
        self._warm: Optional[Tuple[int, ...]] = None
        self._warm_key = None
        self.records: List[TraceRecord] = []
        self.events: List[EventRecord] = []
        if scenario.mode == "filtered":
            self.state: Optional[AugmentedState] = initialize(
                scenario.q0, self.model, self.vis, self.store, self.cfg.constraints,
                world=self.world, n_max=self.cfg.n_max, seed=self.cfg.seed,
            )
            self.q = self.state.q
        else:
            self.state = None
            self.q = np.asarray(scenario.q0, dtype=float).copy()

    # -- helpers ------------------------------------------------------------

    def full_score(self, q: np.ndarray) -> float:
        rotation, origin = self.model.sensor_pose(q)
        pts = world_to_sensor(rotation, origin, self.store.positions)
        mask = visible_mask(self.vis, pts)
        return float(self.store.weights[mask].sum())

    def _event_due(self, tick: int) -> bool:
        rate, dt = self.cfg.camera_rate, self.cfg.dt
        if tick <= 0 or rate <= 0.0:
            return False
        return int(np.floor(tick * dt * rate + 1e-9)) > int(np.floor((tick - 1) * dt * rate + 1e-9))

    def _clearance(self, q: np.ndarray) -> float:
        if not self.cfg.constraints.collision_enabled:
            return float("nan")
        s, _ = signed_distance(self.world, q[:2])
        return s - self.cfg.constraints.robot_radius

    # -- stepping -----------------------------------------------------------

    def step(self, v_ref: np.ndarray) -> TraceRecord:
        if self.scenario.mode == "filtered":
            record = self._step_filtered(np.asarray(v_ref, dtype=float))
        else:
            record = self._step_baseline(np.asarray(v_ref, dtype=float))
        self.records.append(record)
        self.tick += 1
        return record

    def _step_filtered(self, v_ref: np.ndarray) -> TraceRecord:
        tick, cfg = self.tick, self.cfg
        event = self._event_due(tick)
        if event:
            pre_rows = build_rows(self.state, self.model, self.vis, cfg.constraints, self.world)
            score_pre = self.state.smoothed_score()
            n_pre = self.state.n_active
            self.event_count += 1
            self.state = run_observation_event(
                self.state, self.model, self.vis, self.store, cfg, self.event_count
            )
            post_rows = build_rows(self.state, self.model, self.vis, cfg.constraints, self.world)
            self.events.append(EventRecord(
                tick=tick,
                t=tick * cfg.dt,
                event_index=self.event_count,
                score_pre=score_pre,
                score_post=self.state.smoothed_score(),
                capped_score=float(self.state.weights.sum()),
                min_pre=pre_rows.min_value(),
                min_post=post_rows.min_value(),
                n_active_pre=n_pre,
                n_active_post=self.state.n_active,
            ))
            self._warm = None

        warm_key = self.state.active_ids
        warm = self._warm if self._warm_key == warm_key else None
        pre_state = self.state
        self.state, out = filter_step(
            pre_state, v_ref, self.model, self.vis, cfg,
            world=self.world, warm_start=warm,
        )
        if out.status == "optimal":
            self._warm = out.qp_active
            self._warm_key = warm_key

        fam = out.rows.family_min()
        return TraceRecord(
            t=tick * cfg.dt,
            q=pre_state.q.copy(),
            w=self.full_score(pre_state.q),
            w_hat=pre_state.smoothed_score(),
            h_min=fam,
            v_ref=v_ref.copy(),
            v_star=out.v_star.copy(),
            deviation=out.deviation,
            event=event,
            iterations=out.iterations,
            active_ids=pre_state.active_ids,
            lam=pre_state.aux.lam.copy(),
            mu=pre_state.aux.mu.copy(),
            active_labels=out.active_labels,
            breaches=out.breaches,
            fallback=out.fallback,
        )

    def _step_baseline(self, v_ref: np.ndarray) -> TraceRecord:
        tick, cfg = self.tick, self.cfg
        event = self._event_due(tick)
        if event:
            self.event_count += 1
        v_star = self.model.clamp_input(v_ref)
        q_pre = self.q.copy()
        nan = float("nan")
        h_min = {f: nan for f in range(1, 6)}
        h_min[6] = self._clearance(q_pre)
        record = TraceRecord(
            t=tick * cfg.dt,
            q=q_pre,
            w=self.full_score(q_pre),
            w_hat=nan,
            h_min=h_min,
            v_ref=v_ref.copy(),
            v_star=v_star.copy(),
            deviation=deviation_cost(v_star, v_ref, cfg.input_cost),
            event=event,
            iterations=0,
        )
        self.q = integrate_configuration(self.model, self.q, v_star, cfg.dt)
        return record

    def current_q(self) -> np.ndarray:
        return self.state.q if self.state is not None else self.q

    def finish(self) -> Trace:
        return Trace(
            records=self.records,
            events=self.events,
            coord_names=self.model.coord_names,
            input_names=tuple(f"v{i}" for i in range(self.model.m)),
            dt=self.cfg.dt,
            eps_num=self.cfg.eps_num,
            mode=self.scenario.mode,
            final_q=self.current_q().copy(),
            angle_coords=self.model.angle_coords,
        )


def run(scenario: Scenario) -> Trace:
    """Run the scenario for duration/dt ticks (a zero-duration scenario yields
    only the initial record with undefined inputs)."""
    engine = SimEngine(scenario)
    ticks = int(round(scenario.duration / scenario.filter_cfg.dt))
    if ticks == 0:
        engine.records.append(_initial_record(engine))
        return engine.finish()
    for tick in range(ticks):
        v_ref = scenario.reference.command(
            tick, tick * scenario.filter_cfg.dt, engine.current_q(), scenario.filter_cfg.dt
        )
        engine.step(v_ref)
    return engine.finish()


def _initial_record(engine: SimEngine) -> TraceRecord:
    nan = float("nan")
    q = engine.current_q().copy()
    if engine.state is not None:
        rows = build_rows(engine.state, engine.model, engine.vis, engine.cfg.constraints, engine.world)
        h_min = rows.family_min()
        w_hat = engine.state.smoothed_score()
    else:
        h_min = {f: nan for f in range(1, 6)}
        h_min[6] = engine._clearance(q)
        w_hat = nan
    m = engine.model.m
    return TraceRecord(
        t=0.0, q=q, w=engine.full_score(q), w_hat=w_hat, h_min=h_min,
        v_ref=np.full(m, nan), v_star=np.full(m, nan), deviation=nan,
        event=False, iterations=0,
    )


def metrics(columns: Dict[str, np.ndarray], dt: float, eps_num: float) -> Dict[str, object]:
    """Summary statistics from trace columns. Works identically on columns
    taken from a Trace or re-read from the delimited output, so a replay
    recomputes the same numbers bit for bit."""

    def stat(x: float) -> Optional[float]:
        return None if np.isnan(x) else float(x)

    w = columns["w"]
    w_hat = columns["w_hat"]
    h_cols = {f: columns[f"h{f}_min"] for f in range(1, 6)}
    h_cols[6] = columns["h6"]
    h_min: Dict[str, Optional[float]] = {}
    worst = np.full(len(w), np.inf)
    for f in range(1, 7):
        vals = h_cols[f]
        finite = ~np.isnan(vals)
        key = f"h{f}" + ("_min" if f < 6 else "")
        h_min[key] = float(vals[finite].min()) if np.any(finite) else None
        worst = np.minimum(worst, np.where(finite, vals, np.inf))
    deviation = columns["deviation"]
    return {
        "ticks": int(len(w)),
        "min_w": stat(float(np.min(w))) if len(w) else None,
        "mean_w": stat(float(np.mean(w))) if len(w) else None,
        "min_w_hat": stat(float(np.min(w_hat))) if len(w_hat) else None,
        "mean_w_hat": stat(float(np.mean(w_hat))) if len(w_hat) else None,
        "h_min": h_min,
        "total_deviation": float(np.nansum(deviation) * dt),
        "breach_count": int(np.sum(worst < -eps_num)),
        "event_count": int(np.sum(columns["event"] > 0.5)),
    }
