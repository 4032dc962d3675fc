"""Verification suites behind `visifilter check` and the acceptance tests.

Each suite pits a component against an independent oracle: the active-set QP
solver against a projected-gradient dual ascent, the disjunction encoding
against a dense blend grid, the closed-loop filter against the nonnegativity
it promises on randomized scenarios, and indirect landmark propagation
against the direct frame transform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigvalsh

from .constraints import (
    ConstraintParams,
    InfeasibleStartError,
    check_equivalence_sample,
    initialize,
)
from .kinematics import PlanarCamBot, propagate_landmark, world_to_sensor
from .qp import QpProblem, kkt_residual, solve
from .safety_filter import FilterConfig
from .sim import ExternalReference, Scenario, Trace, metrics, run
from .visibility import LandmarkStore, SectorFov2D
from .world import Disc, World, generate_uniform_landmarks

__all__ = [
    "CheckResult",
    "reference_solve",
    "check_qp_oracle",
    "check_equivalence",
    "check_invariance",
    "check_propagation",
    "generate_invariance_scenario",
    "run_invariance_suite",
    "InvarianceReport",
    "SUITES",
    "run_suite",
]


@dataclass
class CheckResult:
    name: str
    passed: bool
    summary: str
    lines: List[str] = field(default_factory=list)


# --------------------------------------------------------------------------
# QP oracle: accelerated projected-gradient ascent on the dual.

def reference_solve(problem: QpProblem, tol: float = 1e-13,
                    max_iter: int = 200000) -> Tuple[np.ndarray, float]:
    """Independent QP solution by FISTA on the dual, with gradient restarts.

    Slow but simple: the dual of min 1/2 u'Hu + f'u s.t. Gu <= g is an
    unconstrained-in-sign-free concave quadratic over mu >= 0, maximized by
    projected gradient steps of size 1/L.
    """
    H, f, G, g = problem.H, problem.f, problem.G, problem.g
    chol = cho_factor(H)
    if problem.n_constraints == 0:
        u = cho_solve(chol, -f)
        return u, problem.objective(u)
    M = G @ cho_solve(chol, G.T)
    c = G @ cho_solve(chol, f) + g
    lip = float(eigvalsh(M)[-1])
    if lip <= 0.0:
        u = cho_solve(chol, -f)
        return u, problem.objective(u)
    step = 1.0 / lip
    mu = np.zeros(problem.n_constraints)
    y = mu
    t_k = 1.0
    for it in range(max_iter):
        mu_new = np.maximum(0.0, y - step * (M @ y + c))
        if (y - mu_new) @ (mu_new - mu) > 0.0:
            # momentum points uphill of the gradient flow; restart
            y = mu_new
            t_k = 1.0
        else:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_k * t_k))
            y = mu_new + ((t_k - 1.0) / t_next) * (mu_new - mu)
            t_k = t_next
        mu = mu_new
        if it % 100 == 99:
            resid = mu - np.maximum(0.0, mu - step * (M @ mu + c))
            if np.max(np.abs(resid)) <= tol * (1.0 + np.max(np.abs(mu))):
                break
    u = cho_solve(chol, -(f + G.T @ mu))
    return u, problem.objective(u)


def _random_qp(rng: np.random.Generator) -> QpProblem:
    n = int(rng.integers(1, 9))
    p = int(rng.integers(0, 21))
    a = rng.normal(size=(n, n))
    h = a @ a.T + (0.1 + rng.uniform()) * np.eye(n)
    f = 2.0 * rng.normal(size=n)
    grad = rng.normal(size=(p, n))
    x0 = 0.5 * rng.normal(size=n)
    slack = rng.uniform(0.0, 2.0, size=p)
    slack[rng.uniform(size=p) < 0.4] *= 0.01
    return QpProblem(h, f, grad, grad @ x0 + slack)


def check_qp_oracle(n_problems: int = 200, seed: int = 2024,
                    kkt_tol: float = 1e-9, obj_tol: float = 1e-6,
                    scale_tol: float = 1e-8) -> CheckResult:
    lines = []
    worst_kkt = worst_obj = worst_scale = 0.0
    failures = 0
    for i in range(n_problems):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        problem = _random_qp(rng)
        sol = solve(problem)
        problems = []
        if sol.status != "optimal":
            problems.append(f"status {sol.status}")
        kkt = kkt_residual(problem, sol.u, sol.duals)["max"]
        worst_kkt = max(worst_kkt, kkt)
        if kkt > kkt_tol:
            problems.append(f"kkt {kkt:.2e}")
        _, obj_ref = reference_solve(problem)
        gap = abs(sol.objective - obj_ref)
        worst_obj = max(worst_obj, gap)
        if gap > obj_tol:
            problems.append(f"objective gap {gap:.2e}")
        if problem.n_constraints:
            scale = 10.0 ** rng.uniform(-3.0, 3.0, size=problem.n_constraints)
            scaled = QpProblem(problem.H, problem.f,
                               scale[:, None] * problem.G, scale * problem.g)
            sol2 = solve(scaled)
            drift = float(np.max(np.abs(sol.u - sol2.u)))
            worst_scale = max(worst_scale, drift)
            if sol2.status != "optimal" or drift > scale_tol:
                problems.append(f"row-scaling drift {drift:.2e}")
        if problems:
            failures += 1
            lines.append(f"FAIL qp[{i}] (n={problem.H.shape[0]}, "
                         f"p={problem.n_constraints}): " + "; ".join(problems))
    summary = (f"{n_problems - failures}/{n_problems} QPs verified "
               f"(worst kkt {worst_kkt:.2e}, objective gap {worst_obj:.2e}, "
               f"scaling drift {worst_scale:.2e})")
    return CheckResult("qp-oracle", failures == 0, summary, lines)


# --------------------------------------------------------------------------
# Disjunction encoding vs the statement it encodes.

def check_equivalence(n_samples: int = 10000, grid: int = 1001,
                      margin: float = 1e-3, seed: int = 2024) -> CheckResult:
    rng = np.random.default_rng(seed)
    lines = []
    mismatches = 0
    drawn = 0
    while drawn < n_samples:
        lam = float(rng.uniform(-1.5, 1.5))
        rho = rng.uniform(-2.0, 2.0, size=3)
        if abs(lam) < margin or np.min(np.abs(rho)) < margin:
            continue  # stay clear of the boundary the grid cannot decide
        drawn += 1
        witnessed = check_equivalence_sample(lam, rho, grid)
        stated = lam <= 0.0 or float(np.min(rho)) >= 0.0
        if witnessed != stated:
            mismatches += 1
            if len(lines) < 20:
                lines.append(f"FAIL lam={lam:.6f} rho={np.round(rho, 6)}: "
                             f"grid says {witnessed}, statement says {stated}")
    summary = (f"{n_samples - mismatches}/{n_samples} sampled blends agree "
               f"with the disjunction (grid {grid}, margin {margin:g})")
    return CheckResult("equivalence", mismatches == 0, summary, lines)


# --------------------------------------------------------------------------
# Randomized forward-invariance suite.

@dataclass
class InvarianceReport:
    n_scenarios: int
    per_scenario: List[dict]
    worst_min_h: float
    total_breaches: int
    n_events: int
    worst_event_min_post: float
    max_score_reset_error: float
    monotone_violations: int


def generate_invariance_scenario(index: int, master_seed: int = 0,
                                 duration: float = 20.0) -> Scenario:
    """Deterministic randomized scenario; re-rolls until the start is feasible
    with margin (initial smoothed score >= W + 0.5, clear of any obstacle)."""
    for attempt in range(64):
        seeds = np.random.SeedSequence([master_seed, index, attempt])
        rng = np.random.default_rng(seeds)
        n_landmarks = int(rng.integers(10, 61))
        required = float(rng.uniform(2.5, 6.5))
        landmark_seed = int(rng.integers(0, 2**31 - 1))
        positions = generate_uniform_landmarks(
            n_landmarks, [[-1.0, 1.0], [-1.0, 1.0]], landmark_seed)
        store = LandmarkStore(positions)

        model = PlanarCamBot()
        vis = SectorFov2D(angle_of_view=1.0, sensing_range=2.5)
        phi = float(rng.uniform(0.0, 2.0 * np.pi))
        q0 = np.array([np.cos(phi), np.sin(phi), np.pi + phi])

        with_obstacle = index % 2 == 1
        world = World()
        if with_obstacle:
            center = rng.uniform(-0.8, 0.8, size=2)
            radius = float(rng.uniform(0.2, 0.4))
            if np.hypot(*(q0[:2] - center)) < radius + 0.3 + 0.05:
                continue
            world = World(obstacles=(Disc(tuple(center), radius),))
        params = ConstraintParams(required_score=required,
                                  collision_enabled=with_obstacle,
                                  robot_radius=0.3)
        cfg = FilterConfig(constraints=params,
                           input_cost=np.array([1.0, 1.0, 0.001]),
                           seed=int(rng.integers(0, 2**31 - 1)))
        try:
            probe = initialize(q0, model, vis, store, params, world=world,
                               n_max=cfg.n_max, seed=cfg.seed)
        except InfeasibleStartError:
            continue
        if probe.smoothed_score() < required + 0.5:
            continue

        ticks_total = int(round(duration / cfg.dt))
        box = model.v_box
        commands = []
        for j in range(0, ticks_total, 100):
            v = np.array([rng.uniform(lo, hi) for lo, hi in box])
            commands.append((j, v))
        reference = ExternalReference(commands, hold_timeout=-1.0,
                                      n_inputs=model.m)
        return Scenario(name=f"invariance-{index:03d}", model=model, vis=vis,
                        world=world, store=store, q0=q0, filter_cfg=cfg,
                        reference=reference, duration=duration)
    raise RuntimeError(f"no feasible scenario found for index {index}")


def collect_event_stats(traces: List[Trace], required_scores: List[float]):
    """Jump bookkeeping across traces: post-jump row minima, the score reset
    identity, and score monotonicity when the fresh capped score allows it."""
    n_events = 0
    worst_min_post = np.inf
    max_reset_error = 0.0
    monotone_violations = 0
    for trace, required in zip(traces, required_scores):
        for ev in trace.events:
            n_events += 1
            worst_min_post = min(worst_min_post, ev.min_post)
            h1_post = ev.score_post - required
            max_reset_error = max(max_reset_error,
                                  abs(h1_post - (ev.capped_score - required)))
            if ev.capped_score >= ev.score_pre:
                if h1_post < (ev.score_pre - required) - 1e-12:
                    monotone_violations += 1
    if n_events == 0:
        worst_min_post = np.inf
    return n_events, worst_min_post, max_reset_error, monotone_violations


def run_invariance_suite(n_scenarios: int = 100, master_seed: int = 0,
                         duration: float = 20.0) -> InvarianceReport:
    per_scenario = []
    traces = []
    requireds = []
    worst = np.inf
    breaches = 0
    for i in range(n_scenarios):
        scenario = generate_invariance_scenario(i, master_seed, duration)
        trace = run(scenario)
        m = metrics(trace.columns(), trace.dt, trace.eps_num)
        mins = [v for v in m["h_min"].values() if v is not None]
        min_h = min(mins) if mins else np.inf
        worst = min(worst, min_h)
        breaches += m["breach_count"]
        per_scenario.append({
            "name": scenario.name,
            "required_score": scenario.filter_cfg.constraints.required_score,
            "landmarks": len(scenario.store),
            "obstacle": scenario.filter_cfg.constraints.collision_enabled,
            "min_h": min_h,
            "breach_count": m["breach_count"],
            "event_count": m["event_count"],
        })
        traces.append(trace)
        requireds.append(scenario.filter_cfg.constraints.required_score)
    n_events, worst_post, reset_err, mono = collect_event_stats(traces, requireds)
    return InvarianceReport(
        n_scenarios=n_scenarios,
        per_scenario=per_scenario,
        worst_min_h=float(worst),
        total_breaches=int(breaches),
        n_events=n_events,
        worst_event_min_post=float(worst_post),
        max_score_reset_error=float(reset_err),
        monotone_violations=mono,
    )


def check_invariance(n_scenarios: int = 100, master_seed: int = 0,
                     duration: float = 20.0, tol: float = 1e-6) -> CheckResult:
    report = run_invariance_suite(n_scenarios, master_seed, duration)
    lines = []
    for entry in report.per_scenario:
        ok = entry["min_h"] >= -tol and entry["breach_count"] == 0
        mark = "ok  " if ok else "FAIL"
        lines.append(f"{mark} {entry['name']}: min h {entry['min_h']:+.3e}, "
                     f"{entry['breach_count']} breaches, "
                     f"{entry['event_count']} events"
                     + (" (obstacle)" if entry["obstacle"] else ""))
    passed = (report.worst_min_h >= -tol and report.total_breaches == 0
              and report.worst_event_min_post >= -1e-9
              and report.max_score_reset_error <= 1e-9
              and report.monotone_violations == 0)
    summary = (f"{report.n_scenarios} scenarios, worst row {report.worst_min_h:+.3e}, "
               f"{report.total_breaches} breaches; {report.n_events} jumps, "
               f"worst post-jump row {report.worst_event_min_post:+.3e}, "
               f"score reset error {report.max_score_reset_error:.2e}")
    return CheckResult("invariance", passed, summary, lines)


# --------------------------------------------------------------------------
# Indirect propagation vs direct frame transform.

def propagation_errors(trace: Trace, scenario: Scenario,
                       horizon: float) -> np.ndarray:
    """Per-landmark position error of sensor-frame forward integration against
    the direct transform at the recorded end configuration."""
    dt = trace.dt
    steps = int(round(horizon / dt))
    if steps + 1 > len(trace.records):
        raise ValueError("trace shorter than requested horizon")
    q_traj = [trace.records[k].q for k in range(steps + 1)]
    v_traj = [trace.records[k].v_star for k in range(steps)]
    model = scenario.model
    rot0, org0 = model.sensor_pose(q_traj[0])
    rot1, org1 = model.sensor_pose(q_traj[-1])
    p0 = world_to_sensor(rot0, org0, scenario.store.positions)
    direct = world_to_sensor(rot1, org1, scenario.store.positions)
    errors = np.empty(len(p0))
    for i in range(len(p0)):
        p_end = propagate_landmark(model, q_traj, v_traj, p0[i],
                                   0.0, horizon, dt)
        errors[i] = np.linalg.norm(p_end - direct[i])
    return errors


def check_propagation(horizon: float = 10.0, tol: float = 1e-4,
                      scenario: Optional[Scenario] = None,
                      trace: Optional[Trace] = None) -> CheckResult:
    if scenario is None:
        from .scenario_io import bundled_scenario_path, load_scenario
        scenario, _ = load_scenario(bundled_scenario_path("example3"))
    if trace is None:
        trace = run(scenario)
    errors = propagation_errors(trace, scenario, horizon)
    worst = float(errors.max())
    passed = worst <= tol
    summary = (f"{len(errors)} landmarks integrated over {horizon:g} s: "
               f"max error {worst:.3e} (tolerance {tol:g})")
    lines = [] if passed else [
        f"FAIL landmark {i}: error {e:.3e}"
        for i, e in enumerate(errors) if e > tol]
    return CheckResult("propagation", passed, summary, lines)


# --------------------------------------------------------------------------
# Suite registry for the command line.

SUITES = ("invariance", "qp-oracle", "equivalence", "propagation", "all")


def run_suite(name: str) -> List[CheckResult]:
    runners: Dict[str, object] = {
        "invariance": check_invariance,
        "qp-oracle": check_qp_oracle,
        "equivalence": check_equivalence,
        "propagation": check_propagation,
    }
    if name == "all":
        return [runners[k]() for k in ("qp-oracle", "equivalence",
                                       "propagation", "invariance")]
    if name not in runners:
        raise ValueError(f"unknown suite {name!r} (expected one of {SUITES})")
    return [runners[name]()]
