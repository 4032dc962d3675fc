"""Per-tick minimally invasive input filtering.

Each control period solves one strictly convex program: stay as close as
possible (in a weighted metric) to the reference input while every constraint
row's rate satisfies h_dot >= -alpha * h and the robot input stays inside its
box. The auxiliary rates are then integrated exactly and the configuration by
RK4, carrying the tracked landmark positions along.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from . import qp
from .constraints import (
    AugmentedState,
    AuxState,
    ConstraintParams,
    ConstraintSet,
    build_rows,
    label_str,
    reinitialize,
)
from .kinematics import RobotModel, rk4_joint_step
from .visibility import LandmarkStore, VisibilityModel
from .world import World

__all__ = ["FilterConfig", "FilterOutput", "filter_step", "run_observation_event", "deviation_cost", "event_sample_seed"]


@dataclass(frozen=True)
class FilterConfig:
    constraints: ConstraintParams
    input_cost: np.ndarray
    k_lambda: float = 1e-3
    k_mu: float = 1e-3
    dt: float = 0.01
    camera_rate: float = 10.0
    n_max: Optional[int] = 50
    seed: int = 0
    eps_num: float = 1e-6
    margin: float = 1e-3
    solver: qp.SolverSettings = field(default_factory=qp.SolverSettings)

    def __post_init__(self):
        cost = np.asarray(self.input_cost, dtype=float)
        if cost.ndim == 1:
            cost = np.diag(cost)
        if not np.allclose(cost, cost.T) or np.any(np.linalg.eigvalsh(cost) <= 0.0):
            raise ValueError("input_cost must be symmetric positive definite")
        object.__setattr__(self, "input_cost", cost)
        if self.k_lambda <= 0.0 or self.k_mu <= 0.0:
            raise ValueError("auxiliary rate costs must be positive")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.camera_rate < 0.0:
            raise ValueError("camera_rate must be nonnegative")
        if self.margin < 0.0:
            raise ValueError("margin must be nonnegative")


@dataclass
class FilterOutput:
    v_star: np.ndarray
    v_lam: np.ndarray
    v_mu: np.ndarray
    deviation: float
    rows: ConstraintSet
    active_labels: Tuple[str, ...]
    qp_active: Tuple[int, ...]
    iterations: int
    status: str
    fallback: bool
    breaches: Tuple[str, ...]


def deviation_cost(u: np.ndarray, u_ref: np.ndarray, cost: np.ndarray) -> float:
    """(u - u_ref)' R (u - u_ref) for a weight matrix R."""
    delta = np.asarray(u, dtype=float) - np.asarray(u_ref, dtype=float)
    return float(delta @ np.asarray(cost, dtype=float) @ delta)


def _augmented_cost(cfg: FilterConfig, n: int, m: int) -> np.ndarray:
    cost = np.zeros((m + 2 * n, m + 2 * n))
    cost[:m, :m] = cfg.input_cost
    idx = np.arange(m, m + n)
    cost[idx, idx] = cfg.k_lambda
    idx = np.arange(m + n, m + 2 * n)
    cost[idx, idx] = cfg.k_mu
    return cost


def filter_step(
    state: AugmentedState,
    v_ref: np.ndarray,
    model: RobotModel,
    vis: VisibilityModel,
    cfg: FilterConfig,
    world: Optional[World] = None,
    warm_start: Optional[Sequence[int]] = None,
) -> Tuple[AugmentedState, FilterOutput]:
    """One control period: build rows, solve the program, integrate.

    Rows already below -eps_num are logged as breaches and clamped to the
    boundary for the program so the stopping input u = 0 stays feasible; on
    solver failure the stopping input is applied outright (fallback flag).
    """
    m, n = model.m, state.n_active
    v_ref = np.asarray(v_ref, dtype=float)
    rows = build_rows(state, model, vis, cfg.constraints, world)
    G_rows, rhs, breach_mask = rows.qp_rows(cfg.eps_num, cfg.margin)

    a_u, b_u = model.input_polytope
    G_box = np.zeros((len(b_u), m + 2 * n))
    G_box[:, :m] = a_u
    G = np.vstack([G_rows, G_box])
    g = np.concatenate([rhs, b_u])

    cost = _augmented_cost(cfg, n, m)
    H = 2.0 * cost
    u_ref = np.concatenate([v_ref, np.zeros(2 * n)])
    problem = qp.QpProblem(H=H, f=-H @ u_ref, G=G, g=g)
    feasible = np.zeros(m + 2 * n) if float(g.min()) >= 0.0 else None
    sol = qp.solve(problem, cfg.solver, feasible_point=feasible, warm_start=warm_start)

    fallback = sol.status != "optimal"
    u = np.zeros(m + 2 * n) if fallback else sol.u
    v_star, v_lam, v_mu = u[:m], u[m : m + n], u[m + n :]

    lam_next = np.minimum(state.aux.lam + cfg.dt * v_lam, 1.0)
    mu_next = np.clip(state.aux.mu + cfg.dt * v_mu, 0.0, 1.0)
    q_next, p_next = rk4_joint_step(model, state.q, state.p_sensor if n else None, v_star, cfg.dt)
    new_state = AugmentedState(
        q=q_next,
        aux=AuxState(lam_next, mu_next),
        active_ids=state.active_ids,
        p_sensor=p_next if n else state.p_sensor,
        weights=state.weights,
    )

    n_rows = len(rows)
    active_labels = tuple(
        label_str(rows.labels[i]) if i < n_rows else f"input[{i - n_rows}]" for i in sol.active
    )
    output = FilterOutput(
        v_star=v_star,
        v_lam=v_lam,
        v_mu=v_mu,
        deviation=deviation_cost(u, u_ref, cost),
        rows=rows,
        active_labels=active_labels,
        qp_active=sol.active,
        iterations=sol.iterations,
        status=sol.status,
        fallback=fallback,
        breaches=tuple(label_str(rows.labels[i]) for i in np.flatnonzero(breach_mask)),
    )
    return new_state, output


def event_sample_seed(seed: int, event_index: int) -> int:
    """Deterministic per-event seed for the feature-cap sample."""
    return int(np.random.SeedSequence([int(seed), int(event_index)]).generate_state(1)[0])


def run_observation_event(
    state: AugmentedState,
    model: RobotModel,
    vis: VisibilityModel,
    store: LandmarkStore,
    cfg: FilterConfig,
    event_index: int,
) -> AugmentedState:
    """Re-observe at an event instant: fresh capped visible set, credits back
    to 1, blends to 0, landmark positions re-measured."""
    return reinitialize(
        state,
        model,
        vis,
        store,
        seed=event_sample_seed(cfg.seed, event_index),
        n_max=cfg.n_max,
    )
