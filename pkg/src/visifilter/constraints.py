"""Barrier constraint assembly for visibility maintenance.

The filter state augments the robot configuration q with two auxiliary vectors
over the active landmark set: a per-landmark score credit lam (how much of the
landmark's weight still counts toward the smoothed score) and a blend mu that
arbitrates the disjunction "either the credit is surrendered (lam <= 0) or the
landmark is inside the field of view (rho >= 0)". Everything the filter
enforces is a family of scalar inequalities h >= 0 that are affine in the
augmented input u = (v, v_lam, v_mu):

  h1          sum_l lam_l w_l - W            smoothed score above threshold
  h2[l]       1 - lam_l                      credit never exceeds full weight
  h3[l,k]     -mu_l lam_l + (1 - mu_l) rho_k fov membership or surrendered credit
  h4[l]       mu_l                           blend stays in [0, 1]
  h5[l]       1 - mu_l
  h6          s(q) - r                       obstacle clearance (optional)

build_rows returns the stacked values and input coefficients (the time
derivative of each h equals coeffs . u), so the per-tick program only has to
bolt on the decay right-hand sides and the input box.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Dict, Iterator, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .kinematics import RobotModel, world_to_sensor
from .visibility import LandmarkStore, VisibilityModel, sample_features, visible_mask
from .world import World, signed_distance

__all__ = [
    "AuxState",
    "AugmentedState",
    "ConstraintParams",
    "ConstraintRow",
    "ConstraintSet",
    "InfeasibleStartError",
    "build_rows",
    "initialize",
    "reinitialize",
    "check_equivalence_sample",
    "label_str",
    "FAMILIES",
]

FAMILIES = (1, 2, 3, 4, 5, 6)

# Snap tolerance for auxiliary bounds: exact rate integration cannot overshoot
# [0, 1] when alpha * dt <= 1, so anything beyond this is an integration bug.
AUX_BOUND_TOL = 1e-9


@dataclass(frozen=True)
class AuxState:
    """Auxiliary vectors over the active landmarks: credit lam <= 1, blend mu in [0, 1]."""

    lam: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        if lam.shape != mu.shape:
            raise ValueError("lam and mu must have equal length")
        if lam.size and float(lam.max(initial=-np.inf)) > 1.0 + AUX_BOUND_TOL:
            raise ValueError("lam exceeds 1")
        if mu.size and (mu.min(initial=np.inf) < -AUX_BOUND_TOL or mu.max(initial=-np.inf) > 1.0 + AUX_BOUND_TOL):
            raise ValueError("mu outside [0, 1]")
        object.__setattr__(self, "lam", np.minimum(lam, 1.0))
        object.__setattr__(self, "mu", np.clip(mu, 0.0, 1.0))


@dataclass(frozen=True)
class AugmentedState:
    """Filter state: configuration, auxiliary vectors, and the tracked landmarks.

    p_sensor holds each active landmark's sensor-frame position as carried by
    the filter (measured at observation events, propagated in between), and
    weights caches their score weights; both are aligned with active_ids.
    """

    q: np.ndarray
    aux: AuxState
    active_ids: Tuple[int, ...]
    p_sensor: np.ndarray
    weights: np.ndarray

    @property
    def n_active(self) -> int:
        return len(self.active_ids)

    @property
    def lam(self) -> np.ndarray:
        return self.aux.lam

    @property
    def mu(self) -> np.ndarray:
        return self.aux.mu

    def smoothed_score(self) -> float:
        """sum_l lam_l w_l over the active set."""
        return float(self.aux.lam @ self.weights) if self.n_active else 0.0


@dataclass(frozen=True)
class ConstraintParams:
    required_score: float
    alphas: Tuple[float, float, float, float, float, float] = (1.0,) * 6
    collision_enabled: bool = False
    robot_radius: float = 0.3

    def __post_init__(self):
        if self.required_score <= 0.0:
            raise ValueError("required_score must be positive")
        alphas = tuple(float(a) for a in self.alphas)
        if len(alphas) != 6 or any(a <= 0.0 for a in alphas):
            raise ValueError("alphas must be six positive gains")
        object.__setattr__(self, "alphas", alphas)
        if self.robot_radius < 0.0:
            raise ValueError("robot_radius must be nonnegative")


class ConstraintRow(NamedTuple):
    value: float
    coeffs: np.ndarray
    alpha: float
    label: Tuple[int, Optional[int], Optional[int]]


def label_str(label: Tuple[int, Optional[int], Optional[int]]) -> str:
    family, lm, comp = label
    if lm is None:
        return f"h{family}"
    if comp is None:
        return f"h{family}[{lm}]"
    return f"h{family}[{lm},{comp}]"


class InfeasibleStartError(ValueError):
    """The initial configuration cannot satisfy the constraint set."""

    def __init__(self, message: str, deficit: float):
        super().__init__(message)
        self.deficit = deficit


# Row layouts repeat unchanged between observation events; cache the label
# tuples and per-family row indices keyed by what actually varies.
_LAYOUT_CACHE: Dict[tuple, tuple] = {}


def _row_layout(active_ids, frozen, d, collision):
    key = (active_ids, frozen, d, collision)
    hit = _LAYOUT_CACHE.get(key)
    if hit is not None:
        return hit
    labels = [(1, None, None)]
    labels += [(2, l, None) for l in active_ids]
    for i, l in enumerate(active_ids):
        if frozen[i]:
            labels.append((3, l, None))
        else:
            labels += [(3, l, k) for k in range(d)]
    labels += [(4, l, None) for l in active_ids]
    labels += [(5, l, None) for l in active_ids]
    if collision:
        labels.append((6, None, None))
    labels = tuple(labels)
    families = np.array([lab[0] for lab in labels], dtype=int)
    fam_rows = {f: np.flatnonzero(families == f) for f in FAMILIES}
    if len(_LAYOUT_CACHE) > 256:
        _LAYOUT_CACHE.clear()
    _LAYOUT_CACHE[key] = (labels, fam_rows)
    return labels, fam_rows


@dataclass
class ConstraintSet:
    """Stacked constraint rows: values h, input coefficients (h_dot = coeffs u),
    per-row decay gains, and labels aligned with the rows."""

    values: np.ndarray
    coeffs: np.ndarray
    alphas: np.ndarray
    labels: Tuple[Tuple[int, Optional[int], Optional[int]], ...]
    fam_rows: Dict[int, np.ndarray]
    n_inputs: int

    def __len__(self) -> int:
        return len(self.values)

    def rows(self) -> Iterator[ConstraintRow]:
        for i, label in enumerate(self.labels):
            yield ConstraintRow(float(self.values[i]), self.coeffs[i], float(self.alphas[i]), label)

    def family_min(self) -> Dict[int, float]:
        """Per-family minimum h value; families with no rows report nan."""
        out = {}
        for f in FAMILIES:
            idx = self.fam_rows[f]
            out[f] = float(self.values[idx].min()) if idx.size else float("nan")
        return out

    def min_value(self) -> float:
        return float(self.values.min()) if len(self.values) else float("inf")

    def qp_rows(
        self, eps_num: float, margin: float = 0.0
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Half-space form -coeffs u <= alpha * h_eff for the per-tick program.

        Families 3 and 6 are the only rows nonlinear along the flow, so a
        zero-order-hold input can cut a second-order sliver from them between
        updates; shifting their h down by margin (clamped at zero, which keeps
        the stopping input feasible) holds those boundaries at a standoff that
        absorbs the sliver. Rows whose h has sunk beyond -eps_num are clamped
        to the boundary as well and flagged in the returned breach mask.
        """
        breach = self.values < -eps_num
        h_eff = np.where(breach, 0.0, self.values)
        if margin > 0.0:
            for f in (3, 6):
                idx = self.fam_rows[f]
                if idx.size:
                    h_eff[idx] = np.maximum(h_eff[idx] - margin, 0.0)
        return -self.coeffs, self.alphas * h_eff, breach


def build_rows(
    state: AugmentedState,
    model: RobotModel,
    vis: VisibilityModel,
    params: ConstraintParams,
    world: Optional[World] = None,
) -> ConstraintSet:
    """Assemble every constraint row at the given state.

    Coefficient layout: the first m columns act on v, the next n_active on
    v_lam, the last n_active on v_mu. A landmark whose sensor position has
    fallen out of the visibility model's domain while its credit is already
    surrendered (lam <= 0) contributes the single surrendered-branch row
    -lam_l instead of its rho rows.
    """
    n = state.n_active
    m = model.m
    d = vis.d
    lam, mu, w = state.aux.lam, state.aux.mu, state.weights
    k_cols = m + 2 * n

    if n:
        rho = vis.rho_many(state.p_sensor)
        grads = vis.rho_grad_many(state.p_sensor)
        frozen = tuple((~vis.in_domain_many(state.p_sensor) & (lam <= 0.0)).tolist())
    else:
        rho = np.zeros((0, d))
        grads = np.zeros((0, d, 3))
        frozen = ()

    labels, fam_rows = _row_layout(state.active_ids, frozen, d, params.collision_enabled)
    p_rows = len(labels)
    values = np.zeros(p_rows)
    coeffs = np.zeros((p_rows, k_cols))

    # h1: smoothed score margin; moves only through the credit rates.
    values[0] = float(lam @ w) - params.required_score if n else -params.required_score
    coeffs[0, m : m + n] = w

    row = 1
    if n:
        # h2: credit cap.
        idx = row + np.arange(n)
        values[idx] = 1.0 - lam
        coeffs[idx, m + np.arange(n)] = -1.0
        row += n

        # h3: disjunction rows. Sensor-frame landmark velocity is affine in v:
        # p_dot = -(J_om v) x p - J_v v = ([p]x J_om - J_v) v.
        j_om, j_v = model.twist_maps(state.q)
        pc = np.zeros((n, 3, 3))
        px, py, pz = state.p_sensor[:, 0], state.p_sensor[:, 1], state.p_sensor[:, 2]
        pc[:, 0, 1], pc[:, 0, 2] = -pz, py
        pc[:, 1, 0], pc[:, 1, 2] = pz, -px
        pc[:, 2, 0], pc[:, 2, 1] = -py, px
        B = pc @ j_om - j_v[None, :, :]
        v_coef = (1.0 - mu)[:, None, None] * np.einsum("ndj,njm->ndm", grads, B)
        vals3 = -(mu * lam)[:, None] + (1.0 - mu)[:, None] * rho
        if not any(frozen):
            idx = row + np.arange(n * d)
            values[idx] = vals3.reshape(-1)
            coeffs[idx, :m] = v_coef.reshape(-1, m)
            lcols = m + np.repeat(np.arange(n), d)
            coeffs[idx, lcols] = np.repeat(-mu, d)
            coeffs[idx, n + lcols] = -(lam[:, None] + rho).reshape(-1)
            row += n * d
        else:
            for i in range(n):
                if frozen[i]:
                    values[row] = -lam[i]
                    coeffs[row, m + i] = -1.0
                    row += 1
                else:
                    idx = row + np.arange(d)
                    values[idx] = vals3[i]
                    coeffs[idx, :m] = v_coef[i]
                    coeffs[idx, m + i] = -mu[i]
                    coeffs[idx, m + n + i] = -(lam[i] + rho[i])
                    row += d

        # h4/h5: blend bounds.
        idx = row + np.arange(n)
        values[idx] = mu
        coeffs[idx, m + n + np.arange(n)] = 1.0
        row += n
        idx = row + np.arange(n)
        values[idx] = 1.0 - mu
        coeffs[idx, m + n + np.arange(n)] = -1.0
        row += n

    if params.collision_enabled:
        if world is None:
            raise ValueError("collision checking needs a world")
        s, grad2 = signed_distance(world, state.q[:2])
        values[row] = s - params.robot_radius
        coeffs[row, :m] = grad2 @ model.jacobian(state.q)[:2, :]
        row += 1

    alphas = np.empty(p_rows)
    for f in FAMILIES:
        alphas[fam_rows[f]] = params.alphas[f - 1]
    return ConstraintSet(values, coeffs, alphas, labels, fam_rows, k_cols)


def _capped_visible(q, model, vis, store, n_max, seed):
    rotation, origin = model.sensor_pose(q)
    sensor_pts = world_to_sensor(rotation, origin, store.positions)
    mask = visible_mask(vis, sensor_pts)
    ids = np.flatnonzero(mask)
    cap = len(ids) if n_max is None else n_max
    chosen = sample_features(ids, cap, seed)
    return chosen, sensor_pts[np.asarray(chosen, dtype=int)] if chosen else np.zeros((0, 3))


def initialize(
    q0: np.ndarray,
    model: RobotModel,
    vis: VisibilityModel,
    store: LandmarkStore,
    params: ConstraintParams,
    world: Optional[World] = None,
    n_max: Optional[int] = None,
    seed: int = 0,
) -> AugmentedState:
    """Open the first observation: activate the (capped) visible set with full
    credit (lam = 1) and blend zero. Raises InfeasibleStartError when the
    initial constraint set cannot be nonnegative."""
    q0 = np.asarray(q0, dtype=float)
    active, p_sensor = _capped_visible(q0, model, vis, store, n_max, seed)
    weights = store.weights_of(active)
    score = float(weights.sum())
    if score < params.required_score:
        deficit = params.required_score - score
        raise InfeasibleStartError(
            f"initial visible score {score:.6g} is below the required "
            f"{params.required_score:.6g} (deficit {deficit:.6g})",
            deficit,
        )
    if params.collision_enabled:
        if world is None:
            raise ValueError("collision checking needs a world")
        s, _ = signed_distance(world, q0[:2])
        clearance = s - params.robot_radius
        if clearance < 0.0:
            raise InfeasibleStartError(
                f"initial clearance {clearance:.6g} is negative", -clearance
            )
    n = len(active)
    return AugmentedState(
        q=q0,
        aux=AuxState(np.ones(n), np.zeros(n)),
        active_ids=active,
        p_sensor=p_sensor,
        weights=weights,
    )


def reinitialize(
    state: AugmentedState,
    model: RobotModel,
    vis: VisibilityModel,
    store: LandmarkStore,
    seed: int = 0,
    n_max: Optional[int] = None,
) -> AugmentedState:
    """Observation event: re-measure the visible set, re-cap it with a fresh
    sample, and reset credits to 1 and blends to 0. The new score row value is
    the capped visible score minus the threshold."""
    active, p_sensor = _capped_visible(state.q, model, vis, store, n_max, seed)
    n = len(active)
    return AugmentedState(
        q=state.q,
        aux=AuxState(np.ones(n), np.zeros(n)),
        active_ids=active,
        p_sensor=p_sensor,
        weights=store.weights_of(active),
    )


def check_equivalence_sample(lam: float, rho_vals: Sequence[float], mu_grid_size: int) -> bool:
    """Does some blend mu on a uniform [0, 1] grid make every row
    -mu*lam + (1 - mu)*rho_k nonnegative? Grid witness for the disjunction
    (lam <= 0) or (min rho >= 0)."""
    if mu_grid_size < 2:
        raise ValueError("mu_grid_size must be at least 2")
    grid = np.linspace(0.0, 1.0, mu_grid_size)
    rho_vals = np.asarray(rho_vals, dtype=float)
    vals = -grid[:, None] * lam + (1.0 - grid)[:, None] * rho_vals[None, :]
    return bool(np.any(np.all(vals >= 0.0, axis=1)))
