"""Constraint assembly tests. The load-bearing check is the directional
derivative oracle: every row's coefficient vector must reproduce the finite
difference of its h value along the closed-loop flow."""

import numpy as np
import pytest

from visifilter.constraints import (
    AugmentedState,
    AuxState,
    ConstraintParams,
    InfeasibleStartError,
    build_rows,
    check_equivalence_sample,
    initialize,
    reinitialize,
)
from visifilter.constraints import label_str
from visifilter.kinematics import (
    DiffDriveGimbal,
    PlanarCamBot,
    integrate_configuration,
    world_to_sensor,
)
from visifilter.visibility import LandmarkStore, SectorFov2D, StereoFrustum
from visifilter.world import Disc, World


def _state_at(model, store, ids, q, lam, mu):
    rotation, origin = model.sensor_pose(q)
    return AugmentedState(
        q=np.asarray(q, dtype=float),
        aux=AuxState(np.asarray(lam, dtype=float), np.asarray(mu, dtype=float)),
        active_ids=tuple(ids),
        p_sensor=world_to_sensor(rotation, origin, store.positions_of(ids)),
        weights=store.weights_of(ids),
    )


def _advanced(model, store, ids, q, lam, mu, u, dt):
    """State moved by dt under constant input u, landmarks re-projected."""
    m = model.m
    n = len(ids)
    q_next = integrate_configuration(model, q, u[:m], dt)
    lam_next = lam + dt * u[m : m + n]
    mu_next = mu + dt * u[m + n :]
    return _state_at(model, store, ids, q_next, lam_next, mu_next)


def test_aux_state_validation_and_snapping():
    aux = AuxState(np.array([1.0 + 1e-12]), np.array([-1e-12]))
    assert aux.lam[0] == 1.0
    assert aux.mu[0] == 0.0
    with pytest.raises(ValueError):
        AuxState(np.array([1.1]), np.array([0.0]))
    with pytest.raises(ValueError):
        AuxState(np.array([0.5]), np.array([1.2]))
    with pytest.raises(ValueError):
        AuxState(np.array([0.5]), np.array([-0.2]))


def test_constraint_params_validation():
    with pytest.raises(ValueError):
        ConstraintParams(required_score=0.0)
    with pytest.raises(ValueError):
        ConstraintParams(required_score=1.0, alphas=(1.0,) * 5)
    with pytest.raises(ValueError):
        ConstraintParams(required_score=1.0, alphas=(1.0,) * 5 + (-1.0,))
    with pytest.raises(ValueError):
        ConstraintParams(required_score=1.0, robot_radius=-0.1)


def test_row_layout_and_hand_values():
    model = PlanarCamBot()
    vis = SectorFov2D()  # half-angle 0.5, range 1
    store = LandmarkStore(np.array([[0.5, 0.0]]))
    params = ConstraintParams(required_score=0.5, collision_enabled=True)
    world = World(obstacles=(Disc(center=(5.0, 5.0), radius=1.0),))
    state = _state_at(model, store, [0], [0.0, 0.0, 0.0], [0.7], [0.0])

    rows = build_rows(state, model, vis, params, world)
    # h1, h2, three h3 components, h4, h5, h6 on 3 + 2*1 input columns.
    assert rows.values.shape == (8,)
    assert rows.coeffs.shape == (8, 5)
    assert [label_str(lb) for lb in rows.labels] == [
        "h1", "h2[0]", "h3[0,0]", "h3[0,1]", "h3[0,2]", "h4[0]", "h5[0]", "h6"]

    s = np.sin(0.5)
    assert rows.values[0] == pytest.approx(0.2)
    assert rows.values[1] == pytest.approx(0.3)
    assert rows.values[2] == pytest.approx(0.5 * s)
    assert rows.values[3] == pytest.approx(0.5 * s)
    assert rows.values[4] == pytest.approx(0.5)
    assert rows.values[5] == pytest.approx(0.0)
    assert rows.values[6] == pytest.approx(1.0)
    assert rows.values[7] == pytest.approx(np.hypot(5.0, 5.0) - 1.0 - 0.3)

    assert np.allclose(rows.coeffs[0], [0.0, 0.0, 0.0, 1.0, 0.0])
    assert np.allclose(rows.coeffs[1], [0.0, 0.0, 0.0, -1.0, 0.0])
    # Range component of h3 at mu=0: moving toward the landmark raises h.
    assert np.allclose(rows.coeffs[4], [1.0, 0.0, 0.0, 0.0, -(0.7 + 0.5)])
    assert np.allclose(rows.coeffs[5], [0.0, 0.0, 0.0, 0.0, 1.0])
    assert np.allclose(rows.coeffs[6], [0.0, 0.0, 0.0, 0.0, -1.0])
    # Gradient of the clearance points from the obstacle toward the robot.
    root_half = np.sqrt(0.5)
    assert np.allclose(rows.coeffs[7], [-root_half, -root_half, 0.0, 0.0, 0.0])

    fam = rows.family_min()
    assert fam[1] == pytest.approx(0.2)
    assert fam[3] == pytest.approx(0.5 * s)
    assert fam[6] == pytest.approx(rows.values[7])
    assert rows.min_value() == pytest.approx(0.0)


def test_coefficients_match_flow_derivative_planar():
    model = PlanarCamBot()
    vis = SectorFov2D(angle_of_view=1.2, sensing_range=2.0)
    store = LandmarkStore(np.array([[0.8, 0.1], [0.4, -0.3], [1.2, 0.4]]))
    params = ConstraintParams(required_score=1.0, collision_enabled=True)
    world = World(obstacles=(Disc(center=(3.0, -2.0), radius=0.5),))
    q = np.array([0.0, 0.0, 0.1])
    lam = np.array([0.6, 0.8, 0.5])
    mu = np.array([0.3, 0.1, 0.7])
    rng = np.random.default_rng(8)
    state = _state_at(model, store, [0, 1, 2], q, lam, mu)
    rows = build_rows(state, model, vis, params, world)
    dt = 1e-5
    for _ in range(10):
        u = rng.normal(size=3 + 2 * 3) * 0.5
        fwd = build_rows(_advanced(model, store, [0, 1, 2], q, lam, mu, u, dt),
                         model, vis, params, world)
        back = build_rows(_advanced(model, store, [0, 1, 2], q, lam, mu, -u, dt),
                          model, vis, params, world)
        numeric = (fwd.values - back.values) / (2.0 * dt)
        assert np.max(np.abs(numeric - rows.coeffs @ u)) < 1e-6


def test_coefficients_match_flow_derivative_gimbal():
    model = DiffDriveGimbal()
    vis = StereoFrustum()
    store = LandmarkStore(np.array([[1.5, 0.2, 0.1], [2.5, -0.4, -0.2]]))
    params = ConstraintParams(required_score=1.0)
    q = np.array([0.0, 0.0, 0.2, -0.1])
    lam = np.array([0.7, 0.4])
    mu = np.array([0.2, 0.6])
    rng = np.random.default_rng(21)
    state = _state_at(model, store, [0, 1], q, lam, mu)
    rows = build_rows(state, model, vis, params)
    dt = 1e-6
    for _ in range(10):
        u = rng.normal(size=3 + 2 * 2) * 0.5
        fwd = build_rows(_advanced(model, store, [0, 1], q, lam, mu, u, dt),
                         model, vis, params)
        back = build_rows(_advanced(model, store, [0, 1], q, lam, mu, -u, dt),
                          model, vis, params)
        numeric = (fwd.values - back.values) / (2.0 * dt)
        assert np.max(np.abs(numeric - rows.coeffs @ u)) < 1e-4 * max(
            1.0, np.max(np.abs(rows.coeffs @ u)))


def test_surrendered_branch_row():
    # A landmark sitting on the sensor origin is out of the model's domain;
    # once its credit is gone the h3 block collapses to the single row -lam.
    model = PlanarCamBot()
    vis = SectorFov2D()
    store = LandmarkStore(np.array([[0.0, 0.0], [0.5, 0.0]]))
    params = ConstraintParams(required_score=0.2)
    state = _state_at(model, store, [0, 1], [0.0, 0.0, 0.0], [0.0, 0.9], [0.0, 0.0])
    rows = build_rows(state, model, vis, params)
    # h1, two h2, one surrendered row plus three regular h3, two h4, two h5.
    assert len(rows.values) == 1 + 2 + (1 + 3) + 2 + 2
    surrendered = rows.fam_rows[3][0]
    assert label_str(rows.labels[surrendered]) == "h3[0]"
    assert rows.values[surrendered] == pytest.approx(0.0)
    expected = np.zeros(3 + 2 * 2)
    expected[3] = -1.0
    assert np.allclose(rows.coeffs[surrendered], expected)


def test_qp_rows_margin_and_breach_clamp():
    model = PlanarCamBot()
    vis = SectorFov2D()
    store = LandmarkStore(np.array([[0.5, 0.0]]))
    params = ConstraintParams(required_score=0.5, collision_enabled=True)
    world = World(obstacles=(Disc(center=(5.0, 5.0), radius=1.0),))
    state = _state_at(model, store, [0], [0.0, 0.0, 0.0], [0.7], [0.0])
    rows = build_rows(state, model, vis, params, world)

    plain_G, plain_b, breach = rows.qp_rows(1e-6, margin=0.0)
    assert np.array_equal(plain_G, -rows.coeffs)
    assert np.allclose(plain_b, rows.alphas * rows.values)
    assert not breach.any()

    margin_G, margin_b, _ = rows.qp_rows(1e-6, margin=1e-3)
    shifted = np.zeros(len(rows.values), dtype=bool)
    for fam in (3, 6):
        shifted[rows.fam_rows[fam]] = True
    assert np.allclose(margin_b[~shifted], plain_b[~shifted])
    assert np.allclose(margin_b[shifted],
                       rows.alphas[shifted] * np.maximum(rows.values[shifted] - 1e-3, 0.0))
    # The standoff clamps at zero rather than going negative.
    assert np.all(margin_b >= 0.0)


def test_qp_rows_flags_sunken_rows():
    model = PlanarCamBot()
    vis = SectorFov2D()
    store = LandmarkStore(np.array([[2.5, 0.0]]))  # far outside sensing range
    params = ConstraintParams(required_score=0.2)
    state = _state_at(model, store, [0], [0.0, 0.0, 0.0], [0.9], [0.0])
    rows = build_rows(state, model, vis, params)
    _, rhs, breach = rows.qp_rows(1e-6)
    assert breach.any()
    assert np.all(rhs[breach] == 0.0)


def test_initialize_builds_fresh_credits():
    model = PlanarCamBot()
    vis = SectorFov2D(angle_of_view=1.0, sensing_range=2.5)
    store = LandmarkStore(np.array([[0.5, 0.0], [1.0, 0.1], [1.5, -0.1], [-1.0, 0.0]]))
    params = ConstraintParams(required_score=2.0)
    state = initialize(np.array([0.0, 0.0, 0.0]), model, vis, store, params)
    assert state.n_active == 3  # the landmark behind the sensor is not visible
    assert np.allclose(state.lam, 1.0)
    assert np.allclose(state.mu, 0.0)
    assert state.smoothed_score() == pytest.approx(3.0)


def test_initialize_respects_cap_and_seed():
    model = PlanarCamBot()
    vis = SectorFov2D(angle_of_view=1.2, sensing_range=3.0)
    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.uniform(0.3, 2.5, 20), rng.uniform(-0.3, 0.3, 20)])
    store = LandmarkStore(pts)
    params = ConstraintParams(required_score=1.0)
    a = initialize(np.zeros(3), model, vis, store, params, n_max=5, seed=3)
    b = initialize(np.zeros(3), model, vis, store, params, n_max=5, seed=3)
    assert a.n_active == 5
    assert a.active_ids == b.active_ids


def test_initialize_raises_on_score_deficit():
    model = PlanarCamBot()
    vis = SectorFov2D()
    store = LandmarkStore(np.array([[0.5, 0.0]]))
    params = ConstraintParams(required_score=3.0)
    with pytest.raises(InfeasibleStartError) as err:
        initialize(np.zeros(3), model, vis, store, params)
    assert err.value.deficit == pytest.approx(2.0)


def test_initialize_raises_inside_obstacle():
    model = PlanarCamBot()
    vis = SectorFov2D()
    store = LandmarkStore(np.array([[0.5, 0.0]]))
    params = ConstraintParams(required_score=0.5, collision_enabled=True)
    world = World(obstacles=(Disc(center=(0.0, 0.0), radius=1.0),))
    with pytest.raises(InfeasibleStartError):
        initialize(np.zeros(3), model, vis, store, params, world=world)


def test_reinitialize_resets_credits_on_fresh_set():
    model = PlanarCamBot()
    vis = SectorFov2D(angle_of_view=1.0, sensing_range=2.5)
    store = LandmarkStore(np.array([[0.5, 0.0], [1.0, 0.1], [1.5, -0.1]]))
    params = ConstraintParams(required_score=1.0)
    state = initialize(np.zeros(3), model, vis, store, params)
    worn = AugmentedState(
        q=state.q,
        aux=AuxState(state.lam * 0.4, np.minimum(state.mu + 0.5, 1.0)),
        active_ids=state.active_ids,
        p_sensor=state.p_sensor,
        weights=state.weights,
    )
    fresh = reinitialize(worn, model, vis, store)
    assert np.allclose(fresh.lam, 1.0)
    assert np.allclose(fresh.mu, 0.0)
    assert fresh.smoothed_score() == pytest.approx(3.0)


def test_equivalence_sample_hand_cases():
    assert check_equivalence_sample(0.5, [1.0, 0.5, 2.0], 101)
    assert check_equivalence_sample(-0.2, [-1.0, 1.0, 1.0], 101)
    assert not check_equivalence_sample(0.5, [-0.1, 1.0, 1.0], 101)
    with pytest.raises(ValueError):
        check_equivalence_sample(0.5, [1.0, 1.0, 1.0], 1)


def test_label_str_formats():
    assert label_str((1, None, None)) == "h1"
    assert label_str((2, 7, None)) == "h2[7]"
    assert label_str((3, 2, 1)) == "h3[2,1]"
