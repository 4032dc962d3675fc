import numpy as np
import pytest

from visifilter import qp
from visifilter.constraints import ConstraintParams, initialize
from visifilter.kinematics import PlanarCamBot
from visifilter.safety_filter import (
    FilterConfig,
    deviation_cost,
    event_sample_seed,
    filter_step,
    run_observation_event,
)
from visifilter.visibility import LandmarkStore, SectorFov2D


def _setup(required_score=2.0, count=8):
    model = PlanarCamBot()
    vis = SectorFov2D(angle_of_view=1.2, sensing_range=3.0)
    rng = np.random.default_rng(14)
    pts = np.column_stack([rng.uniform(0.5, 2.0, count), rng.uniform(-0.3, 0.3, count)])
    store = LandmarkStore(pts)
    params = ConstraintParams(required_score=required_score)
    cfg = FilterConfig(constraints=params, input_cost=np.array([1.0, 1.0, 0.001]))
    state = initialize(np.zeros(3), model, vis, store, params,
                       n_max=cfg.n_max, seed=cfg.seed)
    return model, vis, store, cfg, state


def test_config_validation():
    params = ConstraintParams(required_score=1.0)
    cfg = FilterConfig(constraints=params, input_cost=np.array([1.0, 2.0, 3.0]))
    assert cfg.input_cost.shape == (3, 3)
    assert np.allclose(np.diag(cfg.input_cost), [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        FilterConfig(constraints=params, input_cost=np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        FilterConfig(constraints=params, input_cost=np.eye(3), k_lambda=0.0)
    with pytest.raises(ValueError):
        FilterConfig(constraints=params, input_cost=np.eye(3), margin=-1e-3)


def test_deviation_cost_hand_value():
    cost = np.diag([2.0, 3.0])
    assert deviation_cost([1.0, 0.0], [0.0, 0.0], cost) == pytest.approx(2.0)
    assert deviation_cost([1.0, 1.0], [1.0, 0.0], cost) == pytest.approx(3.0)


def test_inactive_program_passes_reference_through():
    # With comfortable margins everywhere, the program must not touch the
    # reference: empty active set and machine-precision passthrough.
    model, vis, store, cfg, state = _setup()
    v_ref = np.array([0.05, 0.02, -0.03])
    new_state, out = filter_step(state, v_ref, model, vis, cfg)
    assert out.status == "optimal"
    assert not out.fallback
    assert out.qp_active == ()
    assert np.max(np.abs(out.v_star - v_ref)) <= 1e-9
    assert np.max(np.abs(np.concatenate([out.v_lam, out.v_mu]))) <= 1e-9
    assert out.deviation <= 1e-15
    assert new_state.n_active == state.n_active


def test_binding_constraint_deflects_reference():
    model, vis, store, cfg, state = _setup()
    # Leave almost no slack on the score and drive away from the landmarks.
    tight = ConstraintParams(required_score=state.smoothed_score() - 0.05)
    cfg = FilterConfig(constraints=tight, input_cost=np.array([1.0, 1.0, 0.001]))
    v_ref = np.array([-2.0, 0.0, 0.0])
    _, out = filter_step(state, v_ref, model, vis, cfg)
    assert out.status == "optimal"
    assert out.deviation > 1e-6
    assert out.active_labels
    assert np.max(np.abs(out.v_star - v_ref)) > 1e-4


def test_solver_failure_falls_back_to_stopping_input(monkeypatch):
    model, vis, store, cfg, state = _setup()

    def forced_failure(problem, settings=None, **kwargs):
        k = problem.H.shape[0]
        return qp.QpSolution(u=np.full(k, 99.0), duals=np.zeros(problem.n_constraints),
                             active=(), iterations=1, status="max_iter",
                             message="forced")

    monkeypatch.setattr(qp, "solve", forced_failure)
    new_state, out = filter_step(state, np.array([0.5, 0.0, 0.0]), model, vis, cfg)
    assert out.fallback
    assert np.allclose(out.v_star, 0.0)
    assert np.allclose(new_state.q, state.q)
    assert np.allclose(new_state.lam, state.lam)


def test_aux_states_stay_inside_bounds():
    model, vis, store, cfg, state = _setup()
    rng = np.random.default_rng(4)
    for _ in range(200):
        v_ref = rng.uniform(-1.0, 1.0, size=3)
        state, out = filter_step(state, v_ref, model, vis, cfg)
        assert not out.fallback
        assert np.all(state.lam <= 1.0 + 1e-12)
        assert np.all(state.mu >= -1e-12) and np.all(state.mu <= 1.0 + 1e-12)


def test_event_sample_seed_deterministic():
    assert event_sample_seed(5, 3) == event_sample_seed(5, 3)
    assert event_sample_seed(5, 3) != event_sample_seed(5, 4)
    assert event_sample_seed(6, 3) != event_sample_seed(5, 3)


def test_observation_event_resets_credits():
    model, vis, store, cfg, state = _setup()
    # Wear the credits down before the event.
    for _ in range(50):
        state, _ = filter_step(state, np.array([-0.8, 0.3, 0.4]), model, vis, cfg)
    fresh = run_observation_event(state, model, vis, store, cfg, event_index=7)
    assert np.allclose(fresh.lam, 1.0)
    assert np.allclose(fresh.mu, 0.0)
    # Score identity at the jump: smoothed score equals the capped visible sum.
    assert fresh.smoothed_score() == pytest.approx(float(fresh.weights.sum()))
    again = run_observation_event(state, model, vis, store, cfg, event_index=7)
    assert fresh.active_ids == again.active_ids
