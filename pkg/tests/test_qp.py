"""Solver unit tests: hand-checked programs, then randomized batteries whose
pass condition is the KKT system itself."""

import numpy as np
import pytest

from visifilter.qp import QpProblem, SolverSettings, kkt_residual, solve


def _random_problem(rng):
    n = int(rng.integers(1, 6))
    p = int(rng.integers(0, 13))
    A = rng.normal(size=(n, n))
    H = A @ A.T + (0.3 + rng.uniform()) * np.eye(n)
    f = rng.normal(size=n)
    G = rng.normal(size=(p, n))
    x0 = rng.normal(size=n)
    g = G @ x0 + rng.uniform(0.0, 1.0, size=p)
    return QpProblem(H, f, G, g)


def test_single_active_row_hand_solution():
    # min 0.5|u - (1,0)|^2 with u1 <= 0.3: clip to the boundary, dual 0.7.
    problem = QpProblem(np.eye(2), [-1.0, 0.0], [[1.0, 0.0]], [0.3])
    sol = solve(problem)
    assert sol.status == "optimal"
    assert np.allclose(sol.u, [0.3, 0.0], atol=1e-12)
    assert sol.active == (0,)
    assert sol.duals[0] == pytest.approx(0.7, abs=1e-9)
    assert kkt_residual(problem, sol.u, sol.duals)["max"] < 1e-9
    assert sol.objective == pytest.approx(0.5 * 0.09 - 0.3, abs=1e-12)


def test_interior_optimum_leaves_rows_inactive():
    problem = QpProblem(np.eye(2), [-0.1, -0.2], [[1.0, 0.0], [0.0, 1.0]], [5.0, 5.0])
    sol = solve(problem)
    assert sol.status == "optimal"
    assert sol.active == ()
    assert np.allclose(sol.u, [0.1, 0.2], atol=1e-12)
    assert np.allclose(sol.duals, 0.0)


def test_two_active_rows_hand_solution():
    problem = QpProblem(np.eye(2), [-1.0, -1.0],
                        [[1.0, 0.0], [0.0, 1.0]], [0.5, 0.25])
    sol = solve(problem)
    assert sol.status == "optimal"
    assert np.allclose(sol.u, [0.5, 0.25], atol=1e-12)
    assert sol.active == (0, 1)
    assert np.allclose(sol.duals, [0.5, 0.75], atol=1e-9)


def test_opposing_rows_pin_a_coordinate():
    # u <= 0.5 together with -u <= -0.5 forces u = 0.5 even though the pair
    # is linearly dependent.
    problem = QpProblem([[1.0]], [0.0], [[1.0], [-1.0]], [0.5, -0.5])
    sol = solve(problem)
    assert sol.status == "optimal"
    assert sol.u[0] == pytest.approx(0.5, abs=1e-9)
    assert kkt_residual(problem, sol.u, sol.duals)["max"] < 1e-9


def test_zero_row_vacuous_or_infeasible():
    vacuous = QpProblem(np.eye(2), [-1.0, 0.0], [[0.0, 0.0]], [1.0])
    sol = solve(vacuous)
    assert sol.status == "optimal"
    assert np.allclose(sol.u, [1.0, 0.0], atol=1e-12)

    hopeless = QpProblem(np.eye(2), [0.0, 0.0], [[0.0, 0.0]], [-1.0])
    sol = solve(hopeless)
    assert sol.status == "infeasible"
    assert "zero row" in sol.message


def test_infeasible_system_detected():
    problem = QpProblem([[1.0]], [0.0], [[1.0], [-1.0]], [-1.0, -1.0])
    sol = solve(problem)
    assert sol.status == "infeasible"
    assert "no feasible point" in sol.message


def test_recovery_from_infeasible_unconstrained_start():
    # The unconstrained minimum 0 violates u >= 1; the solver must still
    # reach the boundary point.
    problem = QpProblem([[1.0]], [0.0], [[-1.0]], [-1.0])
    sol = solve(problem)
    assert sol.status == "optimal"
    assert sol.u[0] == pytest.approx(1.0, abs=1e-9)
    assert sol.duals[0] == pytest.approx(1.0, abs=1e-9)


def test_feasible_point_is_used_when_valid():
    problem = QpProblem(np.eye(2), [-1.0, -1.0],
                        [[1.0, 0.0], [0.0, 1.0]], [0.5, 0.25])
    sol = solve(problem, feasible_point=np.array([0.0, 0.0]))
    assert sol.status == "optimal"
    assert np.allclose(sol.u, [0.5, 0.25], atol=1e-12)


def test_warm_start_reproduces_solution_quickly():
    rng = np.random.default_rng(2)
    for _ in range(20):
        problem = _random_problem(rng)
        cold = solve(problem)
        assert cold.status == "optimal"
        warm = solve(problem, warm_start=cold.active)
        assert warm.status == "optimal"
        assert np.allclose(warm.u, cold.u, atol=1e-9)
        assert warm.iterations <= len(cold.active) + 1


def test_row_scaling_invariance():
    rng = np.random.default_rng(31)
    for _ in range(30):
        problem = _random_problem(rng)
        if problem.n_constraints == 0:
            continue
        sol = solve(problem)
        scale = 10.0 ** rng.uniform(-3.0, 3.0, size=problem.n_constraints)
        scaled = QpProblem(problem.H, problem.f,
                           scale[:, None] * problem.G, scale * problem.g)
        sol_scaled = solve(scaled)
        assert sol_scaled.status == "optimal"
        assert np.max(np.abs(sol_scaled.u - sol.u)) < 1e-8
        assert sol_scaled.active == sol.active


def test_random_battery_satisfies_kkt():
    rng = np.random.default_rng(17)
    for _ in range(60):
        problem = _random_problem(rng)
        sol = solve(problem)
        assert sol.status == "optimal"
        residual = kkt_residual(problem, sol.u, sol.duals)
        assert residual["max"] < 1e-9, residual


def test_solve_is_deterministic():
    rng = np.random.default_rng(23)
    problem = _random_problem(rng)
    first = solve(problem)
    second = solve(problem)
    assert first.u.tobytes() == second.u.tobytes()
    assert first.duals.tobytes() == second.duals.tobytes()
    assert first.active == second.active
    assert first.iterations == second.iterations


def test_iteration_budget_is_respected():
    problem = QpProblem(np.eye(2), [-1.0, -1.0],
                        [[1.0, 0.0], [0.0, 1.0]], [0.5, 0.25])
    sol = solve(problem, SolverSettings(max_iter=1),
                feasible_point=np.array([0.0, 0.0]))
    assert sol.status == "max_iter"
    assert sol.iterations == 1
    assert "budget" in sol.message


def test_problem_shape_validation():
    with pytest.raises(ValueError):
        QpProblem(np.eye(2), [1.0], np.zeros((0, 2)), [])
    with pytest.raises(ValueError):
        solve(QpProblem([[0.0]], [0.0], [[1.0]], [1.0]))  # singular H
