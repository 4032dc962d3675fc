"""Dense strictly convex quadratic programming.

Solves min_u 0.5 u'H u + f'u subject to G u <= g with H positive definite,
via a primal active-set method: equality-constrained subproblems are solved
through Cholesky factorizations (range-space form), rows enter the working set
when they block a step and leave when their multiplier goes negative. Rows are
normalized internally so the result is invariant to row scaling, and ties are
broken by lowest row index so solves are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

__all__ = ["QpProblem", "QpSolution", "SolverSettings", "solve", "kkt_residual"]


@dataclass(frozen=True)
class QpProblem:
    """min 0.5 u'H u + f'u  s.t.  G u <= g."""

    H: np.ndarray
    f: np.ndarray
    G: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "H", np.asarray(self.H, dtype=float))
        object.__setattr__(self, "f", np.asarray(self.f, dtype=float))
        object.__setattr__(self, "G", np.atleast_2d(np.asarray(self.G, dtype=float)))
        object.__setattr__(self, "g", np.atleast_1d(np.asarray(self.g, dtype=float)))
        k = self.H.shape[0]
        if self.H.shape != (k, k) or self.f.shape != (k,):
            raise ValueError("H must be square and f of matching length")
        if self.G.size and (self.G.shape[1] != k or self.g.shape[0] != self.G.shape[0]):
            raise ValueError("G and g dimensions must match H")

    @property
    def n_constraints(self) -> int:
        return self.G.shape[0] if self.G.size else 0

    def objective(self, u: np.ndarray) -> float:
        return float(0.5 * u @ self.H @ u + self.f @ u)


@dataclass(frozen=True)
class SolverSettings:
    tol: float = 1e-9
    max_iter: Optional[int] = None
    pivot_tol: float = 1e-10

    def iter_budget(self, n_constraints: int, n_vars: int) -> int:
        return self.max_iter if self.max_iter is not None else 50 * (n_constraints + n_vars)


@dataclass
class QpSolution:
    u: np.ndarray
    duals: np.ndarray
    active: Tuple[int, ...]
    iterations: int
    status: str  # "optimal" | "max_iter" | "infeasible"
    message: str = ""
    objective: float = float("nan")


def kkt_residual(problem: QpProblem, u: np.ndarray, duals: np.ndarray) -> Dict[str, float]:
    """Stationarity / primal / dual / complementarity residuals on the
    problem's original (unnormalized) scale."""
    if problem.n_constraints:
        slack = problem.G @ u - problem.g
        stationarity = problem.H @ u + problem.f + problem.G.T @ duals
        comp = float(np.max(np.abs(duals * slack))) if duals.size else 0.0
        primal = float(max(0.0, np.max(slack)))
        dual = float(max(0.0, -np.min(duals))) if duals.size else 0.0
    else:
        stationarity = problem.H @ u + problem.f
        primal = dual = comp = 0.0
    out = {
        "stationarity": float(np.max(np.abs(stationarity))),
        "primal": primal,
        "dual": dual,
        "complementarity": comp,
    }
    out["max"] = max(out.values())
    return out


class _Normalized:
    """Row-normalized copy of the constraints with bookkeeping.

    Zero rows cannot be normalized: a zero row with g >= 0 is vacuous and
    dropped, one with g < 0 makes the problem infeasible outright.
    """

    def __init__(self, problem: QpProblem, tol: float):
        G, g = problem.G, problem.g
        self.infeasible_row: Optional[int] = None
        if problem.n_constraints == 0:
            self.G = np.zeros((0, problem.H.shape[0]))
            self.g = np.zeros(0)
            self.scale = np.zeros(0)
            self.orig = np.zeros(0, dtype=int)
            return
        norms = np.linalg.norm(G, axis=1)
        zero = norms < 1e-300
        bad = zero & (g < -tol)
        if np.any(bad):
            self.infeasible_row = int(np.argmax(bad))
        keep = ~zero
        self.orig = np.flatnonzero(keep)
        self.scale = norms[keep]
        self.G = G[keep] / self.scale[:, None]
        self.g = g[keep] / self.scale


class _WorkingSet:
    """Ordered working set with an orthonormal basis of its rows, used to
    reject linearly dependent entries by a pivot tolerance."""

    def __init__(self, pivot_tol: float):
        self.rows: List[int] = []
        self.basis: List[np.ndarray] = []
        self.pivot_tol = pivot_tol

    def try_add(self, idx: int, row: np.ndarray) -> bool:
        r = row.copy()
        for b in self.basis:
            r -= (b @ row) * b
        norm = np.linalg.norm(r)
        if norm <= self.pivot_tol:
            return False
        self.rows.append(idx)
        self.basis.append(r / norm)
        return True

    def remove(self, pos: int, G: np.ndarray) -> None:
        del self.rows[pos]
        survivors = list(self.rows)
        self.rows = []
        self.basis = []
        for i in survivors:
            self.try_add(i, G[i])


def _eqp(chol_H, f, G, g, gset: _WorkingSet, absolute: bool):
    """Equality-constrained subproblem over the working set.

    absolute=True solves min 0.5 u'H u + f'u s.t. G_W u = g_W; absolute=False
    solves for a direction with G_W d = 0 from gradient f. Returns (vector,
    multipliers); on a singular working-set system the newest row is dropped
    and the solve retried.
    """
    while True:
        hf = cho_solve(chol_H, f)
        if not gset.rows:
            return -hf, np.zeros(0)
        Gw = G[gset.rows]
        Y = cho_solve(chol_H, Gw.T)
        S = Gw @ Y
        # From the KKT system: G_w (-hf - Y nu) = b requires S nu = -G_w hf - b.
        target = -Gw @ hf - (g[gset.rows] if absolute else 0.0)
        try:
            nu = cho_solve(cho_factor(S), target)
        except LinAlgError:
            gset.remove(len(gset.rows) - 1, G)
            continue
        return -(hf + Y @ nu), nu


def _phase1(G, g, u0, settings, feas_tol):
    """Feasible point via a slack program solved with this same method:
    minimize eps/2 |x|^2 + s over x = (du, s) subject to G(u + du) <= g + s,
    s >= 0. The start (du, s) = (0, worst violation) is exactly feasible, so
    the recursion is one level deep. eps trades accuracy of the recovered
    point (roundoff grows with 1/eps) against reach (the slack pull only
    dominates within |du| of order 1/eps), so rather than shrinking eps the
    program is re-centered at the improved point and solved again.
    Returns (point, ok, worst_row, worst_violation)."""
    p, k = G.shape
    u = u0.copy()
    best = None
    for _ in range(3):
        resid = G @ u - g
        worst_row = int(np.argmax(resid))
        worst = float(resid[worst_row])
        if best is None or worst < best[2]:
            best = (u.copy(), worst_row, worst)
        if worst <= feas_tol:
            return u, True, worst_row, worst
        G1 = np.zeros((p + 1, k + 1))
        G1[:p, :k] = G
        G1[:p, k] = -1.0
        G1[p, k] = -1.0
        g1 = np.append(-resid, 0.0)
        x0 = np.zeros(k + 1)
        x0[k] = worst
        f1 = np.zeros(k + 1)
        f1[k] = 1.0
        inner = solve(QpProblem(np.eye(k + 1) * 1e-6, f1, G1, g1), settings, feasible_point=x0)
        u = u + inner.u[:k]
    resid = G @ u - g
    worst_row = int(np.argmax(resid))
    worst = float(resid[worst_row])
    if worst <= feas_tol:
        return u, True, worst_row, worst
    if worst < best[2]:
        best = (u, worst_row, worst)
    return best[0], False, best[1], best[2]


def _drop_most_negative(nu: np.ndarray, gset: _WorkingSet, norm: _Normalized, G) -> None:
    candidates = np.flatnonzero(nu == nu.min())
    pos = min(candidates, key=lambda j: norm.orig[gset.rows[j]])
    gset.remove(int(pos), G)


def solve(
    problem: QpProblem,
    settings: Optional[SolverSettings] = None,
    feasible_point: Optional[np.ndarray] = None,
    warm_start: Optional[Sequence[int]] = None,
) -> QpSolution:
    """Solve the QP. feasible_point, when supplied and actually feasible, seeds
    the primal iteration directly; warm_start carries a previous solve's active
    set and is tried first as an equality-constrained shortcut (accepted only
    when the shortcut point passes a full KKT check)."""
    settings = settings or SolverSettings()
    k = problem.H.shape[0]
    try:
        chol_H = cho_factor(problem.H)
    except LinAlgError as exc:
        raise ValueError("H must be symmetric positive definite") from exc

    norm = _Normalized(problem, settings.tol)
    if norm.infeasible_row is not None:
        return QpSolution(
            u=np.zeros(k), duals=np.zeros(problem.n_constraints), active=(),
            iterations=0, status="infeasible",
            message=f"zero row {norm.infeasible_row} has negative bound",
        )
    G, g = norm.G, norm.g
    p = len(g)
    budget = settings.iter_budget(problem.n_constraints, k)
    feas_tol = settings.tol

    def finish(u, nu, gset: _WorkingSet, iterations, status, message=""):
        duals = np.zeros(problem.n_constraints)
        if len(nu) == len(gset.rows):
            for j, row in enumerate(gset.rows):
                duals[norm.orig[row]] = max(0.0, float(nu[j])) / norm.scale[row]
        active = tuple(sorted(int(norm.orig[r]) for r in gset.rows))
        return QpSolution(
            u=u, duals=duals, active=active, iterations=iterations,
            status=status, message=message, objective=problem.objective(u),
        )

    iterations = 0

    if warm_start and p:
        orig_to_norm = {int(o): i for i, o in enumerate(norm.orig)}
        gset = _WorkingSet(settings.pivot_tol)
        for o in sorted(set(int(i) for i in warm_start)):
            if o in orig_to_norm:
                gset.try_add(orig_to_norm[o], G[orig_to_norm[o]])
        for _ in range(len(gset.rows) + 1):
            iterations += 1
            u, nu = _eqp(chol_H, problem.f, G, g, gset, absolute=True)
            if nu.size and nu.min() < -settings.tol:
                _drop_most_negative(nu, gset, norm, G)
                continue
            if np.max(G @ u - g) <= feas_tol:
                return finish(u, nu, gset, iterations, "optimal")
            break  # shortcut point violates some row: fall through to cold start

    if p == 0:
        u = -cho_solve(chol_H, problem.f)
        return finish(u, np.zeros(0), _WorkingSet(settings.pivot_tol), iterations + 1, "optimal")

    u = None
    if feasible_point is not None:
        cand = np.asarray(feasible_point, dtype=float)
        if np.max(G @ cand - g) <= feas_tol:
            u = cand.copy()
    if u is None:
        start = (
            np.asarray(feasible_point, dtype=float)
            if feasible_point is not None
            else -cho_solve(chol_H, problem.f)
        )
        u, ok, row, violation = _phase1(G, g, start, settings, feas_tol)
        if not ok:
            return finish(
                u, np.zeros(0), _WorkingSet(settings.pivot_tol), iterations, "infeasible",
                f"no feasible point found (violation {violation:.3e} "
                f"at row {norm.orig[row]})",
            )

    gset = _WorkingSet(settings.pivot_tol)
    nu = np.zeros(0)
    status = "max_iter"
    # Rows whose try_add failed since the working set last changed: barred from
    # blocking again, else a dependent tight row can stall the iteration.
    barred = np.zeros(p, dtype=bool)
    while iterations < budget:
        iterations += 1
        rows_before = tuple(gset.rows)
        grad = problem.H @ u + problem.f
        d, nu = _eqp(chol_H, grad, G, g, gset, absolute=False)
        if tuple(gset.rows) != rows_before:
            barred[:] = False
        if np.max(np.abs(d)) <= 1e-11 * (1.0 + np.max(np.abs(u))):
            if nu.size == 0 or nu.min() >= -settings.tol:
                status = "optimal"
                break
            _drop_most_negative(nu, gset, norm, G)
            barred[:] = False
            continue
        # Largest step keeping every row satisfied; the blocking row enters the
        # working set (blocking rows are independent of it by construction).
        proj = G @ d
        resid = np.maximum(g - G @ u, 0.0)
        in_set = np.zeros(p, dtype=bool)
        in_set[gset.rows] = True
        # The threshold scales with |d| so any accepted blocker has a component
        # orthogonal to the working set well above the basis pivot tolerance.
        blocking = (~in_set) & (~barred) & (proj > 1e-11 * max(1.0, float(np.max(np.abs(d)))))
        alpha, blocker = 1.0, None
        if np.any(blocking):
            ratios = np.full(p, np.inf)
            ratios[blocking] = resid[blocking] / proj[blocking]
            best = float(ratios.min())
            if best < 1.0:
                ties = np.flatnonzero(ratios == best)
                blocker = int(min(ties, key=lambda r: norm.orig[r]))
                alpha = best
        u = u + alpha * d
        if blocker is not None:
            if gset.try_add(blocker, G[blocker]):
                barred[:] = False
            else:
                barred[blocker] = True
            continue
        # An unblocked full step lands on the working-set minimizer, whose
        # multipliers are exactly the nu of this direction solve; decide from
        # them now instead of re-deriving a noise-floor direction next pass.
        if nu.size == 0 or nu.min() >= -settings.tol:
            status = "optimal"
            break
        _drop_most_negative(nu, gset, norm, G)
        barred[:] = False

    if status == "optimal" and gset.rows:
        # Polish: an absolute equality solve on the final active set pins the
        # active rows exactly and tightens stationarity and complementarity.
        u_polish, nu_polish = _eqp(chol_H, problem.f, G, g, gset, absolute=True)
        if (
            len(nu_polish) == len(gset.rows)
            and np.max(G @ u_polish - g) <= feas_tol
            and (nu_polish.size == 0 or nu_polish.min() >= -settings.tol)
        ):
            u, nu = u_polish, nu_polish
    elif status == "optimal":
        u = -cho_solve(chol_H, problem.f)
        nu = np.zeros(0)

    if status == "max_iter":
        nu = np.zeros(len(gset.rows))
    message = "" if status == "optimal" else "iteration budget exhausted"
    return finish(u, nu, gset, iterations, status, message)
