"""Semidefinite synthesis: unit-ball certificate matrices and the estimator companion matrix."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import cvxpy as cp
import numpy as np

from .model import ConstraintSet, companion, is_strictly_stable, output_row

FEASIBILITY_TOL = 1e-7
STRICT_EPS = 1e-8
DEFAULT_BISECT_TOL = 1e-4
DEFAULT_TRUST_RADIUS = 100.0

# Deterministic interior-point chain: CLARABEL first, CVXOPT to classify the
# cases where CLARABEL stalls (e.g. some infeasible problems).
_SOLVER_CHAIN = ("CLARABEL", "CVXOPT")


class SynthesisInfeasibleError(RuntimeError):
    """Synthesis problem is infeasible (or the solver could not certify it)."""

    def __init__(self, message: str, report: "SolveReport"):
        super().__init__(message)
        self.report = report


@dataclass
class SdpProblem:
    """Carrier for one semidefinite program.

    ``lmi_neg`` holds expressions constrained to be negative semidefinite
    (scalars become plain inequalities); ``constraints`` holds any extra
    cvxpy constraints (simplex, box, ...).  The compiled cvxpy problem is
    cached so repeated parametrized solves stay cheap.
    """

    objective: cp.Expression | float | None
    lmi_neg: list[cp.Expression] = field(default_factory=list)
    constraints: list[cp.Constraint] = field(default_factory=list)
    _compiled: cp.Problem | None = field(default=None, repr=False)

    def compiled(self) -> cp.Problem:
        if self._compiled is None:
            cons = []
            for expr in self.lmi_neg:
                if expr.ndim == 0 or expr.shape in ((1,), (1, 1)):
                    cons.append(expr <= 0)
                else:
                    cons.append(expr << 0)
            cons.extend(self.constraints)
            obj = self.objective if self.objective is not None else 0
            self._compiled = cp.Problem(cp.Minimize(obj), cons)
        return self._compiled


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one SDP solve."""

    status: str  # "optimal" | "infeasible" | "numerical-failure"
    objective: float | None
    max_constraint_residual: float | None
    solver: str | None = None


@dataclass(frozen=True)
class BarrierCertificate:
    """Unit-ball matrices and metadata defining the composite barrier B(x) = |x|_c - 1."""

    Q_list: tuple[np.ndarray, ...]
    gain: float
    alpha0: float
    constraints: ConstraintSet
    directions: tuple[np.ndarray, ...]
    rho: tuple[float, ...]

    def __post_init__(self):
        if self.alpha0 <= 0:
            raise ValueError("alpha0 must be positive")
        for Q in self.Q_list:
            if Q.shape[0] != Q.shape[1] or not np.allclose(Q, Q.T, atol=1e-10):
                raise ValueError("certificate matrices must be square and symmetric")
            if np.linalg.eigvalsh(Q).min() <= 0:
                raise ValueError("certificate matrices must be positive definite")

    @property
    def n(self) -> int:
        return self.Q_list[0].shape[0]


def _residual(expr_value) -> float:
    val = np.atleast_2d(np.asarray(expr_value, dtype=float))
    if val.shape == (1, 1):
        return float(val[0, 0])
    sym = 0.5 * (val + val.T)
    return float(np.linalg.eigvalsh(sym).max())


def solve_sdp(problem: SdpProblem, tol: float = FEASIBILITY_TOL) -> SolveReport:
    """Solve an SDP and report status, objective and worst LMI residual.

    Variable values are left assigned on the cvxpy variables on success.
    Infeasibility is a status, not an exception; solver breakdown on every
    backend maps to "numerical-failure".
    """
    prob = problem.compiled()
    fallback = SolveReport("numerical-failure", None, None, None)
    for solver in _SOLVER_CHAIN:
        try:
            prob.solve(solver=solver)
        except (cp.error.SolverError, ValueError):
            continue
        if prob.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
            residual = max(
                (_residual(e.value) for e in problem.lmi_neg), default=float("-inf")
            )
            if residual <= tol:
                return SolveReport("optimal", float(prob.value), residual, solver)
            fallback = SolveReport("numerical-failure", float(prob.value), residual, solver)
            continue
        if prob.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            return SolveReport("infeasible", None, None, solver)
        if prob.status in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE):
            return SolveReport("numerical-failure", None, None, solver)
    return fallback


def check_decay(A: np.ndarray, Q: np.ndarray, alpha: float) -> float:
    """Most-positive eigenvalue of A Q + Q A^T + 2 alpha Q (<= 0 certifies the decay LMI)."""
    M = A @ Q + Q @ A.T + 2.0 * alpha * Q
    return float(np.linalg.eigvalsh(0.5 * (M + M.T)).max())


def synthesize_Q(
    vertices: list[np.ndarray],
    constraints: ConstraintSet,
    alpha0: float,
    direction,
    tol: float = FEASIBILITY_TOL,
) -> tuple[np.ndarray, float]:
    """Widest constraint-respecting invariant ellipsoid along one state direction.

    Minimizes rho = direction^T Q^-1 direction subject to the state/input
    containment inequalities and the vertex decay LMIs at rate ``alpha0``.

    Returns
    -------
    (Q, rho)
        Symmetric positive definite ``Q`` and the attained width objective.

    Raises
    ------
    SynthesisInfeasibleError
        If no feasible Q exists (e.g. an unstable closed-loop vertex).
    """
    if alpha0 <= 0:
        raise ValueError("alpha0 must be positive")
    x = np.atleast_1d(np.asarray(direction, dtype=float))
    if np.linalg.norm(x) == 0:
        raise ValueError("direction must be nonzero")
    n = x.size
    c0 = output_row(n)

    Q = cp.Variable((n, n), symmetric=True)
    rho = cp.Variable()
    lmis = [STRICT_EPS * np.eye(n) - Q,
            -cp.bmat([[cp.reshape(rho, (1, 1), order="C"), x[None, :]], [x[:, None], Q]])]
    for fi in constraints.f:
        lmis.append(fi @ Q @ fi - 1.0)
    lmis.append(c0 @ Q @ c0 - constraints.u_max**2 / constraints.gain**2)
    for Ac in vertices:
        lmis.append(Ac @ Q + Q @ Ac.T + 2.0 * alpha0 * Q)

    report = solve_sdp(SdpProblem(objective=rho, lmi_neg=lmis), tol)
    if report.status != "optimal":
        raise SynthesisInfeasibleError(
            f"unit-ball synthesis {report.status} along direction {x.tolist()}", report
        )
    Q_val = 0.5 * (Q.value + Q.value.T)
    worst = max(check_decay(Ac, Q_val, alpha0) for Ac in vertices)
    if worst > tol:
        raise SynthesisInfeasibleError(
            f"solver-reported optimum violates a vertex decay LMI (residual {worst:.2e})",
            SolveReport("numerical-failure", report.objective, worst, report.solver),
        )
    return Q_val, float(rho.value)


def a0_feasibility(
    Q_list,
    alpha: float,
    trust_radius: float = DEFAULT_TRUST_RADIUS,
) -> tuple[float, np.ndarray | None]:
    """Best achievable decay-LMI slack over companion matrices with |a_hat_i| <= trust_radius.

    Returns (slack, a_hat): the minimum over a_hat of the most-positive
    eigenvalue bound s with A0 Q_j + Q_j A0^T + 2 alpha Q_j <= s I for all j.
    ``alpha`` is feasible exactly when slack <= 0.
    """
    Q_list = [np.asarray(Q, dtype=float) for Q in Q_list]
    n = Q_list[0].shape[0]
    c0 = output_row(n)
    shift = np.eye(n, k=1)

    a_hat = cp.Variable(n)
    s = cp.Variable()
    A0 = shift - cp.outer(a_hat, c0)
    lmis = [A0 @ Q + Q @ A0.T + 2.0 * alpha * Q - s * np.eye(n) for Q in Q_list]
    extras = [cp.abs(a_hat) <= trust_radius]
    report = solve_sdp(SdpProblem(objective=s, lmi_neg=lmis, constraints=extras))
    if report.status != "optimal":
        return float("inf"), None
    return float(s.value), np.asarray(a_hat.value, dtype=float)


class A0Synthesis(NamedTuple):
    A0: np.ndarray
    a_hat: np.ndarray
    alpha: float
    saturated: bool


def synthesize_A0(
    Q_list,
    alpha_lo: float,
    alpha_hi: float | None = None,
    bisect_tol: float = DEFAULT_BISECT_TOL,
    trust_radius: float = DEFAULT_TRUST_RADIUS,
) -> A0Synthesis:
    """Largest common decay rate over the certificate matrices, by bisection.

    Each bisection step solves one LMI feasibility problem in the companion
    coefficients a_hat (confined to the trust region).  ``alpha_lo`` must be
    feasible -- for certificate matrices synthesized at rate alpha0, any
    closed-loop vertex realization already witnesses feasibility at alpha0.

    Returns
    -------
    A0Synthesis
        Strictly stable companion ``A0``, its coefficients ``a_hat``, the
        certified rate ``alpha`` (within ``bisect_tol`` of the feasibility
        boundary) and a ``saturated`` flag set when ``alpha_hi`` itself is
        feasible.
    """
    if alpha_hi is None:
        alpha_hi = 20.0 * alpha_lo
    if alpha_hi <= alpha_lo:
        raise ValueError("alpha_hi must exceed alpha_lo")
    if bisect_tol <= 0:
        raise ValueError("bisect_tol must be positive")

    slack, a_hat = a0_feasibility(Q_list, alpha_lo, trust_radius)
    if slack > 0 or a_hat is None:
        raise SynthesisInfeasibleError(
            f"decay rate alpha_lo={alpha_lo} is infeasible for the supplied Q matrices "
            f"(slack {slack:.2e}); they do not satisfy the guaranteed vertex bracket",
            SolveReport("infeasible", None, slack if np.isfinite(slack) else None),
        )
    best = (alpha_lo, a_hat)

    slack_hi, a_hat_hi = a0_feasibility(Q_list, alpha_hi, trust_radius)
    if slack_hi <= 0 and a_hat_hi is not None:
        A0 = companion(a_hat_hi)
        return A0Synthesis(A0, a_hat_hi, float(alpha_hi), True)

    lo, hi = alpha_lo, alpha_hi
    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        slack, a_hat = a0_feasibility(Q_list, mid, trust_radius)
        if slack <= 0 and a_hat is not None:
            lo, best = mid, (mid, a_hat)
        else:
            hi = mid

    alpha, a_hat = best
    A0 = companion(a_hat)
    if not is_strictly_stable(A0):
        raise SynthesisInfeasibleError(
            "bisection returned a non-stable companion matrix",
            SolveReport("numerical-failure", None, None),
        )
    return A0Synthesis(A0, a_hat, float(alpha), False)
