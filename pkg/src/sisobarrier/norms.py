"""Quadratic and composite-quadratic vector norms and their unit-ball constraint checks."""

from __future__ import annotations

from dataclasses import dataclass

import cvxpy as cp
import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigh

from . import lmi
from .model import ConstraintSet, output_row

_GOLDEN = 0.6180339887498949
_GOLDEN_TOL = 1e-9
CONSTRAINT_TOL = 1e-8


@dataclass(frozen=True)
class GammaWeights:
    """Simplex weights witnessing a composite-norm value."""

    gamma: np.ndarray

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        object.__setattr__(self, "gamma", g)
        if np.any(g < -1e-9) or abs(g.sum() - 1.0) > 1e-6:
            raise ValueError("gamma must lie on the probability simplex")


class QuadraticNorm:
    """Vector norm |x|_q = sqrt(x^T Q^-1 x) induced by an SPD matrix Q."""

    def __init__(self, Q):
        Q = np.asarray(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError("Q must be a square matrix")
        if not np.allclose(Q, Q.T, atol=1e-10):
            raise ValueError("Q must be symmetric")
        Q = 0.5 * (Q + Q.T)
        if np.linalg.eigvalsh(Q).min() <= 0:
            raise ValueError("Q must be positive definite")
        self.Q = Q
        self._cho = cho_factor(Q, lower=True)

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.sqrt(max(x @ cho_solve(self._cho, x), 0.0)))


class CompositeNorm:
    """Composite norm |x|_c: minimum of sqrt(x^T Q(gamma)^-1 x) over simplex weights.

    The unit ball is the convex hull of the ellipsoidal unit balls of the
    member matrices.  For two members the simplex minimization reduces to a
    scalar problem on the matrix pencil (Q_1, Q_2) which is solved directly;
    the general case goes through a small SDP.
    """

    def __init__(self, Q_list):
        if len(Q_list) < 1:
            raise ValueError("need at least one matrix")
        self.members = tuple(QuadraticNorm(Q) for Q in Q_list)
        self.Q_list = tuple(m.Q for m in self.members)
        self._pencil = None
        self._sdp = None
        if self.n_q == 2:
            # Congruence W with W^T Q2 W = I and W^T Q1 W = diag(lam):
            # gamma*Q1 + (1-gamma)*Q2 becomes diag(1 + gamma*(lam - 1)).
            lam, W = eigh(self.Q_list[0], self.Q_list[1])
            if np.all(np.isfinite(lam)) and np.all(np.isfinite(W)):
                self._pencil = (lam, W)

    @property
    def n(self) -> int:
        return self.members[0].n

    @property
    def n_q(self) -> int:
        return len(self.members)

    def value(self, x, method: str = "auto") -> float:
        return self.value_with_gamma(x, method)[0]

    def _value_only(self, x) -> float:
        # Hot-loop variant of value(): skips the gamma witness.
        if self.n_q == 2 and self._pencil is not None:
            if not np.any(x):
                return 0.0
            val_sq, _ = self._pencil_min(x)
            return float(np.sqrt(max(val_sq, 0.0)))
        return self.value(x)

    def value_with_gamma(self, x, method: str = "auto") -> tuple[float, np.ndarray]:
        if method not in ("auto", "sdp", "golden"):
            raise ValueError(f"unknown method {method!r}")
        x = np.asarray(x, dtype=float)
        if not np.any(x):
            return 0.0, np.full(self.n_q, 1.0 / self.n_q)
        if self.n_q == 1:
            return self.members[0].value(x), np.ones(1)
        if method == "golden" and self.n_q != 2:
            raise ValueError("golden method needs exactly two member matrices")
        if method == "sdp" or self.n_q > 2 or self._pencil is None:
            return self._eval_sdp(x)
        val_sq, g1 = self._pencil_min(x, force_golden=(method == "golden"))
        return float(np.sqrt(max(val_sq, 0.0))), np.array([g1, 1.0 - g1])

    # -- two-member pencil path ------------------------------------------

    def _pencil_min(self, x, force_golden: bool = False) -> tuple[float, float]:
        """Minimize x^T Q(gamma)^-1 x over gamma in [0, 1] for n_q = 2."""
        lam, W = self._pencil
        w2 = (W.T @ x) ** 2
        d = lam - 1.0
        if self.n == 2 and not force_golden:
            return self._pencil_min_quadratic(w2, d)
        return self._pencil_min_golden(w2, d)

    @staticmethod
    def _pencil_min_quadratic(w2, d) -> tuple[float, float]:
        # Stationary points of g(t) = w1/(1+t*d1) + w2/(1+t*d2) solve a quadratic.
        w1, w2_ = float(w2[0]), float(w2[1])
        d1, d2 = float(d[0]), float(d[1])

        def g(t):
            return w1 / (1.0 + t * d1) + w2_ / (1.0 + t * d2)

        candidates = [0.0, 1.0]
        c2 = d1 * d2 * (w1 * d2 + w2_ * d1)
        c1 = 2.0 * d1 * d2 * (w1 + w2_)
        c0 = w1 * d1 + w2_ * d2
        scale = max(abs(c2), abs(c1), abs(c0), 1e-300)
        if abs(c2) > 1e-14 * scale:
            disc = c1 * c1 - 4.0 * c2 * c0
            if disc >= 0.0:
                r = np.sqrt(disc)
                for t in ((-c1 - r) / (2.0 * c2), (-c1 + r) / (2.0 * c2)):
                    if 0.0 < t < 1.0:
                        candidates.append(t)
        elif abs(c1) > 1e-14 * scale:
            t = -c0 / c1
            if 0.0 < t < 1.0:
                candidates.append(t)
        best_t = min(candidates, key=g)
        return g(best_t), best_t

    @staticmethod
    def _pencil_min_golden(w2, d) -> tuple[float, float]:
        w2 = np.asarray(w2)
        d = np.asarray(d)

        def g(t):
            return float(np.sum(w2 / (1.0 + t * d)))

        a, b = 0.0, 1.0
        c = b - _GOLDEN * (b - a)
        e = a + _GOLDEN * (b - a)
        fc, fe = g(c), g(e)
        while b - a > _GOLDEN_TOL:
            if fc < fe:
                b, e, fe = e, c, fc
                c = b - _GOLDEN * (b - a)
                fc = g(c)
            else:
                a, c, fc = c, e, fe
                e = a + _GOLDEN * (b - a)
                fe = g(e)
        t = 0.5 * (a + b)
        val = g(t)
        for t_end in (0.0, 1.0):
            v = g(t_end)
            if v < val:
                val, t = v, t_end
        return val, t

    # -- general SDP path -------------------------------------------------

    def _eval_sdp(self, x) -> tuple[float, np.ndarray]:
        if self._sdp is None:
            n, n_q = self.n, self.n_q
            xP = cp.Parameter(n)
            t = cp.Variable()
            g = cp.Variable(n_q)
            Qg = sum(g[j] * self.Q_list[j] for j in range(n_q))
            block = cp.bmat(
                [[cp.reshape(t, (1, 1), order="C"), cp.reshape(xP, (1, n), order="C")],
                 [cp.reshape(xP, (n, 1), order="C"), Qg]]
            )
            problem = lmi.SdpProblem(
                objective=t,
                lmi_neg=[-block],
                constraints=[g >= 0, cp.sum(g) == 1],
            )
            self._sdp = (problem, xP, t, g)
        problem, xP, t, g = self._sdp
        xP.value = np.asarray(x, dtype=float)
        report = lmi.solve_sdp(problem)
        if report.status != "optimal":
            raise RuntimeError(f"composite norm SDP evaluation failed: {report.status}")
        gamma = np.clip(np.asarray(g.value, dtype=float), 0.0, None)
        gamma = gamma / gamma.sum()
        return float(np.sqrt(max(float(t.value), 0.0))), gamma


def quad_norm(norm: QuadraticNorm, x) -> float:
    """sqrt(x^T Q^-1 x); zero exactly at the origin."""
    return norm.value(x)


def composite_norm(norm: CompositeNorm, x, method: str = "auto") -> tuple[float, GammaWeights]:
    """Composite norm value with the attaining simplex weights."""
    value, gamma = norm.value_with_gamma(x, method)
    return value, GammaWeights(gamma)


def max_vertex_norm(norm, points) -> tuple[float, int]:
    """Maximum norm over a point list; upper-bounds any convex combination of them."""
    points = list(points)
    if not points:
        raise ValueError("point list must be non-empty")
    values = [norm.value(p) for p in points]
    idx = int(np.argmax(values))
    return values[idx], idx


@dataclass(frozen=True)
class ConstraintCheck:
    ok: bool
    worst_margin: float


def unit_ball_constraint_check(
    norm: CompositeNorm, constraints: ConstraintSet, tol: float = CONSTRAINT_TOL
) -> ConstraintCheck:
    """Check that the composite unit ball sits inside the state and input constraint sets.

    Containment of the hull follows from containment of each member
    ellipsoid: f_i Q_j f_i^T <= 1 and Q_j[0,0] <= (u_max/gain)^2 for all i, j.
    Margins are reported as (lhs - rhs), so any positive margin is a violation.
    """
    c0 = output_row(norm.n)
    margins = []
    for Q in norm.Q_list:
        for fi in constraints.f:
            margins.append(float(fi @ Q @ fi) - 1.0)
        if constraints.gain != 0.0:
            margins.append(float(c0 @ Q @ c0) - constraints.u_max**2 / constraints.gain**2)
    worst = max(margins)
    return ConstraintCheck(ok=worst <= tol, worst_margin=worst)


def barrier_value(norm: CompositeNorm, x) -> float:
    """Barrier B(x) = |x|_c - 1; negative inside the unit ball, zero on its boundary."""
    return norm.value(x) - 1.0
