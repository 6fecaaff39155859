"""Identifier-based state estimator driven by input/output measurements only.

The running state is the pair of n-by-n response matrices (E_y, E_u) obeying
E_y' = A0 E_y + I y and E_u' = A0 E_u + I u.  Any coefficient hypothesis
(a, b) then yields the state estimate E_y (a_hat - a) + E_u b, and the
estimation error of the true-coefficient estimate decays like exp(-alpha t).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model import CornerSet, is_strictly_stable
from .lmi import check_decay, FEASIBILITY_TOL


class EstimatorInitError(ValueError):
    """A0/alpha pair does not satisfy the estimator's decay hypotheses."""


@dataclass(frozen=True)
class EstimatorBank:
    """Running estimator state; advance with :func:`step` in time order."""

    A0: np.ndarray
    alpha: float
    E_y: np.ndarray
    E_u: np.ndarray
    eps0_norm: float
    t: float


@dataclass(frozen=True)
class VertexEstimates:
    """State estimates at every coefficient-box corner."""

    estimates: tuple[np.ndarray, ...]
    corners: CornerSet


def init_bank(A0, alpha: float, eps0_norm: float, Q_list=None, tol: float = FEASIBILITY_TOL) -> EstimatorBank:
    """Fresh bank with zeroed response matrices (initial state estimate is zero).

    When ``Q_list`` is supplied, the decay LMI of each matrix is verified at
    rate ``alpha``; the rate is otherwise taken on trust.
    """
    A0 = np.asarray(A0, dtype=float)
    if alpha <= 0:
        raise EstimatorInitError("alpha must be positive")
    if eps0_norm < 0:
        raise EstimatorInitError("eps0_norm must be nonnegative")
    if not is_strictly_stable(A0):
        raise EstimatorInitError("A0 must be strictly stable")
    if Q_list is not None:
        for j, Q in enumerate(Q_list):
            residual = check_decay(A0, np.asarray(Q, dtype=float), alpha)
            if residual > tol:
                raise EstimatorInitError(
                    f"A0 decay LMI fails for certificate matrix {j} at rate {alpha} "
                    f"(residual {residual:.2e})"
                )
    n = A0.shape[0]
    return EstimatorBank(A0=A0, alpha=float(alpha), E_y=np.zeros((n, n)),
                         E_u=np.zeros((n, n)), eps0_norm=float(eps0_norm), t=0.0)


def step(bank: EstimatorBank, y: float, u: float, dt: float) -> EstimatorBank:
    """Advance both response matrices one classical RK4 step with y, u held constant."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    A0 = bank.A0
    eye = np.eye(A0.shape[0])

    def rk4(E, w):
        k1 = A0 @ E + w * eye
        k2 = A0 @ (E + 0.5 * dt * k1) + w * eye
        k3 = A0 @ (E + 0.5 * dt * k2) + w * eye
        k4 = A0 @ (E + dt * k3) + w * eye
        return E + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    return replace(bank, E_y=rk4(bank.E_y, float(y)), E_u=rk4(bank.E_u, float(u)),
                   t=bank.t + dt)


def vertex_states(bank: EstimatorBank, corners: CornerSet, a_hat) -> VertexEstimates:
    """State estimate E_y (a_hat - a) + E_u b at every corner hypothesis."""
    a_hat = np.asarray(a_hat, dtype=float)
    estimates = tuple(bank.E_y @ (a_hat - a) + bank.E_u @ b for a, b in corners.corners)
    return VertexEstimates(estimates=estimates, corners=corners)


def error_bound(bank: EstimatorBank) -> float:
    """Decaying bound exp(-alpha t) * eps0_norm on the estimation-error norm."""
    return float(np.exp(-bank.alpha * bank.t) * bank.eps0_norm)
