"""Measurable barrier estimate and hysteresis switching between nominal and backup control."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .estimator import VertexEstimates
from .norms import CompositeNorm

NOMINAL = "nominal"
BACKUP = "backup"


@dataclass(frozen=True)
class BarrierEstimate:
    """Per-corner barrier upper bounds and their maximum."""

    per_vertex: np.ndarray
    max_value: float
    max_index: int


@dataclass(frozen=True)
class SupervisorState:
    """Active control source plus the hysteresis thresholds -1 < B_lower < B_upper <= 0."""

    active: str = NOMINAL
    B_lower: float = -0.02
    B_upper: float = -0.01

    def __post_init__(self):
        if self.active not in (NOMINAL, BACKUP):
            raise ValueError(f"unknown control source {self.active!r}")
        if not (-1.0 < self.B_lower < self.B_upper <= 0.0):
            raise ValueError("thresholds must satisfy -1 < B_lower < B_upper <= 0")


def barrier_estimate(norm: CompositeNorm, estimates: VertexEstimates, bound: float) -> BarrierEstimate:
    """Barrier bound |x_hat_i|_c + bound - 1 at every corner estimate."""
    if bound < 0:
        raise ValueError("error bound must be nonnegative")
    per_vertex = np.array([norm.value(x) + bound - 1.0 for x in estimates.estimates])
    idx = int(np.argmax(per_vertex))
    return BarrierEstimate(per_vertex=per_vertex, max_value=float(per_vertex[idx]), max_index=idx)


def decide(state: SupervisorState, est: BarrierEstimate) -> tuple[SupervisorState, str]:
    """Hysteresis switch: engage backup at max >= B_upper, release at max <= B_lower."""
    if state.active == NOMINAL and est.max_value >= state.B_upper:
        state = replace(state, active=BACKUP)
    elif state.active == BACKUP and est.max_value <= state.B_lower:
        state = replace(state, active=NOMINAL)
    return state, state.active


def backup_control(gain: float, y: float) -> float:
    """Static output feedback u = gain * y."""
    return gain * y
