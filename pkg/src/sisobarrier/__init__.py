"""Barrier certificate synthesis, output-only barrier estimation, and hybrid safety supervision."""

__version__ = "0.1.0"

from .model import (
    CanonicalRealization,
    ConstraintSet,
    CornerSet,
    IntervalCoefficient,
    ShiftedRealization,
    UncertainPlant,
    enumerate_corners,
    observable_canonical,
    pldi_vertices,
    shifted_realization,
)
from .lmi import (
    A0Synthesis,
    BarrierCertificate,
    SdpProblem,
    SolveReport,
    SynthesisInfeasibleError,
    check_decay,
    solve_sdp,
    synthesize_A0,
    synthesize_Q,
)
from .norms import (
    CompositeNorm,
    GammaWeights,
    QuadraticNorm,
    barrier_value,
    composite_norm,
    max_vertex_norm,
    quad_norm,
    unit_ball_constraint_check,
)
from .estimator import EstimatorBank, VertexEstimates, error_bound, init_bank, step, vertex_states
from .supervisor import BarrierEstimate, SupervisorState, backup_control, barrier_estimate, decide
from .simulator import (
    BoundaryStart,
    MultisineInput,
    Scenario,
    SimulationTrace,
    TrackingInput,
    ZeroInput,
    rk4_step,
    simulate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
