"""Co-simulation of the true plant, estimator bank, and hybrid safety supervisor."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .estimator import EstimatorBank
from .lmi import BarrierCertificate, check_decay, FEASIBILITY_TOL
from .model import UncertainPlant, companion, enumerate_corners
from .norms import CompositeNorm, unit_ball_constraint_check
from .supervisor import BACKUP, NOMINAL, BarrierEstimate, SupervisorState, backup_control, decide


class SimulationConfigError(ValueError):
    """Scenario or certificate violates a simulation precondition."""


def rk4_step(derivative, x, dt: float):
    """One classical fourth-order Runge-Kutta step of x' = derivative(x)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    k1 = derivative(x)
    k2 = derivative(x + 0.5 * dt * k1)
    k3 = derivative(x + 0.5 * dt * k2)
    k4 = derivative(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# -- nominal input generators ---------------------------------------------


@dataclass(frozen=True)
class TrackerConfig:
    """Proportional gain and DC feedforward gain of the reference tracker."""

    k_p: float = 2.0
    dc_gain: float = 1.0


def nominal_tracking_input(t: float, y: float, ref_signal, tracker_config: TrackerConfig) -> float:
    """Proportional tracking with DC feedforward: k_p (r - y) + r / dc_gain."""
    r = ref_signal(t)
    ff = r / tracker_config.dc_gain if tracker_config.dc_gain != 0.0 else 0.0
    return tracker_config.k_p * (r - y) + ff


@dataclass(frozen=True)
class ZeroInput:
    """Nominal input identically zero."""

    def build(self, scenario: "Scenario"):
        return lambda t, y: 0.0


@dataclass(frozen=True)
class TrackingInput:
    """Sinusoidal reference amplitude*sin(2 pi freq_hz t) tracked proportionally."""

    amplitude: float
    freq_hz: float
    k_p: float = 2.0

    def reference(self, t: float) -> float:
        return self.amplitude * np.sin(2.0 * np.pi * self.freq_hz * t)

    def build(self, scenario: "Scenario"):
        a_n = scenario.a_true[-1]
        b_n = scenario.b_true[-1]
        dc = b_n / a_n if a_n != 0.0 and b_n != 0.0 else 0.0
        cfg = TrackerConfig(k_p=self.k_p, dc_gain=dc if dc != 0.0 else 1.0)
        if dc == 0.0:
            cfg = TrackerConfig(k_p=self.k_p, dc_gain=float("inf"))
        return lambda t, y: nominal_tracking_input(t, y, self.reference, cfg)


@dataclass(frozen=True)
class MultisineInput:
    """Seeded random multisine with summed amplitudes bounded by ``amplitude``."""

    amplitude: float
    n_components: int = 8
    freq_lo: float = 0.02
    freq_hi: float = 1.0
    seed: int = 0

    def build(self, scenario: "Scenario"):
        rng = np.random.default_rng(self.seed)
        freqs = rng.uniform(self.freq_lo, self.freq_hi, self.n_components)
        phases = rng.uniform(0.0, 2.0 * np.pi, self.n_components)
        weights = rng.uniform(0.2, 1.0, self.n_components)
        amps = self.amplitude * weights / weights.sum()
        two_pi_f = 2.0 * np.pi * freqs

        def u(t, y):
            return float(np.sum(amps * np.sin(two_pi_f * t + phases)))

        return u


@dataclass(frozen=True)
class BoundaryStart:
    """Initial state scale * d / |d|_c, just inside the composite unit ball."""

    direction: np.ndarray
    scale: float = 0.99


@dataclass
class Scenario:
    """One co-simulation setup: true plant instance, start state, input, and horizon."""

    plant: UncertainPlant
    a_true: np.ndarray
    b_true: np.ndarray
    x0: np.ndarray | BoundaryStart
    nominal_input: object = field(default_factory=ZeroInput)
    duration: float = 20.0
    dt: float = 1e-3
    supervisor_enabled: bool = True
    always_backup: bool = False
    name: str = ""

    def __post_init__(self):
        self.a_true = np.atleast_1d(np.asarray(self.a_true, dtype=float))
        self.b_true = np.atleast_1d(np.asarray(self.b_true, dtype=float))


@dataclass
class SimulationTrace:
    """Uniform-grid record of one simulation run."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    u_applied: np.ndarray
    u_nominal: np.ndarray
    source: list[str]
    B_true: np.ndarray
    B_hat_max: np.ndarray
    err_bound: np.ndarray
    B_hat_vertices: np.ndarray
    # Estimation-error norms for extra coefficient hypotheses (analysis only,
    # populated when simulate() receives estimate_instances; not serialized).
    estimate_errors: np.ndarray | None = None

    def __len__(self) -> int:
        return self.t.size

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def n_vertices(self) -> int:
        return self.B_hat_vertices.shape[1]

    def header(self) -> list[str]:
        return (
            ["t"]
            + [f"x{i + 1}" for i in range(self.n)]
            + ["y", "u_applied", "u_nominal", "source", "B_true", "B_hat_max", "err_bound"]
            + [f"B_hat_v{i + 1}" for i in range(self.n_vertices)]
        )

    def to_csv(self, path) -> None:
        def fmt(v: float) -> str:
            return repr(float(v))

        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header())
        for k in range(len(self)):
            row = [fmt(self.t[k])]
            row += [fmt(v) for v in self.x[k]]
            row += [fmt(self.y[k]), fmt(self.u_applied[k]), fmt(self.u_nominal[k])]
            row += [self.source[k]]
            row += [fmt(self.B_true[k]), fmt(self.B_hat_max[k]), fmt(self.err_bound[k])]
            row += [fmt(v) for v in self.B_hat_vertices[k]]
            writer.writerow(row)
        data = buf.getvalue()
        if hasattr(path, "write"):
            path.write(data)
        else:
            with open(path, "w", newline="") as fh:
                fh.write(data)

    @classmethod
    def from_csv(cls, path) -> "SimulationTrace":
        if hasattr(path, "read"):
            rows = list(csv.reader(path))
        else:
            with open(path, newline="") as fh:
                rows = list(csv.reader(fh))
        if len(rows) < 2:
            raise ValueError("trace CSV has no data rows")
        header = rows[0]
        n = sum(1 for h in header if h.startswith("x") and h[1:].isdigit())
        n_v = sum(1 for h in header if h.startswith("B_hat_v"))
        data = rows[1:]
        K = len(data)
        trace = cls(
            t=np.empty(K), x=np.empty((K, n)), y=np.empty(K),
            u_applied=np.empty(K), u_nominal=np.empty(K), source=[],
            B_true=np.empty(K), B_hat_max=np.empty(K), err_bound=np.empty(K),
            B_hat_vertices=np.empty((K, n_v)),
        )
        for k, row in enumerate(data):
            trace.t[k] = float(row[0])
            trace.x[k] = [float(v) for v in row[1:1 + n]]
            trace.y[k] = float(row[1 + n])
            trace.u_applied[k] = float(row[2 + n])
            trace.u_nominal[k] = float(row[3 + n])
            trace.source.append(row[4 + n])
            trace.B_true[k] = float(row[5 + n])
            trace.B_hat_max[k] = float(row[6 + n])
            trace.err_bound[k] = float(row[7 + n])
            trace.B_hat_vertices[k] = [float(v) for v in row[8 + n:8 + n + n_v]]
        return trace

    def switch_count(self) -> int:
        return sum(1 for k in range(1, len(self)) if self.source[k] != self.source[k - 1])

    def summary(self) -> dict:
        return {
            "max_abs_y": float(np.max(np.abs(self.y))),
            "max_abs_u": float(np.max(np.abs(self.u_applied))),
            "switch_count": self.switch_count(),
            "min_margin": float(-np.max(self.B_true)),
        }


def resolve_x0(x0, norm: CompositeNorm) -> np.ndarray:
    if isinstance(x0, BoundaryStart):
        d = np.atleast_1d(np.asarray(x0.direction, dtype=float))
        nd = norm.value(d)
        if nd == 0.0:
            raise SimulationConfigError("boundary start direction must be nonzero")
        return (x0.scale / nd) * d
    return np.atleast_1d(np.asarray(x0, dtype=float))


def simulate(
    scenario: Scenario,
    certificate: BarrierCertificate,
    a_hat,
    alpha: float,
    supervisor_config: SupervisorState | None = None,
    eps0_norm: float = 1.0,
    estimate_instances=None,
) -> SimulationTrace:
    """Run one closed-loop co-simulation and record a trace row per step.

    The plant state and both estimator response matrices are advanced as a
    single linear system by a shared RK4 map, so the estimator sees the
    stage-consistent output inside each step.  The applied input is held
    constant over each step: the nominal input, saturated at the actuator
    bound u_max, when the supervisor allows it, and the exact static output
    feedback ``certificate.gain * y`` otherwise (the certificate assumes the
    unsaturated backup law; it never exceeds the bound inside the safe set).
    The raw nominal input is recorded unclipped in the trace.
    """
    plant = scenario.plant
    n = plant.n
    a_hat = np.atleast_1d(np.asarray(a_hat, dtype=float))

    if scenario.dt <= 0:
        raise SimulationConfigError("dt must be positive")
    if scenario.duration < scenario.dt:
        raise SimulationConfigError("duration must cover at least one step")
    if not plant.contains_instance(scenario.a_true, scenario.b_true):
        raise SimulationConfigError("true coefficients lie outside the plant's coefficient box")

    norm = CompositeNorm(certificate.Q_list)
    check = unit_ball_constraint_check(norm, certificate.constraints)
    if not check.ok:
        raise SimulationConfigError(
            f"certificate unit ball violates the constraint set (margin {check.worst_margin:.2e})"
        )
    A0 = companion(a_hat)
    for j, Q in enumerate(certificate.Q_list):
        residual = check_decay(A0, Q, alpha)
        if residual > FEASIBILITY_TOL:
            raise SimulationConfigError(
                f"estimator decay LMI fails for certificate matrix {j} (residual {residual:.2e})"
            )

    corners = enumerate_corners(plant)
    n_v = corners.count
    deltas = [a_hat - a for a, _ in corners.corners]
    b_corners = [b for _, b in corners.corners]

    A_true = companion(scenario.a_true)
    b_u = scenario.b_true
    x0 = resolve_x0(scenario.x0, norm)
    if x0.shape != (n,):
        raise SimulationConfigError(f"x0 must have length {n}")

    # Joint linear state z = [x, vec(E_y), vec(E_u)]; the RK4 transition map
    # z+ = P z + q u is assembled column-by-column from rk4_step itself.
    nn = n * n
    m = n + 2 * nn
    eye = np.eye(n)

    def deriv(z, u):
        x = z[:n]
        E_y = z[n:n + nn].reshape(n, n)
        E_u = z[n + nn:].reshape(n, n)
        dx = A_true @ x + b_u * u
        dE_y = A0 @ E_y + z[0] * eye
        dE_u = A0 @ E_u + u * eye
        return np.concatenate([dx, dE_y.ravel(), dE_u.ravel()])

    P = np.column_stack([rk4_step(lambda z: deriv(z, 0.0), e, scenario.dt) for e in np.eye(m)])
    q = rk4_step(lambda z: deriv(z, 1.0), np.zeros(m), scenario.dt)

    K = int(round(scenario.duration / scenario.dt))
    state = supervisor_config if supervisor_config is not None else SupervisorState()
    u_nom_fn = (
        scenario.nominal_input
        if callable(scenario.nominal_input) and not hasattr(scenario.nominal_input, "build")
        else scenario.nominal_input.build(scenario)
    )
    gain = certificate.gain
    u_max = certificate.constraints.u_max
    dt = scenario.dt
    alpha = float(alpha)
    value = norm._value_only

    instances = []
    if estimate_instances is not None:
        instances = [(a_hat - np.asarray(a, dtype=float), np.asarray(b, dtype=float))
                     for a, b in estimate_instances]

    trace = SimulationTrace(
        t=np.empty(K + 1), x=np.empty((K + 1, n)), y=np.empty(K + 1),
        u_applied=np.empty(K + 1), u_nominal=np.empty(K + 1), source=[],
        B_true=np.empty(K + 1), B_hat_max=np.empty(K + 1), err_bound=np.empty(K + 1),
        B_hat_vertices=np.empty((K + 1, n_v)),
        estimate_errors=np.empty((K + 1, len(instances))) if instances else None,
    )

    z = np.zeros(m)
    z[:n] = x0
    for k in range(K + 1):
        t = k * dt
        x = z[:n]
        y = z[0]
        E_y = z[n:n + nn].reshape(n, n)
        E_u = z[n + nn:].reshape(n, n)

        bound = eps0_norm * float(np.exp(-alpha * t))
        per_vertex = trace.B_hat_vertices[k]
        for i in range(n_v):
            per_vertex[i] = value(E_y @ deltas[i] + E_u @ b_corners[i]) + bound - 1.0
        idx = int(np.argmax(per_vertex))
        est = BarrierEstimate(per_vertex=per_vertex, max_value=float(per_vertex[idx]), max_index=idx)

        if scenario.always_backup:
            src = BACKUP
        elif scenario.supervisor_enabled:
            state, src = decide(state, est)
        else:
            src = NOMINAL

        u_nom = float(u_nom_fn(t, y))
        if src == BACKUP:
            u = backup_control(gain, y)
        else:
            u = min(max(u_nom, -u_max), u_max)

        trace.t[k] = t
        trace.x[k] = x
        trace.y[k] = y
        trace.u_applied[k] = u
        trace.u_nominal[k] = u_nom
        trace.source.append(src)
        trace.B_true[k] = value(x) - 1.0
        trace.B_hat_max[k] = est.max_value
        trace.err_bound[k] = bound
        for i, (delta, b_i) in enumerate(instances):
            trace.estimate_errors[k, i] = value(x - (E_y @ delta + E_u @ b_i))

        if k < K:
            z = P @ z + q * u
    return trace


def estimator_bank_from_joint(z: np.ndarray, A0: np.ndarray, alpha: float,
                              eps0_norm: float, t: float) -> EstimatorBank:
    """View a joint simulation state as an EstimatorBank snapshot (for analysis)."""
    n = A0.shape[0]
    nn = n * n
    return EstimatorBank(A0=A0, alpha=alpha, E_y=z[n:n + nn].reshape(n, n).copy(),
                         E_u=z[n + nn:].reshape(n, n).copy(), eps0_norm=eps0_norm, t=t)
