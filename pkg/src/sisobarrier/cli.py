"""Command-line pipeline: synthesize -> simulate -> verify -> plot."""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import config as cfgmod
from .config import (
    CertificateFile,
    ConfigError,
    ProjectConfig,
    config_hash,
    load_config,
    read_certificate,
    write_certificate,
)
from .lmi import (
    A0Synthesis,
    SynthesisInfeasibleError,
    check_decay,
    synthesize_A0,
    synthesize_Q,
)
from .model import companion, is_strictly_stable, output_row, pldi_vertices
from .norms import CompositeNorm, unit_ball_constraint_check
from .plotting import plot_trace
from .simulator import SimulationConfigError, SimulationTrace, simulate
from .supervisor import SupervisorState

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_CONSISTENCY = 3
EXIT_RUNTIME = 4


class ConsistencyError(RuntimeError):
    """Certificate and configuration do not belong together (or verification failed)."""


def synthesize_from_config(cfg: ProjectConfig) -> CertificateFile:
    """Run both synthesis stages and collect the certificate payload."""
    vertices = pldi_vertices(cfg.plant, cfg.constraints.gain)
    Q_list, rho = [], []
    for direction in cfg.directions:
        Q, r = synthesize_Q(vertices, cfg.constraints, cfg.alpha0, direction, tol=cfg.feas_tol)
        Q_list.append(Q)
        rho.append(r)

    result: A0Synthesis = synthesize_A0(
        Q_list,
        alpha_lo=cfg.alpha0,
        alpha_hi=cfg.alpha_hi,
        bisect_tol=cfg.bisect_tol,
        trust_radius=cfg.trust_radius,
    )

    residuals = _certificate_residuals(cfg, Q_list, rho, result.a_hat, result.alpha)
    return CertificateFile(
        n=cfg.plant.n,
        Q_list=tuple(Q_list),
        directions=tuple(cfg.directions),
        rho=tuple(rho),
        alpha0=cfg.alpha0,
        gain=cfg.constraints.gain,
        a_hat=result.a_hat,
        alpha=result.alpha,
        residuals=residuals,
        config_hash=config_hash(cfg.raw),
    )


def _certificate_residuals(cfg: ProjectConfig, Q_list, rho, a_hat, alpha) -> dict:
    vertices = pldi_vertices(cfg.plant, cfg.constraints.gain)
    cons = cfg.constraints
    c0 = output_row(cfg.plant.n)
    A0 = companion(a_hat)
    state = max(float(fi @ Q @ fi) - 1.0 for Q in Q_list for fi in cons.f)
    inp = max(float(c0 @ Q @ c0) - cons.u_max**2 / cons.gain**2 for Q in Q_list)
    decay0 = max(check_decay(Ac, Q, cfg.alpha0) for Q in Q_list for Ac in vertices)
    schur = max(
        -float(np.linalg.eigvalsh(np.block([[np.array([[r]]), x[None, :]], [x[:, None], Q]])).min())
        for Q, r, x in zip(Q_list, rho, cfg.directions)
    )
    decay_a0 = max(check_decay(A0, Q, alpha) for Q in Q_list)
    min_eig = min(float(np.linalg.eigvalsh(Q).min()) for Q in Q_list)
    return {
        "state_containment": state,
        "input_containment": inp,
        "vertex_decay": decay0,
        "direction_schur": schur,
        "estimator_decay": decay_a0,
        "min_eigenvalue": min_eig,
    }


@dataclass
class VerifyResult:
    ok: bool
    checks: list[tuple[str, bool, float | None]]

    def failures(self) -> list[str]:
        return [name for name, ok, _ in self.checks if not ok]


def verify_certificate(cert: CertificateFile, cfg: ProjectConfig, tol: float = 1e-7) -> VerifyResult:
    """Re-derive every certificate condition from the raw matrices, solver-free."""
    checks: list[tuple[str, bool, float | None]] = []

    def add(name: str, ok: bool, residual: float | None = None):
        checks.append((name, bool(ok), residual))

    add("config_hash", cert.config_hash == config_hash(cfg.raw))
    add("dimensions", cert.n == cfg.plant.n and all(Q.shape == (cert.n, cert.n) for Q in cert.Q_list))
    add("gain_matches", cert.gain == cfg.constraints.gain)
    add("alpha0_matches", cert.alpha0 == cfg.alpha0)

    cons = cfg.constraints
    c0 = output_row(cfg.plant.n)
    vertices = pldi_vertices(cfg.plant, cons.gain)

    min_eig = min(float(np.linalg.eigvalsh(0.5 * (Q + Q.T)).min()) for Q in cert.Q_list)
    add("positive_definite", min_eig > 0.0, -min_eig)
    sym = max(float(np.abs(Q - Q.T).max()) for Q in cert.Q_list)
    add("symmetric", sym <= 1e-10, sym)

    state = max(float(fi @ Q @ fi) - 1.0 for Q in cert.Q_list for fi in cons.f)
    add("state_containment", state <= tol, state)
    inp = max(float(c0 @ Q @ c0) - cons.u_max**2 / cons.gain**2 for Q in cert.Q_list)
    add("input_containment", inp <= tol, inp)

    decay0 = max(check_decay(Ac, Q, cert.alpha0) for Q in cert.Q_list for Ac in vertices)
    add("vertex_decay", decay0 <= tol, decay0)

    schur = max(
        -float(np.linalg.eigvalsh(np.block([[np.array([[r]]), x[None, :]], [x[:, None], Q]])).min())
        for Q, r, x in zip(cert.Q_list, cert.rho, cert.directions)
    )
    add("direction_schur", schur <= tol, schur)

    A0 = companion(cert.a_hat)
    add("estimator_stable", is_strictly_stable(A0))
    decay_a0 = max(check_decay(A0, Q, cert.alpha) for Q in cert.Q_list)
    add("estimator_decay", decay_a0 <= tol, decay_a0)
    add("alpha_not_below_alpha0", cert.alpha >= cert.alpha0 - 1e-12)

    norm = CompositeNorm(cert.Q_list)
    ball = unit_ball_constraint_check(norm, cons, tol)
    add("unit_ball_containment", ball.ok, ball.worst_margin)

    return VerifyResult(ok=all(ok for _, ok, _ in checks), checks=checks)


# -- commands ----------------------------------------------------------------


def cmd_synthesize(config_path, out_path, tolerance: float | None = None) -> CertificateFile:
    cfg = load_config(config_path)
    if tolerance is not None:
        cfg.feas_tol = tolerance
    t0 = time.perf_counter()
    cert = synthesize_from_config(cfg)
    elapsed = time.perf_counter() - t0
    write_certificate(out_path, cert)
    print(f"synthesis ok in {elapsed:.2f} s")
    print(f"  alpha0 = {cert.alpha0}")
    print(f"  alpha  = {cert.alpha:.6f}")
    for j, r in enumerate(cert.rho):
        print(f"  rho[{j}] = {r:.6f}  (direction {np.asarray(cert.directions[j]).tolist()})")
    print(f"  a_hat  = {np.asarray(cert.a_hat).round(6).tolist()}")
    for name, value in sorted(cert.residuals.items()):
        print(f"  residual {name}: {value:.3e}")
    print(f"certificate written to {out_path}")
    return cert


def cmd_simulate(config_path, certificate_path, scenario_name, out_path,
                 seed: int | None = None) -> SimulationTrace:
    cfg = load_config(config_path)
    cert_file = read_certificate(certificate_path)
    if cert_file.config_hash != config_hash(cfg.raw):
        raise ConsistencyError(
            "certificate was synthesized from a different configuration (hash mismatch)"
        )
    certificate = cert_file.to_barrier_certificate(cfg.constraints)
    scenario = cfg.scenario(scenario_name, seed=seed)
    supervisor = SupervisorState(B_lower=cfg.B_lower, B_upper=cfg.B_upper)
    trace = simulate(scenario, certificate, cert_file.a_hat, cert_file.alpha,
                     supervisor, eps0_norm=cfg.eps0_norm)
    trace.to_csv(out_path)
    s = trace.summary()
    print(f"scenario {scenario_name!r}: {len(trace)} rows written to {out_path}")
    print(f"  max|y| = {s['max_abs_y']:.6f}")
    print(f"  max|u| = {s['max_abs_u']:.6f}")
    print(f"  switches = {s['switch_count']}")
    print(f"  min margin = {s['min_margin']:.6f}")
    return trace


def cmd_verify(certificate_path, config_path, tolerance: float = 1e-7) -> VerifyResult:
    cfg = load_config(config_path)
    cert = read_certificate(certificate_path)
    result = verify_certificate(cert, cfg, tolerance)
    for name, ok, residual in result.checks:
        detail = "" if residual is None else f"  (residual {residual:.3e})"
        print(f"  {'PASS' if ok else 'FAIL'} {name}{detail}")
    print(f"verification {'passed' if result.ok else 'FAILED'}")
    return result


def cmd_plot(trace_csv, out_path, certificate_path=None) -> None:
    trace = SimulationTrace.from_csv(trace_csv)
    Q_list = None
    if certificate_path is not None:
        Q_list = read_certificate(certificate_path).Q_list
    plot_trace(trace, out_path, Q_list=Q_list)
    print(f"plot written to {out_path}")


# -- argument parsing --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sisobarrier",
        description="Barrier certificate synthesis and hybrid safety supervision "
                    "for uncertain SISO plants.",
    )
    parser.add_argument("--tolerance", type=float, default=None,
                        help="feasibility tolerance override for residual checks")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed for randomized scenario inputs (test harness use)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", help="synthesize certificate matrices and the estimator")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("simulate", help="run one named scenario against a certificate")
    p.add_argument("--config", required=True)
    p.add_argument("--certificate", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("verify", help="re-check every certificate condition solver-free")
    p.add_argument("--certificate", required=True)
    p.add_argument("--config", required=True)

    p = sub.add_parser("plot", help="render a trace CSV as a four-panel SVG")
    p.add_argument("--trace", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--certificate", default=None,
                   help="optional certificate for unit-ball outlines in the phase panel")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG

    try:
        if args.command == "synthesize":
            cmd_synthesize(args.config, args.out, tolerance=args.tolerance)
            return EXIT_OK
        if args.command == "simulate":
            cmd_simulate(args.config, args.certificate, args.scenario, args.out, seed=args.seed)
            return EXIT_OK
        if args.command == "verify":
            result = cmd_verify(args.certificate, args.config,
                                tolerance=args.tolerance if args.tolerance is not None else 1e-7)
            return EXIT_OK if result.ok else EXIT_CONSISTENCY
        if args.command == "plot":
            cmd_plot(args.trace, args.out, certificate_path=args.certificate)
            return EXIT_OK
        parser.error(f"unknown command {args.command!r}")
    except (ConfigError, SimulationConfigError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SynthesisInfeasibleError as exc:
        print(f"synthesis infeasible: {exc}", file=sys.stderr)
        if exc.report is not None:
            print(f"  solver status: {exc.report.status}", file=sys.stderr)
            if exc.report.max_constraint_residual is not None:
                print(f"  worst residual: {exc.report.max_constraint_residual:.3e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConsistencyError as exc:
        print(f"consistency error: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
