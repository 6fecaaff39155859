"""Four-panel SVG rendering of simulation traces."""

from __future__ import annotations

import numpy as np
import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .simulator import SimulationTrace

HULL_SAMPLES = 720


def ellipse_boundary(Q: np.ndarray, samples: int = 360) -> np.ndarray:
    """Points on the boundary of {x : x^T Q^-1 x = 1} for a 2x2 SPD Q."""
    w, V = np.linalg.eigh(Q)
    sqrtQ = V @ np.diag(np.sqrt(np.maximum(w, 0.0))) @ V.T
    theta = np.linspace(0.0, 2.0 * np.pi, samples + 1)
    circle = np.vstack([np.cos(theta), np.sin(theta)])
    return (sqrtQ @ circle).T


def hull_boundary(Q_list, samples: int = HULL_SAMPLES) -> np.ndarray:
    """Support points of the convex hull of the ellipsoidal unit balls.

    For each sampled direction the farthest member ellipsoid is selected and
    its support point recorded; densely sampled directions trace the hull.
    """
    theta = np.linspace(0.0, 2.0 * np.pi, samples + 1)
    dirs = np.vstack([np.cos(theta), np.sin(theta)]).T
    points = np.empty_like(dirs)
    for k, d in enumerate(dirs):
        best, best_pt = -np.inf, None
        for Q in Q_list:
            Qd = Q @ d
            s = np.sqrt(d @ Qd)
            if s > best:
                best, best_pt = s, Qd / s
        points[k] = best_pt
    return points


def plot_trace(trace: SimulationTrace, out_path, Q_list=None) -> None:
    """Write a self-contained SVG with phase, signal, barrier, and source panels."""
    if len(trace) == 0:
        raise ValueError("cannot plot an empty trace")

    fig, axes = plt.subplots(2, 2, figsize=(11, 8))
    ax_phase, ax_sig = axes[0]
    ax_bar, ax_src = axes[1]

    if Q_list is not None and trace.n >= 2:
        for j, Q in enumerate(Q_list):
            pts = ellipse_boundary(np.asarray(Q)[:2, :2])
            ax_phase.plot(pts[:, 0], pts[:, 1], ls="--", lw=0.9, label=f"member ball {j + 1}")
        hull = hull_boundary([np.asarray(Q)[:2, :2] for Q in Q_list])
        ax_phase.plot(hull[:, 0], hull[:, 1], "k-", lw=1.4, label="composite unit ball")
    if trace.n >= 2:
        ax_phase.plot(trace.x[:, 0], trace.x[:, 1], "C3-", lw=1.0, label="state")
        ax_phase.plot(trace.x[0, 0], trace.x[0, 1], "C3o", ms=5)
        ax_phase.set_ylabel("x2")
    else:
        ax_phase.plot(trace.t, trace.x[:, 0], "C3-", lw=1.0, label="state")
    ax_phase.set_xlabel("x1")
    ax_phase.set_title("phase plane")
    ax_phase.legend(fontsize=7, loc="best")

    ax_sig.plot(trace.t, trace.y, "C0-", lw=1.0, label="y")
    ax_sig.plot(trace.t, trace.u_applied, "C1-", lw=1.0, label="u applied")
    ax_sig.plot(trace.t, trace.u_nominal, "C2--", lw=0.8, label="u nominal")
    ax_sig.set_xlabel("t [s]")
    ax_sig.set_title("output and input")
    ax_sig.legend(fontsize=7, loc="best")

    ax_bar.plot(trace.t, trace.B_true, "C0-", lw=1.0, label="barrier (true state)")
    ax_bar.plot(trace.t, trace.B_hat_max, "C1-", lw=1.0, label="barrier bound (max corner)")
    ax_bar.axhline(0.0, color="k", lw=0.6)
    ax_bar.set_xlabel("t [s]")
    ax_bar.set_title("barrier value vs measurable bound")
    ax_bar.legend(fontsize=7, loc="best")

    active = np.array([1.0 if s == "backup" else 0.0 for s in trace.source])
    ax_src.step(trace.t, active, "C3-", where="post", lw=1.0)
    ax_src.set_yticks([0, 1], labels=["nominal", "backup"])
    ax_src.set_ylim(-0.2, 1.2)
    ax_src.set_xlabel("t [s]")
    ax_src.set_title("active control source")

    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)
