"""Uncertain SISO plant model, canonical realizations, and coefficient-box vertex sets."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

DEGENERACY_TOL = 1e-12

# Coefficient reference: ("a", i) or ("b", j) with 0-based index.
CoefficientRef = tuple[str, int]


class InstabilityError(ValueError):
    """Raised when a realization that must be strictly stable is not."""


@dataclass(frozen=True)
class IntervalCoefficient:
    """Closed interval [lower, upper] for one transfer-function coefficient."""

    lower: float
    upper: float

    def __post_init__(self):
        if not (np.isfinite(self.lower) and np.isfinite(self.upper)):
            raise ValueError("interval bounds must be finite")
        if self.lower > self.upper:
            raise ValueError(f"interval lower bound {self.lower} exceeds upper bound {self.upper}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def is_degenerate(self, tol: float = DEGENERACY_TOL) -> bool:
        return self.width <= tol

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= value <= self.upper + tol


@dataclass(frozen=True)
class UncertainPlant:
    """Strictly proper SISO plant with interval denominator/numerator coefficients.

    Coefficients are stored in descending power order: ``a[0]`` multiplies
    s^(n-1) in the monic denominator and ``b[0]`` multiplies s^(n-1) in the
    numerator.  ``ties`` groups coefficient references that share a single
    scalar uncertainty, so tied coefficients move to their interval endpoints
    together during corner enumeration.
    """

    n: int
    a: tuple[IntervalCoefficient, ...]
    b: tuple[IntervalCoefficient, ...]
    ties: tuple[tuple[CoefficientRef, ...], ...] = field(default=())

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("system order n must be a positive integer")
        if len(self.a) != self.n or len(self.b) != self.n:
            raise ValueError("need exactly n denominator and n numerator coefficients")
        seen: set[CoefficientRef] = set()
        for group in self.ties:
            if len(group) < 2:
                raise ValueError("a tie group needs at least two members")
            for ref in group:
                kind, idx = ref
                if kind not in ("a", "b") or not 0 <= idx < self.n:
                    raise ValueError(f"invalid coefficient reference {ref!r}")
                if ref in seen:
                    raise ValueError(f"coefficient {ref!r} appears in more than one tie group")
                seen.add(ref)

    def interval(self, ref: CoefficientRef) -> IntervalCoefficient:
        kind, idx = ref
        return self.a[idx] if kind == "a" else self.b[idx]

    def contains_instance(self, a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
        """True if the concrete coefficient vectors lie inside the box (ties respected)."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if a.shape != (self.n,) or b.shape != (self.n,):
            return False
        for i in range(self.n):
            if not self.a[i].contains(a[i], tol) or not self.b[i].contains(b[i], tol):
                return False
        for group in self.ties:
            lams = []
            for ref in group:
                iv = self.interval(ref)
                if iv.is_degenerate():
                    continue
                val = a[ref[1]] if ref[0] == "a" else b[ref[1]]
                lams.append((val - iv.lower) / iv.width)
            if lams and max(lams) - min(lams) > tol:
                return False
        return True


@dataclass(frozen=True)
class CanonicalRealization:
    """Observable canonical triple (A, b_u, c0) with c0 = [1, 0, ..., 0]."""

    A: np.ndarray
    b_u: np.ndarray
    c0: np.ndarray

    def transfer_value(self, s: complex) -> complex:
        """Evaluate c0 (sI - A)^-1 b_u at one complex frequency."""
        n = self.A.shape[0]
        return complex(self.c0 @ np.linalg.solve(s * np.eye(n) - self.A, self.b_u))


@dataclass(frozen=True)
class ShiftedRealization:
    """Realization split A = A0 + b_y c0 around a chosen stable companion A0."""

    A0: np.ndarray
    a_hat: np.ndarray
    b_y: np.ndarray
    b_u: np.ndarray


@dataclass(frozen=True)
class ConstraintSet:
    """Polyhedral state constraints |f_i x| <= 1 plus input bound |u| <= u_max under gain k."""

    f: np.ndarray
    u_max: float
    gain: float

    def __post_init__(self):
        f = np.atleast_2d(np.asarray(self.f, dtype=float))
        object.__setattr__(self, "f", f)
        if self.u_max <= 0:
            raise ValueError("u_max must be positive")

    @property
    def n_f(self) -> int:
        return self.f.shape[0]


@dataclass(frozen=True)
class CornerSet:
    """Endpoint combinations of the non-degenerate coefficient intervals."""

    corners: tuple[tuple[np.ndarray, np.ndarray], ...]
    count: int


def companion(a) -> np.ndarray:
    """Observable-canonical companion matrix: shift matrix minus a in the first column."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    n = a.size
    A = np.eye(n, k=1)
    A[:, 0] -= a
    return A


def output_row(n: int) -> np.ndarray:
    c0 = np.zeros(n)
    c0[0] = 1.0
    return c0


def is_strictly_stable(A: np.ndarray, margin: float = 0.0) -> bool:
    return bool(np.max(np.linalg.eigvals(A).real) < -margin)


def observable_canonical(a, b) -> CanonicalRealization:
    """Build the observable canonical realization of b(s)/(s^n + a(s)).

    Parameters
    ----------
    a, b : array_like, shape (n,)
        Denominator (below the leading monic term) and numerator coefficients
        in descending power order.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("system order n must be at least 1")
    if a.shape != b.shape:
        raise ValueError("coefficient vectors must have equal length")
    return CanonicalRealization(A=companion(a), b_u=b.copy(), c0=output_row(a.size))


def enumerate_corners(plant: UncertainPlant, tol: float = DEGENERACY_TOL) -> CornerSet:
    """Enumerate all endpoint combinations of the plant's coefficient box.

    Tie groups contribute a single binary choice; degenerate intervals are
    pinned at their lower (== upper) endpoint.  Corner count is 2^m for m
    independent non-degenerate uncertainty sources.
    """
    if tol < 0:
        raise ValueError("degeneracy tolerance must be nonnegative")
    tied = {ref for group in plant.ties for ref in group}
    units: list[tuple[CoefficientRef, ...]] = []
    for group in plant.ties:
        if any(not plant.interval(ref).is_degenerate(tol) for ref in group):
            units.append(tuple(group))
    for kind in ("a", "b"):
        for idx in range(plant.n):
            ref = (kind, idx)
            if ref not in tied and not plant.interval(ref).is_degenerate(tol):
                units.append((ref,))

    base_a = np.array([iv.lower for iv in plant.a])
    base_b = np.array([iv.lower for iv in plant.b])
    corners = []
    for choice in itertools.product((0, 1), repeat=len(units)):
        a_vec = base_a.copy()
        b_vec = base_b.copy()
        for unit, hi in zip(units, choice):
            for kind, idx in unit:
                iv = plant.interval((kind, idx))
                val = iv.upper if hi else iv.lower
                (a_vec if kind == "a" else b_vec)[idx] = val
        corners.append((a_vec, b_vec))
    return CornerSet(corners=tuple(corners), count=len(corners))


def pldi_vertices(plant: UncertainPlant, gain: float, tol: float = DEGENERACY_TOL) -> list[np.ndarray]:
    """Closed-loop vertex matrices A(a) + b * gain * c0 over all box corners."""
    c0 = output_row(plant.n)
    return [companion(a) + np.outer(gain * b, c0) for a, b in enumerate_corners(plant, tol).corners]


def shifted_realization(a_instance, b_instance, a_hat) -> ShiftedRealization:
    """Split the realization of one coefficient instance around companion(a_hat).

    Raises
    ------
    InstabilityError
        If companion(a_hat) is not strictly stable.
    """
    a_instance = np.atleast_1d(np.asarray(a_instance, dtype=float))
    b_instance = np.atleast_1d(np.asarray(b_instance, dtype=float))
    a_hat = np.atleast_1d(np.asarray(a_hat, dtype=float))
    if not a_instance.shape == b_instance.shape == a_hat.shape:
        raise ValueError("coefficient vectors must have equal length")
    A0 = companion(a_hat)
    if not is_strictly_stable(A0):
        raise InstabilityError("companion(a_hat) has an eigenvalue with nonnegative real part")
    return ShiftedRealization(A0=A0, a_hat=a_hat.copy(), b_y=a_hat - a_instance, b_u=b_instance.copy())
