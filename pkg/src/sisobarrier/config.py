"""Project configuration schema, certificate file round-tripping, and content hashing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np
from jsonschema import Draft202012Validator

from .lmi import BarrierCertificate
from .model import ConstraintSet, IntervalCoefficient, UncertainPlant
from .simulator import BoundaryStart, MultisineInput, Scenario, TrackingInput, ZeroInput

CERTIFICATE_VERSION = "0.1.0"


class ConfigError(ValueError):
    """Configuration file failed schema validation or cross-field checks."""


_INTERVAL = {
    "type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2,
}
_VECTOR = {"type": "array", "items": {"type": "number"}, "minItems": 1}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["plant", "constraints", "synthesis"],
    "additionalProperties": False,
    "properties": {
        "plant": {
            "type": "object",
            "required": ["n"],
            "additionalProperties": False,
            "properties": {
                "n": {"type": "integer", "minimum": 1},
                "a": {"type": "array", "items": _INTERVAL},
                "b": {"type": "array", "items": _INTERVAL},
                "ties": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "items": {"type": "string", "pattern": "^[ab][0-9]+$"},
                        "minItems": 2,
                    },
                },
                "true": {
                    "type": "object",
                    "required": ["a", "b"],
                    "additionalProperties": False,
                    "properties": {"a": _VECTOR, "b": _VECTOR},
                },
                "physical": {
                    "type": "object",
                    "required": ["m_e", "b_e", "k_h", "k_h_true"],
                    "additionalProperties": False,
                    "properties": {
                        "m_e": {"type": "number", "exclusiveMinimum": 0},
                        "b_e": {"type": "number"},
                        "k_h": _INTERVAL,
                        "k_h_true": {"type": "number"},
                    },
                },
            },
        },
        "constraints": {
            "type": "object",
            "required": ["f", "u_max", "gain"],
            "additionalProperties": False,
            "properties": {
                "f": {"type": "array", "items": _VECTOR, "minItems": 1},
                "u_max": {"type": "number", "exclusiveMinimum": 0},
                "gain": {"type": "number"},
            },
        },
        "synthesis": {
            "type": "object",
            "required": ["alpha0", "directions"],
            "additionalProperties": False,
            "properties": {
                "alpha0": {"type": "number", "exclusiveMinimum": 0},
                "directions": {"type": "array", "items": _VECTOR, "minItems": 1},
                "trust_radius": {"type": "number", "exclusiveMinimum": 0},
                "alpha_hi": {"type": "number"},
                "bisect_tol": {"type": "number", "exclusiveMinimum": 0},
                "feas_tol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "estimator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"eps0_norm": {"type": "number", "minimum": 0}},
        },
        "supervisor": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "B_lower": {"type": "number"},
                "B_upper": {"type": "number"},
            },
        },
        "scenarios": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "x0", "input", "duration"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "x0": {
                        "anyOf": [
                            _VECTOR,
                            {
                                "type": "object",
                                "required": ["boundary_direction"],
                                "additionalProperties": False,
                                "properties": {
                                    "boundary_direction": _VECTOR,
                                    "scale": {"type": "number", "exclusiveMinimum": 0},
                                },
                            },
                        ]
                    },
                    "input": {
                        "type": "object",
                        "required": ["kind"],
                        "properties": {"kind": {"enum": ["zero", "tracking", "multisine"]}},
                    },
                    "duration": {"type": "number", "exclusiveMinimum": 0},
                    "dt": {"type": "number", "exclusiveMinimum": 0},
                    "supervisor_enabled": {"type": "boolean"},
                    "always_backup": {"type": "boolean"},
                },
            },
        },
    },
}

_VALIDATOR = Draft202012Validator(SCHEMA)


@dataclass
class ProjectConfig:
    """Parsed, cross-checked project configuration."""

    raw: dict
    plant: UncertainPlant
    a_true: np.ndarray
    b_true: np.ndarray
    constraints: ConstraintSet
    alpha0: float
    directions: tuple[np.ndarray, ...]
    trust_radius: float
    alpha_hi: float | None
    bisect_tol: float
    feas_tol: float
    eps0_norm: float
    B_lower: float
    B_upper: float
    scenarios: dict[str, dict]

    def scenario(self, name: str, seed: int | None = None) -> Scenario:
        if name not in self.scenarios:
            raise ConfigError(f"unknown scenario {name!r}; have {sorted(self.scenarios)}")
        sc = self.scenarios[name]
        x0 = sc["x0"]
        if isinstance(x0, dict):
            x0 = BoundaryStart(
                direction=np.asarray(x0["boundary_direction"], dtype=float),
                scale=float(x0.get("scale", 0.99)),
            )
        else:
            x0 = np.asarray(x0, dtype=float)
        inp = sc["input"]
        kind = inp["kind"]
        if kind == "zero":
            gen = ZeroInput()
        elif kind == "tracking":
            gen = TrackingInput(
                amplitude=float(inp["amplitude"]),
                freq_hz=float(inp["freq_hz"]),
                k_p=float(inp.get("k_p", 2.0)),
            )
        else:
            gen = MultisineInput(
                amplitude=float(inp["amplitude"]),
                n_components=int(inp.get("n_components", 8)),
                freq_lo=float(inp.get("freq_lo", 0.02)),
                freq_hi=float(inp.get("freq_hi", 1.0)),
                seed=int(inp["seed"]) if "seed" in inp else (seed if seed is not None else 0),
            )
        return Scenario(
            plant=self.plant,
            a_true=self.a_true,
            b_true=self.b_true,
            x0=x0,
            nominal_input=gen,
            duration=float(sc["duration"]),
            dt=float(sc.get("dt", 1e-3)),
            supervisor_enabled=bool(sc.get("supervisor_enabled", True)),
            always_backup=bool(sc.get("always_backup", False)),
            name=name,
        )


def _parse_tie(ref: str, n: int) -> tuple[str, int]:
    kind, idx = ref[0], int(ref[1:])
    if not 1 <= idx <= n:
        raise ConfigError(f"tie reference {ref!r} is out of range for n={n}")
    return kind, idx - 1


def _expand_physical(plant_raw: dict) -> dict:
    """Derive interval coefficients for the mass-damper-stiffness template."""
    phys = plant_raw["physical"]
    m_e, b_e = float(phys["m_e"]), float(phys["b_e"])
    k_lo, k_hi = (float(v) / m_e for v in phys["k_h"])
    k_true = float(phys["k_h_true"]) / m_e
    return {
        "n": 2,
        "a": [[b_e / m_e, b_e / m_e], [k_lo, k_hi]],
        "b": [[0.0, 0.0], [k_lo, k_hi]],
        "ties": [["a2", "b2"]],
        "true": {"a": [b_e / m_e, k_true], "b": [0.0, k_true]},
    }


def parse_config(raw: dict) -> ProjectConfig:
    """Validate a configuration dict and build the typed project configuration."""
    errors = sorted(_VALIDATOR.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        lines = [f"{'/'.join(str(p) for p in e.absolute_path) or '<root>'}: {e.message}"
                 for e in errors]
        raise ConfigError("configuration schema violations:\n  " + "\n  ".join(lines))

    plant_raw = raw["plant"]
    if "physical" in plant_raw:
        if "a" in plant_raw or "b" in plant_raw:
            raise ConfigError("plant: give either interval coefficients or a physical block, not both")
        if plant_raw["n"] != 2:
            raise ConfigError("plant: the physical template is second order (n must be 2)")
        plant_raw = _expand_physical(plant_raw)
    for key in ("a", "b", "true"):
        if key not in plant_raw:
            raise ConfigError(f"plant: missing {key!r}")

    n = plant_raw["n"]
    if len(plant_raw["a"]) != n or len(plant_raw["b"]) != n:
        raise ConfigError("plant: need exactly n interval pairs in both a and b")
    try:
        plant = UncertainPlant(
            n=n,
            a=tuple(IntervalCoefficient(float(lo), float(hi)) for lo, hi in plant_raw["a"]),
            b=tuple(IntervalCoefficient(float(lo), float(hi)) for lo, hi in plant_raw["b"]),
            ties=tuple(tuple(_parse_tie(r, n) for r in group)
                       for group in plant_raw.get("ties", [])),
        )
    except ValueError as exc:
        raise ConfigError(f"plant: {exc}") from exc

    a_true = np.asarray(plant_raw["true"]["a"], dtype=float)
    b_true = np.asarray(plant_raw["true"]["b"], dtype=float)
    if a_true.shape != (n,) or b_true.shape != (n,):
        raise ConfigError("plant.true: coefficient vectors must have length n")
    if not plant.contains_instance(a_true, b_true):
        raise ConfigError("plant.true: instance lies outside the coefficient box (or breaks a tie)")

    cons_raw = raw["constraints"]
    f = np.asarray(cons_raw["f"], dtype=float)
    if f.ndim != 2 or f.shape[1] != n:
        raise ConfigError("constraints.f: each row must have length n")
    try:
        constraints = ConstraintSet(f=f, u_max=float(cons_raw["u_max"]), gain=float(cons_raw["gain"]))
    except ValueError as exc:
        raise ConfigError(f"constraints: {exc}") from exc

    synth = raw["synthesis"]
    directions = tuple(np.asarray(d, dtype=float) for d in synth["directions"])
    for d in directions:
        if d.shape != (n,):
            raise ConfigError("synthesis.directions: each direction must have length n")
        if not np.any(d):
            raise ConfigError("synthesis.directions: directions must be nonzero")

    sup = raw.get("supervisor", {})
    B_lower = float(sup.get("B_lower", -0.02))
    B_upper = float(sup.get("B_upper", -0.01))
    if not (-1.0 < B_lower < B_upper <= 0.0):
        raise ConfigError("supervisor: thresholds must satisfy -1 < B_lower < B_upper <= 0")

    scenarios: dict[str, dict] = {}
    for sc in raw.get("scenarios", []):
        if sc["name"] in scenarios:
            raise ConfigError(f"duplicate scenario name {sc['name']!r}")
        x0 = sc["x0"]
        if not isinstance(x0, dict) and len(x0) != n:
            raise ConfigError(f"scenario {sc['name']!r}: x0 must have length n")
        scenarios[sc["name"]] = sc

    return ProjectConfig(
        raw=raw,
        plant=plant,
        a_true=a_true,
        b_true=b_true,
        constraints=constraints,
        alpha0=float(synth["alpha0"]),
        directions=directions,
        trust_radius=float(synth.get("trust_radius", 100.0)),
        alpha_hi=float(synth["alpha_hi"]) if "alpha_hi" in synth else None,
        bisect_tol=float(synth.get("bisect_tol", 1e-4)),
        feas_tol=float(synth.get("feas_tol", 1e-7)),
        eps0_norm=float(raw.get("estimator", {}).get("eps0_norm", 1.0)),
        B_lower=B_lower,
        B_upper=B_upper,
        scenarios=scenarios,
    )


def load_config(path) -> ProjectConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(raw)


def config_hash(raw: dict) -> str:
    """Content hash of the synthesis-relevant configuration blocks.

    Scenario and supervisor settings are runtime inputs, so editing them does
    not invalidate a previously synthesized certificate.
    """
    subset = {key: raw[key] for key in ("plant", "constraints", "synthesis") if key in raw}
    canon = json.dumps(subset, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# -- certificate files ------------------------------------------------------


@dataclass
class CertificateFile:
    """On-disk barrier certificate plus estimator synthesis results."""

    n: int
    Q_list: tuple[np.ndarray, ...]
    directions: tuple[np.ndarray, ...]
    rho: tuple[float, ...]
    alpha0: float
    gain: float
    a_hat: np.ndarray
    alpha: float
    residuals: dict
    config_hash: str
    version: str = CERTIFICATE_VERSION

    def to_barrier_certificate(self, constraints: ConstraintSet) -> BarrierCertificate:
        return BarrierCertificate(
            Q_list=self.Q_list,
            gain=self.gain,
            alpha0=self.alpha0,
            constraints=constraints,
            directions=self.directions,
            rho=self.rho,
        )


def write_certificate(path, cert: CertificateFile) -> None:
    payload = {
        "n": cert.n,
        "Q_list": [np.asarray(Q).tolist() for Q in cert.Q_list],
        "directions": [np.asarray(d).tolist() for d in cert.directions],
        "rho": list(cert.rho),
        "alpha0": cert.alpha0,
        "gain": cert.gain,
        "a_hat": np.asarray(cert.a_hat).tolist(),
        "alpha": cert.alpha,
        "residuals": cert.residuals,
        "config_hash": cert.config_hash,
        "version": cert.version,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_certificate(path) -> CertificateFile:
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read certificate {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"certificate {path} is not valid JSON: {exc}") from exc
    required = {"n", "Q_list", "directions", "rho", "alpha0", "gain", "a_hat",
                "alpha", "residuals", "config_hash", "version"}
    missing = required - payload.keys()
    if missing:
        raise ConfigError(f"certificate {path} is missing keys: {sorted(missing)}")
    return CertificateFile(
        n=int(payload["n"]),
        Q_list=tuple(np.asarray(Q, dtype=float) for Q in payload["Q_list"]),
        directions=tuple(np.asarray(d, dtype=float) for d in payload["directions"]),
        rho=tuple(float(r) for r in payload["rho"]),
        alpha0=float(payload["alpha0"]),
        gain=float(payload["gain"]),
        a_hat=np.asarray(payload["a_hat"], dtype=float),
        alpha=float(payload["alpha"]),
        residuals=dict(payload["residuals"]),
        config_hash=str(payload["config_hash"]),
        version=str(payload["version"]),
    )


def exoskeleton_config() -> dict:
    """Reproduction configuration for the human-exoskeleton interaction example."""
    return {
        "plant": {
            "n": 2,
            "physical": {"m_e": 1.0, "b_e": 12.0, "k_h": [4.0, 12.0], "k_h_true": 8.0},
        },
        "constraints": {"f": [[-1.0, 1.0 / 12.0]], "u_max": 1.2, "gain": -1.2},
        "synthesis": {"alpha0": 0.5, "directions": [[1.0, 0.0], [1.0, 12.0]]},
        "estimator": {"eps0_norm": 1.0},
        "supervisor": {"B_lower": -0.02, "B_upper": -0.01},
        "scenarios": [
            {
                "name": "boundary-release",
                "x0": {"boundary_direction": [1.0, 12.0], "scale": 0.99},
                "input": {"kind": "zero"},
                "duration": 20.0,
                "dt": 1e-3,
                "supervisor_enabled": False,
                "always_backup": True,
            },
            {
                "name": "unsafe-tracking",
                "x0": [0.0, 0.0],
                "input": {"kind": "tracking", "amplitude": 1.2, "freq_hz": 0.05, "k_p": 2.0},
                "duration": 60.0,
                "dt": 1e-3,
                "supervisor_enabled": True,
                "always_backup": False,
            },
        ],
    }
