import json

import numpy as np
import pytest

from sisobarrier import config as cfgmod
from sisobarrier.cli import synthesize_from_config
from sisobarrier.norms import CompositeNorm


@pytest.fixture(scope="session")
def exo_raw() -> dict:
    return cfgmod.exoskeleton_config()


@pytest.fixture(scope="session")
def exo_cfg(exo_raw):
    return cfgmod.parse_config(exo_raw)


@pytest.fixture(scope="session")
def exo_cert_file(exo_cfg):
    """One shared synthesis run for the whole suite."""
    return synthesize_from_config(exo_cfg)


@pytest.fixture(scope="session")
def exo_certificate(exo_cfg, exo_cert_file):
    return exo_cert_file.to_barrier_certificate(exo_cfg.constraints)


@pytest.fixture(scope="session")
def exo_norm(exo_certificate):
    return CompositeNorm(exo_certificate.Q_list)


@pytest.fixture()
def exo_config_path(tmp_path, exo_raw):
    path = tmp_path / "exo.json"
    path.write_text(json.dumps(exo_raw))
    return path


@pytest.fixture()
def exo_certificate_path(tmp_path, exo_cert_file):
    path = tmp_path / "certificate.json"
    cfgmod.write_certificate(path, exo_cert_file)
    return path


def composite_grid_oracle(Q_list, x, grid_points: int = 10_001) -> float:
    """Independent brute-force composite norm for n_q = 2: direct solves on a gamma grid."""
    Q1, Q2 = (np.asarray(Q, dtype=float) for Q in Q_list)
    x = np.asarray(x, dtype=float)
    gammas = np.linspace(0.0, 1.0, grid_points)
    stack = gammas[:, None, None] * Q1 + (1.0 - gammas)[:, None, None] * Q2
    rhs = np.broadcast_to(x[:, None], (grid_points, x.size, 1))
    sols = np.linalg.solve(stack, rhs)[..., 0]
    vals = sols @ x
    return float(np.sqrt(vals.min()))
