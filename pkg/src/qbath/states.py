"""Initial states: superposition system state and thermal bath states."""

from __future__ import annotations

import numpy as np

from .operators import BathTopology


def plus_state() -> np.ndarray:
    """|+><+|: equal superposition of |0> and |1>."""
    return np.full((2, 2), 0.5, dtype=complex)


def basis_state(level: int) -> np.ndarray:
    """Single-qubit projector |level><level| for level in {0, 1}."""
    rho = np.zeros((2, 2), dtype=complex)
    rho[level, level] = 1.0
    return rho


def thermal_occupation(beta: float, omega: float) -> float:
    """Bose occupation n_th = 1 / (exp(beta*omega) - 1)."""
    if beta <= 0 or omega <= 0:
        raise ValueError(f"beta*omega must be > 0, got beta={beta}, omega={omega}")
    return 1.0 / np.expm1(beta * omega)


def thermal_qubit_state(beta: float, omega: float) -> np.ndarray:
    """Gibbs state of H_q = (omega/2) sigma_z at inverse temperature beta.

    diag(exp(-beta*omega/2), exp(+beta*omega/2)) / (2 cosh(beta*omega/2));
    the |0> (upper) level carries the smaller population.
    """
    if beta <= 0 or omega <= 0:
        raise ValueError(f"beta and omega must be > 0, got beta={beta}, omega={omega}")
    x = 0.5 * beta * omega
    z = 2.0 * np.cosh(x)
    return np.diag([np.exp(-x) / z, np.exp(x) / z]).astype(complex)


def initial_product_state(system_state: np.ndarray, topo: BathTopology) -> np.ndarray:
    """rho_0 = system state at the system slot, thermal states everywhere else."""
    system_state = np.asarray(system_state, dtype=complex)
    if system_state.shape != (2, 2):
        raise ValueError(f"system_state must be 2x2, got {system_state.shape}")
    rho = np.array([[1.0 + 0.0j]])
    for i in range(topo.n_qubits):
        if i == topo.system_index:
            factor = system_state
        else:
            factor = thermal_qubit_state(topo.beta, topo.omega[i])
        rho = np.kron(rho, factor)
    return rho
