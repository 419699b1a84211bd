"""Pauli algebra and Hamiltonian construction for qubit networks.

Conventions: |0> = (1, 0)^T with sigma_z|0> = +|0>, so |0> is the upper
(energy +omega/2) level of a local Hamiltonian (omega/2) sigma_z.  Tensor
factor 0 is the leftmost (most significant) slot of the Kronecker product.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

# sigma_minus lowers the +omega/2 state: |1><0|
SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.conj().T.copy()

PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


def lift_pauli(axis: str, site: int, n_qubits: int) -> np.ndarray:
    """Lift a single-qubit Pauli to the full register.

    Returns I^{site} (x) sigma_axis (x) I^{n_qubits-site-1} as a dense
    2^n x 2^n matrix.
    """
    return lift_operator(PAULI[_norm_axis(axis)], site, n_qubits)


def lift_operator(op: np.ndarray, site: int, n_qubits: int) -> np.ndarray:
    """Lift an arbitrary single-qubit operator to site `site` of the register."""
    if n_qubits < 1:
        raise ValueError(f"n_qubits must be >= 1, got {n_qubits}")
    if not 0 <= site < n_qubits:
        raise ValueError(f"site {site} out of range for {n_qubits} qubits")
    out = np.array([[1.0 + 0.0j]])
    for k in range(n_qubits):
        out = np.kron(out, op if k == site else IDENTITY_2)
    return out


def _norm_axis(axis) -> str:
    name = getattr(axis, "value", axis)
    name = str(name).lower()
    if name not in PAULI:
        raise ValueError(f"unknown Pauli axis {axis!r}; expected one of x, y, z")
    return name


@dataclass(frozen=True)
class Edge:
    """Undirected coupling edge with per-axis strengths (XX, YY, ZZ)."""

    i: int
    j: int
    jx: float
    jy: float
    jz: float

    @classmethod
    def isotropic(cls, i: int, j: int, strength: float) -> "Edge":
        return cls(i, j, strength, strength, strength)

    @property
    def pair(self) -> tuple[int, int]:
        return (min(self.i, self.j), max(self.i, self.j))


@dataclass
class BathTopology:
    """Qubit network: on-site frequencies, coupling edges, dissipator specs.

    `dephasing` and `thermal` are lists of (site, rate) pairs; `beta` is the
    shared inverse temperature of all thermal channels.
    """

    n_qubits: int
    omega: float | Sequence[float] = 1.0
    beta: float = 1.0
    edges: list[Edge] = field(default_factory=list)
    dephasing: list[tuple[int, float]] = field(default_factory=list)
    thermal: list[tuple[int, float]] = field(default_factory=list)
    system_index: int = 0

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be >= 1, got {self.n_qubits}")
        if np.isscalar(self.omega):
            self.omega = (float(self.omega),) * self.n_qubits
        else:
            self.omega = tuple(float(w) for w in self.omega)
        if len(self.omega) != self.n_qubits:
            raise ValueError(
                f"omega has {len(self.omega)} entries for {self.n_qubits} qubits"
            )
        if any(w <= 0 for w in self.omega):
            raise ValueError("all on-site frequencies omega must be > 0")
        if self.beta <= 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if not 0 <= self.system_index < self.n_qubits:
            raise ValueError(f"system_index {self.system_index} out of range")

        norm_edges = []
        seen = set()
        for e in self.edges:
            if not isinstance(e, Edge):
                e = Edge.isotropic(*e) if len(e) == 3 else Edge(*e)
            if e.i == e.j:
                raise ValueError(f"self-edge on node {e.i}")
            for node in (e.i, e.j):
                if not 0 <= node < self.n_qubits:
                    raise ValueError(f"edge node {node} out of range")
            if e.pair in seen:
                raise ValueError(f"duplicate edge {e.pair}")
            seen.add(e.pair)
            norm_edges.append(e)
        self.edges = norm_edges

        for name, entries in (("dephasing", self.dephasing), ("thermal", self.thermal)):
            cleaned = []
            for site, rate in entries:
                site, rate = int(site), float(rate)
                if not 0 <= site < self.n_qubits:
                    raise ValueError(f"{name} site {site} out of range")
                if rate < 0:
                    raise ValueError(f"{name} rate gamma must be >= 0, got {rate}")
                cleaned.append((site, rate))
            if name == "dephasing":
                self.dephasing = cleaned
            else:
                self.thermal = cleaned

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @property
    def bath_sites(self) -> list[int]:
        return [i for i in range(self.n_qubits) if i != self.system_index]


def build_local_hamiltonian(topo: BathTopology) -> np.ndarray:
    """H_local = sum_i (omega_i / 2) sigma_z^{(i)}.

    Diagonal in the computational basis, hence built directly on the diagonal.
    """
    n = topo.n_qubits
    diag = np.zeros(topo.dim)
    for i, w in enumerate(topo.omega):
        # qubit i contributes +-w/2 depending on its bit (0 bit = +w/2)
        bit = (np.arange(topo.dim) >> (n - 1 - i)) & 1
        diag += 0.5 * w * (1.0 - 2.0 * bit)
    return np.diag(diag).astype(complex)


def build_interaction_hamiltonian(topo: BathTopology) -> np.ndarray:
    """Heisenberg-type coupling: sum over edges of jx XX + jy YY + jz ZZ."""
    n = topo.n_qubits
    H = np.zeros((topo.dim, topo.dim), dtype=complex)
    for e in topo.edges:
        for strength, axis in ((e.jx, "x"), (e.jy, "y"), (e.jz, "z")):
            if strength == 0.0:
                continue
            H += strength * (lift_pauli(axis, e.i, n) @ lift_pauli(axis, e.j, n))
    return H


def build_total_hamiltonian(topo: BathTopology) -> np.ndarray:
    """H = H_local + H_int."""
    return build_local_hamiltonian(topo) + build_interaction_hamiltonian(topo)
