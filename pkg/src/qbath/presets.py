"""Compiled-in topology presets and the named time grids.

The canonical network is a system qubit coupled to a layered bath: two
first-layer qubits (mutually coupled, each damped at gamma_l1) feeding three
second-layer qubits (damped at gamma_l2).  Coupling classes are j_sb
(system to layer 1), j_l1 (within layer 1), j_l12 (layer 1 to layer 2) and
j_l2 (within layer 2).  System-to-bath edges carry a fixed (x, y, z)
anisotropy profile scaled by j_sb; all bath-bath edges are isotropic.
"""

from __future__ import annotations

from dataclasses import dataclass

from .lindblad import TimeGrid
from .operators import BathTopology, Edge

GRIDS: dict[str, TimeGrid] = {
    "short": TimeGrid(0.0, 500.0, 5000),
    "long": TimeGrid(0.0, 1500.0, 5000),
}

# x, y, z weights applied to system-bath edges (scaled by j_sb)
SB_ANISOTROPY = (0.1, 0.1, 0.05)


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    grid_name: str
    topology: BathTopology

    @property
    def grid(self) -> TimeGrid:
        return GRIDS[self.grid_name]


def triangle_topology(
    j_sb: float,
    j_l1: float,
    gamma_l1: float,
    *,
    omega: float = 1.0,
    beta: float = 1.0,
    gamma_sys: float = 0.005,
) -> BathTopology:
    """Three-qubit motif: system 0 coupled to mutually coupled baths 1, 2."""
    edges = [
        Edge.isotropic(0, 1, j_sb),
        Edge.isotropic(0, 2, j_sb),
        Edge.isotropic(1, 2, j_l1),
    ]
    return BathTopology(
        n_qubits=3,
        omega=omega,
        beta=beta,
        edges=edges,
        dephasing=[(0, gamma_sys)],
        thermal=[(1, gamma_l1), (2, gamma_l1)],
    )


def layered_topology(
    j_sb: float,
    j_l1: float,
    j_l12: float,
    j_l2: float,
    gamma_l1: float,
    gamma_l2: float,
    *,
    omega: float = 1.0,
    beta: float = 1.0,
    gamma_sys: float = 0.005,
    sb_anisotropy: tuple[float, float, float] = SB_ANISOTROPY,
) -> BathTopology:
    """Six-qubit two-layer network: system 0, layer 1 = {1, 2}, layer 2 = {3, 4, 5}."""
    ax, ay, az = sb_anisotropy
    edges = [
        Edge(0, 1, j_sb * ax, j_sb * ay, j_sb * az),
        Edge(0, 2, j_sb * ax, j_sb * ay, j_sb * az),
        Edge.isotropic(1, 2, j_l1),
        Edge.isotropic(1, 3, j_l12),
        Edge.isotropic(1, 4, j_l12),
        Edge.isotropic(2, 4, j_l12),
        Edge.isotropic(2, 5, j_l12),
        Edge.isotropic(3, 4, j_l2),
        Edge.isotropic(4, 5, j_l2),
    ]
    return BathTopology(
        n_qubits=6,
        omega=omega,
        beta=beta,
        edges=edges,
        dephasing=[(0, gamma_sys)],
        thermal=[(1, gamma_l1), (2, gamma_l1), (3, gamma_l2), (4, gamma_l2), (5, gamma_l2)],
    )


def two_system_topology(
    j_sb: float = 1.0,
    j_l1: float = 0.1,
    j_l12: float = 0.05,
    j_l2: float = 0.1,
    gamma_l1: float = 0.01,
    gamma_l2: float = 0.01,
    *,
    omega: float = 1.0,
    beta: float = 1.0,
    gamma_sys: float = 0.005,
    sb_anisotropy: tuple[float, float, float] = SB_ANISOTROPY,
) -> BathTopology:
    """Seven-qubit extension: two system qubits sharing a first-layer bath.

    Systems are nodes 0 and 1; layer 1 = {2, 3, 4} with node 3 shared between
    the two systems; layer 2 = {5, 6} coupled up to layer 1 and to each other.
    """
    ax, ay, az = sb_anisotropy
    edges = [
        Edge(0, 2, j_sb * ax, j_sb * ay, j_sb * az),
        Edge(0, 3, j_sb * ax, j_sb * ay, j_sb * az),
        Edge(1, 3, j_sb * ax, j_sb * ay, j_sb * az),
        Edge(1, 4, j_sb * ax, j_sb * ay, j_sb * az),
        Edge.isotropic(2, 3, j_l1),
        Edge.isotropic(3, 4, j_l1),
        Edge.isotropic(2, 5, j_l12),
        Edge.isotropic(3, 5, j_l12),
        Edge.isotropic(3, 6, j_l12),
        Edge.isotropic(4, 6, j_l12),
        Edge.isotropic(5, 6, j_l2),
    ]
    return BathTopology(
        n_qubits=7,
        omega=omega,
        beta=beta,
        edges=edges,
        dephasing=[(0, gamma_sys), (1, gamma_sys)],
        thermal=[(i, gamma_l1) for i in (2, 3, 4)] + [(i, gamma_l2) for i in (5, 6)],
    )


def _build_presets() -> dict[str, Preset]:
    entries: list[Preset] = [
        Preset(
            "triangle-weak",
            "Three-qubit motif at weak isotropic coupling; the system "
            "thermalizes to the bath temperature within ~50 time units.",
            "short",
            triangle_topology(j_sb=0.2, j_l1=0.2, gamma_l1=0.05, gamma_sys=0.05),
        ),
        # Three memory categories at strong system-bath flooding (beta = 2)
        Preset(
            "case1-dissipative",
            "Fully dissipative: strong damping in both layers with inter-layer "
            "coupling enabled; close to Markovian.",
            "short",
            layered_topology(1.0, 0.05, 0.02, 1.0, 0.3, 0.3, beta=2.0),
        ),
        Preset(
            "case2-retained",
            "Retained memory: layer-2 feed suppressed so excitations cycle "
            "within layer 1; non-Markovian.",
            "short",
            layered_topology(1.0, 0.05, 0.001, 1.0, 0.02, 0.02, beta=2.0),
        ),
        Preset(
            "case3-transferred",
            "Transferred memory: enhanced inter-layer coupling with weak "
            "layer-2 damping; partially Markovian.",
            "short",
            layered_topology(1.0, 0.05, 0.75, 1.0, 0.02, 0.001, beta=2.0),
        ),
        # Correlation-function regimes on the long grid
        Preset(
            "markovian-broad",
            "Strongly thermal reference: C(t) decays monotonically and |J(w)| "
            "is a broad single hump.",
            "long",
            layered_topology(1.0, 1.0, 0.8, 1.0, 0.3, 0.3),
        ),
        Preset(
            "nonmarkovian-peaked",
            "Strongly memory-retaining: C(t) shows long-lived oscillations and "
            "|J(w)| is sharply peaked.",
            "long",
            layered_topology(1.0, 0.1, 0.05, 0.1, 0.001, 0.001),
        ),
        Preset(
            "intermediate-memory",
            "Partial-memory midpoint between the broad and peaked regimes.",
            "long",
            layered_topology(1.0, 0.5, 0.15, 0.5, 0.15, 0.15),
        ),
        # Backflow benchmark pair on the long grid
        Preset(
            "weak-backflow",
            "Near-Markovian benchmark: fast bath relaxation makes the "
            "trace-distance backflow essentially vanish.",
            "long",
            layered_topology(1.0, 0.365, 0.041, 0.844, 0.1961, 0.1858),
        ),
        Preset(
            "strong-backflow",
            "Non-Markovian benchmark: slow bath relaxation and a pinched-off "
            "second layer give large trace-distance backflow.",
            "long",
            layered_topology(1.0, 0.407, 0.043, 0.010, 0.0030, 0.0063),
        ),
        # Connectivity studies (beta = 2)
        Preset(
            "layer1-retention",
            "Memory localized in layer 1: strong intra-layer-1 coupling with a "
            "passive, nearly detached layer 2.",
            "short",
            layered_topology(1.0, 1.0, 0.001, 0.001, 0.01, 0.01, beta=2.0),
        ),
        Preset(
            "dissipative-uniform",
            "Fully connected network with uniform damping throughout the bath; "
            "Markovian reference for the connectivity series.",
            "short",
            layered_topology(1.0, 1.0, 1.0, 1.0, 0.01, 0.01, beta=2.0),
        ),
        Preset(
            "quenched-dissipative",
            "Strong damping with all intra-bath couplings quenched; near-total "
            "coherence suppression.",
            "short",
            layered_topology(1.0, 0.0001, 0.001, 0.001, 0.3, 0.3, beta=2.0),
        ),
        Preset(
            "transferred-memory",
            "Full inter-layer flow with very weak damping: memory migrates "
            "into layer 2 but persists.",
            "short",
            layered_topology(1.0, 1.0, 1.0, 1.0, 0.0001, 0.0001, beta=2.0),
        ),
        Preset(
            "mediated-transfer",
            "As transferred-memory but with intra-layer-2 coupling switched "
            "off: backflow mediated through layer 1 alone.",
            "short",
            layered_topology(1.0, 1.0, 1.0, 0.001, 0.0001, 0.0001, beta=2.0),
        ),
        Preset(
            "two-logical-qubits",
            "Seven-qubit extension with two system qubits sharing a "
            "first-layer bath node.",
            "short",
            two_system_topology(),
        ),
    ]
    return {p.name: p for p in entries}


PRESETS: dict[str, Preset] = _build_presets()

# Default randomization ranges for batch mode: couplings draw uniformly on a
# linear scale, damping rates uniformly on a log scale.
RANDOMIZE_DEFAULTS: dict[str, tuple[float, float]] = {
    "J_sb": (0.001, 1.0),
    "J_L1": (0.001, 1.0),
    "J_L12": (0.001, 1.0),
    "J_L2": (0.001, 1.0),
    "gamma_L1": (0.001, 0.3),
    "gamma_L2": (0.001, 0.3),
}

LOG_UNIFORM_PARAMS = frozenset({"gamma_L1", "gamma_L2"})


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise KeyError(f"unknown preset {name!r}; known presets: {known}") from None
