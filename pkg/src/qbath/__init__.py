"""Structured-bath open quantum system simulator and diagnostics toolkit.

Simulates a system qubit coupled to a finite, layered network of bath
qubits under Lindblad dynamics, extracts spectral fingerprints and memory
diagnostics (trace-distance backflow, exceptional-point indicators), and
infers bath parameters from the fingerprints with a PCA + gradient-boosted
trees pipeline.
"""

from .diagnostics import (
    BackflowResult,
    blp_backflow,
    energy_flows,
    interaction_energy,
    local_energies,
    mutual_information,
    negativity,
    partial_trace,
    trace_distance,
    uhlmann_fidelity,
    von_neumann_entropy,
)
from .errors import ConfigError, IntegrationError, QbathError
from .lindblad import (
    CollapseOperator,
    LindbladPropagator,
    TimeGrid,
    Trajectory,
    build_collapse_operators,
    dissipator,
    evolve,
    lindblad_rhs,
)
from .ml import (
    Dataset,
    GbtHyperparams,
    GbtModel,
    PcaModel,
    evaluate,
    gbt_fit,
    gbt_predict,
    load_model,
    pca_fit,
    pca_inverse_transform,
    pca_transform,
    save_model,
    train_test_split,
)
from .nonhermitian import (
    EigenSystem,
    PetermannResult,
    deps,
    effective_hamiltonian,
    eigensystem,
    petermann_factors,
)
from .operators import (
    BathTopology,
    Edge,
    build_interaction_hamiltonian,
    build_local_hamiltonian,
    build_total_hamiltonian,
    lift_operator,
    lift_pauli,
)
from .pipeline import OutputFlags, RunConfig, RunRecord, emit_outputs, run_batch, run_single
from .presets import GRIDS, PRESETS, Preset, get_preset, layered_topology, triangle_topology
from .spectral import (
    FeatureVector,
    Spectrum,
    bath_correlator,
    dominant_frequency,
    fft_features,
    spectral_density,
)
from .states import (
    basis_state,
    initial_product_state,
    plus_state,
    thermal_occupation,
    thermal_qubit_state,
)

__version__ = "0.1.0"
