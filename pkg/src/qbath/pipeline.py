"""Single-run and batch drivers: evolve, diagnose, fingerprint, persist.

A run evolves three initial states under one shared propagator (the
superposition state for observables and spectra, plus the orthogonal pair
|0> / |1> whose trace distance feeds the backflow measure), then collects
the spectral fingerprint, the exceptional-point indicators, and the named
regression targets into a RunRecord that the CSV emitters serialize.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .diagnostics import blp_backflow, uhlmann_fidelity, von_neumann_entropy
from .errors import ConfigError, IntegrationError
from .lindblad import LindbladPropagator, TimeGrid, build_collapse_operators
from .ml import TARGET_NAMES, Dataset
from .nonhermitian import deps, effective_hamiltonian, petermann_factors
from .operators import (
    BathTopology,
    build_interaction_hamiltonian,
    build_local_hamiltonian,
    build_total_hamiltonian,
    lift_operator,
    lift_pauli,
)
from .presets import (
    GRIDS,
    LOG_UNIFORM_PARAMS,
    SB_ANISOTROPY,
    get_preset,
    layered_topology,
)
from .spectral import Spectrum, bath_correlator, dominant_frequency, fft_features, spectral_density
from .states import basis_state, initial_product_state, plus_state, thermal_qubit_state

_LAYERED_EDGE_CLASSES = {
    "J_sb": [(0, 1), (0, 2)],
    "J_L1": [(1, 2)],
    "J_L12": [(1, 3), (1, 4), (2, 4), (2, 5)],
    "J_L2": [(3, 4), (4, 5)],
}


@dataclass
class OutputFlags:
    states: bool = False
    observables: bool = True
    spectra: bool = True
    correlator: bool = True
    features: bool = True
    diagnostics: bool = True


@dataclass
class RunConfig:
    topology: BathTopology
    grid: TimeGrid
    seed: int = 0
    name: str = "run"
    params: dict[str, float] | None = None
    randomize: dict[str, tuple[float, float]] | None = None
    outputs: OutputFlags = field(default_factory=OutputFlags)
    check_interval: int = 1

    @classmethod
    def from_preset(cls, preset_name: str, grid_name: str | None = None, seed: int = 0) -> "RunConfig":
        preset = get_preset(preset_name)
        grid = GRIDS[grid_name] if grid_name else preset.grid
        topo = preset.topology
        return cls(
            topology=topo,
            grid=grid,
            seed=seed,
            name=preset_name,
            params=infer_layered_params(topo),
        )


@dataclass
class RunRecord:
    run_id: int
    config: RunConfig
    targets: dict[str, float]
    flags: dict[str, str]
    features: np.ndarray | None
    series: dict[str, np.ndarray]
    spectra: dict[str, Spectrum]
    info: dict[str, float]
    files: list[str] = field(default_factory=list)


def infer_layered_params(topo: BathTopology) -> dict[str, float] | None:
    """Coupling-class parameters of a canonical layered topology, else None.

    Recognizes the six-qubit two-layer network with the standard system-bath
    anisotropy profile; used to label regression targets and to support
    per-parameter randomization in batch mode.
    """
    if topo.n_qubits != 6 or topo.system_index != 0:
        return None
    by_pair = {e.pair: e for e in topo.edges}
    expected = {p for pairs in _LAYERED_EDGE_CLASSES.values() for p in pairs}
    if set(by_pair) != expected:
        return None
    if len(set(topo.omega)) != 1:
        return None
    params: dict[str, float] = {"omega": topo.omega[0], "beta": topo.beta}
    for cls_name in ("J_L1", "J_L12", "J_L2"):
        vals = set()
        for pair in _LAYERED_EDGE_CLASSES[cls_name]:
            e = by_pair[pair]
            if not (e.jx == e.jy == e.jz):
                return None
            vals.add(e.jx)
        if len(vals) != 1:
            return None
        params[cls_name] = vals.pop()
    ax, ay, az = SB_ANISOTROPY
    sb_vals = set()
    for pair in _LAYERED_EDGE_CLASSES["J_sb"]:
        e = by_pair[pair]
        if not (
            math.isclose(e.jy, e.jx * ay / ax, rel_tol=1e-9, abs_tol=1e-15)
            and math.isclose(e.jz, e.jx * az / ax, rel_tol=1e-9, abs_tol=1e-15)
        ):
            return None
        sb_vals.add(e.jx)
    if len(sb_vals) != 1:
        return None
    params["J_sb"] = sb_vals.pop() / ax
    deph = dict(topo.dephasing)
    therm = dict(topo.thermal)
    if set(deph) != {0} or set(therm) != {1, 2, 3, 4, 5}:
        return None
    if therm[1] != therm[2] or len({therm[3], therm[4], therm[5]}) != 1:
        return None
    params["gamma_sys"] = deph[0]
    params["gamma_L1"] = therm[1]
    params["gamma_L2"] = therm[3]
    return params


def _stacked_trace_distance(rhos_a: np.ndarray, rhos_b: np.ndarray) -> np.ndarray:
    diff = rhos_a - rhos_b
    return 0.5 * np.abs(np.linalg.eigvalsh(diff)).sum(axis=-1)


def run_single(config: RunConfig, run_id: int = 0) -> RunRecord:
    """Execute the full pipeline for one fixed parameter set."""
    topo = config.topology
    grid = config.grid
    n = topo.n_qubits
    s = topo.system_index
    H = build_total_hamiltonian(topo)
    collapse = build_collapse_operators(topo)
    try:
        prop = LindbladPropagator(H, collapse, grid)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    observables = {
        "sx": lift_pauli("x", s, n),
        "sy": lift_pauli("y", s, n),
        "sz": lift_pauli("z", s, n),
    }
    for i in topo.bath_sites:
        for axis in ("x", "y", "z"):
            observables[f"s{axis}_{i}"] = lift_pauli(axis, i, n)

    # Reduced system matrix entries as expectations: rho_sys[u, v] equals
    # Tr[rho (|v><u| x I_rest)], so three static operators recover the full
    # single-qubit state without rebuilding the joint density matrix.
    observables["_rs_p0"] = lift_operator(np.array([[1, 0], [0, 0]], dtype=complex), s, n)
    observables["_rs_p1"] = lift_operator(np.array([[0, 0], [0, 1]], dtype=complex), s, n)
    observables["_rs_c"] = lift_operator(np.array([[0, 1], [0, 0]], dtype=complex), s, n)

    if config.outputs.diagnostics:
        h_local = build_local_hamiltonian(topo)
        h_int = build_interaction_hamiltonian(topo)
        # dissipative power: Tr[H D(rho)] rewritten as a static observable
        w_dissip = np.zeros_like(H)
        for L in (c.matrix for c in collapse):
            Ld = L.conj().T
            w_dissip += Ld @ H @ L - 0.5 * (Ld @ L @ H + H @ Ld @ L)
        # coherent flow into the local term: Tr[H_local (-i[H, rho])]
        w_coh = -1j * (h_local @ H - H @ h_local)
        observables["_e_local"] = h_local
        observables["_e_int"] = h_int
        observables["_flow_dissip"] = w_dissip
        observables["_flow_coh"] = w_coh

    rho_plus = initial_product_state(plus_state(), topo)
    try:
        traj, pair0, pair1 = prop.evolve_many(
            [
                rho_plus,
                initial_product_state(basis_state(0), topo),
                initial_product_state(basis_state(1), topo),
            ],
            observables,
            check_interval=config.check_interval,
        )
        if config.outputs.states:
            traj = prop.evolve_many(
                [rho_plus],
                observables,
                store_states=True,
                check_interval=config.check_interval,
            )[0]
    except IntegrationError as exc:
        raise IntegrationError(f"{exc} [config: {config.name}, params: {config.params}]") from exc

    series: dict[str, np.ndarray] = {"t": grid.times()}
    for key, values in traj.observables.items():
        if not key.startswith(("_", "rho_")):
            series[key] = np.asarray(values, dtype=float)

    def reduced_stack(tr) -> np.ndarray:
        p0 = np.asarray(tr.observables["_rs_p0"], dtype=complex)
        p1 = np.asarray(tr.observables["_rs_p1"], dtype=complex)
        c = np.asarray(tr.observables["_rs_c"], dtype=complex)
        m = np.empty((len(p0), 2, 2), dtype=complex)
        m[:, 0, 0] = p0
        m[:, 1, 1] = p1
        m[:, 1, 0] = c
        m[:, 0, 1] = c.conj()
        return m

    td = _stacked_trace_distance(reduced_stack(pair0), reduced_stack(pair1))
    series["trace_distance"] = td
    backflow = blp_backflow(td, grid)

    if config.outputs.diagnostics:
        rho_sys = reduced_stack(traj)
        series["entropy_system"] = np.array([von_neumann_entropy(r) for r in rho_sys])
        target_state = thermal_qubit_state(topo.beta, topo.omega[s])
        series["fidelity_thermal"] = np.array(
            [uhlmann_fidelity(r, target_state) for r in rho_sys]
        )
        series["energy_local_total"] = np.asarray(traj.observables["_e_local"], dtype=float)
        series["energy_interaction"] = np.asarray(traj.observables["_e_int"], dtype=float)
        series["energy_total"] = series["energy_local_total"] + series["energy_interaction"]
        series["flow_coherent_local"] = np.asarray(traj.observables["_flow_coh"], dtype=float)
        series["flow_dissipative"] = np.asarray(traj.observables["_flow_dissip"], dtype=float)

    spectra: dict[str, Spectrum] = {}
    info: dict[str, float] = {"backflow_total": backflow.total}
    if config.outputs.spectra:
        if config.outputs.correlator:
            C = bath_correlator(topo, grid, propagator=prop)
            series["correlator_real"] = C.real
            series["correlator_imag"] = C.imag
            spectra["correlator"] = spectral_density(C, grid)
        for key in ("sx", "sy", "sz"):
            spectra[key] = spectral_density(series[key], grid)
        info["dominant_freq_sx"] = dominant_frequency(spectra["sx"])

    features = None
    if config.outputs.features:
        features = fft_features(series["sx"], series["sy"], series["sz"], grid).values

    flags: dict[str, str] = {}
    H_eff = effective_hamiltonian(H, collapse)
    deps_val = deps(H_eff)
    pf = petermann_factors(H_eff)
    info["deps"] = deps_val
    info["k_max"] = pf.k_max
    if pf.ep_flag:
        flags["k_max"] = "ep-sentinel"

    targets: dict[str, float] = {}
    params = config.params
    for key in ("J_L12", "gamma_L1", "gamma_L2", "J_sb"):
        if params is not None and key in params:
            targets[key] = params[key]
        else:
            targets[key] = float("nan")
            flags[key] = "unknown-topology"
    targets["backflow_rate"] = backflow.rate
    if deps_val > 0.0:
        targets["log_deps"] = math.log(deps_val)
    else:
        targets["log_deps"] = float("nan")
        flags["log_deps"] = "deps-zero"
    if config.outputs.spectra:
        targets["dominant_freq"] = dominant_frequency(spectra["sz"])
    else:
        targets["dominant_freq"] = float("nan")
        flags["dominant_freq"] = "spectra-disabled"

    return RunRecord(
        run_id=run_id,
        config=config,
        targets=targets,
        flags=flags,
        features=features,
        series=series,
        spectra=spectra,
        info=info,
    )


# ---------------------------------------------------------------------------
# Batch mode


def draw_batch_params(config: RunConfig, n_runs: int) -> list[dict[str, float]]:
    """Deterministic per-run parameter draws for a randomized batch.

    Couplings (J_*) draw uniformly on a linear scale, damping rates
    (gamma_*) uniformly on a log scale, in sorted parameter-name order.
    """
    if not config.randomize:
        raise ConfigError("batch mode requires randomization ranges")
    if config.params is None:
        raise ConfigError(
            "randomization requires the canonical six-qubit layered topology"
        )
    for key, (lo, hi) in config.randomize.items():
        if key not in config.params:
            raise ConfigError(f"unknown randomized parameter {key!r}")
        if not 0 < lo <= hi:
            raise ConfigError(f"invalid range for {key!r}: [{lo}, {hi}]")
    rng = np.random.default_rng(config.seed)
    draws = []
    for _ in range(n_runs):
        overrides = {}
        for key in sorted(config.randomize):
            lo, hi = config.randomize[key]
            if key in LOG_UNIFORM_PARAMS:
                overrides[key] = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
            else:
                overrides[key] = float(rng.uniform(lo, hi))
        draws.append(overrides)
    return draws


def _batch_run_config(config: RunConfig, overrides: dict[str, float], run_id: int) -> RunConfig:
    params = dict(config.params)
    params.update(overrides)
    topo = layered_topology(
        params["J_sb"],
        params["J_L1"],
        params["J_L12"],
        params["J_L2"],
        params["gamma_L1"],
        params["gamma_L2"],
        omega=params["omega"],
        beta=params["beta"],
        gamma_sys=params["gamma_sys"],
    )
    return replace(
        config,
        topology=topo,
        params=params,
        name=f"{config.name}-{run_id:04d}",
        randomize=None,
    )


def run_batch(
    config: RunConfig, n_runs: int, workers: int = 1
) -> tuple[Dataset, list[RunRecord], list[tuple[int, str]]]:
    """Randomized batch: returns the ML dataset, records, and failures.

    Failed runs are reported as (run_id, reason) and excluded from the
    dataset, never silently dropped.
    """
    if n_runs < 1:
        raise ConfigError("n_runs must be >= 1")
    draws = draw_batch_params(config, n_runs)
    configs = [_batch_run_config(config, d, i) for i, d in enumerate(draws)]

    def execute(i: int) -> RunRecord:
        return run_single(configs[i], run_id=i)

    records: list[RunRecord | None] = [None] * n_runs
    failures: list[tuple[int, str]] = []
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {i: pool.submit(run_single, configs[i], i) for i in range(n_runs)}
            for i, fut in futures.items():
                try:
                    records[i] = fut.result()
                except IntegrationError as exc:
                    failures.append((i, str(exc)))
    else:
        for i in range(n_runs):
            try:
                records[i] = execute(i)
            except IntegrationError as exc:
                failures.append((i, str(exc)))
    ok = [r for r in records if r is not None]
    rows = [r for r in ok if not any(k in r.flags for k in TARGET_NAMES)]
    for r in ok:
        bad = [k for k in TARGET_NAMES if k in r.flags]
        if bad:
            failures.append((r.run_id, f"flagged targets: {', '.join(bad)}"))
    if not rows:
        raise IntegrationError("all batch runs failed")
    features = np.stack([r.features for r in rows])
    targets = np.array([[r.targets[k] for k in TARGET_NAMES] for r in rows])
    ds = Dataset(features, targets, TARGET_NAMES, run_ids=[r.run_id for r in rows])
    failures.sort()
    return ds, rows, failures


# ---------------------------------------------------------------------------
# CSV emission

_FMT = "%.17g"


def _write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    data = np.column_stack(columns)
    try:
        np.savetxt(path, data, delimiter=",", header=",".join(header), comments="", fmt=_FMT)
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from exc


def emit_outputs(record: RunRecord, out_dir) -> list[str]:
    """Write the enabled CSV families for one run; returns the paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    paths: list[str] = []
    series = record.series
    t = series["t"]
    cfg = record.config
    bath = cfg.topology.bath_sites

    def emit(name: str, header: list[str], cols: list[np.ndarray]) -> None:
        path = out / name
        _write_csv(path, header, cols)
        paths.append(str(path))

    if cfg.outputs.observables:
        emit("observables.csv", ["t", "sx", "sy", "sz"], [t, series["sx"], series["sy"], series["sz"]])
        emit(
            "bath_populations.csv",
            ["t"] + [f"sz_{i}" for i in bath],
            [t] + [series[f"sz_{i}"] for i in bath],
        )
        coh_header, coh_cols = ["t"], [t]
        for i in bath:
            coh_header += [f"sx_{i}", f"sy_{i}"]
            coh_cols += [series[f"sx_{i}"], series[f"sy_{i}"]]
        emit("bath_coherences.csv", coh_header, coh_cols)
    if cfg.outputs.diagnostics and "entropy_system" in series:
        emit(
            "diagnostics.csv",
            [
                "t",
                "entropy_system",
                "fidelity_thermal",
                "trace_distance",
                "energy_local_total",
                "energy_interaction",
                "energy_total",
                "flow_coherent_local",
                "flow_dissipative",
            ],
            [
                t,
                series["entropy_system"],
                series["fidelity_thermal"],
                series["trace_distance"],
                series["energy_local_total"],
                series["energy_interaction"],
                series["energy_total"],
                series["flow_coherent_local"],
                series["flow_dissipative"],
            ],
        )
    if "correlator" in record.spectra:
        emit(
            "correlator.csv",
            ["t", "c_real", "c_imag"],
            [t, series["correlator_real"], series["correlator_imag"]],
        )
        spec = record.spectra["correlator"]
        emit("spectral_density.csv", ["freq", "magnitude"], [spec.freqs, spec.mags])
    if "sx" in record.spectra:
        for key in ("sx", "sy", "sz"):
            sp = record.spectra[key]
            emit(f"spectrum_{key}.csv", ["freq", "magnitude"], [sp.freqs, sp.mags])
    if cfg.outputs.features and record.features is not None:
        emit(
            "features.csv",
            ["run_id"] + [f"f_{i}" for i in range(len(record.features))],
            [np.array([record.run_id])] + [np.array([v]) for v in record.features],
        )
    emit(
        "targets.csv",
        ["run_id"] + list(TARGET_NAMES),
        [np.array([record.run_id])] + [np.array([record.targets[k]]) for k in TARGET_NAMES],
    )
    record.files = paths
    return paths


def emit_batch(ds: Dataset, records: list[RunRecord], failures, out_dir) -> list[str]:
    """Aggregate feature/target/failure CSVs for a batch."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    ids = np.array(ds.run_ids, dtype=float)
    fpath = out / "features.csv"
    _write_csv(
        fpath,
        ["run_id"] + [f"f_{i}" for i in range(ds.features.shape[1])],
        [ids] + [ds.features[:, i] for i in range(ds.features.shape[1])],
    )
    paths.append(str(fpath))
    tpath = out / "targets.csv"
    _write_csv(
        tpath,
        ["run_id"] + list(ds.target_names),
        [ids] + [ds.targets[:, i] for i in range(ds.targets.shape[1])],
    )
    paths.append(str(tpath))
    fail_path = out / "failures.csv"
    with open(fail_path, "w") as fh:
        fh.write("run_id,reason\n")
        for run_id, reason in failures:
            fh.write(f"{run_id},{reason.replace(',', ';')}\n")
    paths.append(str(fail_path))
    return paths
