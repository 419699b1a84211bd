"""Collapse operators and Lindblad master-equation propagation.

Two engines are provided behind one interface:

* an exact fixed-step propagator that exploits the weak U(1) symmetry of the
  generator (excitation-number grading): the Liouvillian block for each
  coherence order is exponentiated once per run and applied per grid step;
* a fixed-step RK4 integrator on the density matrix, used as the general
  fallback when the generator carries no grading, and as the independent
  cross-check of the exact engine.

Both are deterministic: same inputs, same trajectory, bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import IntegrationError
from .operators import SIGMA_MINUS, SIGMA_PLUS, BathTopology, lift_operator, lift_pauli
from .states import thermal_occupation

_HERM_TOL = 1e-10
_TRACE_TOL = 1e-6
_EIG_TOL = -1e-6


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid from t_start to t_end inclusive."""

    t_start: float
    t_end: float
    n_points: int

    def __post_init__(self) -> None:
        if self.n_points < 2:
            raise ValueError(f"n_points must be >= 2, got {self.n_points}")
        if self.t_end <= self.t_start:
            raise ValueError("t_end must exceed t_start")

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / (self.n_points - 1)

    @property
    def span(self) -> float:
        return self.t_end - self.t_start

    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_points)


@dataclass
class CollapseOperator:
    """One irreversible channel: dephasing, emission or absorption."""

    kind: str  # "dephasing" | "emission" | "absorption"
    site: int
    rate: float  # prefactor under the square root
    matrix: np.ndarray


@dataclass
class Trajectory:
    """Time grid plus recorded per-point series (and optionally states)."""

    grid: TimeGrid
    observables: dict[str, np.ndarray] = field(default_factory=dict)
    states: list[np.ndarray] | None = None


def build_collapse_operators(topo: BathTopology) -> list[CollapseOperator]:
    """Collapse operators for every dissipator entry of the topology.

    Dephasing entries give sqrt(gamma) sigma_z on their site.  Thermal
    entries give the pair sqrt(gamma (1+n_th)) sigma_minus (emission) and
    sqrt(gamma n_th) sigma_plus (absorption), with n_th evaluated at the
    site frequency and the shared beta.  Zero-rate channels are dropped.
    """
    n = topo.n_qubits
    ops: list[CollapseOperator] = []
    for site, gamma in topo.dephasing:
        if gamma == 0.0:
            continue
        mat = math.sqrt(gamma) * lift_pauli("z", site, n)
        ops.append(CollapseOperator("dephasing", site, gamma, mat))
    for site, gamma in topo.thermal:
        if gamma == 0.0:
            continue
        n_th = thermal_occupation(topo.beta, topo.omega[site])
        down = gamma * (1.0 + n_th)
        up = gamma * n_th
        ops.append(
            CollapseOperator(
                "emission", site, down, math.sqrt(down) * lift_operator(SIGMA_MINUS, site, n)
            )
        )
        ops.append(
            CollapseOperator(
                "absorption", site, up, math.sqrt(up) * lift_operator(SIGMA_PLUS, site, n)
            )
        )
    return ops


def collapse_matrices(collapse) -> list[np.ndarray]:
    """Accept CollapseOperator lists or raw matrices interchangeably."""
    mats = []
    for c in collapse or []:
        mats.append(np.asarray(c.matrix if isinstance(c, CollapseOperator) else c, dtype=complex))
    return mats


def dissipator(collapse, rho: np.ndarray) -> np.ndarray:
    """Dissipative part: sum_k L rho L+ - (1/2){L+ L, rho}."""
    rho = np.asarray(rho, dtype=complex)
    out = np.zeros_like(rho)
    for L in collapse_matrices(collapse):
        if L.shape != rho.shape:
            raise ValueError(f"collapse operator shape {L.shape} != state shape {rho.shape}")
        Ld = L.conj().T
        LdL = Ld @ L
        out += L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL)
    return out


def lindblad_rhs(H: np.ndarray, collapse, rho: np.ndarray) -> np.ndarray:
    """d rho / dt = -i[H, rho] + dissipator(rho)."""
    H = np.asarray(H, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    if H.shape != rho.shape:
        raise ValueError(f"H shape {H.shape} != state shape {rho.shape}")
    return -1j * (H @ rho - rho @ H) + dissipator(collapse, rho)


def _find_grading(H: np.ndarray, Ls: Sequence[np.ndarray], tol: float = 1e-12):
    """Excitation grading of the generator, or None if it carries none.

    Grades basis state a by its popcount; valid when H is block diagonal in
    that grading and every collapse operator shifts it by a single amount.
    """
    d = H.shape[0]
    n = d.bit_length() - 1
    if 2**n != d:
        return None
    g = np.array([bin(a).count("1") for a in range(d)])
    diff = g[:, None] - g[None, :]
    if np.abs(H[diff != 0]).max(initial=0.0) > tol:
        return None
    for L in Ls:
        shifts = np.unique(diff[np.abs(L) > tol])
        if len(shifts) > 1:
            return None
    return g


class LindbladPropagator:
    """Evolves states and operators under one fixed Lindblad generator.

    Construct once per (H, collapse, grid) and reuse across initial states:
    the per-block matrix exponentials are cached.
    """

    def __init__(self, H, collapse, grid: TimeGrid, *, substeps: int = 1, method: str = "auto"):
        self.H = np.asarray(H, dtype=complex)
        self.Lmats = collapse_matrices(collapse)
        self.grid = grid
        if substeps < 1:
            raise ValueError("substeps must be >= 1")
        self.substeps = int(substeps)
        d = self.H.shape[0]
        if self.H.shape != (d, d):
            raise ValueError("H must be square")
        for L in self.Lmats:
            if L.shape != (d, d):
                raise ValueError("collapse operator dimension mismatch")
        self.dim = d
        self.A = -1j * self.H
        for L in self.Lmats:
            self.A -= 0.5 * (L.conj().T @ L)
        self.Ad = self.A.conj().T.copy()
        if self.Lmats:
            self.Ls = np.stack(self.Lmats)
            self.Lds = self.Ls.conj().transpose(0, 2, 1).copy()
        else:
            self.Ls = None

        self._grading = _find_grading(self.H, self.Lmats) if method in ("auto", "graded") else None
        if method == "graded" and self._grading is None:
            raise ValueError("generator carries no excitation grading")
        self.method = "graded" if (method in ("auto", "graded") and self._grading is not None) else "rk4"
        self._blocks: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        self._jumps: dict[tuple[int, int], np.ndarray] = {}
        self._rk4_h: float | None = None

    # ---------------- generator application (used by the RK4 path) --------

    def apply_generator(self, X: np.ndarray) -> np.ndarray:
        out = self.A @ X + X @ self.Ad
        if self.Ls is not None:
            out += np.matmul(np.matmul(self.Ls, X), self.Lds).sum(axis=0)
        return out

    def _rk4_step(self, X: np.ndarray, h: float) -> np.ndarray:
        k1 = self.apply_generator(X)
        k2 = self.apply_generator(X + 0.5 * h * k1)
        k3 = self.apply_generator(X + 0.5 * h * k2)
        k4 = self.apply_generator(X + h * k3)
        return X + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def _rk4_substep_size(self) -> float:
        if self._rk4_h is None:
            # ceiling of the fastest coherent frequency: eigenvalue spread of H
            evals = np.linalg.eigvalsh(self.H)
            scale = max(float(evals[-1] - evals[0]), 1e-9)
            h_max = min(self.grid.dt, 0.05 / scale) / self.substeps
            n_sub = max(1, math.ceil(self.grid.dt / h_max))
            self._rk4_h = self.grid.dt / n_sub
        return self._rk4_h

    # ---------------- graded blocks ---------------------------------------

    def _block_generator(self, nu: int) -> np.ndarray:
        g = self._grading
        diff = g[:, None] - g[None, :]
        ai, bi = np.nonzero(diff == nu)
        A = self.A
        M = A[ai[:, None], ai[None, :]] * (bi[:, None] == bi[None, :])
        M += A.conj()[bi[:, None], bi[None, :]] * (ai[:, None] == ai[None, :])
        for L in self.Lmats:
            M += L[ai[:, None], ai[None, :]] * L.conj()[bi[:, None], bi[None, :]]
        return M

    def _block(self, nu: int):
        """(row indices a, col indices b, propagator) for coherence order nu."""
        if nu not in self._blocks:
            g = self._grading
            diff = g[:, None] - g[None, :]
            ai, bi = np.nonzero(diff == nu)
            P = expm(self._block_generator(nu) * (self.grid.dt / self.substeps))
            self._blocks[nu] = (ai, bi, P)
        return self._blocks[nu]

    def _jump(self, nu: int, m: int) -> np.ndarray:
        """Propagator for m whole grid steps of coherence order nu."""
        key = (nu, m)
        if key not in self._jumps:
            self._jumps[key] = expm(self._block_generator(nu) * (self.grid.dt * m))
        return self._jumps[key]

    def _graded_sweep(
        self,
        cols: dict[int, np.ndarray],
        contract: dict[int, list[np.ndarray]],
        check_points=(),
        on_check: Callable | None = None,
    ) -> dict[int, list[np.ndarray]]:
        """Propagate per-order column blocks across the whole grid.

        cols maps coherence order nu to (dim_nu, k_nu) initial components;
        contract maps nu to matrices (n_out, dim_nu) contracted against the
        columns at every grid point.  Returns, per nu, one (n_out, n_pts,
        k_nu) array per contraction matrix.  on_check(k, state_cols) is
        invoked at each grid index in check_points with the current columns.

        The grid is swept in stripes: coarse states m steps apart advance
        together under the single-step propagator, so each propagator matrix
        streams through memory ~2 sqrt(n_pts) times instead of n_pts times.
        """
        n_pts = self.grid.n_points
        nus = sorted(cols)
        m = min(n_pts, math.isqrt(n_pts) + 1)
        n_coarse = -(-n_pts // m)
        check_points = set(check_points)

        stripes: dict[int, np.ndarray] = {}
        widths: dict[int, int] = {}
        for nu in nus:
            dim, k = cols[nu].shape
            widths[nu] = k
            X = np.empty((dim, n_coarse, k), dtype=complex)
            X[:, 0, :] = cols[nu]
            if n_coarse > 1:
                Pm = self._jump(nu, m)
                for j in range(1, n_coarse):
                    X[:, j, :] = Pm @ X[:, j - 1, :]
            stripes[nu] = np.ascontiguousarray(X.reshape(dim, n_coarse * k))

        out = {
            nu: [np.empty((c.shape[0], n_pts, widths[nu]), dtype=complex) for c in contract[nu]]
            for nu in nus
        }
        coarse_idx = m * np.arange(n_coarse)
        for i in range(m):
            gidx = coarse_idx + i
            valid = gidx < n_pts
            for nu in nus:
                k = widths[nu]
                for c, dest in zip(contract[nu], out[nu]):
                    Z = (c @ stripes[nu]).reshape(-1, n_coarse, k)
                    dest[:, gidx[valid], :] = Z[:, valid, :]
            if on_check is not None:
                for kg in gidx[valid]:
                    if kg in check_points:
                        j = (kg - i) // m
                        state_cols = {
                            nu: stripes[nu].reshape(-1, n_coarse, widths[nu])[:, j, :]
                            for nu in nus
                        }
                        on_check(int(kg), state_cols)
            if i + 1 < m:
                for nu in nus:
                    P = self._block(nu)[2]
                    Y = stripes[nu]
                    for _ in range(self.substeps):
                        Y = P @ Y
                    stripes[nu] = Y
        return out

    # ---------------- density-matrix evolution ----------------------------

    def evolve_many(
        self,
        rho0s: Sequence[np.ndarray],
        observables: dict[str, np.ndarray] | None = None,
        callbacks: dict[str, Callable] | None = None,
        *,
        store_states: bool = False,
        check_interval: int = 1,
    ) -> list[Trajectory]:
        """Evolve several initial states under the shared generator.

        `observables` maps names to operators (expectation recorded per grid
        point); `callbacks` maps names to functions f(t, rho) recorded the
        same way.  Raises IntegrationError when trace drift exceeds 1e-6 or
        the minimum eigenvalue falls below -1e-6 at a checked grid point.
        """
        observables = observables or {}
        callbacks = callbacks or {}
        rho0s = [np.asarray(r, dtype=complex) for r in rho0s]
        for r in rho0s:
            if r.shape != (self.dim, self.dim):
                raise ValueError(f"state shape {r.shape} != generator dimension {self.dim}")
            if np.abs(r - r.conj().T).max() > _HERM_TOL:
                raise ValueError("initial state is not Hermitian")

        times = self.grid.times()
        n_pts = self.grid.n_points
        n_states = len(rho0s)
        records: list[dict[str, list]] = [
            {name: [] for name in list(observables) + list(callbacks)} for _ in range(n_states)
        ]
        stored: list[list[np.ndarray]] = [[] for _ in range(n_states)]

        if self.method == "graded":
            nus: set[int] = set()
            for r in rho0s:
                nus |= self._present_orders(r)
            nus = sorted(nus)
            V: dict[int, np.ndarray] = {}
            for nu in nus:
                ai, bi, _ = self._block(nu)
                cols = np.zeros((len(ai), n_states), dtype=complex)
                for s, r in enumerate(rho0s):
                    cols[:, s] = r[ai, bi]
                V[nu] = cols

            def current(s: int) -> np.ndarray:
                rho = np.zeros((self.dim, self.dim), dtype=complex)
                for nu in nus:
                    ai, bi, _ = self._blocks[nu]
                    rho[ai, bi] = V[nu][:, s]
                    if nu > 0:
                        rho[bi, ai] = V[nu][:, s].conj()
                return rho

            def advance() -> None:
                for nu in nus:
                    _, _, P = self._blocks[nu]
                    for _ in range(self.substeps):
                        V[nu] = P @ V[nu]

            if not callbacks and not store_states:
                # Fast path: expectations are linear in the block components,
                # so the whole run reduces to a striped sweep with one small
                # contraction per excitation order and grid point.  Columns
                # that start identically zero stay zero (the evolution is
                # linear per initial state) and are dropped.  The full density
                # matrix is rebuilt only at checked grid points.
                obs_names = list(observables)
                obs_mats = [np.asarray(observables[n], dtype=complex) for n in obs_names]
                n_obs = len(obs_mats)
                cols: dict[int, np.ndarray] = {}
                contract: dict[int, list[np.ndarray]] = {}
                active: dict[int, list[int]] = {}
                for nu in nus:
                    ai, bi, _ = self._blocks[nu]
                    live = [s for s in range(n_states) if np.any(V[nu][:, s])]
                    if not live:
                        continue
                    active[nu] = live
                    cols[nu] = V[nu][:, live]
                    if n_obs:
                        mats = [np.stack([op[bi, ai] for op in obs_mats])]
                        if nu > 0:
                            # applied to conjugated columns via conj(c) @ V
                            mats.append(np.stack([op[ai, bi].conj() for op in obs_mats]))
                    else:
                        mats = [np.zeros((0, len(ai)), dtype=complex)]
                    contract[nu] = mats

                def on_check(k: int, state_cols: dict[int, np.ndarray]) -> None:
                    for s in range(n_states):
                        rho = np.zeros((self.dim, self.dim), dtype=complex)
                        for nu, live in active.items():
                            if s not in live:
                                continue
                            col = state_cols[nu][:, live.index(s)]
                            ai, bi, _ = self._blocks[nu]
                            rho[ai, bi] = col
                            if nu > 0:
                                rho[bi, ai] = col.conj()
                        self._check_state(rho, k, times[k])

                checks = range(0, n_pts, check_interval) if check_interval else ()
                res = self._graded_sweep(cols, contract, checks, on_check if check_interval else None)
                values = np.zeros((n_obs, n_pts, n_states), dtype=complex)
                for nu, live in active.items():
                    if not n_obs:
                        continue
                    values[:, :, live] += res[nu][0]
                    if nu > 0:
                        values[:, :, live] += res[nu][1].conj()
                out = []
                for s in range(n_states):
                    series = {}
                    for i, name in enumerate(obs_names):
                        arr = values[i, :, s]
                        if np.abs(arr.imag).max(initial=0.0) < 1e-9:
                            arr = arr.real.copy()
                        series[name] = arr
                    out.append(Trajectory(self.grid, series, None))
                return out

        else:
            h = self._rk4_substep_size()
            n_sub = round(self.grid.dt / h)
            mats = [r.copy() for r in rho0s]

            def current(s: int) -> np.ndarray:
                return mats[s]

            def advance() -> None:
                for s in range(n_states):
                    X = mats[s]
                    for _ in range(n_sub):
                        X = self._rk4_step(X, h)
                        X = 0.5 * (X + X.conj().T)
                    mats[s] = X

        for k in range(n_pts):
            t = times[k]
            for s in range(n_states):
                rho = current(s)
                if check_interval and k % check_interval == 0:
                    self._check_state(rho, k, t)
                rec = records[s]
                for name, op in observables.items():
                    rec[name].append(np.einsum("ab,ba->", rho, op))
                for name, fn in callbacks.items():
                    rec[name].append(fn(t, rho))
                if store_states:
                    stored[s].append(rho.copy())
            if k + 1 < n_pts:
                advance()

        out = []
        for s in range(n_states):
            series: dict[str, np.ndarray] = {}
            for name, values in records[s].items():
                arr = np.asarray(values)
                if np.iscomplexobj(arr) and arr.ndim == 1 and np.abs(arr.imag).max(initial=0.0) < 1e-9:
                    arr = arr.real
                series[name] = arr
            out.append(Trajectory(self.grid, series, stored[s] if store_states else None))
        return out

    def _check_state(self, rho: np.ndarray, step: int, t: float) -> None:
        tr = abs(rho.trace().real - 1.0) + abs(rho.trace().imag)
        if tr > _TRACE_TOL:
            raise IntegrationError(f"trace drift {tr:.3e} at grid step {step} (t={t:.6g})")
        lo = np.linalg.eigvalsh(rho)[0]
        if lo < _EIG_TOL:
            raise IntegrationError(
                f"negative eigenvalue {lo:.3e} at grid step {step} (t={t:.6g})"
            )

    def _present_orders(self, X: np.ndarray, tol: float = 1e-14) -> set[int]:
        g = self._grading
        diff = g[:, None] - g[None, :]
        mask = np.abs(X) > tol
        orders = set(int(v) for v in np.unique(diff[mask]))
        # Hermitian states are reconstructed from nu >= 0 components
        return {abs(nu) for nu in orders} | {0}

    # ---------------- operator (correlator) propagation -------------------

    def correlate(self, X0: np.ndarray, probes: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        """Propagate an operator X0 under the generator; record Tr[probe X(t)].

        X0 need not be Hermitian; no positivity or trace checks apply.
        """
        X0 = np.asarray(X0, dtype=complex)
        n_pts = self.grid.n_points
        if self.method != "graded":
            series = {name: np.empty(n_pts, dtype=complex) for name in probes}
            h = self._rk4_substep_size()
            n_sub = round(self.grid.dt / h)
            X = X0.copy()
            for k in range(n_pts):
                for name, O in probes.items():
                    series[name][k] = np.einsum("ab,ba->", O, X)
                if k + 1 < n_pts:
                    for _ in range(n_sub):
                        X = self._rk4_step(X, h)
            return series

        g = self._grading
        diff = g[:, None] - g[None, :]
        orders = set(int(v) for v in np.unique(diff[np.abs(X0) > 1e-15]))
        # per |nu| block: column 0 propagates X's +nu part, column 1 the
        # adjoint of X's -nu part (the generator commutes with adjoints)
        names = list(probes)
        probe_mats = [np.asarray(probes[name], dtype=complex) for name in names]
        cols: dict[int, np.ndarray] = {}
        contract: dict[int, list[np.ndarray]] = {}
        for nu in sorted({abs(v) for v in orders}):
            ai, bi, _ = self._block(nu)
            block = np.zeros((len(ai), 2), dtype=complex)
            block[:, 0] = X0[ai, bi]
            block[:, 1] = X0[bi, ai].conj()  # (X0 restricted to -nu)^dagger
            cols[nu] = block
            mats = [np.stack([O[bi, ai] for O in probe_mats])]
            if nu > 0:
                # applied to conjugated columns via conj(c) @ V
                mats.append(np.stack([O[ai, bi].conj() for O in probe_mats]))
            contract[nu] = mats

        res = self._graded_sweep(cols, contract)
        series = {name: np.zeros(n_pts, dtype=complex) for name in names}
        for nu in cols:
            for p, name in enumerate(names):
                series[name] += res[nu][0][p, :, 0]
                if nu > 0:
                    series[name] += res[nu][1][p, :, 1].conj()
        return series


def evolve(
    H,
    collapse,
    rho0,
    grid: TimeGrid,
    observables: dict[str, np.ndarray] | None = None,
    *,
    callbacks: dict[str, Callable] | None = None,
    store_states: bool = False,
    method: str = "auto",
    substeps: int = 1,
    check_interval: int = 1,
) -> Trajectory:
    """Integrate the master equation and record observables on the grid."""
    prop = LindbladPropagator(H, collapse, grid, substeps=substeps, method=method)
    return prop.evolve_many(
        [rho0],
        observables,
        callbacks,
        store_states=store_states,
        check_interval=check_interval,
    )[0]
