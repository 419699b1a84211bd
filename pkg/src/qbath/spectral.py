"""Bath correlation functions, spectral densities, and FFT feature vectors.

Frequencies are reported in cycles per time unit throughout (not angular
frequency), so a coherent qubit at omega = 1 shows up near 1/(2 pi) = 0.159.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .lindblad import LindbladPropagator, TimeGrid, build_collapse_operators
from .operators import BathTopology, build_total_hamiltonian, lift_pauli
from .states import initial_product_state, plus_state

_LOG_EPS = 1e-12


@dataclass(frozen=True)
class Spectrum:
    """One-sided magnitude spectrum on the grid 0, df, 2 df, ..., Nyquist."""

    freqs: np.ndarray
    mags: np.ndarray


@dataclass(frozen=True)
class FeatureVector:
    """Concatenated log-normalized FFT magnitudes, axis order (x, y, z)."""

    values: np.ndarray
    axis_order: tuple[str, str, str] = ("x", "y", "z")


def collective_bath_operator(topo: BathTopology, axis: str = "x") -> np.ndarray:
    """B = sum over bath sites of sigma_axis, the collective transverse mode."""
    B = np.zeros((topo.dim, topo.dim), dtype=complex)
    for i in topo.bath_sites:
        B += lift_pauli(axis, i, topo.n_qubits)
    return B


def bath_correlator(
    topo: BathTopology,
    grid: TimeGrid,
    axis: str = "x",
    method: str = "auto",
    propagator: LindbladPropagator | None = None,
) -> np.ndarray:
    """Two-time correlator C(t) = Tr[B(t) B(0) rho0] by quantum regression.

    B rho0 is propagated under the same Lindblad generator used for state
    evolution; rho0 is the standard product initial state (system in |+>,
    bath thermal).  C(0) = Tr[B^2 rho0] is real and positive.  Passing an
    existing propagator for the same topology and grid reuses its cached
    blocks.
    """
    if not topo.bath_sites:
        raise ValueError("topology has no bath sites")
    B = collective_bath_operator(topo, axis)
    rho0 = initial_product_state(plus_state(), topo)
    if propagator is None:
        H = build_total_hamiltonian(topo)
        collapse = build_collapse_operators(topo)
        propagator = LindbladPropagator(H, collapse, grid, method=method)
    return propagator.correlate(B @ rho0, {"C": B})["C"]


def spectral_density(C, grid: TimeGrid) -> Spectrum:
    """|J(f)| for f >= 0: magnitude of the transform of mean-removed C(t)."""
    C = np.asarray(C, dtype=complex)
    n = grid.n_points
    if C.shape != (n,):
        raise ValueError(f"series length {C.shape} does not match grid ({n} points)")
    centered = C - C.mean()
    spec = np.fft.fft(centered)
    freqs = np.fft.rfftfreq(n, d=grid.dt)
    return Spectrum(freqs=freqs, mags=np.abs(spec[: len(freqs)]))


def dominant_frequency(spec: Spectrum) -> float:
    """Frequency of the strongest nonzero bin; 0 with a warning when flat."""
    if len(spec.freqs) == 0:
        raise ValueError("empty spectrum")
    mags = np.asarray(spec.mags, dtype=float)
    nonzero = spec.freqs > 0
    if not nonzero.any() or mags[nonzero].max() == 0.0:
        warnings.warn("spectrum is flat; dominant frequency reported as 0", stacklevel=2)
        return 0.0
    sub = np.flatnonzero(nonzero)
    return float(spec.freqs[sub[np.argmax(mags[sub])]])


def _axis_block(series: np.ndarray) -> np.ndarray:
    centered = series - series.mean()
    mags = np.abs(np.fft.rfft(centered))[1:]  # drop the DC bin
    logged = np.log10(mags + _LOG_EPS)
    span = logged.max() - logged.min()
    if span == 0.0:
        return np.zeros_like(logged)
    return (logged - logged.min()) / span


def fft_features(sx, sy, sz, grid: TimeGrid) -> FeatureVector:
    """Log-enhanced normalized FFT fingerprint of the three Pauli series.

    Per axis: mean removal, FFT, positive-frequency magnitudes A,
    log10(A + 1e-12), then min-max normalization to [0, 1]; a flat axis
    yields an all-zero block.  Blocks are concatenated in (x, y, z) order.
    """
    blocks = []
    for series in (sx, sy, sz):
        series = np.asarray(series, dtype=float)
        if series.shape != (grid.n_points,):
            raise ValueError("series length does not match grid")
        blocks.append(_axis_block(series))
    return FeatureVector(values=np.concatenate(blocks))
