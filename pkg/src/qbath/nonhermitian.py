"""Effective non-Hermitian Hamiltonian and exceptional-point indicators.

H_eff = H - (i/2) sum L+ L has a complex spectrum lambda_m = E_m - i Gamma_m/2
that is fixed in time for a fixed parameter set, so the minimal eigenvalue
spacing (DEPS) and the Petermann factors need a single evaluation per run.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .lindblad import collapse_matrices

K_SENTINEL = 1e24
_OVERLAP_FLOOR = 1e-12
_CLUSTER_TOL = 1e-10


@dataclass(frozen=True)
class EigenSystem:
    """Complex spectrum with column-aligned right and left eigenvectors."""

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray


@dataclass(frozen=True)
class PetermannResult:
    """Per-mode Petermann factors with the EP-proximity sentinel flag."""

    factors: np.ndarray
    k_max: float
    ep_flag: bool  # True when some mode hit the capped sentinel
    ambiguous_pairing: bool  # True when eigenvalue clusters made pairing uncertain


def effective_hamiltonian(H, collapse) -> np.ndarray:
    """H - (i/2) sum_k L_k+ L_k."""
    H_eff = np.asarray(H, dtype=complex).copy()
    for L in collapse_matrices(collapse):
        if L.shape != H_eff.shape:
            raise ValueError("collapse operator dimension mismatch")
        H_eff -= 0.5j * (L.conj().T @ L)
    return H_eff


def eigensystem(H_eff) -> EigenSystem:
    """Right and left eigenvectors, paired by nearest conjugate eigenvalue.

    Left vectors are eigenvectors of H_eff+; a mode pairing between the two
    solves the linear assignment over |lambda_right - conj(lambda_left)|.
    """
    H_eff = np.asarray(H_eff, dtype=complex)
    evals, right = np.linalg.eig(H_eff)
    lvals, left = np.linalg.eig(H_eff.conj().T)
    cost = np.abs(evals[:, None] - lvals.conj()[None, :])
    rows, cols = linear_sum_assignment(cost)
    left = left[:, cols[np.argsort(rows)]]
    return EigenSystem(eigenvalues=evals, right_vectors=right, left_vectors=left)


def deps(H_eff) -> float:
    """Minimal pairwise eigenvalue distance of H_eff in the complex plane."""
    H_eff = np.asarray(H_eff, dtype=complex)
    if H_eff.shape[0] < 2:
        raise ValueError("DEPS needs at least a 2x2 matrix")
    evals = np.linalg.eigvals(H_eff)
    gaps = np.abs(evals[:, None] - evals[None, :])
    np.fill_diagonal(gaps, np.inf)
    return float(gaps.min())


def petermann_factors(H_eff) -> PetermannResult:
    """Normalization-invariant Petermann factors K_k and their maximum.

    K_k = (|L_k|^2 |R_k|^2) / |<L_k, R_k>|^2 >= 1, diverging toward an
    exceptional point; overlaps below 1e-12 are reported as a capped
    sentinel (1e24) with ep_flag set instead of failing.
    """
    es = eigensystem(H_eff)
    n = len(es.eigenvalues)
    gaps = np.abs(es.eigenvalues[:, None] - es.eigenvalues[None, :])
    np.fill_diagonal(gaps, np.inf)
    ambiguous = bool(n > 1 and gaps.min() < _CLUSTER_TOL)
    if ambiguous:
        warnings.warn(
            "eigenvalue cluster tighter than 1e-10; left/right pairing may be ambiguous",
            stacklevel=2,
        )
    factors = np.empty(n)
    ep_flag = False
    for k in range(n):
        R = es.right_vectors[:, k]
        L = es.left_vectors[:, k]
        overlap = abs(np.vdot(L, R))
        if overlap < _OVERLAP_FLOOR:
            factors[k] = K_SENTINEL
            ep_flag = True
            continue
        factors[k] = min(
            (np.vdot(L, L).real * np.vdot(R, R).real) / overlap**2, K_SENTINEL
        )
    return PetermannResult(
        factors=factors, k_max=float(factors.max()), ep_flag=ep_flag, ambiguous_pairing=ambiguous
    )
