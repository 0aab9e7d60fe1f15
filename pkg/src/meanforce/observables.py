"""Scalar thermodynamic quantities derived from reduced states."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "von_neumann_entropy",
    "entropy_from_probabilities",
    "bare_thermal_state",
    "energy_deviation",
    "free_energy",
    "free_energy_from_log",
    "ThermoRecord",
]


def entropy_from_probabilities(p: np.ndarray, tol: float = 1e-8) -> float:
    """-sum p ln p with the 0 ln 0 := 0 convention."""
    p = np.asarray(p, dtype=float)
    if np.any(p < -tol):
        raise ValueError(f"probability below tolerance: {p.min():.3e}")
    if abs(p.sum() - 1.0) > 1e-6:
        raise ValueError(f"probabilities sum to {p.sum():.8f}, expected 1")
    p = np.clip(p, 0.0, None)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def von_neumann_entropy(rho: np.ndarray, tol: float = 1e-8) -> float:
    """Entropy -tr(rho ln rho) of a density matrix (trace one, PSD up to
    ``tol``)."""
    p = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    return entropy_from_probabilities(p, tol=tol)


def bare_thermal_state(H_s: np.ndarray, beta: float) -> np.ndarray:
    """Canonical state exp(-beta H_s)/Z_s of the bare system, computed
    densely (the system space is tiny)."""
    evals, U = np.linalg.eigh(H_s)
    w = np.exp(-beta * (evals - evals.min()))
    rho = (U * w) @ U.conj().T
    return rho / np.trace(rho).real


def energy_deviation(H_star: np.ndarray, rho_star: np.ndarray,
                     H_s: np.ndarray, rho_s: np.ndarray) -> float:
    """Change of the system's internal energy caused by the coupling:
    tr(H* rho*) - tr(H_s rho_s)."""
    coupled = float(np.trace(H_star @ rho_star).real)
    bare = float(np.trace(H_s @ rho_s).real)
    return coupled - bare


def free_energy(Z_star: float, beta: float) -> float:
    """Helmholtz free energy -ln(Z*)/beta of the reduced system."""
    if Z_star <= 0:
        raise ValueError(f"partition function must be positive, got {Z_star}")
    return float(-np.log(Z_star) / beta)


def free_energy_from_log(log_Z_star: float, beta: float) -> float:
    """Free energy from the log-domain partition function (finite even
    where Z* itself overflows)."""
    return float(-log_Z_star / beta)


def log_partition(eigenvalues: np.ndarray, beta: float) -> float:
    """ln tr exp(-beta H) from a dense spectrum, evaluated in log domain."""
    return float(logsumexp(-beta * np.asarray(eigenvalues)))


@dataclass
class ThermoRecord:
    """One grid point of a temperature sweep.

    Eigenvalues are stored in the plotting convention: state weights sorted
    descending, effective levels ascending, ties broken by original index
    so repeated runs render identically.
    """

    beta: float
    rho_eigenvalues: np.ndarray
    H_star_eigenvalues: np.ndarray
    von_neumann_entropy: float
    internal_energy_system: float
    bare_internal_energy: float
    energy_deviation: float
    log_Z_star: float
    n_v: int = 0
    k: int = 0
    seed: int = 0
    max_entry_se: float = float("nan")
    bare_gap: float = float("nan")
    h: float = 0.0
    alpha: float | None = None
    epsilon: float = 1.0
    repeat: int = 0

    def __post_init__(self):
        self.rho_eigenvalues = sort_state_weights(self.rho_eigenvalues)
        self.H_star_eigenvalues = sort_levels(self.H_star_eigenvalues)

    @property
    def Z_star(self) -> float:
        with np.errstate(over="ignore"):
            return float(np.exp(self.log_Z_star))


def sort_state_weights(values: np.ndarray) -> np.ndarray:
    """Descending sort with index tie-breaking (stable)."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(-values, kind="stable")
    return values[order]


def sort_levels(values: np.ndarray) -> np.ndarray:
    """Ascending sort with index tie-breaking (stable); NaNs go last."""
    values = np.asarray(values, dtype=float)
    return values[np.argsort(values, kind="stable")]
