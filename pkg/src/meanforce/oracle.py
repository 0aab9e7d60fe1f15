"""Exact references: dense thermal states, the free-fermion XX chain, and
high/low temperature limits.

Everything here is ground truth for the stochastic estimators.  The dense
Hamiltonian is assembled by explicit Kronecker products, a code path fully
independent of the matrix-free application in :mod:`meanforce.spins`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from .spins import HamiltonianOperator, SpinSystemSpec, build, spin_matrices

DENSE_DIM_LIMIT = 4096

__all__ = [
    "dense_hamiltonian",
    "dense_partial_trace",
    "dense_reduced",
    "DenseReduced",
    "solvable_chain",
    "SolvableChainResult",
    "high_temp_limit",
    "HighTempLimit",
    "low_temp_limit",
    "LowTempLimit",
]


def dense_hamiltonian(spec: SpinSystemSpec, role: str = "total") -> np.ndarray:
    """Dense Hamiltonian for one role, assembled site-by-site with np.kron."""
    op = build(spec, role)  # reuse only the term list, not the matvec
    d = spec.local_dim
    sx, sy, sz = spin_matrices(spec.s)
    mats = {"x": sx, "y": sy, "z": sz}
    local = {site: a for a, site in enumerate(op.sites)}
    n = op.n_sites

    def embedded(axis_mats: dict[int, np.ndarray]) -> np.ndarray:
        out = np.ones((1, 1), dtype=complex)
        for a in range(n):
            out = np.kron(out, axis_mats.get(a, np.eye(d, dtype=complex)))
        return out

    H = np.zeros((op.dimension, op.dimension), dtype=complex)
    for t in op.terms:
        if len(t.sites) == 1:
            H += t.coeff * embedded({local[t.sites[0]]: mats[t.axis]})
        else:
            H += t.coeff * embedded({local[t.sites[0]]: mats[t.axis],
                                     local[t.sites[1]]: mats[t.axis]})
    return H


def dense_partial_trace(M: np.ndarray, dim_keep: int) -> np.ndarray:
    """Trace out the trailing tensor factor of an operator on a product
    space, keeping the leading factor of dimension ``dim_keep``."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    dim = M.shape[0]
    if dim % dim_keep != 0:
        raise ValueError(f"dimension {dim} not divisible by {dim_keep}")
    dim_out = dim // dim_keep
    return np.trace(M.reshape(dim_keep, dim_out, dim_keep, dim_out), axis1=1, axis2=3)


@dataclass(frozen=True)
class DenseReduced:
    """Exact reduced thermal state, effective Hamiltonian and reduced
    partition function (log-domain to stay finite at large beta).

    ``H_star`` is None when it was not requested."""

    rho_star: np.ndarray
    H_star: np.ndarray | None
    log_Z_star: float

    @property
    def Z_star(self) -> float:
        return float(np.exp(self.log_Z_star))


def dense_reduced(spec: SpinSystemSpec, beta: float, *,
                  compute_h_star: bool = True) -> DenseReduced:
    """Exact rho*(beta), H*(beta) and Z*(beta) by full diagonalization.

    Internally shifts the spectrum by its minimum before exponentiating;
    the shift cancels analytically in every returned quantity.  The
    effective Hamiltonian needs the log of the reduced spectrum, which in
    double precision is resolvable only while the dynamic range of the
    reduced state stays above ~1e-14 of its largest weight; outside that
    range a ValueError is raised (pass ``compute_h_star=False`` if only the
    state and partition function are needed).
    """
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if spec.dim_total > DENSE_DIM_LIMIT:
        raise ValueError(
            f"total dimension {spec.dim_total} exceeds dense limit {DENSE_DIM_LIMIT}")
    Ht = dense_hamiltonian(spec, "total")
    Hb = dense_hamiltonian(spec, "bath")
    lt, Ut = np.linalg.eigh(Ht)
    lb = np.linalg.eigvalsh(Hb)

    e0 = lt.min()
    w = np.exp(-beta * (lt - e0))
    M_shift = dense_partial_trace((Ut * w) @ Ut.conj().T, spec.dim_system)
    M_shift = 0.5 * (M_shift + M_shift.conj().T)

    rho = M_shift / np.trace(M_shift).real

    log_Zt = float(logsumexp(-beta * lt))
    log_Zb = float(logsumexp(-beta * lb))

    H_star = None
    if compute_h_star:
        # H* = -(1/beta) ln[ tr_b(e^{-beta Ht}) / Z_b ]: matrix log of the
        # shifted partial trace plus the restored scalar pieces.
        mu, U = np.linalg.eigh(M_shift)
        if mu.min() <= 1e-14 * mu.max():
            raise ValueError(
                "reduced spectrum spans more than double precision can resolve "
                f"(min/max weight ratio {mu.min() / mu.max():.3e}); "
                "the effective Hamiltonian is not computable at this beta")
        H_star = -(U * np.log(mu)) @ U.conj().T / beta + (
            e0 + log_Zb / beta) * np.eye(spec.dim_system)
        H_star = 0.5 * (H_star + H_star.conj().T)
    return DenseReduced(rho_star=rho, H_star=H_star, log_Z_star=log_Zt - log_Zb)


# ---------------------------------------------------------------------------
# Free-fermion solution of the nearest-neighbor isotropic XY chain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolvableChainResult:
    """Closed-form two-site reduced quantities of the open XX chain.

    ``probabilities`` are the eigenvalues of rho*(beta) for the two leading
    sites and ``h_eigenvalues`` the matching effective-Hamiltonian levels
    (same index order, not sorted).
    """

    energies: np.ndarray      # single-particle energies, k = 1..N
    occupations: np.ndarray   # Fermi factors of the energies
    corr_xx: float            # <sx_1 sx_2>
    corr_z: tuple[float, float]   # <sz_1>, <sz_2>
    corr_zz: float            # <sz_1 sz_2>
    delta: float
    probabilities: np.ndarray     # 4 eigenvalues of rho*
    log_Z_N: float
    log_Z_star: float
    h_eigenvalues: np.ndarray

    @property
    def Z_N(self) -> float:
        return float(np.exp(self.log_Z_N))

    @property
    def Z_star(self) -> float:
        return float(np.exp(self.log_Z_star))


def _chain_modes(N: int, J: float, h: float) -> np.ndarray:
    """Single-particle energies h - 2J cos(k pi/(N+1)) of the open XX chain
    of nominal exchange J (tables hold J/2 per bond, whose Jordan-Wigner
    hopping amplitude is then J)."""
    k = np.arange(1, N + 1)
    return h - 2.0 * J * np.cos(k * np.pi / (N + 1))


def _chain_log_Z(N: int, J: float, h: float, beta: float) -> float:
    lam = _chain_modes(N, J, h)
    return beta * N * h / 2.0 + float(np.sum(np.logaddexp(0.0, -beta * lam)))


def solvable_chain(N: int, J: float, h: float, beta: float) -> SolvableChainResult:
    """Exact reduced quantities for the first two sites of an open XX chain.

    Needs N >= 3 so that a nonempty bath remains after the two system
    sites.  All exponentials are evaluated in log domain, so large beta is
    safe.
    """
    if N < 3:
        raise ValueError(f"chain length must be >= 3, got {N}")
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    lam = _chain_modes(N, J, h)
    occ = expit(-beta * lam)  # 1 / (1 + exp(beta lam)), overflow-safe
    k = np.arange(1, N + 1)
    theta = k * np.pi / (N + 1)

    corr_xx = float(-4.0 / (N + 1) * np.sum(np.sin(theta) * np.sin(2 * theta) * occ))
    sz = tuple(
        float(4.0 / (N + 1) * np.sum(np.sin(j * theta) ** 2 * occ) - 1.0)
        for j in (1, 2)
    )
    corr_zz = sz[0] * sz[1] - corr_xx**2
    delta = float(np.sqrt(4.0 * corr_xx**2 + (sz[0] - sz[1]) ** 2))

    p = np.array([
        (1.0 + sz[0] + sz[1] + corr_zz) / 4.0,
        (1.0 - delta - corr_zz) / 4.0,
        (1.0 + delta - corr_zz) / 4.0,
        (1.0 - sz[0] - sz[1] + corr_zz) / 4.0,
    ])

    log_Z_N = _chain_log_Z(N, J, h, beta)
    log_Z_star = log_Z_N - _chain_log_Z(N - 2, J, h, beta)
    with np.errstate(divide="ignore"):
        h_eigs = -(log_Z_star + np.log(p)) / beta
    return SolvableChainResult(
        energies=lam, occupations=occ, corr_xx=corr_xx, corr_z=sz,
        corr_zz=corr_zz, delta=delta, probabilities=p, log_Z_N=log_Z_N,
        log_Z_star=log_Z_star, h_eigenvalues=h_eigs)


# ---------------------------------------------------------------------------
# Asymptotic limits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HighTempLimit:
    """Infinite-temperature limit of the effective Hamiltonian.

    The limit is the bare system Hamiltonian because the bath trace of the
    interaction vanishes (every cross term carries one traceless spin
    matrix on the bath side); ``interaction_residual`` is that bath trace
    divided by the bath dimension, computed densely as a consistency check
    when feasible.
    """

    h_system: np.ndarray
    interaction_residual: np.ndarray | None


def high_temp_limit(spec: SpinSystemSpec) -> HighTempLimit:
    Hs = dense_hamiltonian(spec, "system")
    residual = None
    if spec.dim_total <= DENSE_DIM_LIMIT:
        Hsb = dense_hamiltonian(spec, "interaction")
        residual = dense_partial_trace(Hsb, spec.dim_system) / spec.dim_bath
    return HighTempLimit(h_system=Hs, interaction_residual=residual)


@dataclass(frozen=True)
class LowTempLimit:
    """Zero-temperature limit: ground-space averaged reduced state and the
    constant E_total - E_bath to which every effective level converges."""

    rho_limit: np.ndarray
    shift: float
    degeneracy: int
    ambiguous: bool


def low_temp_limit(spec: SpinSystemSpec, gap_rtol: float = 1e-9,
                   assume_single_ground_state: bool = False) -> LowTempLimit:
    """Ground-state reduced density matrix and energy shift.

    Small systems are handled densely with degeneracy detection (states
    within ``gap_rtol * ||H||`` of the minimum are averaged; an eigenvalue
    within ten times that window is flagged ambiguous).  Larger systems use
    an iterative extremal eigensolver and require
    ``assume_single_ground_state=True``.
    """
    if spec.dim_total <= DENSE_DIM_LIMIT:
        Ht = dense_hamiltonian(spec, "total")
        Hb = dense_hamiltonian(spec, "bath")
        evals, evecs = np.linalg.eigh(Ht)
        e_b = float(np.linalg.eigvalsh(Hb).min())
        norm = float(np.max(np.abs(evals)))
        window = gap_rtol * norm
        gaps = evals - evals[0]
        members = gaps <= window
        ambiguous = bool(np.any((gaps > window) & (gaps <= 10 * window)))
        r = int(np.count_nonzero(members))
        rho = np.zeros((spec.dim_system, spec.dim_system), dtype=complex)
        for i in range(r):
            rho += _pure_state_reduced(evecs[:, i], spec.dim_system)
        rho /= r
        return LowTempLimit(rho_limit=rho, shift=float(evals[0]) - e_b,
                            degeneracy=r, ambiguous=ambiguous)

    if not assume_single_ground_state:
        raise ValueError(
            "dimension too large for dense degeneracy detection; "
            "pass assume_single_ground_state=True to use the iterative path")
    from scipy.sparse.linalg import LinearOperator, eigsh

    Ht = build(spec, "total")
    Hb = build(spec, "bath")
    lo_t = LinearOperator((Ht.dimension,) * 2, matvec=Ht.apply, dtype=complex)
    lo_b = LinearOperator((Hb.dimension,) * 2, matvec=Hb.apply, dtype=complex)
    e_t, psi = eigsh(lo_t, k=1, which="SA")
    e_b = eigsh(lo_b, k=1, which="SA", return_eigenvectors=False)
    rho = _pure_state_reduced(psi[:, 0], spec.dim_system)
    return LowTempLimit(rho_limit=rho, shift=float(e_t[0]) - float(e_b[0]),
                        degeneracy=1, ambiguous=False)


def _pure_state_reduced(psi: np.ndarray, dim_keep: int) -> np.ndarray:
    """tr_b |psi><psi| without forming the outer product."""
    mat = psi.reshape(dim_keep, -1)
    return mat @ mat.conj().T
