"""Block Lanczos factorization and block Gauss quadrature.

Running k block iterations from an orthonormal start block V of width b
produces the block-tridiagonal Jacobi matrix T (diagonal blocks A_j,
off-diagonal blocks B_j).  The leading b x b corner of f[T] approximates
V^H f[H] V; the approximation is exact whenever f is a polynomial of
degree at most 2k - 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

__all__ = [
    "BlockTridiagonal",
    "block_lanczos",
    "quadrature_corner",
    "ground_energy",
]

# relative size below which an R diagonal signals rank deficiency
_BREAKDOWN_RTOL = 1e-12


class _Applies(Protocol):
    dimension: int

    def apply_block(self, V: np.ndarray) -> np.ndarray: ...


@dataclass
class BlockTridiagonal:
    """Jacobi matrix of a block Lanczos run.

    ``A`` holds the Hermitian diagonal blocks, ``B`` the upper-triangular
    off-diagonal blocks (QR convention: nonnegative real diagonal).  When
    the iteration hit an invariant subspace, ``breakdown_at`` records the
    1-based step; ``B_last`` is the residual coupling block and ``basis``
    the Krylov basis, both kept only on request.
    """

    block_size: int
    A: list[np.ndarray]
    B: list[np.ndarray]
    B_last: np.ndarray | None = None
    basis: np.ndarray | None = None
    breakdown_at: int | None = None

    @property
    def n_blocks(self) -> int:
        return len(self.A)

    def assemble(self) -> np.ndarray:
        """Dense Hermitian kb x kb matrix."""
        b, k = self.block_size, self.n_blocks
        T = np.zeros((k * b, k * b), dtype=complex)
        for j, Aj in enumerate(self.A):
            T[j * b:(j + 1) * b, j * b:(j + 1) * b] = Aj
        for j, Bj in enumerate(self.B):
            T[(j + 1) * b:(j + 2) * b, j * b:(j + 1) * b] = Bj
            T[j * b:(j + 1) * b, (j + 1) * b:(j + 2) * b] = Bj.conj().T
        return T


def _qr_nonneg(Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Householder QR with the sign convention diag(R) real and >= 0."""
    Q, R = np.linalg.qr(Z)
    diag = np.diag(R)
    absd = np.abs(diag)
    phase = np.where(absd > 0, diag / np.where(absd > 0, absd, 1.0), 1.0)
    return Q * phase[None, :], phase.conj()[:, None] * R


def block_lanczos(op: _Applies, V: np.ndarray, k: int, *,
                  reorthogonalize: bool = True,
                  store_basis: bool = False) -> BlockTridiagonal:
    """Run k block Lanczos iterations of ``op`` from the orthonormal block V.

    Full reorthogonalization against all previous blocks (two passes) is on
    by default; disabling it trades orthogonality of the basis for speed.
    A rank-deficient residual terminates the iteration early and is
    reported via ``breakdown_at``; the blocks computed so far are exact on
    the invariant subspace found.
    """
    V = np.asarray(V, dtype=complex)
    if V.ndim != 2:
        raise ValueError(f"start block must be 2-D, got shape {V.shape}")
    n, b = V.shape
    if k < 1:
        raise ValueError(f"iteration count must be >= 1, got {k}")
    if k * b > n:
        raise ValueError(f"k * b = {k * b} exceeds operator dimension {n}")
    gram = V.conj().T @ V
    if np.max(np.abs(gram - np.eye(b))) > 1e-10:
        raise ValueError("start block is not orthonormal")

    # basis grows in a preallocated buffer so reorthogonalization can use a
    # single view instead of re-stacking blocks every iteration
    basis = np.empty((n, k * b), dtype=complex, order="F")
    basis[:, :b] = V
    used = b

    A: list[np.ndarray] = []
    B: list[np.ndarray] = []
    B_last = None
    breakdown_at = None

    Q_prev = None
    B_prev = None
    Q_j = V
    for j in range(k):
        Z = op.apply_block(Q_j)
        if Q_prev is not None:
            Z -= Q_prev @ B_prev.conj().T
        Aj = Q_j.conj().T @ Z
        Aj = 0.5 * (Aj + Aj.conj().T)
        A.append(Aj)
        Z -= Q_j @ Aj
        if reorthogonalize:
            Qv = basis[:, :used]
            for _ in range(2):
                # (Z^H Qv)^H == Qv^H Z but conjugates only the small block
                Z -= Qv @ (Z.conj().T @ Qv).conj().T
        if j == k - 1:
            _, B_last = _qr_nonneg(Z)
            break
        Q_next, Bj = _qr_nonneg(Z)
        rdiag = np.abs(np.diag(Bj).real)
        if np.min(rdiag) <= _BREAKDOWN_RTOL * max(1.0, np.max(rdiag)):
            breakdown_at = j + 1
            B_last = Bj
            break
        B.append(Bj)
        basis[:, used:used + b] = Q_next
        used += b
        Q_prev, B_prev = Q_j, Bj
        Q_j = Q_next

    return BlockTridiagonal(
        block_size=b, A=A, B=B, B_last=B_last,
        basis=basis[:, :used].copy() if store_basis else None,
        breakdown_at=breakdown_at)


def quadrature_corner(T: BlockTridiagonal, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Leading b x b corner of f[T] via dense Hermitian eigendecomposition.

    ``f`` must accept an array of eigenvalues.  The result is symmetrized,
    so it is Hermitian by construction.
    """
    evals, U = eigen_corner(T)
    return corner_from_eigen(evals, U, f)


def eigen_corner(T: BlockTridiagonal) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of the assembled T and the first b rows of its
    eigenvector matrix; everything needed to evaluate corners of f[T] for
    many f without re-diagonalizing."""
    dense = T.assemble()
    evals, vecs = np.linalg.eigh(dense)
    if not (np.all(np.isfinite(evals)) and np.all(np.isfinite(vecs))):
        raise np.linalg.LinAlgError("non-finite entries in eigendecomposition")
    return evals, vecs[:T.block_size, :]


def corner_from_eigen(evals: np.ndarray, U_top: np.ndarray,
                      f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    fx = np.asarray(f(evals), dtype=float)
    X = (U_top * fx) @ U_top.conj().T
    return 0.5 * (X + X.conj().T)


def ground_energy(op: _Applies, k: int, seed: int = 0) -> float:
    """Smallest Ritz value of a width-1 Lanczos run from a random start.

    By the variational bound this never underestimates the true ground
    energy; used as the overflow shift for thermal exponentials.
    """
    if k < 1:
        raise ValueError(f"iteration count must be >= 1, got {k}")
    k = min(k, op.dimension)
    rng = np.random.Generator(np.random.Philox(key=seed))
    v = rng.standard_normal(op.dimension) + 1j * rng.standard_normal(op.dimension)
    v /= np.linalg.norm(v)
    T = block_lanczos(op, v[:, None], k)
    evals, _ = eigen_corner(T)
    return float(evals.min())
