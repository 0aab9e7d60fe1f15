"""Spin lattice specifications and matrix-free Heisenberg-type Hamiltonians.

A total system of N spin-s sites is split into a "system" (the first N_s
sites) and a "bath" (the rest).  The Hamiltonian is a sum of two-site
exchange terms plus a uniform z-field,

    H = sum_{i<j} [ Jx_ij sx_i sx_j + Jy_ij sy_i sy_j + Jz_ij sz_i sz_j ]
        + (h/2) sum_i sz_i,

where each unordered bond is counted once and sx/sy/sz are the component
spin matrices normalized so that s = 1/2 gives the Pauli matrices.

Basis convention: site 0 is the most significant base-d digit of the state
index (d = 2s+1), so the system sites occupy the leading digits and the
total space factorizes as (system) x (bath) with contiguous indexing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_TOTAL_DIM = 2**31

Axis = str  # "x", "y" or "z"

__all__ = [
    "SpinSystemSpec",
    "HamiltonianOperator",
    "Term",
    "spin_matrices",
    "build",
]


def spin_matrices(s: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Component spin matrices (sx, sy, sz) of dimension 2s+1.

    Normalized as twice the conventional spin operators, so s = 1/2 yields
    exactly the Pauli matrices.  Basis index a corresponds to magnetic
    quantum number m = s - a (index 0 is the highest-weight state).
    """
    d = _local_dim(s)
    m = s - np.arange(d)
    # ladder operator: (S+)[a-1, a] = sqrt(s(s+1) - m_a (m_a + 1))
    sp = np.zeros((d, d), dtype=complex)
    for a in range(1, d):
        sp[a - 1, a] = np.sqrt(s * (s + 1) - m[a] * (m[a] + 1))
    sm = sp.conj().T
    sx = sp + sm
    sy = -1j * (sp - sm)
    sz = np.diag(2.0 * m).astype(complex)
    return sx, sy, sz


def _local_dim(s: float) -> int:
    two_s = 2 * s
    if abs(two_s - round(two_s)) > 1e-12 or two_s < 1:
        raise ValueError(f"spin number must be a positive half-integer, got {s}")
    return int(round(two_s)) + 1


def _as_coupling_table(J, N: int) -> np.ndarray:
    J = np.array(J, dtype=float)
    if J.shape != (N, N):
        raise ValueError(f"coupling table must be {N}x{N}, got {J.shape}")
    if not np.allclose(J, J.T, atol=1e-14):
        raise ValueError("coupling table must be symmetric")
    if np.any(np.abs(np.diag(J)) > 0):
        raise ValueError("coupling table must have zero diagonal")
    J.flags.writeable = False
    return J


@dataclass(frozen=True)
class SpinSystemSpec:
    """Lattice, couplings, field and system/bath split of a spin model.

    Couplings are stored as dense symmetric N x N tables (zero diagonal);
    ``epsilon`` scales only the system-bath cross terms of the total
    Hamiltonian.  All couplings and the field are in units of a reference
    exchange energy J.
    """

    N: int
    N_s: int
    s: float
    topology: str
    J_x: np.ndarray
    J_y: np.ndarray
    J_z: np.ndarray
    h: float
    alpha: float = np.inf
    epsilon: float = 1.0

    def __post_init__(self):
        if not 1 <= self.N_s < self.N:
            raise ValueError(f"need 1 <= N_s < N, got N_s={self.N_s}, N={self.N}")
        if self.alpha < 0:
            raise ValueError(f"power-law exponent must be >= 0, got {self.alpha}")
        if self.epsilon < 0:
            raise ValueError(f"coupling scale must be >= 0, got {self.epsilon}")
        d = _local_dim(self.s)
        if d**self.N > MAX_TOTAL_DIM:
            raise ValueError(
                f"total dimension {d}**{self.N} exceeds the supported maximum {MAX_TOTAL_DIM}"
            )
        for name in ("J_x", "J_y", "J_z"):
            object.__setattr__(self, name, _as_coupling_table(getattr(self, name), self.N))

    # -- derived dimensions ------------------------------------------------

    @property
    def local_dim(self) -> int:
        return _local_dim(self.s)

    @property
    def N_b(self) -> int:
        return self.N - self.N_s

    @property
    def dim_total(self) -> int:
        return self.local_dim**self.N

    @property
    def dim_system(self) -> int:
        return self.local_dim**self.N_s

    @property
    def dim_bath(self) -> int:
        return self.local_dim**self.N_b

    # -- constructors --------------------------------------------------------

    @classmethod
    def chain(cls, N: int, N_s: int = 2, J: float = 1.0, h: float = 0.0,
              epsilon: float = 1.0, s: float = 0.5) -> "SpinSystemSpec":
        """Nearest-neighbor isotropic XY chain of nominal exchange J.

        Normalization: the tables hold J/2 per bond, placing the chain in
        the convention whose open-boundary single-particle dispersion is
        h - 2 J cos(k pi/(N+1)) and whose cold polarization transition sits
        at h = 2J.
        """
        Jt = np.zeros((N, N))
        for i in range(N - 1):
            Jt[i, i + 1] = Jt[i + 1, i] = J / 2.0
        return cls(N=N, N_s=N_s, s=s, topology="chain", J_x=Jt, J_y=Jt.copy(),
                   J_z=np.zeros((N, N)), h=h, epsilon=epsilon)

    @classmethod
    def power_law_chain(cls, N: int, alpha: float, N_s: int = 2, J: float = 1.0,
                        h: float = 0.0, epsilon: float = 1.0,
                        s: float = 0.5) -> "SpinSystemSpec":
        """Chain with isotropic XY couplings decaying as |i-j|^(-alpha);
        alpha=inf reduces to the nearest-neighbor chain.

        Same normalization as :meth:`chain` (tables hold J/2 |i-j|^-alpha),
        so the alpha=inf case is exactly the solvable chain.
        """
        if alpha < 0:
            raise ValueError(f"power-law exponent must be >= 0, got {alpha}")
        idx = np.arange(N)
        dist = np.abs(idx[:, None] - idx[None, :]).astype(float)
        with np.errstate(divide="ignore"):
            Jt = np.where(dist > 0, (J / 2.0) * dist ** (-alpha), 0.0)
        return cls(N=N, N_s=N_s, s=s, topology="power_law_chain", J_x=Jt,
                   J_y=Jt.copy(), J_z=np.zeros((N, N)), h=h, alpha=alpha,
                   epsilon=epsilon)

    @classmethod
    def ladder(cls, N: int, N_s: int = 2, leg_coupling: float = 1.0,
               rung_coupling: float = -0.45, h: float = 1.0, epsilon: float = 1.0,
               s: float = 0.5, system_rung: int = 0) -> "SpinSystemSpec":
        """Two-leg XY ladder: sites 0..N/2-1 form one leg, N/2..N-1 the
        other, rung r couples site r to site r + N/2.  Nominal couplings
        use the same J/2-per-bond normalization as :meth:`chain`.

        ``system_rung`` relabels the sites so that the chosen rung pair
        becomes sites (0, 1); with N_s = 2 the system is then that rung.
        """
        if N % 2 != 0:
            raise ValueError("ladder needs an even number of sites")
        half = N // 2
        if not 0 <= system_rung < half:
            raise ValueError(f"system_rung must be in [0, {half}), got {system_rung}")
        Jt = np.zeros((N, N))
        for i in range(half - 1):  # legs
            Jt[i, i + 1] = Jt[i + 1, i] = leg_coupling / 2.0
            Jt[half + i, half + i + 1] = Jt[half + i + 1, half + i] = leg_coupling / 2.0
        for r in range(half):  # rungs
            Jt[r, r + half] = Jt[r + half, r] = rung_coupling / 2.0
        # bring the selected rung pair to the front
        order = [system_rung, system_rung + half]
        order += [i for i in range(N) if i not in order]
        perm = np.array(order)
        Jt = Jt[np.ix_(perm, perm)]
        return cls(N=N, N_s=N_s, s=s, topology="ladder", J_x=Jt, J_y=Jt.copy(),
                   J_z=np.zeros((N, N)), h=h, epsilon=epsilon)

    @classmethod
    def explicit(cls, J_x, J_y, J_z, N_s: int, h: float = 0.0,
                 epsilon: float = 1.0, s: float = 0.5) -> "SpinSystemSpec":
        """Arbitrary symmetric coupling tables."""
        J_x = np.array(J_x, dtype=float)
        N = J_x.shape[0]
        return cls(N=N, N_s=N_s, s=s, topology="explicit", J_x=J_x,
                   J_y=np.array(J_y, dtype=float), J_z=np.array(J_z, dtype=float),
                   h=h, epsilon=epsilon)


@dataclass(frozen=True)
class Term:
    """One Hamiltonian term: a two-site exchange or a single-site z-field.

    ``sites`` holds global site indices (0-based); for single-site terms it
    has length one and the coefficient is the field prefactor h/2.
    """

    sites: tuple[int, ...]
    axis: Axis
    coeff: float


ROLES = ("total", "system", "bath", "interaction")


class HamiltonianOperator:
    """Matrix-free Hermitian operator for one role of the decomposition
    total = system (x) I_b + I_s (x) bath + epsilon * interaction.

    The operator stores a term list and a compiled form: a diagonal vector
    collecting every sz contribution plus, per bond, the sparse nonzero
    entries of the two-site xx+yy block.  ``apply``/``apply_block`` accumulate
    those entries in a fixed order, so results are reproducible bitwise and
    block columns coincide with individual matrix-vector products.

    Instances are immutable after construction; ``apply`` and ``apply_block``
    are pure and safe to call concurrently.
    """

    def __init__(self, spec: SpinSystemSpec, role: str):
        if role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {role!r}")
        self.spec = spec
        self.role = role
        d = spec.local_dim
        if role == "system":
            self.sites = tuple(range(spec.N_s))
        elif role == "bath":
            self.sites = tuple(range(spec.N_s, spec.N))
        else:
            self.sites = tuple(range(spec.N))
        self.n_sites = len(self.sites)
        self.dimension = d**self.n_sites
        self.terms = self._collect_terms()
        self._compile()

    def _collect_terms(self) -> tuple[Term, ...]:
        spec = self.spec
        in_system = lambda i: i < spec.N_s
        terms: list[Term] = []
        for i in range(spec.N):
            for j in range(i + 1, spec.N):
                cross = in_system(i) != in_system(j)
                if self.role == "interaction" and not cross:
                    continue
                if self.role == "system" and (cross or not in_system(i)):
                    continue
                if self.role == "bath" and (cross or in_system(i)):
                    continue
                scale = spec.epsilon if (self.role == "total" and cross) else 1.0
                for axis, table in (("x", spec.J_x), ("y", spec.J_y), ("z", spec.J_z)):
                    c = table[i, j]
                    if c != 0.0:
                        terms.append(Term((i, j), axis, scale * c))
        if self.role != "interaction" and spec.h != 0.0:
            for i in self.sites:
                terms.append(Term((i,), "z", spec.h / 2.0))
        return tuple(terms)

    def _compile(self) -> None:
        spec = self.spec
        d = spec.local_dim
        sx, sy, sz = spin_matrices(spec.s)
        zvals = np.real(np.diag(sz))
        local = {site: a for a, site in enumerate(self.sites)}
        n = self.n_sites

        idx = np.arange(self.dimension)
        digit = lambda a: (idx // d ** (n - 1 - a)) % d

        diag = np.zeros(self.dimension)
        # bond -> accumulated xx+yy local block (d^2 x d^2, real)
        blocks: dict[tuple[int, int], np.ndarray] = {}
        kxx = np.kron(sx, sx).real
        kyy = np.kron(sy, sy).real
        for t in self.terms:
            if len(t.sites) == 1:
                diag += t.coeff * zvals[digit(local[t.sites[0]])]
            elif t.axis == "z":
                ai, aj = local[t.sites[0]], local[t.sites[1]]
                diag += t.coeff * zvals[digit(ai)] * zvals[digit(aj)]
            else:
                key = (local[t.sites[0]], local[t.sites[1]])
                blocks.setdefault(key, np.zeros((d * d, d * d)))
                blocks[key] += t.coeff * (kxx if t.axis == "x" else kyy)

        # sparse entries (out_slice, in_slice, value) in fixed order
        entries = []
        for (ai, aj), K in sorted(blocks.items()):
            K4 = K.reshape(d, d, d, d)  # [out_i, out_j, in_i, in_j]
            for p in range(d):
                for q in range(d):
                    for r in range(d):
                        for t_ in range(d):
                            v = K4[p, q, r, t_]
                            if v != 0.0:
                                out_ix = [slice(None)] * (n + 1)
                                in_ix = [slice(None)] * (n + 1)
                                out_ix[ai], out_ix[aj] = p, q
                                in_ix[ai], in_ix[aj] = r, t_
                                entries.append((tuple(out_ix), tuple(in_ix), v))
        self._diag = diag
        self._entries = tuple(entries)
        self._tensor_shape = (d,) * n

    # -- application ---------------------------------------------------------

    def apply_block(self, V: np.ndarray) -> np.ndarray:
        """Apply the operator to every column of V (shape (dim, w))."""
        V = np.asarray(V, dtype=complex)
        if V.ndim != 2 or V.shape[0] != self.dimension:
            raise ValueError(f"expected block of shape ({self.dimension}, w), got {V.shape}")
        W = V * self._diag[:, None]
        t_in = V.reshape(self._tensor_shape + (V.shape[1],))
        t_out = W.reshape(self._tensor_shape + (V.shape[1],))
        for out_ix, in_ix, val in self._entries:
            t_out[out_ix] += val * t_in[in_ix]
        return W

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Apply the operator to a single vector."""
        v = np.asarray(v, dtype=complex)
        if v.ndim != 1 or v.shape[0] != self.dimension:
            raise ValueError(f"expected vector of length {self.dimension}, got shape {v.shape}")
        return self.apply_block(v[:, None])[:, 0]

    def to_dense(self) -> np.ndarray:
        """Materialize the operator by applying it to the identity.

        Intended for small dimensions only; cross-checked in the test suite
        against an independent Kronecker-product construction.
        """
        if self.dimension > 4096:
            raise ValueError(f"dimension {self.dimension} too large to materialize")
        return self.apply_block(np.eye(self.dimension, dtype=complex))

    def __repr__(self) -> str:  # pragma: no cover
        return (f"HamiltonianOperator(role={self.role!r}, dim={self.dimension}, "
                f"terms={len(self.terms)})")


def build(spec: SpinSystemSpec, role: str = "total") -> HamiltonianOperator:
    """Construct the matrix-free Hamiltonian for one role of the split."""
    return HamiltonianOperator(spec, role)
