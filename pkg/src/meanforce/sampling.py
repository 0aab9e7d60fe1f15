"""Random-state estimators for bath traces of matrix functions.

A Gaussian bath state |v> with E[|v><v|] = I_b turns the quadratic form
(I_s (x) <v|) f[H_t] (I_s (x) |v>) into an unbiased estimator of
tr_b(f[H_t]).  Each sample is evaluated with block Lanczos quadrature from
the start block I_s (x) |v>, and thermal quantities are formed as ratios
of sample averages in which the overflow shift E0 cancels.

Sample j is drawn from a counter-based stream determined by
(seed, stream_offset + j), so serial and parallel runs see identical
states, and the same draw feeds both the total-system and the bare-bath
quadratures of one sample.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import oracle
from .lanczos import block_lanczos, corner_from_eigen, eigen_corner, ground_energy
from .spins import HamiltonianOperator, SpinSystemSpec, build

__all__ = [
    "SamplerConfig",
    "PartialTraceEstimate",
    "ProductStateEstimate",
    "MeanForceEstimator",
    "EstimatorError",
    "NotPositiveDefiniteError",
    "UnderflowError",
    "sample_bath_state",
    "estimate_partial_trace",
    "mean_force_hamiltonian",
    "reduced_density",
    "eigenvalues_via_transform",
    "product_state_estimate",
]

# eigenvalues of a density estimate below this are treated as sampling
# failure rather than quadrature noise
PSD_REPAIR_FLOOR = -1e-10

# margin factor applied below the estimated ground energy in "auto" mode
AUTO_SHIFT_MARGIN = 0.1


class EstimatorError(RuntimeError):
    """Base class for estimator failures."""


class NotPositiveDefiniteError(EstimatorError):
    """Ratio or density estimate had a disallowed nonpositive eigenvalue."""

    def __init__(self, message: str, eigenvalue: float):
        super().__init__(f"{message} (offending eigenvalue {eigenvalue:.6e})")
        self.eigenvalue = eigenvalue


class UnderflowError(EstimatorError):
    """Thermal weights underflowed to zero; enable or lower the shift."""


@dataclass(frozen=True)
class SamplerConfig:
    """Sampling parameters shared by all estimators.

    ``shift`` controls the overflow shift E0 in exp(-beta (x - E0)):
    "none" uses E0 = 0, "auto" places E0 below a Lanczos estimate of the
    total ground energy by a 10% safety margin, and a float is used as-is.
    ``stream_offset`` relabels the sample streams, letting independent
    repeats draw disjoint sample sets from one master seed.
    """

    n_v: int
    k: int
    seed: int = 0
    distribution: str = "gaussian"
    shift: float | str = "auto"
    reorthogonalize: bool = True
    stream_offset: int = 0

    def __post_init__(self):
        if self.n_v < 1:
            raise ValueError(f"sample count must be >= 1, got {self.n_v}")
        if self.k < 1:
            raise ValueError(f"iteration count must be >= 1, got {self.k}")
        if self.distribution not in ("gaussian", "product_state"):
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if isinstance(self.shift, str) and self.shift not in ("none", "auto"):
            raise ValueError(f"shift must be 'none', 'auto' or a float, got {self.shift!r}")


def _stream(seed: int, index: int) -> np.random.Generator:
    # jump 0 of each key is reserved (ground-energy estimates draw from it)
    return np.random.Generator(np.random.Philox(key=seed).jumped(index + 1))


def sample_bath_state(seed: int, index: int, dim: int) -> np.ndarray:
    """Complex Gaussian bath state: i.i.d. entries with unit-variance real
    plus imaginary parts, so E[|v><v|] = I exactly.

    Deterministic function of (seed, index) via a counter-based stream.
    """
    rng = _stream(seed, index)
    return np.sqrt(0.5) * (rng.standard_normal(dim) + 1j * rng.standard_normal(dim))


def embed_system_identity(v: np.ndarray, dim_system: int) -> np.ndarray:
    """Block I_s (x) |v>: column m is e_m (x) v.

    Columns are exactly orthogonal with common norm ||v|| thanks to the
    leading-digit placement of the system sites.
    """
    dim_b = v.shape[0]
    V = np.zeros((dim_system * dim_b, dim_system), dtype=complex)
    for m in range(dim_system):
        V[m * dim_b:(m + 1) * dim_b, m] = v
    return V


@dataclass
class PartialTraceEstimate:
    """Averaged bath-trace estimate with per-sample diagnostics.

    ``value`` is the arithmetic mean of ``samples`` in ascending sample
    order; ``shift`` records the E0 folded into the evaluated function by
    the caller (None when not applicable).
    """

    value: np.ndarray
    samples: np.ndarray
    n_samples: int
    shift: float | None = None
    breakdown_count: int = 0
    stream_ids: tuple = ()

    @property
    def standard_error(self) -> np.ndarray:
        """Per-entry standard error of the mean, sqrt(E|X - mean|^2 / n)."""
        if self.n_samples < 2:
            return np.full(self.value.shape, np.nan)
        dev = self.samples - self.value
        return np.sqrt(np.mean(np.abs(dev) ** 2, axis=0) / (self.n_samples - 1))


def estimate_partial_trace(H: HamiltonianOperator, f: Callable,
                           cfg: SamplerConfig, *,
                           shift: float | None = None) -> PartialTraceEstimate:
    """Monte Carlo estimate of tr_b(f[H]) for a total-system operator.

    Each sample embeds a Gaussian bath state as I_s (x) |v>, runs block
    Lanczos, and evaluates the corner quadrature of f; ``f`` receives an
    array of Ritz values and is applied as given (compose any overflow
    shift into it and pass the value through ``shift`` for the record).
    """
    if H.role != "total":
        raise ValueError(f"expected a total-system operator, got role {H.role!r}")
    if cfg.distribution != "gaussian":
        raise ValueError("bath-trace estimation requires the gaussian distribution")
    spec = H.spec
    b = spec.dim_system
    if cfg.k * b > H.dimension:
        raise ValueError(f"k * dim_system = {cfg.k * b} exceeds dimension {H.dimension}")

    blocks = np.empty((cfg.n_v, b, b), dtype=complex)
    breakdowns = 0
    ids = []
    for j in range(cfg.n_v):
        index = cfg.stream_offset + j
        v = sample_bath_state(cfg.seed, index, spec.dim_bath)
        norm = np.linalg.norm(v)
        V = embed_system_identity(v / norm, b)
        T = block_lanczos(H, V, cfg.k, reorthogonalize=cfg.reorthogonalize)
        if T.breakdown_at is not None:
            breakdowns += 1
        evals, U = eigen_corner(T)
        blocks[j] = norm**2 * corner_from_eigen(evals, U, f)
        ids.append((cfg.seed, index))
    value = blocks.mean(axis=0)
    return PartialTraceEstimate(value=value, samples=blocks, n_samples=cfg.n_v,
                                shift=shift, breakdown_count=breakdowns,
                                stream_ids=tuple(ids))


@dataclass
class _SampleQuadrature:
    """Reduced spectral data of one sample, reusable across temperatures."""

    norm_sq: float
    evals_total: np.ndarray   # Ritz values of the block run on H_t
    corner_total: np.ndarray  # first b rows of its eigenvector matrix
    evals_bath: np.ndarray    # Ritz values of the scalar run on H_b
    weights_bath: np.ndarray  # squared first-row amplitudes
    stream_id_total: tuple
    stream_id_bath: tuple
    breakdown: bool


class MeanForceEstimator:
    """Shared-sample estimator of the reduced thermal state and the
    effective system Hamiltonian.

    Construction draws all samples and factorizes their Jacobi matrices
    once; evaluating a temperature is then a cheap spectral sum, and the
    same test states feed the total-system numerator and the bare-bath
    denominator so that their ratio cancels both the Gaussian normalization
    and the overflow shift.
    """

    def __init__(self, spec: SpinSystemSpec, cfg: SamplerConfig):
        if cfg.distribution != "gaussian":
            raise ValueError("mean-force estimation requires the gaussian distribution")
        b = spec.dim_system
        if cfg.k * b > spec.dim_total:
            raise ValueError(
                f"k * dim_system = {cfg.k * b} exceeds total dimension {spec.dim_total}")
        self.spec = spec
        self.cfg = cfg
        self.H_total = build(spec, "total")
        self.H_bath = build(spec, "bath")
        self.H_system = oracle.dense_hamiltonian(spec, "system")
        self.e0 = self._resolve_shift()
        self.samples = [self._run_sample(cfg.stream_offset + j) for j in range(cfg.n_v)]

    def _resolve_shift(self) -> float:
        shift = self.cfg.shift
        if shift == "none":
            return 0.0
        if shift == "auto":
            k = min(self.H_total.dimension, max(30, self.cfg.k))
            g = ground_energy(self.H_total, k, seed=self.cfg.seed)
            return g - AUTO_SHIFT_MARGIN * abs(g)
        return float(shift)

    def _run_sample(self, index: int) -> _SampleQuadrature:
        cfg = self.cfg
        spec = self.spec
        v = sample_bath_state(cfg.seed, index, spec.dim_bath)
        norm = np.linalg.norm(v)
        unit = v / norm

        V = embed_system_identity(unit, spec.dim_system)
        k_total = min(cfg.k, spec.dim_total // spec.dim_system)
        T_total = block_lanczos(self.H_total, V, k_total,
                                reorthogonalize=cfg.reorthogonalize)
        evals_t, U_t = eigen_corner(T_total)

        k_bath = min(cfg.k, spec.dim_bath)
        T_bath = block_lanczos(self.H_bath, unit[:, None], k_bath,
                               reorthogonalize=cfg.reorthogonalize)
        evals_b, U_b = eigen_corner(T_bath)

        return _SampleQuadrature(
            norm_sq=float(norm**2),
            evals_total=evals_t, corner_total=U_t,
            evals_bath=evals_b, weights_bath=np.abs(U_b[0]) ** 2,
            stream_id_total=(cfg.seed, index), stream_id_bath=(cfg.seed, index),
            breakdown=(T_total.breakdown_at is not None
                       or T_bath.breakdown_at is not None))

    # -- per-temperature evaluation -------------------------------------------

    def numerator_samples(self, beta: float) -> np.ndarray:
        """Per-sample corner blocks of exp[-beta (T_t - E0)], scaled back by
        the squared sample norm."""
        f = lambda x: np.exp(-beta * (x - self.e0))
        out = np.empty((len(self.samples), self.spec.dim_system,
                        self.spec.dim_system), dtype=complex)
        for j, smp in enumerate(self.samples):
            out[j] = smp.norm_sq * corner_from_eigen(smp.evals_total,
                                                     smp.corner_total, f)
        return out

    def numerator(self, beta: float) -> PartialTraceEstimate:
        blocks = self.numerator_samples(beta)
        return PartialTraceEstimate(
            value=blocks.mean(axis=0), samples=blocks, n_samples=len(self.samples),
            shift=self.e0,
            breakdown_count=sum(s.breakdown for s in self.samples),
            stream_ids=tuple(s.stream_id_total for s in self.samples))

    def bath_partition(self, beta: float) -> float:
        """Averaged scalar quadrature of exp[-beta (T_b - E0)], estimating
        the shifted bath partition function."""
        total = 0.0
        for smp in self.samples:
            total += smp.norm_sq * float(
                np.sum(smp.weights_bath * np.exp(-beta * (smp.evals_bath - self.e0))))
        return total / len(self.samples)

    def mean_force(self, beta: float) -> np.ndarray:
        """Effective system Hamiltonian at inverse temperature beta via the
        matrix logarithm of the numerator/denominator ratio."""
        if beta <= 0:
            raise ValueError(f"beta must be positive, got {beta}")
        num = self.numerator(beta).value
        den = self.bath_partition(beta)
        if den == 0.0 or not np.any(num):
            raise UnderflowError(
                "thermal weights underflowed; enable the E0 shift or reduce beta")
        ratio = num / den
        ratio = 0.5 * (ratio + ratio.conj().T)
        mu, U = np.linalg.eigh(ratio)
        if mu.min() <= 0:
            raise NotPositiveDefiniteError(
                "ratio estimate is not positive definite; increase n_v", float(mu.min()))
        H = -(U * np.log(mu)) @ U.conj().T / beta
        return 0.5 * (H + H.conj().T)

    def reduced_density(self, beta: float) -> np.ndarray:
        """Reduced thermal state at inverse temperature beta: trace-normalized
        numerator with nonnegative spectrum restored."""
        if beta <= 0:
            raise ValueError(f"beta must be positive, got {beta}")
        num = self.numerator(beta).value
        tr = float(np.trace(num).real)
        if tr == 0.0:
            raise UnderflowError(
                "numerator underflowed to zero; enable the E0 shift or reduce beta")
        rho = num / tr
        rho = 0.5 * (rho + rho.conj().T)
        p, U = np.linalg.eigh(rho)
        if p.min() < PSD_REPAIR_FLOOR:
            raise NotPositiveDefiniteError(
                "density estimate has a significantly negative eigenvalue; "
                "increase n_v", float(p.min()))
        p = np.clip(p, 0.0, None)
        p /= p.sum()
        return (U * p) @ U.conj().T

    def eigenvalues(self, beta: float) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues of the reduced state and the effective Hamiltonian
        from one eigendecomposition of the numerator (log-free path)."""
        num = self.numerator(beta).value
        return eigenvalues_via_transform(num, self.bath_partition(beta), beta)

    def bare_system_gap(self, beta: float) -> float:
        """Frobenius distance between the mean-force estimate and the bare
        system Hamiltonian; at high temperature this is a rough indicator
        of remaining sampling error."""
        return float(np.linalg.norm(self.mean_force(beta) - self.H_system))


def eigenvalues_via_transform(numerator: np.ndarray, Zb_estimate: float,
                              beta: float, *,
                              shift_difference: float = 0.0
                              ) -> tuple[np.ndarray, np.ndarray]:
    """Transform the eigenvalues of the averaged numerator into eigenvalues
    of the reduced state and of the effective Hamiltonian.

    Assumes numerator and bath-partition estimates were computed with the
    same overflow shift (then it cancels); otherwise pass the difference of
    the two shifts.  Nonpositive numerator eigenvalues leave the matching
    effective level undefined (NaN).  Ordering: descending state weight,
    hence ascending effective level.
    """
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    num = 0.5 * (numerator + numerator.conj().T)
    mu = np.linalg.eigvalsh(num)[::-1]
    total = mu.sum()
    if total <= 0:
        raise NotPositiveDefiniteError("numerator trace is not positive", float(total))
    rho_eigs = mu / total
    with np.errstate(invalid="ignore", divide="ignore"):
        h_eigs = np.where(mu > 0,
                          -np.log(np.where(mu > 0, mu, 1.0) / Zb_estimate) / beta
                          + shift_difference,
                          np.nan)
    return rho_eigs, h_eigs


def mean_force_hamiltonian(spec: SpinSystemSpec, beta: float,
                           cfg: SamplerConfig) -> np.ndarray:
    """Estimate of the effective system Hamiltonian at inverse temperature
    beta (convenience wrapper; reuse :class:`MeanForceEstimator` to sweep
    many temperatures over one sample set)."""
    return MeanForceEstimator(spec, cfg).mean_force(beta)


def reduced_density(spec: SpinSystemSpec, beta: float,
                    cfg: SamplerConfig) -> np.ndarray:
    """Estimate of the reduced thermal state at inverse temperature beta."""
    return MeanForceEstimator(spec, cfg).reduced_density(beta)


@dataclass
class ProductStateEstimate:
    """Scalar trace estimate from random product states.

    The per-sample quadratic form admits two readings: averaged over the
    bath factor it estimates <v_s| tr_b(A) |v_s>, averaged over the system
    factor it estimates <v_b| tr_s(A) |v_b>.  Both accumulated views are
    the same number by construction.
    """

    samples: np.ndarray
    system_view: float
    bath_view: float

    @property
    def standard_error(self) -> float:
        if len(self.samples) < 2:
            return float("nan")
        return float(np.std(self.samples, ddof=1) / np.sqrt(len(self.samples)))


def product_state_estimate(op, f: Callable | None, cfg: SamplerConfig, *,
                           dims: tuple[int, int] | None = None
                           ) -> ProductStateEstimate:
    """Trace estimator from pure product states |v_s> (x) |v_b| with
    independent Gaussian factors.

    ``op`` is a total-system operator or an explicit Hermitian matrix (then
    ``dims`` must give the system/bath factor dimensions).  With f=None the
    quadratic form of ``op`` itself is taken; otherwise f is evaluated by
    scalar Lanczos quadrature with cfg.k iterations.
    """
    if cfg.distribution != "product_state":
        raise ValueError("product-state estimation requires distribution='product_state'")
    if isinstance(op, HamiltonianOperator):
        if op.role != "total":
            raise ValueError(f"expected a total-system operator, got role {op.role!r}")
        ds, db = op.spec.dim_system, op.spec.dim_bath
        apply_vec = op.apply
        dim = op.dimension
    else:
        mat = np.asarray(op)
        if dims is None:
            raise ValueError("dims=(dim_system, dim_bath) is required for matrices")
        ds, db = dims
        if mat.shape != (ds * db, ds * db):
            raise ValueError(f"matrix shape {mat.shape} does not match dims {dims}")
        apply_vec = mat.__matmul__
        dim = ds * db

    samples = np.empty(cfg.n_v)
    for j in range(cfg.n_v):
        rng = _stream(cfg.seed, cfg.stream_offset + j)
        draw = np.sqrt(0.5) * (rng.standard_normal(ds + db)
                               + 1j * rng.standard_normal(ds + db))
        w = np.kron(draw[:ds], draw[ds:])
        if f is None:
            samples[j] = float(np.vdot(w, apply_vec(w)).real)
        else:
            norm = np.linalg.norm(w)
            carrier = _VectorOp(apply_vec, dim)
            T = block_lanczos(carrier, (w / norm)[:, None], min(cfg.k, dim),
                              reorthogonalize=cfg.reorthogonalize)
            evals, U = eigen_corner(T)
            samples[j] = float(norm**2 * corner_from_eigen(evals, U, f)[0, 0].real)
    total = float(samples.mean())
    return ProductStateEstimate(samples=samples, system_view=total, bath_view=total)


class _VectorOp:
    """Adapter giving a plain matvec the block-apply interface."""

    def __init__(self, apply_vec: Callable, dimension: int):
        self._apply = apply_vec
        self.dimension = dimension

    def apply_block(self, V: np.ndarray) -> np.ndarray:
        return np.column_stack([self._apply(V[:, i]) for i in range(V.shape[1])])
