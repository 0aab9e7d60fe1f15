import numpy as np
import pytest
from scipy.special import logsumexp

from meanforce import SpinSystemSpec, dense_partial_trace, dense_reduced, solvable_chain
from meanforce.oracle import (
    _chain_modes,
    dense_hamiltonian,
    high_temp_limit,
    low_temp_limit,
)

from conftest import random_hermitian


def test_single_site_mode_is_field_only():
    # one site, cos(pi/2) = 0: the mode energy reduces to the bare field
    assert abs(_chain_modes(1, J=1.0, h=0.37)[0] - 0.37) < 1e-15


def test_dense_two_site_chain_spectrum():
    spec = SpinSystemSpec.chain(N=2, N_s=1, J=1.0, h=0.0)
    H = dense_hamiltonian(spec, "total")
    assert np.allclose(np.linalg.eigvalsh(H), [-1, 0, 0, 1], atol=1e-12)
    # a raw table entry J contributes J (sx sx + sy sy) on its bond
    J = np.array([[0.0, 1.0], [1.0, 0.0]])
    exp = SpinSystemSpec.explicit(J, J, np.zeros((2, 2)), N_s=1, h=0.0)
    assert np.allclose(np.linalg.eigvalsh(dense_hamiltonian(exp, "total")),
                       [-2, 0, 0, 2], atol=1e-12)


def test_partial_trace_of_identity():
    out = dense_partial_trace(np.eye(16), 2)
    assert np.allclose(out, 8 * np.eye(2))


def test_partial_trace_of_kronecker_product(rng):
    A = random_hermitian(rng, 4)
    B = random_hermitian(rng, 4)
    out = dense_partial_trace(np.kron(A, B), 4)
    assert np.allclose(out, np.trace(B) * A, atol=1e-12)


def test_partial_trace_preserves_trace(rng):
    M = random_hermitian(rng, 32)
    assert abs(np.trace(dense_partial_trace(M, 4)) - np.trace(M)) < 1e-10


def test_partial_trace_shape_errors():
    with pytest.raises(ValueError):
        dense_partial_trace(np.zeros((4, 5)), 2)
    with pytest.raises(ValueError):
        dense_partial_trace(np.eye(6), 4)


@pytest.mark.parametrize("beta", [0.1, 0.5, 1.0, 2.0, 10.0])
def test_solvable_chain_matches_dense(beta):
    # master convention check: closed forms against full diagonalization
    spec = SpinSystemSpec.chain(N=8, N_s=2, J=1.0, h=0.3)
    exact = dense_reduced(spec, beta)
    sol = solvable_chain(8, 1.0, 0.3, beta)
    p_dense = np.sort(np.linalg.eigvalsh(exact.rho_star))
    h_dense = np.sort(np.linalg.eigvalsh(exact.H_star))
    assert np.max(np.abs(p_dense - np.sort(sol.probabilities))) < 1e-9
    assert np.max(np.abs(h_dense - np.sort(sol.h_eigenvalues))) < 1e-9
    assert abs(exact.log_Z_star - sol.log_Z_star) < 1e-9


def test_solvable_chain_correlators_match_dense(rng):
    from meanforce.spins import spin_matrices

    N, beta, h = 6, 0.8, 0.3
    spec = SpinSystemSpec.chain(N=N, N_s=2, J=1.0, h=h)
    rho = dense_reduced(spec, beta).rho_star
    sol = solvable_chain(N, 1.0, h, beta)
    sx, _, sz = spin_matrices(0.5)
    I2 = np.eye(2)
    assert abs(np.trace(rho @ np.kron(sx, sx)).real - sol.corr_xx) < 1e-10
    assert abs(np.trace(rho @ np.kron(sz, I2)).real - sol.corr_z[0]) < 1e-10
    assert abs(np.trace(rho @ np.kron(I2, sz)).real - sol.corr_z[1]) < 1e-10
    assert abs(np.trace(rho @ np.kron(sz, sz)).real - sol.corr_zz) < 1e-10


@pytest.mark.parametrize("beta", [0.1, 1.0, 10.0, 100.0])
def test_solvable_chain_probabilities_normalized(beta):
    sol = solvable_chain(18, 1.0, 0.3, beta)
    assert np.all(sol.probabilities >= -1e-12)
    assert np.all(sol.probabilities <= 1 + 1e-12)
    assert abs(sol.probabilities.sum() - 1.0) < 1e-12
    assert sol.delta >= 0


def test_solvable_chain_large_beta_finite():
    sol = solvable_chain(16, 1.0, 2.1, 100.0)
    assert np.isfinite(sol.log_Z_N)
    assert np.isfinite(sol.log_Z_star)
    assert np.all(np.isfinite(sol.occupations))


def test_solvable_chain_input_validation():
    with pytest.raises(ValueError):
        solvable_chain(2, 1.0, 0.3, 1.0)
    with pytest.raises(ValueError):
        solvable_chain(8, 1.0, 0.3, 0.0)


def test_dense_reduced_decoupled_gives_bare_hamiltonian():
    spec = SpinSystemSpec.chain(N=6, N_s=2, J=1.0, h=0.3, epsilon=0.0)
    Hs = dense_hamiltonian(spec, "system")
    for beta in (0.2, 1.0, 3.0):
        exact = dense_reduced(spec, beta)
        assert np.max(np.abs(exact.H_star - Hs)) < 1e-9
    # past the double-precision range of the matrix log, the state is still
    # exact (and bare-thermal) while the effective Hamiltonian must refuse
    from meanforce.observables import bare_thermal_state
    cold = dense_reduced(spec, 30.0, compute_h_star=False)
    assert cold.H_star is None
    assert np.max(np.abs(cold.rho_star - bare_thermal_state(Hs, 30.0))) < 1e-12
    with pytest.raises(ValueError):
        dense_reduced(spec, 30.0)


def test_dense_reduced_high_temperature_is_maximally_mixed():
    spec = SpinSystemSpec.chain(N=6, N_s=2, J=1.0, h=0.3)
    beta = 1e-3
    exact = dense_reduced(spec, beta)
    assert np.max(np.abs(exact.rho_star - np.eye(4) / 4)) < 10 * beta


def test_dense_reduced_partition_ratio(rng):
    spec = SpinSystemSpec.power_law_chain(N=6, N_s=2, alpha=1.0, h=0.4)
    beta = 1.7
    exact = dense_reduced(spec, beta)
    lt = np.linalg.eigvalsh(dense_hamiltonian(spec, "total"))
    lb = np.linalg.eigvalsh(dense_hamiltonian(spec, "bath"))
    ref = logsumexp(-beta * lt) - logsumexp(-beta * lb)
    assert abs(exact.log_Z_star - ref) < 1e-10 * max(1, abs(ref))


def test_dense_reduced_rejects_large_systems():
    with pytest.raises(ValueError):
        dense_reduced(SpinSystemSpec.chain(N=14, N_s=2), 1.0)


def test_high_temp_limit():
    spec = SpinSystemSpec.chain(N=6, N_s=2, J=1.0, h=0.3, epsilon=0.7)
    lim = high_temp_limit(spec)
    assert np.allclose(np.linalg.eigvalsh(lim.h_system), [-1, -0.3, 0.3, 1], atol=1e-12)
    assert np.max(np.abs(lim.interaction_residual)) < 1e-12
    # the limit does not depend on the coupling scale
    lim2 = high_temp_limit(SpinSystemSpec.chain(N=6, N_s=2, J=1.0, h=0.3, epsilon=0.0))
    assert np.allclose(lim.h_system, lim2.h_system)


def test_low_temp_limit_matches_cold_dense_state():
    spec = SpinSystemSpec.chain(N=8, N_s=2, J=1.0, h=0.3)
    lim = low_temp_limit(spec)
    assert lim.degeneracy == 1
    assert not lim.ambiguous
    assert abs(np.trace(lim.rho_limit) - 1) < 1e-12
    # the first excited gap is small (~0.047), so full convergence of the
    # state needs beta well past 100
    cold_state = dense_reduced(spec, 300.0, compute_h_star=False)
    assert np.max(np.abs(cold_state.rho_star - lim.rho_limit)) < 1e-6
    # levels approach the plateau at rate -ln(p_min)/beta; for this chain
    # the smallest ground-state weight is ~4.8e-3, i.e. ~0.053 at beta=100
    h_cold = np.linalg.eigvalsh(dense_reduced(spec, 100.0).H_star)
    p_min = np.linalg.eigvalsh(lim.rho_limit).min()
    assert np.max(np.abs(h_cold - lim.shift)) < -np.log(p_min) / 100.0 + 0.01
    assert np.max(np.abs(h_cold - lim.shift)) < 0.06


def test_low_temp_limit_detects_degeneracy():
    # zero field, odd-even structure: h = 0 chain of 2 sites + 2 bath sites
    spec = SpinSystemSpec.chain(N=4, N_s=2, J=1.0, h=0.0)
    lim = low_temp_limit(spec)
    assert lim.degeneracy >= 1
    assert abs(np.trace(lim.rho_limit) - 1) < 1e-12
    p = np.linalg.eigvalsh(lim.rho_limit)
    assert np.all(p > -1e-12)


def test_low_temp_limit_iterative_path_agrees_with_dense():
    spec = SpinSystemSpec.chain(N=8, N_s=2, J=1.0, h=0.3)
    dense_lim = low_temp_limit(spec)
    iter_lim = low_temp_limit(spec.chain(N=8, N_s=2, J=1.0, h=0.3),
                              assume_single_ground_state=True) \
        if False else None
    # exercise the iterative branch via a fake threshold: use the public API
    from meanforce import oracle as oracle_mod
    old = oracle_mod.DENSE_DIM_LIMIT
    try:
        oracle_mod.DENSE_DIM_LIMIT = 16
        iter_lim = low_temp_limit(spec, assume_single_ground_state=True)
        with pytest.raises(ValueError):
            low_temp_limit(spec)
    finally:
        oracle_mod.DENSE_DIM_LIMIT = old
    assert abs(iter_lim.shift - dense_lim.shift) < 1e-8
    assert np.max(np.abs(iter_lim.rho_limit - dense_lim.rho_limit)) < 1e-6
