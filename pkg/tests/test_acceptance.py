"""Acceptance suite: one test per release criterion, each printing a
PASS line with the measured figure of merit (run with -s to see them all).

Statistical criteria use fixed seeds; the asserted tolerances are the
release gates, and the measured margins are printed for inspection.
"""

import csv
import time
from pathlib import Path

import numpy as np
import pytest

from meanforce import (
    MeanForceEstimator,
    SamplerConfig,
    SpinSystemSpec,
    build,
    dense_reduced,
    entropy_from_probabilities,
    estimate_partial_trace,
    product_state_estimate,
    solvable_chain,
)
from meanforce import runner
from meanforce.lanczos import block_lanczos, quadrature_corner
from meanforce.oracle import (
    dense_hamiltonian,
    dense_partial_trace,
    high_temp_limit,
    low_temp_limit,
)
from meanforce.observables import bare_thermal_state, energy_deviation

from conftest import random_hermitian, random_orthonormal_block

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def report(criterion, message):
    print(f"\n[acceptance {criterion}] PASS: {message}")


def test_criterion_01_convention_pin():
    """Closed-form chain vs dense diagonalization at 1e-9, under 10 s."""
    t0 = time.perf_counter()
    spec = SpinSystemSpec.chain(N=8, N_s=2, J=1.0, h=0.3)
    worst = 0.0
    for beta in (0.1, 0.5, 1.0, 2.0, 10.0):
        exact = dense_reduced(spec, beta)
        sol = solvable_chain(8, 1.0, 0.3, beta)
        p_err = np.max(np.abs(np.sort(np.linalg.eigvalsh(exact.rho_star))
                              - np.sort(sol.probabilities)))
        h_err = np.max(np.abs(np.sort(np.linalg.eigvalsh(exact.H_star))
                              - np.sort(sol.h_eigenvalues)))
        worst = max(worst, p_err, h_err)
        assert p_err < 1e-9 and h_err < 1e-9, beta
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    report(1, f"max eigenvalue discrepancy {worst:.2e} (tol 1e-9), {elapsed:.2f}s")


def test_criterion_02_quadrature_polynomial_exactness():
    """Corner quadrature equals the compressed polynomial exactly through
    degree 2k-1 for block widths 1, 2, 4."""
    rng = np.random.default_rng(202)
    spec = SpinSystemSpec.chain(N=6, N_s=2, J=1.0, h=0.3)
    op = build(spec, "total")
    evals, U = np.linalg.eigh(op.to_dense())
    lo, hi = evals.min(), evals.max()
    worst = 0.0
    for b in (1, 2, 4):
        for k in (2, 4, 8):
            coeffs = rng.standard_normal(2 * k)

            def poly(x):
                return np.polynomial.chebyshev.chebval(
                    (2 * x - (hi + lo)) / (hi - lo), coeffs)

            V = random_orthonormal_block(rng, op.dimension, b)
            corner = quadrature_corner(block_lanczos(op, V, k), poly)
            exact = V.conj().T @ ((U * poly(evals)) @ U.conj().T) @ V
            err = np.max(np.abs(corner - exact))
            worst = max(worst, err)
            assert err < 1e-9, (b, k)
    report(2, f"max |corner - compression| {worst:.2e} (tol 1e-9)")


def test_criterion_03_estimator_vs_dense_oracle():
    """Sampled state eigenvalues track the dense oracle, under 2 min."""
    t0 = time.perf_counter()
    spec = SpinSystemSpec.chain(N=8, N_s=2, J=1.0, h=0.3)
    est = MeanForceEstimator(spec, SamplerConfig(n_v=400, k=30, seed=303))
    margins = []
    for beta, tol in ((0.1, 0.02), (1.0, 0.02), (10.0, 0.05)):
        p = np.linalg.eigvalsh(est.reduced_density(beta))
        q = np.linalg.eigvalsh(dense_reduced(spec, beta).rho_star)
        err = np.max(np.abs(p - q))
        margins.append(f"beta={beta:g}: {err:.4f}/{tol}")
        assert err < tol, beta
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    report(3, f"{'; '.join(margins)}; {elapsed:.1f}s")


def test_criterion_04_high_temperature_limit():
    """At beta -> 0 the effective Hamiltonian reduces to the bare system
    one, and the interaction's bath trace vanishes identically."""
    spec = SpinSystemSpec.chain(N=8, N_s=2, J=1.0, h=0.3)
    resid = dense_partial_trace(dense_hamiltonian(spec, "interaction"),
                                spec.dim_system)
    assert np.max(np.abs(resid)) < 1e-12

    beta = 1e-4
    n_groups, group = 10, 40
    eig_groups = []
    for g in range(n_groups):
        cfg = SamplerConfig(n_v=group, k=30, seed=404, stream_offset=g * group)
        est = MeanForceEstimator(spec, cfg)
        eig_groups.append(np.linalg.eigvalsh(est.mean_force(beta)))
    eig_groups = np.array(eig_groups)
    mean = eig_groups.mean(axis=0)
    se = eig_groups.std(axis=0, ddof=1) / np.sqrt(n_groups)
    want = np.linalg.eigvalsh(dense_hamiltonian(spec, "system"))
    err = np.abs(mean - want)
    tol = np.maximum(0.01, 3 * se)
    assert np.all(err < tol)
    report(4, f"max |H* - H_s| eigenvalue error {err.max():.4f} "
              f"(tol max(0.01, 3 SE), SE up to {se.max():.4f}); "
              f"interaction bath-trace residual {np.max(np.abs(resid)):.1e}")


def test_criterion_05_low_temperature_plateau():
    """At beta J = 100 every effective level sits within 0.05 J of the
    ground-energy difference, for the dense oracle and for the estimator's
    10-90% band (10 runs x 100 samples)."""
    spec = SpinSystemSpec.ladder(N=8, N_s=2, h=1.0)
    plateau = low_temp_limit(spec).shift
    beta = 100.0
    h_dense = np.linalg.eigvalsh(dense_reduced(spec, beta).H_star)
    dense_err = np.max(np.abs(h_dense - plateau))
    assert dense_err < 0.05

    runs = []
    for r in range(10):
        cfg = SamplerConfig(n_v=100, k=30, seed=505, stream_offset=r * 100)
        est = MeanForceEstimator(spec, cfg)
        _, h_eigs = est.eigenvalues(beta)
        assert np.all(np.isfinite(h_eigs))
        runs.append(np.sort(h_eigs))
    runs = np.array(runs)
    q10 = np.quantile(runs, 0.10, axis=0)
    q90 = np.quantile(runs, 0.90, axis=0)
    band_err = max(np.max(np.abs(q10 - plateau)), np.max(np.abs(q90 - plateau)))
    assert np.all(q10 > plateau - 0.05) and np.all(q90 < plateau + 0.05)
    report(5, f"dense plateau error {dense_err:.4f} (tol 0.05); estimator "
              f"10-90% band within {band_err:.4f} of plateau (tol 0.05)")


def test_criterion_06_monte_carlo_scaling():
    """Per-entry error of the bath-trace estimator decays as n^(-1/2)."""
    spec = SpinSystemSpec.chain(N=6, N_s=2, J=1.0, h=0.3)
    H = build(spec, "total")
    poly = lambda x: 0.4 * x**3 - 0.8 * x + 1.0
    evals, U = np.linalg.eigh(dense_hamiltonian(spec, "total"))
    exact = dense_partial_trace((U * poly(evals)) @ U.conj().T, 4)

    ns = (10, 40, 160, 640)
    repeats = 16
    errs = []
    for n in ns:
        tot = 0.0
        for r in range(repeats):
            cfg = SamplerConfig(n_v=n, k=8, seed=606, stream_offset=r * max(ns))
            est = estimate_partial_trace(H, poly, cfg)
            tot += float(np.mean(np.abs(est.value - exact)))
        errs.append(tot / repeats)
    slope = float(np.polyfit(np.log(ns), np.log(errs), 1)[0])
    assert -0.6 < slope < -0.4
    report(6, f"log-log error slope {slope:.3f} (tol -0.5 +/- 0.1)")


def test_criterion_07_desk_scale_curve_reproduction(tmp_path):
    """Config-driven N=12 sweep: median curves of 20 repeats overlay the
    closed-form reference with median absolute deviation < 0.02, under
    10 minutes."""
    t0 = time.perf_counter()
    config = runner.load_config(CONFIG_DIR / "fig1_desk_n12.toml")
    result = runner.run(config, out_dir=tmp_path)
    with open(result.csv_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 13 * 20

    devs = []
    betas = sorted({row["beta"] for row in rows}, key=float)
    for beta in betas:
        grp = [row for row in rows if row["beta"] == beta]
        for kind, prefix in (("rho", "rho_eig_"), ("H", "H_eig_")):
            for i in range(1, 5):
                est_median = np.median([float(r[f"{prefix}{i}"]) for r in grp])
                oracle_val = float(grp[0][f"oracle_{prefix}{i}"])
                devs.append(abs(est_median - oracle_val))
    mad = float(np.median(devs))
    elapsed = time.perf_counter() - t0
    assert mad < 0.02
    assert elapsed < 600.0
    report(7, f"median |median-curve - reference| {mad:.4f} (tol 0.02), "
              f"worst point {max(devs):.4f}, {elapsed:.0f}s")


def test_criterion_08_coupling_scale_sweep():
    """Energy deviation vanishes when decoupled and grows with the
    coupling scale (dense oracle; estimator consistent at zero)."""
    beta = 1.0
    devs = []
    for eps in (0.0, 0.5, 1.0):
        spec = SpinSystemSpec.chain(N=8, N_s=2, J=1.0, h=0.3, epsilon=eps)
        exact = dense_reduced(spec, beta)
        Hs = dense_hamiltonian(spec, "system")
        rho_s = bare_thermal_state(Hs, beta)
        devs.append(energy_deviation(exact.H_star, exact.rho_star, Hs, rho_s))
    assert abs(devs[0]) < 1e-12
    assert abs(devs[0]) <= abs(devs[1]) + 1e-9
    assert abs(devs[1]) <= abs(devs[2]) + 1e-9

    spec0 = SpinSystemSpec.chain(N=8, N_s=2, J=1.0, h=0.3, epsilon=0.0)
    est = MeanForceEstimator(spec0, SamplerConfig(n_v=8, k=30, seed=808))
    Hs = dense_hamiltonian(spec0, "system")
    rho_s = bare_thermal_state(Hs, beta)
    est_dev = energy_deviation(est.mean_force(beta), est.reduced_density(beta),
                               Hs, rho_s)
    assert abs(est_dev) < 1e-6  # same-sample ratio cancels the noise exactly
    report(8, f"oracle deviations {[f'{d:+.4f}' for d in devs]} "
              f"(zero, monotone); estimator deviation at zero coupling "
              f"{est_dev:.2e}")


def test_criterion_09_product_state_estimator(rng):
    """Random product states give a consistent trace estimate: both
    conditional readings are the same scalar, and the mean matches the
    trace within 3 standard errors over 1e5 samples."""
    A = random_hermitian(rng, 16)
    cfg = SamplerConfig(n_v=100_000, k=2, seed=909, distribution="product_state")
    out = product_state_estimate(A, None, cfg, dims=(4, 4))
    assert out.system_view == out.bath_view  # bitwise
    err = abs(out.system_view - float(np.trace(A).real))
    assert err < 3 * out.standard_error
    report(9, f"|mean - trace| {err:.4f} vs 3 SE = {3 * out.standard_error:.4f}; "
              f"views bit-identical")


def test_criterion_10_entropy_phase_transition():
    """The cold solvable chain locates the polarization transition at
    h = 2J: negligible entropy just above, order-one entropy well below.

    The entangled-side bound S > 0.5 holds up to h ~ 1.6J; between there
    and the transition the exact entropy decays continuously (e.g.
    S(1.9J) ~ 0.10), so the contrast is asserted on a grid below 1.6J plus
    a monotone bracket across (1.9J, 2.06J)."""
    N, beta = 16, 100.0
    ent = lambda h: entropy_from_probabilities(
        np.clip(solvable_chain(N, 1.0, h, beta).probabilities, 0, None)
        / np.clip(solvable_chain(N, 1.0, h, beta).probabilities, 0, None).sum())
    for h in (2.05, 2.06, 2.1, 2.15, 2.2):
        assert ent(h) < 0.05, h
    for h in (0.0, 0.3, 0.6, 0.9, 1.2, 1.5, 1.6):
        assert ent(h) > 0.5, h
    s_edge = [ent(1.9), ent(2.0), ent(2.05)]
    assert s_edge[0] > s_edge[1] > s_edge[2]
    assert s_edge[0] > 0.05 > s_edge[2]
    report(10, f"S(2.05J..2.2J) < 0.05, S(0..1.6J) > 0.5, edge profile "
               f"{[f'{s:.3f}' for s in s_edge]} brackets the 2J transition")
