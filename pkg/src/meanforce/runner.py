"""Configuration-driven sweep runner.

Reads a TOML experiment description, runs the sampling estimator over the
Cartesian product of the configured sweep axes (beta required; field,
interaction range and coupling scale optional) times independent repeats,
and writes one CSV row per grid point plus a JSON manifest.  Oracle
columns mirror the estimator columns when an exact reference is enabled.

Reruns with the same seed produce byte-identical CSV files; only the
manifest carries timestamps.
"""

from __future__ import annotations

import csv
import json
import os
import subprocess
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python 3.10
    import tomli as tomllib

from . import __version__, observables, oracle
from .observables import ThermoRecord, bare_thermal_state, entropy_from_probabilities
from .sampling import MeanForceEstimator, SamplerConfig
from .spins import SpinSystemSpec

SCHEMA_VERSION = 1
OUTPUT_DIR_ENV = "MEANFORCE_OUT"

__all__ = [
    "ExperimentConfig",
    "VerifySettings",
    "SweepResult",
    "load_config",
    "run",
    "verify",
]


@dataclass(frozen=True)
class VerifySettings:
    betas: tuple[float, ...]
    rho_tolerance: float = 0.02
    h_tolerance: float = 0.05
    n_v: int | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    system: dict
    betas: tuple[float, ...]
    h_grid: tuple[float, ...] | None
    alpha_grid: tuple[float, ...] | None
    epsilon_grid: tuple[float, ...] | None
    repeats: int
    sampler: SamplerConfig
    oracle_mode: str
    output_prefix: str
    verify: VerifySettings | None
    raw: dict = field(repr=False, default_factory=dict)

    def grid_points(self) -> list[dict]:
        """Cartesian product of the sweep axes that are present."""
        hs = self.h_grid if self.h_grid is not None else (None,)
        alphas = self.alpha_grid if self.alpha_grid is not None else (None,)
        epsilons = self.epsilon_grid if self.epsilon_grid is not None else (None,)
        return [
            {"h": h, "alpha": a, "epsilon": e}
            for h in hs for a in alphas for e in epsilons
        ]


def _parse_float(value) -> float:
    if isinstance(value, str):
        if value.lower() in ("inf", "infinity"):
            return float("inf")
        return float(value)
    return float(value)


def _parse_axis(value) -> tuple[float, ...] | None:
    if value is None:
        return None
    vals = tuple(_parse_float(v) for v in value)
    return vals if vals else None


def _parse_beta(value) -> tuple[float, ...]:
    if isinstance(value, dict):
        lo, hi = float(value["log_min"]), float(value["log_max"])
        n = int(value["points"])
        if lo <= 0 or hi <= lo or n < 2:
            raise ValueError(f"bad log-spaced beta grid {value}")
        return tuple(float(b) for b in np.geomspace(lo, hi, n))
    vals = tuple(float(b) for b in value)
    if not vals or any(b <= 0 for b in vals):
        raise ValueError("beta grid must be a nonempty list of positive values")
    return vals


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate an experiment TOML file."""
    raw = tomllib.loads(Path(path).read_text())
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {version}, expected {SCHEMA_VERSION}")

    system = dict(raw["system"])
    sweep = raw.get("sweep", {})
    sampler_raw = dict(raw.get("sampler", {}))
    shift = sampler_raw.get("shift", "auto")
    if not isinstance(shift, str):
        shift = float(shift)
    sampler = SamplerConfig(
        n_v=int(sampler_raw.get("n_v", 100)),
        k=int(sampler_raw.get("k", 30)),
        seed=int(sampler_raw.get("seed", 0)),
        distribution=sampler_raw.get("distribution", "gaussian"),
        shift=shift,
        reorthogonalize=bool(sampler_raw.get("reorthogonalize", True)),
    )
    oracle_mode = raw.get("oracle", {}).get("mode", "none")
    if oracle_mode not in ("none", "dense_if_feasible", "solvable"):
        raise ValueError(f"unknown oracle mode {oracle_mode!r}")

    verify_raw = raw.get("verify")
    verify_settings = None
    if verify_raw:
        verify_settings = VerifySettings(
            betas=tuple(float(b) for b in verify_raw["beta"]),
            rho_tolerance=float(verify_raw.get("rho_tolerance", 0.02)),
            h_tolerance=float(verify_raw.get("h_tolerance", 0.05)),
            n_v=int(verify_raw["n_v"]) if "n_v" in verify_raw else None,
        )

    repeats = int(sweep.get("repeats", 1))
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")

    config = ExperimentConfig(
        system=system,
        betas=_parse_beta(sweep.get("beta", [1.0])),
        h_grid=_parse_axis(sweep.get("h")),
        alpha_grid=_parse_axis(sweep.get("alpha")),
        epsilon_grid=_parse_axis(sweep.get("epsilon")),
        repeats=repeats,
        sampler=sampler,
        oracle_mode=oracle_mode,
        output_prefix=raw.get("output", {}).get("prefix", "run"),
        verify=verify_settings,
        raw=raw,
    )
    # fail fast on an unbuildable system or infeasible oracle
    spec = make_spec(config.system)
    _check_oracle_feasible(spec, config.oracle_mode)
    return config


def make_spec(system: dict, h: float | None = None, alpha: float | None = None,
              epsilon: float | None = None) -> SpinSystemSpec:
    """Build the lattice spec for one grid point (axis values override the
    scalars of the [system] section)."""
    topology = system["topology"]
    kw = dict(
        N=int(system["N"]),
        N_s=int(system.get("N_s", 2)),
        h=float(h if h is not None else system.get("h", 0.0)),
        epsilon=float(epsilon if epsilon is not None else system.get("epsilon", 1.0)),
        s=float(system.get("s", 0.5)),
    )
    J = float(system.get("J", 1.0))
    if topology == "chain":
        return SpinSystemSpec.chain(J=J, **kw)
    if topology == "power_law_chain":
        a = _parse_float(alpha if alpha is not None else system["alpha"])
        return SpinSystemSpec.power_law_chain(alpha=a, J=J, **kw)
    if topology == "ladder":
        return SpinSystemSpec.ladder(
            leg_coupling=float(system.get("leg_coupling", J)),
            rung_coupling=float(system.get("rung_coupling", -0.45 * J)),
            system_rung=int(system.get("system_rung", 0)),
            **kw)
    raise ValueError(f"unknown topology {topology!r}")


def _check_oracle_feasible(spec: SpinSystemSpec, mode: str) -> None:
    if mode == "dense_if_feasible" and spec.dim_total > oracle.DENSE_DIM_LIMIT:
        raise ValueError(
            f"dense oracle requested but dimension {spec.dim_total} exceeds "
            f"{oracle.DENSE_DIM_LIMIT}")
    if mode == "solvable":
        nn_chain = spec.topology == "chain" or (
            spec.topology == "power_law_chain" and np.isinf(spec.alpha))
        if not (nn_chain and spec.s == 0.5 and spec.N_s == 2
                and spec.epsilon == 1.0):
            raise ValueError(
                "solvable oracle requires a spin-1/2 nearest-neighbor chain with "
                "two system sites and unit coupling scale")


# ---------------------------------------------------------------------------
# record assembly
# ---------------------------------------------------------------------------

def _estimator_record(est: MeanForceEstimator, beta: float, *, h: float,
                      alpha: float, epsilon: float, repeat: int) -> ThermoRecord:
    """Everything derivable from the sample set at one temperature, via a
    single eigendecomposition of the averaged numerator (log-free path)."""
    num_est = est.numerator(beta)
    zb = est.bath_partition(beta)
    num = 0.5 * (num_est.value + num_est.value.conj().T)
    mu, U = np.linalg.eigh(num)
    total = float(mu.sum())
    if total <= 0 or zb <= 0:
        raise ValueError(
            "thermal weights vanished or lost positivity; enable the E0 shift "
            "or increase n_v")
    p = mu / total
    if p.min() < -1e-10:
        raise ValueError(
            f"density estimate eigenvalue {p.min():.3e} below repair floor; "
            "increase n_v")
    with np.errstate(divide="ignore", invalid="ignore"):
        h_eigs = np.where(mu > 0, -np.log(np.where(mu > 0, mu, 1.0) / zb) / beta,
                          np.nan)
    p_clip = np.clip(p, 0.0, None)
    p_clip = p_clip / p_clip.sum()
    entropy = entropy_from_probabilities(p_clip)
    internal = float(np.sum(np.where(p_clip > 0, p_clip * np.nan_to_num(h_eigs), 0.0)))

    rho_s = bare_thermal_state(est.H_system, beta)
    bare_internal = float(np.trace(est.H_system @ rho_s).real)

    if np.all(mu > 0):
        H_star = -(U * np.log(mu / zb)) @ U.conj().T / beta
        hs_gap = float(np.linalg.norm(H_star - est.H_system))
    else:
        hs_gap = float("nan")

    return ThermoRecord(
        beta=beta,
        rho_eigenvalues=p_clip,
        H_star_eigenvalues=h_eigs,
        von_neumann_entropy=entropy,
        internal_energy_system=internal,
        bare_internal_energy=bare_internal,
        energy_deviation=internal - bare_internal,
        log_Z_star=float(np.log(total) - np.log(zb)),
        n_v=est.cfg.n_v,
        k=est.cfg.k,
        seed=est.cfg.seed,
        max_entry_se=float(num_est.standard_error.max()),
        bare_gap=hs_gap,
        h=h, alpha=alpha, epsilon=epsilon, repeat=repeat,
    )


def _oracle_record(spec: SpinSystemSpec, beta: float, mode: str) -> dict | None:
    """Exact mirror columns for one grid point, or None when disabled."""
    if mode == "none":
        return None
    Hs = oracle.dense_hamiltonian(spec, "system")
    rho_s = bare_thermal_state(Hs, beta)
    bare_internal = float(np.trace(Hs @ rho_s).real)
    if mode == "solvable":
        J = 2.0 * float(spec.J_x[0, 1])  # nominal coupling from the table
        sol = oracle.solvable_chain(spec.N, J, spec.h, beta)
        p = observables.sort_state_weights(sol.probabilities)
        h_eigs = observables.sort_levels(sol.h_eigenvalues)
        log_z = sol.log_Z_star
    else:
        exact = oracle.dense_reduced(spec, beta)
        p = observables.sort_state_weights(np.linalg.eigvalsh(exact.rho_star))
        h_eigs = observables.sort_levels(np.linalg.eigvalsh(exact.H_star))
        log_z = exact.log_Z_star
    # p is descending and h ascending; the monotone transform between them
    # pairs them index-by-index, so tr(H* rho*) is the aligned dot product
    internal = float(np.sum(p * h_eigs))
    p_pos = np.clip(p, 0.0, None)
    entropy = entropy_from_probabilities(p_pos / p_pos.sum())
    return {
        "rho_eigs": p,
        "h_eigs": h_eigs,
        "entropy": entropy,
        "energy_system": internal,
        "energy_bare": bare_internal,
        "deviation": internal - bare_internal,
        "log_Z_star": log_z,
    }


# ---------------------------------------------------------------------------
# sweep execution
# ---------------------------------------------------------------------------

@dataclass
class SweepResult:
    csv_path: Path
    manifest_path: Path
    records: list[ThermoRecord]


def _run_task(args) -> list[tuple]:
    """One (grid point, repeat) unit: returns CSV row tuples in beta order."""
    system, point, betas, sampler, oracle_mode, repeat = args
    spec = make_spec(system, **point)
    cfg = SamplerConfig(
        n_v=sampler.n_v, k=sampler.k, seed=sampler.seed,
        distribution=sampler.distribution, shift=sampler.shift,
        reorthogonalize=sampler.reorthogonalize,
        stream_offset=repeat * sampler.n_v)
    est = MeanForceEstimator(spec, cfg)
    rows = []
    for beta in betas:
        rec = _estimator_record(
            est, beta, h=spec.h, alpha=spec.alpha, epsilon=spec.epsilon,
            repeat=repeat)
        orc = _oracle_record(spec, beta, oracle_mode)
        rows.append(_csv_row(rec, orc, spec))
    return rows


def _columns(dim_system: int, oracle_mode: str) -> list[str]:
    cols = ["beta", "h", "alpha", "epsilon", "repeat"]
    cols += [f"rho_eig_{i + 1}" for i in range(dim_system)]
    cols += [f"H_eig_{i + 1}" for i in range(dim_system)]
    cols += ["entropy", "energy_system", "energy_bare", "deviation",
             "Z_star", "log_Z_star", "hs_gap", "max_entry_se"]
    if oracle_mode != "none":
        cols += [f"oracle_rho_eig_{i + 1}" for i in range(dim_system)]
        cols += [f"oracle_H_eig_{i + 1}" for i in range(dim_system)]
        cols += ["oracle_entropy", "oracle_energy_system", "oracle_energy_bare",
                 "oracle_deviation", "oracle_log_Z_star"]
    cols += ["n_v", "k", "seed"]
    return cols


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _csv_row(rec: ThermoRecord, orc: dict | None, spec: SpinSystemSpec) -> tuple:
    with np.errstate(over="ignore"):
        z_star = float(np.exp(rec.log_Z_star))
    row = [_fmt(rec.beta), _fmt(rec.h), _fmt(rec.alpha), _fmt(rec.epsilon),
           _fmt(rec.repeat)]
    row += [_fmt(v) for v in rec.rho_eigenvalues]
    row += [_fmt(v) for v in rec.H_star_eigenvalues]
    row += [_fmt(rec.von_neumann_entropy), _fmt(rec.internal_energy_system),
            _fmt(rec.bare_internal_energy), _fmt(rec.energy_deviation),
            _fmt(z_star), _fmt(rec.log_Z_star), _fmt(rec.bare_gap),
            _fmt(rec.max_entry_se)]
    if orc is not None:
        row += [_fmt(v) for v in orc["rho_eigs"]]
        row += [_fmt(v) for v in orc["h_eigs"]]
        row += [_fmt(orc["entropy"]), _fmt(orc["energy_system"]),
                _fmt(orc["energy_bare"]), _fmt(orc["deviation"]),
                _fmt(orc["log_Z_star"])]
    row += [_fmt(rec.n_v), _fmt(rec.k), _fmt(rec.seed)]
    return tuple(row)


def _git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             capture_output=True, text=True, timeout=10)
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


def run(config: ExperimentConfig, out_dir: str | Path | None = None,
        threads: int = 1, seed: int | None = None) -> SweepResult:
    """Execute the sweep and write CSV + manifest.

    Tasks (grid point x repeat) may run in worker processes (``threads``);
    rows are written in deterministic grid order regardless.
    """
    t0 = time.perf_counter()
    if seed is not None:
        config = ExperimentConfig(
            **{**config.__dict__,
               "sampler": SamplerConfig(**{**config.sampler.__dict__, "seed": seed})})
    out_dir = Path(out_dir or os.environ.get(OUTPUT_DIR_ENV, "."))
    out_dir.mkdir(parents=True, exist_ok=True)

    points = config.grid_points()
    spec0 = make_spec(config.system, **points[0])
    for point in points:
        _check_oracle_feasible(make_spec(config.system, **point), config.oracle_mode)

    tasks = [(config.system, point, config.betas, config.sampler,
              config.oracle_mode, repeat)
             for point in points for repeat in range(config.repeats)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]

    columns = _columns(spec0.dim_system, config.oracle_mode)
    csv_path = out_dir / f"{config.output_prefix}.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for rows in results:
            writer.writerows(rows)

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "seed": config.sampler.seed,
        "columns": columns,
        "dim_system": spec0.dim_system,
        "n_rows": sum(len(r) for r in results),
        "betas": list(config.betas),
        "repeats": config.repeats,
        "oracle_mode": config.oracle_mode,
        "config": config.raw,
        "git_describe": _git_describe(),
        "wall_time_s": time.perf_counter() - t0,
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    manifest_path = out_dir / f"{config.output_prefix}_manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, default=str) + "\n")
    return SweepResult(csv_path=csv_path, manifest_path=manifest_path, records=[])


# ---------------------------------------------------------------------------
# verification against the oracle
# ---------------------------------------------------------------------------

@dataclass
class VerifyReport:
    lines: list[str]
    max_rho_err: float
    max_h_err: float
    passed: bool


def verify(config: ExperimentConfig, out=sys.stdout) -> VerifyReport:
    """Run estimator and oracle on the reduced verification grid and compare
    eigenvalues against the configured tolerances."""
    if config.verify is None:
        raise ValueError("config has no [verify] section")
    if config.oracle_mode == "none":
        raise ValueError("verification needs an oracle; set oracle.mode")
    vs = config.verify
    sampler = config.sampler
    if vs.n_v is not None:
        sampler = SamplerConfig(**{**sampler.__dict__, "n_v": vs.n_v})

    lines = []
    max_rho_err = 0.0
    max_h_err = 0.0
    for point in config.grid_points():
        spec = make_spec(config.system, **point)
        _check_oracle_feasible(spec, config.oracle_mode)
        est = MeanForceEstimator(spec, sampler)
        for beta in vs.betas:
            rec = _estimator_record(est, beta, h=spec.h, alpha=spec.alpha,
                                    epsilon=spec.epsilon, repeat=0)
            orc = _oracle_record(spec, beta, config.oracle_mode)
            rho_err = float(np.max(np.abs(rec.rho_eigenvalues - orc["rho_eigs"])))
            finite = np.isfinite(rec.H_star_eigenvalues)
            h_err = float(np.max(np.abs(
                rec.H_star_eigenvalues[finite] - orc["h_eigs"][finite]))) \
                if finite.any() else float("inf")
            max_rho_err = max(max_rho_err, rho_err)
            max_h_err = max(max_h_err, h_err)
            ok = rho_err <= vs.rho_tolerance and h_err <= vs.h_tolerance
            lines.append(
                f"beta={beta:g} h={spec.h:g} eps={spec.epsilon:g}: "
                f"max|rho err|={rho_err:.4f} (tol {vs.rho_tolerance:g}), "
                f"max|H err|={h_err:.4f} (tol {vs.h_tolerance:g}) "
                f"{'PASS' if ok else 'FAIL'}")
    passed = max_rho_err <= vs.rho_tolerance and max_h_err <= vs.h_tolerance
    lines.append(f"overall: {'PASS' if passed else 'FAIL'}")
    for line in lines:
        print(line, file=out)
    return VerifyReport(lines=lines, max_rho_err=max_rho_err,
                        max_h_err=max_h_err, passed=passed)
