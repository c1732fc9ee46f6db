"""Experiment harness behind the CLI: single runs, drift studies, the
time-space convergence table, and work-precision sweeps.

All runners return plain row lists and optionally write CSV artifacts
(comma-separated, '.' decimal, scientific notation with 16 significant
digits, header in the first line) plus a JSON summary.  Outputs are
deterministic for a fixed configuration except wall-time columns.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, asdict, replace
from typing import Optional

import numpy as np

from . import kernels, problems
from .comparators import composition_scheme, integrate_explicit
from .integrator import HBVMMethod, SolverConfig, StepFailure, TrajectoryRecord, integrate

__all__ = [
    "ConfigError",
    "RunConfig",
    "parse_method",
    "build_run",
    "run_solve",
    "run_drift",
    "run_convergence",
    "run_work_precision",
    "WPD_DEFAULT_GRID",
]

SCHEMES = ("fd2", "fd4", "fd6", "fourier")
BCS = ("periodic", "dirichlet", "neumann")

# Work-precision stepsize grids: (h_max, h_min, points) per method.
WPD_DEFAULT_GRID = {
    "hbvm(5,1)": (0.5, 0.003, 10),
    "hbvm(6,2)": (0.5, 0.1, 4),
    "hbvm(9,3)": (1.0, 0.25, 4),
    "sv2": (0.1, 0.0006, 13),
    "sv4": (0.1, 0.007, 7),
    "sv6": (0.1, 0.01, 5),
}


class ConfigError(ValueError):
    """Invalid run configuration (CLI exit code 2)."""


@dataclass(frozen=True)
class RunConfig:
    problem: str = "sine-gordon"
    gamma: float = 1.0
    kappa: float = 1.0
    bc: str = "periodic"
    scheme: str = "fd2"
    N: int = 400
    m: int = 200
    k: int = 5
    s: int = 1
    h: float = 0.1
    steps: int = 1000
    solver: str = "auto"
    tol: float = 1e-14
    max_iter: int = 100
    preconditioner: str = "tridiagonal-truncation"
    stride: int = 10
    out: Optional[str] = None

    def validate(self) -> "RunConfig":
        if self.problem not in ("sine-gordon", "quartic-wave", "nls"):
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.bc not in BCS:
            raise ConfigError(f"unknown boundary condition {self.bc!r}")
        if self.scheme != "fd2" and self.bc != "periodic":
            raise ConfigError(f"scheme {self.scheme!r} requires periodic boundary conditions")
        for name in ("gamma", "kappa", "h", "tol"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("N", "m", "k", "s", "max_iter"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.steps < 0 or self.stride < 0:
            raise ConfigError("steps and stride must be nonnegative")
        if self.k < self.s:
            raise ConfigError(f"invalid method: k >= s required, got ({self.k}, {self.s})")
        if self.solver not in ("auto", "fixed-point", "blended", "simplified-newton-dense"):
            raise ConfigError(f"unknown solver {self.solver!r}")
        return self

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            mode=self.solver, tol=self.tol, max_iter=self.max_iter, preconditioner=self.preconditioner
        )

    def method(self) -> HBVMMethod:
        return HBVMMethod(self.k, self.s)


def parse_method(text: str):
    """Method spec: 'hbvm(k,s)' or 'sv2'/'sv4'/'sv6'."""
    t = text.strip().lower()
    if t.startswith("hbvm(") and t.endswith(")"):
        try:
            k, s = (int(v) for v in t[5:-1].split(","))
        except ValueError as err:
            raise ConfigError(f"cannot parse method {text!r}") from err
        return ("hbvm", HBVMMethod(k, s))
    if t in ("sv2", "sv4", "sv6"):
        return ("sv", composition_scheme(int(t[2:])))
    raise ConfigError(f"unknown method {text!r}; use hbvm(k,s) or sv2/sv4/sv6")


def build_run(config: RunConfig):
    """(system, y0, sample) for a config; sample(t) is the analytic solution
    on the comparison grid when available (None otherwise)."""
    config.validate()
    if config.problem == "sine-gordon":
        system, y0 = problems.sine_gordon_system(
            gamma=config.gamma, bc=config.bc, scheme=config.scheme, N=config.N, m=config.m
        )
        if config.bc == "periodic":
            if config.scheme == "fourier":
                grid = system.descriptor["spectral"].basis.points(config.m)
            else:
                grid = system.descriptor["x"]
            sample = lambda t: problems.sine_gordon_exact(config.gamma, grid, t)
        else:
            sample = None
        return system, y0, sample
    if config.problem == "quartic-wave":
        if config.bc != "periodic":
            raise ConfigError("quartic-wave supports periodic boundary conditions only")
        system, y0 = problems.quartic_wave_system(N=config.N, scheme=config.scheme, m=config.m)
        return system, y0, None
    if config.bc != "periodic" or config.scheme != "fd2":
        raise ConfigError("nls supports the periodic fd2 discretization only")
    system, y0 = problems.nls_system(N=config.N, kappa=config.kappa)
    return system, y0, None


def _solution_values(system, state):
    """Grid samples of u from a state vector (reconstructed for spectral runs)."""
    if system.descriptor.get("scheme") == "fourier":
        spec = system.descriptor["spectral"]
        return spec.quad_matrix @ state[: spec.basis.dim], spec.basis.points(spec.m)
    n = system.skew.n
    return state[:n], system.descriptor["x"]


def _fmt(value) -> str:
    return f"{value:.15e}"


def write_csv(path: str, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if v is None else (v if isinstance(v, str) else _fmt(v)) for v in row])


def drift_rows(system, record: TrajectoryRecord):
    """Per-step report rows (step, time, H, H_tilde, drifts, iterations, residual)."""
    augmented = record.physical_hamiltonian is not None
    rows = []
    for n, t in enumerate(record.times):
        ham = record.physical_hamiltonian[n] if augmented else record.hamiltonian[n]
        ham_drift = (
            record.physical_hamiltonian[n] - record.physical_hamiltonian[0]
            if augmented
            else record.drift[n]
        )
        aug = record.hamiltonian[n] if augmented else None
        aug_drift = record.drift[n] if augmented else None
        iters = int(record.iterations[n - 1]) if n > 0 else 0
        res = record.residuals[n - 1] if n > 0 else 0.0
        rows.append((str(n), t, ham, aug, ham_drift, aug_drift, str(iters), res))
    return rows


DRIFT_HEADER = ["step", "time", "H", "H_tilde", "H_drift", "H_tilde_drift", "iterations", "residual"]


def run_solve(config: RunConfig):
    """Single integration; writes <out>_drift.csv, <out>_solution.csv, <out>_summary.json.

    On a failed step the partial drift report is flushed before re-raising.
    """
    system, y0, _ = build_run(config)
    try:
        record = integrate(
            system,
            y0,
            config.h,
            config.steps,
            config.method(),
            config.solver_config(),
            record_stride=config.stride,
        )
    except StepFailure as failure:
        if config.out and failure.partial is not None:
            write_csv(config.out + "_drift.csv", DRIFT_HEADER, drift_rows(system, failure.partial))
        raise
    if config.out:
        write_csv(config.out + "_drift.csv", DRIFT_HEADER, drift_rows(system, record))
        values = [_solution_values(system, state) for state in record.states]
        grid = values[0][1]
        header = ["x"] + [f"t={t:.9e}" for t in record.record_times]
        rows = []
        for i in range(grid.size):
            rows.append([grid[i]] + [v[0][i] for v in values])
        write_csv(config.out + "_solution.csv", header, rows)
        summary = {
            "config": asdict(config),
            "kernel_backend": kernels.BACKEND,
            "method": config.method().name,
            "solver_mode": record.mode,
            "initial_energy": record.hamiltonian[0],
            "max_drift": float(np.max(np.abs(record.drift))),
            "total_iterations": int(record.iterations.sum()),
            "wall_time_s": record.wall_time,
        }
        with open(config.out + "_summary.json", "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
    return record


DRIFT_STUDY_HEADER = ["method", "time", "H_drift", "H_tilde_drift"]


def run_drift(config: RunConfig, methods):
    """Drift series of several methods on one system; long-format rows."""
    system, y0, _ = build_run(config)
    rows = []
    for text in methods:
        kind, method = parse_method(text)
        if kind == "hbvm":
            record = integrate(
                system, y0, config.h, config.steps, method, config.solver_config(), record_stride=0
            )
        else:
            if system.augmented:
                raise ConfigError("explicit baselines do not support boundary-forced (augmented) systems")
            record = integrate_explicit(system, y0, config.h, config.steps, method, record_stride=0)
        augmented = record.physical_hamiltonian is not None
        for n, t in enumerate(record.times):
            ham_drift = (
                record.physical_hamiltonian[n] - record.physical_hamiltonian[0] if augmented else record.drift[n]
            )
            aug_drift = record.drift[n] if augmented else None
            rows.append((text.strip().lower(), t, ham_drift, aug_drift))
    if config.out:
        write_csv(config.out, DRIFT_STUDY_HEADER, rows)
    return rows


CONVERGENCE_HEADER = ["level", "max_error", "rate"]


def run_convergence(config: RunConfig, levels, final_time: float = 40.0):
    """Max-error table over step counts; h = final_time/level, level steps.

    Finite-difference runs use level mesh points (so dx = h); spectral runs
    keep (N, m) fixed.  The error is the maximum over every recorded step and
    grid node of |u_num - u_exact|.
    """
    config.validate()
    if config.problem != "sine-gordon" or config.bc != "periodic":
        raise ConfigError("convergence study requires the periodic sine-gordon problem (analytic reference)")
    levels = [int(v) for v in levels]
    if any(v < 1 for v in levels):
        raise ConfigError("levels must be positive integers")
    errors = []
    for level in levels:
        cell = replace(config, N=level, out=None) if config.scheme != "fourier" else replace(config, out=None)
        system, y0, sample = build_run(cell)
        worst = 0.0

        nq = system.skew.n
        if cell.scheme == "fourier":
            spec = system.descriptor["spectral"]
            quad, dim = spec.quad_matrix, spec.basis.dim

            def values(y):
                return quad @ y[:dim]

        else:

            def values(y):
                return y[:nq]

        def observer(n, t, y):
            nonlocal worst
            err = float(np.max(np.abs(values(y) - sample(t))))
            if err > worst:
                worst = err

        h = final_time / level
        integrate(system, y0, h, level, cell.method(), cell.solver_config(), record_stride=0, observer=observer)
        errors.append(worst)
    rows = []
    for i, (level, err) in enumerate(zip(levels, errors)):
        rate = math.log2(errors[i - 1] / err) / math.log2(levels[i] / levels[i - 1]) if i else None
        rows.append((str(level), err, rate))
    if config.out:
        write_csv(config.out, CONVERGENCE_HEADER, rows)
    return rows


WPD_HEADER = ["method", "h", "max_error", "H_drift", "wall_time", "iterations", "status"]


def run_work_precision(config: RunConfig, methods=None, final_time: float = 100.0, grid=None):
    """Accuracy/cost sweep rows (method, h, max error, drift, wall time, iterations).

    Stepsizes are log-spaced per method; when h does not divide final_time the
    step count is rounded and h adjusted to the nearest mesh point.  Wall
    times are recorded, never asserted.  Unstable explicit runs are flagged.
    ``grid`` maps method names to (h_max, h_min, points) and replaces the
    default sweep wholesale.
    """
    config.validate()
    if config.problem != "sine-gordon" or config.bc != "periodic":
        raise ConfigError("work-precision study requires the periodic sine-gordon problem (analytic reference)")
    grid = dict(WPD_DEFAULT_GRID) if grid is None else dict(grid)
    if methods is not None:
        wanted = [m.strip().lower() for m in methods]
        unknown = [m for m in wanted if m not in grid]
        if unknown:
            raise ConfigError(f"no stepsize grid for methods {unknown}; known: {sorted(grid)}")
        grid = {m: grid[m] for m in wanted}
    system, y0, sample = build_run(replace(config, out=None))
    rows = []
    for name, (h_max, h_min, points) in grid.items():
        kind, method = parse_method(name)
        for h_target in np.geomspace(h_max, h_min, points):
            n_steps = max(1, round(final_time / h_target))
            h = final_time / n_steps
            worst = 0.0

            nq = system.skew.n
            if config.scheme == "fourier":
                spec = system.descriptor["spectral"]
                quad, dim = spec.quad_matrix, spec.basis.dim

                def values(y):
                    return quad @ y[:dim]

            else:

                def values(y):
                    return y[:nq]

            def observer(n, t, y):
                nonlocal worst
                err = float(np.max(np.abs(values(y) - sample(t))))
                if err > worst:
                    worst = err

            try:
                if kind == "hbvm":
                    record = integrate(
                        system, y0, h, n_steps, method, config.solver_config(), record_stride=0, observer=observer
                    )
                else:
                    record = integrate_explicit(system, y0, h, n_steps, method, record_stride=0, observer=observer)
            except StepFailure:
                rows.append((name, h, None, None, None, None, "diverged"))
                continue
            rows.append(
                (
                    name,
                    h,
                    worst,
                    float(np.max(np.abs(record.drift))),
                    record.wall_time,
                    str(int(record.iterations.sum())),
                    "ok",
                )
            )
    if config.out:
        write_csv(config.out, WPD_HEADER, rows)
    return rows
