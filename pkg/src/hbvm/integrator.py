"""HBVM(k,s) one-step integration in stage-coefficient form.

One step advances the degree-s polynomial whose derivative has Legendre
coefficients fitted by the k-node Gauss rule.  For separable systems
(qdot = p) the nonlinear solve reduces to the s coefficient blocks of the
momentum derivative: with stage positions

    Q_i = q0 + c_i h p0 + h^2 sum_j (node_integrals @ X)_{ij} g_j,

the coefficients satisfy g_j = sum_i b_i P_j(c_i) accel(Q_i), and the step
closes with p1 = p0 + h g_0 and q1 = q0 + h p0 + h^2 (g_0/2 - xi_1 g_1).
Non-separable systems use the full-state analogue of the same fixed point.

Three solvers share these equations: plain fixed-point iteration, the
blended iteration (a cheap approximate inverse of the simplified-Newton
matrix I + (h/dx)^2 X^2 (x) T built from two preconditioner solves), and a
dense simplified-Newton oracle for validation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .legendre import HBVMTables, hbvm_tables
from .systems import SemiDiscreteSystem

__all__ = [
    "HBVMMethod",
    "SolverConfig",
    "StepDiagnostics",
    "TrajectoryRecord",
    "SolverError",
    "StepFailure",
    "step",
    "integrate",
    "rk_tableau",
    "solve_coefficients_fixed_point",
    "solve_coefficients_blended",
]

MODES = ("fixed-point", "blended", "simplified-newton-dense")
PRECONDITIONERS = ("tridiagonal-truncation", "exact-band")


class SolverError(RuntimeError):
    """Nonlinear stage solve failed to converge."""

    def __init__(self, message: str, diagnostics: "StepDiagnostics" = None):
        super().__init__(message)
        self.diagnostics = diagnostics


class StepFailure(RuntimeError):
    """A step of an integration failed; carries the step index, diagnostics,
    and the partial trajectory up to the failure (when integrating)."""

    def __init__(self, message: str, step_index: int, diagnostics: "StepDiagnostics" = None):
        super().__init__(message)
        self.step_index = step_index
        self.diagnostics = diagnostics
        self.partial: Optional["TrajectoryRecord"] = None


@dataclass(frozen=True)
class HBVMMethod:
    """HBVM(k,s): k quadrature nodes, polynomial degree s, order 2s."""

    k: int
    s: int

    def __post_init__(self):
        if self.k < self.s:
            raise ValueError(f"invalid method: k >= s required, got ({self.k}, {self.s})")

    @property
    def tables(self) -> HBVMTables:
        return hbvm_tables(self.k, self.s)

    @property
    def name(self) -> str:
        return f"HBVM({self.k},{self.s})"

    @property
    def order(self) -> int:
        return 2 * self.s


@dataclass(frozen=True)
class SolverConfig:
    """Nonlinear solver settings.

    mode "auto" resolves to blended for separable systems with a stiffness
    preconditioner and to fixed-point otherwise.  Convergence is declared on
    the max-norm of the coefficient update relative to 1 + |y0|_inf, either
    below tol or stagnating at the floating-point floor within
    stall_factor * tol.  Grid operators amplify rounding noise by 1/dx in
    the stage targets, so on fine meshes the iterates end in a small limit
    cycle around the root (about 1e-12 relative at dx ~ 1e-2); an update
    that stops shrinking inside the cap is accepted, one that stalls higher
    is a failure.  Measured energy drift is unaffected by floor acceptance.
    """

    mode: str = "auto"
    tol: float = 1e-14
    max_iter: int = 100
    preconditioner: str = "tridiagonal-truncation"
    stall_factor: float = 500.0

    def __post_init__(self):
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.mode not in MODES + ("auto",):
            raise ValueError(f"unknown solver mode {self.mode!r}")
        if self.preconditioner not in PRECONDITIONERS:
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")

    def resolve_mode(self, system: SemiDiscreteSystem) -> str:
        if self.mode != "auto":
            return self.mode
        sep = system.separable
        if sep is not None and sep.make_preconditioner is not None:
            return "blended"
        return "fixed-point"


@dataclass
class StepDiagnostics:
    iterations: int
    residual: float
    mode: str


@dataclass
class TrajectoryRecord:
    """Time series produced by integrate(): energies, drifts, diagnostics.

    ``states`` holds the states recorded at ``record_times`` (stride-decimated,
    always including the initial and final state).  ``hamiltonian`` is the
    conserved energy at every step; ``physical_hamiltonian`` additionally
    tracks the plain energy of augmented systems (None otherwise).
    """

    times: np.ndarray
    states: np.ndarray
    record_times: np.ndarray
    hamiltonian: np.ndarray
    physical_hamiltonian: Optional[np.ndarray]
    iterations: np.ndarray
    residuals: np.ndarray
    mode: str
    wall_time: float = 0.0

    @property
    def drift(self) -> np.ndarray:
        return self.hamiltonian - self.hamiltonian[0]

    @property
    def physical_drift(self) -> Optional[np.ndarray]:
        if self.physical_hamiltonian is None:
            return None
        return self.physical_hamiltonian - self.physical_hamiltonian[0]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


@lru_cache(maxsize=None)
def _blend_matrix(s: int) -> np.ndarray:
    """rho_s^2 X_s^{-2}, the left factor of the blended update."""
    tab = hbvm_tables(s, s)
    xs = tab.integration_matrix
    inv = np.linalg.inv(xs)
    out = tab.rho**2 * (inv @ inv)
    out.setflags(write=False)
    return out


def _accept(residual: float, previous: float, iteration: int, cfg: SolverConfig) -> bool:
    """Converged, or stagnating inside the roundoff floor near the root."""
    if residual <= cfg.tol:
        return True
    return (
        iteration >= 3
        and residual <= cfg.stall_factor * cfg.tol
        and residual >= 0.5 * previous
    )


def _dense_operator(apply_rows: Callable[[np.ndarray], np.ndarray], n: int) -> np.ndarray:
    return apply_rows(np.eye(n)).T


def _fd_jacobian(fn: Callable[[np.ndarray], np.ndarray], y: np.ndarray) -> np.ndarray:
    n = y.size
    jac = np.empty((n, n))
    eps = 1e-7 * (1.0 + np.abs(y))
    for j in range(n):
        dy = np.zeros(n)
        dy[j] = eps[j]
        jac[:, j] = (fn(y + dy) - fn(y - dy)) / (2.0 * eps[j])
    return jac


# ---------------------------------------------------------------------------
# separable path: coefficients of the momentum derivative polynomial
# ---------------------------------------------------------------------------

def _separable_coefficients(system, y0, h, method, cfg, mode):
    sep = system.separable
    nq = sep.nq
    tab = method.tables
    c, b = tab.nodes, tab.weights
    weighted_basis = (tab.node_values * b[:, None]).T            # (s, k)
    stage_weights = tab.node_integrals @ tab.integration_matrix  # (k, s)

    q0 = y0[:nq]
    p0 = y0[nq : 2 * nq]
    t0 = y0[2 * nq] if system.augmented else 0.0
    times = t0 + c * h
    base = q0[None, :] + h * np.outer(c, p0)
    scale = 1.0 + float(np.max(np.abs(y0)))

    solve_m = None
    blend = None
    newton = None
    if mode == "blended":
        if sep.make_preconditioner is None:
            raise SolverError("blended mode unsupported: system has no stiffness preconditioner")
        solve_m = sep.make_preconditioner(h * tab.rho, cfg.preconditioner)
        blend = _blend_matrix(tab.s)
    elif mode == "simplified-newton-dense":
        if sep.linear_operator is not None:
            lin = _dense_operator(sep.linear_operator, nq)
        else:
            lin = -_fd_jacobian(lambda q: sep.accel(q[None, :], np.atleast_1d(times[:1]))[0], q0)
        xs2 = tab.integration_matrix @ tab.integration_matrix
        newton = scipy.linalg.lu_factor(np.eye(tab.s * nq) + h * h * np.kron(xs2, lin))

    coeffs = np.zeros((tab.s, nq))
    residual = np.inf
    for iteration in range(1, cfg.max_iter + 1):
        stages = base + h * h * (stage_weights @ coeffs)
        target = weighted_basis @ sep.accel(stages, times)
        update = target - coeffs
        if mode == "fixed-point":
            coeffs = target
        elif mode == "blended":
            part = blend @ update
            delta = solve_m(part + solve_m(update - part))
            coeffs = coeffs + delta
            update = delta
        else:
            delta = scipy.linalg.lu_solve(newton, update.ravel()).reshape(tab.s, nq)
            coeffs = coeffs + delta
            update = delta
        previous = residual
        residual = float(np.max(np.abs(update))) / scale
        if _accept(residual, previous, iteration, cfg):
            return coeffs, StepDiagnostics(iterations=iteration, residual=residual, mode=mode)
    raise SolverError(
        f"{mode} stage solve did not converge in {cfg.max_iter} iterations "
        f"(residual {residual:.3e}); reduce h or switch solver mode",
        StepDiagnostics(iterations=cfg.max_iter, residual=residual, mode=mode),
    )


def _separable_step(system, y0, h, method, cfg, mode):
    coeffs, diag = _separable_coefficients(system, y0, h, method, cfg, mode)
    sep = system.separable
    nq = sep.nq
    tab = method.tables
    q0 = y0[:nq]
    p0 = y0[nq : 2 * nq]

    y1 = np.empty_like(y0)
    y1[nq : 2 * nq] = p0 + h * coeffs[0]
    correction = 0.5 * coeffs[0]
    if tab.s > 1:
        correction = correction - tab.xi1 * coeffs[1]
    y1[:nq] = q0 + h * p0 + h * h * correction

    if system.augmented:
        t0 = y0[2 * nq]
        times = t0 + tab.nodes * h
        stage_q = q0[None, :] + h * np.outer(tab.nodes, p0) + h * h * (
            (tab.node_integrals @ tab.integration_matrix) @ coeffs
        )
        stage_p = p0[None, :] + h * (tab.node_integrals @ coeffs)
        rates = sep.aug_rate(stage_q, stage_p, times)
        y1[2 * nq] = t0 + h
        y1[2 * nq + 1] = y0[2 * nq + 1] + h * float(tab.weights @ rates)
    return y1, diag


# ---------------------------------------------------------------------------
# generic path: coefficients of the full state derivative polynomial
# ---------------------------------------------------------------------------

def _generic_coefficients(system, y0, h, method, cfg, mode):
    dim = system.dim
    tab = method.tables
    weighted_basis = (tab.node_values * tab.weights[:, None]).T
    ints = tab.node_integrals
    scale = 1.0 + float(np.max(np.abs(y0)))

    newton = None
    if mode == "simplified-newton-dense":
        jac = _fd_jacobian(system.rhs, y0)
        newton = scipy.linalg.lu_factor(
            np.eye(tab.s * dim) - h * np.kron(tab.integration_matrix, jac)
        )

    coeffs = np.zeros((tab.s, dim))
    residual = np.inf
    for iteration in range(1, cfg.max_iter + 1):
        stages = y0[None, :] + h * (ints @ coeffs)
        rhs_rows = np.empty((tab.k, dim))
        for i in range(tab.k):
            rhs_rows[i] = system.rhs(stages[i])
        target = weighted_basis @ rhs_rows
        update = target - coeffs
        if mode == "fixed-point":
            coeffs = target
        else:
            delta = scipy.linalg.lu_solve(newton, update.ravel()).reshape(tab.s, dim)
            coeffs = coeffs + delta
            update = delta
        previous = residual
        residual = float(np.max(np.abs(update))) / scale
        if _accept(residual, previous, iteration, cfg):
            return coeffs, StepDiagnostics(iterations=iteration, residual=residual, mode=mode)
    raise SolverError(
        f"{mode} stage solve did not converge in {cfg.max_iter} iterations "
        f"(residual {residual:.3e}); reduce h or switch solver mode",
        StepDiagnostics(iterations=cfg.max_iter, residual=residual, mode=mode),
    )


def _generic_step(system, y0, h, method, cfg, mode):
    coeffs, diag = _generic_coefficients(system, y0, h, method, cfg, mode)
    return y0 + h * coeffs[0], diag


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------

def step(system: SemiDiscreteSystem, y0, h: float, method: HBVMMethod, cfg: SolverConfig = SolverConfig()):
    """One HBVM(k,s) step from y0 with stepsize h -> (y1, StepDiagnostics)."""
    y0 = np.asarray(y0, dtype=float)
    if y0.shape != (system.dim,):
        raise ValueError(f"expected state of length {system.dim}, got {y0.shape}")
    if h <= 0.0:
        raise ValueError("stepsize must be positive")
    mode = cfg.resolve_mode(system)
    if system.separable is not None:
        return _separable_step(system, y0, h, method, cfg, mode)
    if mode == "blended":
        raise SolverError("blended mode unsupported: system is not separable")
    return _generic_step(system, y0, h, method, cfg, mode)


def solve_coefficients_fixed_point(system, y0, h, method, cfg=SolverConfig()):
    """Stage derivative coefficients (s blocks) by plain fixed-point iteration."""
    y0 = np.asarray(y0, dtype=float)
    if system.separable is not None:
        return _separable_coefficients(system, y0, h, method, cfg, "fixed-point")[0]
    return _generic_coefficients(system, y0, h, method, cfg, "fixed-point")[0]


def solve_coefficients_blended(system, y0, h, method, cfg=SolverConfig()):
    """Stage derivative coefficients by the blended iteration (separable only)."""
    y0 = np.asarray(y0, dtype=float)
    if system.separable is None:
        raise SolverError("blended mode unsupported: system is not separable")
    return _separable_coefficients(system, y0, h, method, cfg, "blended")[0]


def rk_tableau(method: HBVMMethod):
    """Equivalent k-stage Runge-Kutta tableau (A, b, c)."""
    tab = method.tables
    a_matrix = tab.node_integrals @ (tab.node_values * tab.weights[:, None]).T
    return a_matrix, tab.weights.copy(), tab.nodes.copy()


def integrate(
    system: SemiDiscreteSystem,
    y0,
    h: float,
    n_steps: int,
    method: HBVMMethod,
    cfg: SolverConfig = SolverConfig(),
    record_stride: int = 1,
    observer: Optional[Callable[[int, float, np.ndarray], None]] = None,
) -> TrajectoryRecord:
    """n_steps HBVM steps with per-step energy bookkeeping.

    States are stored every ``record_stride`` steps (0 stores endpoints only);
    ``observer(step_index, t, y)`` is invoked at every step including step 0.
    Raises StepFailure (with the failing step index) on solver breakdown.
    """
    y0 = np.asarray(y0, dtype=float)
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    mode = cfg.resolve_mode(system)

    times = h * np.arange(n_steps + 1)
    hams = np.empty(n_steps + 1)
    phys = np.empty(n_steps + 1) if system.physical_hamiltonian is not None else None
    iters = np.zeros(n_steps, dtype=int)
    resid = np.zeros(n_steps)
    kept_states = [y0.copy()]
    kept_times = [0.0]

    y = y0.copy()
    hams[0] = system.hamiltonian(y)
    if phys is not None:
        phys[0] = system.physical_hamiltonian(y)
    if observer is not None:
        observer(0, 0.0, y)

    start = time.perf_counter()
    for n in range(1, n_steps + 1):
        try:
            y, diag = step(system, y, h, method, cfg)
        except SolverError as err:
            failure = StepFailure(f"step {n}: {err}", n, err.diagnostics)
            failure.partial = TrajectoryRecord(
                times=times[:n],
                states=np.array(kept_states),
                record_times=np.array(kept_times),
                hamiltonian=hams[:n],
                physical_hamiltonian=phys[:n] if phys is not None else None,
                iterations=iters[: n - 1],
                residuals=resid[: n - 1],
                mode=mode,
                wall_time=time.perf_counter() - start,
            )
            raise failure from err
        hams[n] = system.hamiltonian(y)
        if phys is not None:
            phys[n] = system.physical_hamiltonian(y)
        iters[n - 1] = diag.iterations
        resid[n - 1] = diag.residual
        if observer is not None:
            observer(n, times[n], y)
        if (record_stride and n % record_stride == 0) or n == n_steps:
            kept_states.append(y.copy())
            kept_times.append(times[n])
    wall = time.perf_counter() - start

    return TrajectoryRecord(
        times=times,
        states=np.array(kept_states),
        record_times=np.array(kept_times),
        hamiltonian=hams,
        physical_hamiltonian=phys,
        iterations=iters,
        residuals=resid,
        mode=mode,
        wall_time=wall,
    )
