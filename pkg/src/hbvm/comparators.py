"""Explicit symplectic baselines: Stormer-Verlet and its compositions.

The order-4 scheme is the triple jump, the order-6 scheme the standard
nine-stage symmetric composition; both are palindromic with coefficients
summing to one, so each composed step is a sequence of plain Stormer-Verlet
substeps with scaled stepsizes.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .integrator import StepFailure, TrajectoryRecord
from .systems import SemiDiscreteSystem

__all__ = [
    "CompositionScheme",
    "composition_scheme",
    "stormer_verlet_step",
    "composition_step",
    "integrate_explicit",
]

_CUBE2 = 2.0 ** (1.0 / 3.0)

# Nine-stage symmetric order-6 composition (coefficients sum to 1 exactly).
_ORDER6 = np.array(
    [
        0.39216144400731413928,
        0.33259913678935943860,
        -0.70624617255763935981,
        0.08221359629355080023,
        0.79854399093482996340,
        0.08221359629355080023,
        -0.70624617255763935981,
        0.33259913678935943860,
        0.39216144400731413928,
    ]
)


@dataclass(frozen=True)
class CompositionScheme:
    order: int
    coefficients: np.ndarray


def composition_scheme(order: int) -> CompositionScheme:
    """Substep coefficients of the symmetric composition of a given order."""
    if order == 2:
        coeffs = np.array([1.0])
    elif order == 4:
        g1 = 1.0 / (2.0 - _CUBE2)
        coeffs = np.array([g1, -_CUBE2 * g1, g1])
    elif order == 6:
        coeffs = _ORDER6.copy()
    else:
        raise ValueError(f"unsupported composition order {order}; choose 2, 4, or 6")
    coeffs.setflags(write=False)
    return CompositionScheme(order=order, coefficients=coeffs)


def _require_separable(system: SemiDiscreteSystem):
    if system.separable is None or system.augmented:
        raise ValueError("explicit baselines require a separable, non-augmented system")
    return system.separable


def stormer_verlet_step(system: SemiDiscreteSystem, y0, h: float, t: float = 0.0):
    """One kick-drift-kick leapfrog step (second order, symmetric, explicit)."""
    sep = _require_separable(system)
    nq = sep.nq
    y0 = np.asarray(y0, dtype=float)
    q, p = y0[:nq], y0[nq:]
    a0 = sep.accel(q[None, :], np.array([t]))[0]
    p_half = p + 0.5 * h * a0
    q1 = q + h * p_half
    a1 = sep.accel(q1[None, :], np.array([t + h]))[0]
    p1 = p_half + 0.5 * h * a1
    return np.concatenate([q1, p1])


def composition_step(system: SemiDiscreteSystem, y0, h: float, scheme: CompositionScheme, t: float = 0.0):
    """One composed step: Stormer-Verlet substeps with scaled stepsizes."""
    y = np.asarray(y0, dtype=float)
    ti = t
    for g in scheme.coefficients:
        y = stormer_verlet_step(system, y, g * h, ti)
        ti += g * h
    return y


def integrate_explicit(
    system: SemiDiscreteSystem,
    y0,
    h: float,
    n_steps: int,
    scheme: CompositionScheme,
    record_stride: int = 1,
    observer=None,
    divergence_norm: float = 1e8,
) -> TrajectoryRecord:
    """Composition-method trajectory with the same bookkeeping as integrate().

    Within one composed step the force at a substep boundary is reused as the
    opening kick of the next substep, so each substep costs one force
    evaluation.  Blow-up beyond ``divergence_norm`` raises StepFailure.
    """
    sep = _require_separable(system)
    nq = sep.nq
    y0 = np.asarray(y0, dtype=float)

    times = h * np.arange(n_steps + 1)
    hams = np.empty(n_steps + 1)
    kept_states = [y0.copy()]
    kept_times = [0.0]

    q = y0[:nq].copy()
    p = y0[nq:].copy()
    hams[0] = system.hamiltonian(y0)
    if observer is not None:
        observer(0, 0.0, y0)

    substeps = scheme.coefficients * h
    force = sep.accel(q[None, :], np.zeros(1))[0]
    t = 0.0
    start = time.perf_counter()
    for n in range(1, n_steps + 1):
        for dt in substeps:
            p += 0.5 * dt * force
            q += dt * p
            t += dt
            force = sep.accel(q[None, :], np.array([t]))[0]
            p += 0.5 * dt * force
        y = np.concatenate([q, p])
        if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > divergence_norm:
            raise StepFailure(f"step {n}: explicit method diverged", n)
        hams[n] = system.hamiltonian(y)
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
        physical_hamiltonian=None,
        iterations=np.full(n_steps, scheme.coefficients.size, dtype=int),
        residuals=np.zeros(n_steps),
        mode=f"sv{scheme.order}",
        wall_time=wall,
    )
