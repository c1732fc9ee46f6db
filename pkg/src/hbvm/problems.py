"""Concrete problem instances.

Sine-Gordon soliton family on [-20, 20] with its closed-form solution
u(x,t) = 4 atan[phi(t) sech(x/gamma)] (breather for gamma > 1, double pole at
gamma = 1, kink-antikink below), a quartic-nonlinearity wave test whose
discrete energy is a degree-4 polynomial, the periodic nonlinear Schrodinger
equation in real form, and small oscillator systems used as integrator
oracles.
"""

from __future__ import annotations

import math

import numpy as np

from .systems import SemiDiscreteSystem, SeparableForm, SkewStructure
from .wave_fd import (
    BoundaryData,
    build_dirichlet,
    build_neumann,
    build_periodic,
    _periodic_operator,
)
from .wave_fourier import build_fourier

__all__ = [
    "sine_gordon_f",
    "sine_gordon_fprime",
    "sine_gordon_regime",
    "sine_gordon_exact",
    "sine_gordon_initial",
    "sine_gordon_boundary_data",
    "sine_gordon_system",
    "quartic_wave_system",
    "build_nls_periodic",
    "nls_system",
    "harmonic_oscillator",
    "quartic_oscillator",
    "pendulum",
    "make_problem",
]

DEFAULT_DOMAIN = (-20.0, 20.0)


def sine_gordon_f(u):
    """Potential 1 - cos(u); the offset pins H(0) of the gamma=1 soliton at ~16."""
    return 1.0 - np.cos(u)


def sine_gordon_fprime(u):
    return np.sin(u)


def sine_gordon_regime(gamma: float) -> str:
    if gamma > 1.0:
        return "breather"
    if gamma < 1.0:
        return "kink-antikink"
    return "double-pole"


def _phi_and_rate(gamma: float, t):
    """Time factor phi(t; gamma) of the soliton and its derivative.

    All three regimes are evaluated through sin(a)/a or sinh(a)/a forms, so
    values stay continuous through gamma = 1.
    """
    t = np.asarray(t, dtype=float)
    if gamma == 1.0:
        return t + 0.0, np.ones_like(t)
    if gamma > 1.0:
        eps = np.sqrt(gamma * gamma - 1.0)
        arg = eps * t / gamma
        phi = (t / gamma) * np.sinc(arg / np.pi)
        rate = np.cos(arg) / gamma
        return phi, rate
    eps = np.sqrt(1.0 - gamma * gamma)
    arg = eps * t / gamma
    small = np.abs(arg) < 1e-8
    ratio = np.where(small, 1.0 + arg * arg / 6.0, np.sinh(np.where(small, 1.0, arg)) / np.where(small, 1.0, arg))
    phi = (t / gamma) * ratio
    rate = np.cosh(arg) / gamma
    return phi, rate


def sine_gordon_exact(gamma: float, x, t):
    """Closed-form soliton u(x, t) = 4 atan[phi(t) sech(x/gamma)]."""
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    x = np.asarray(x, dtype=float)
    phi, _ = _phi_and_rate(gamma, t)
    return 4.0 * np.arctan(phi * _sech(x / gamma))


def _sech(z):
    return 1.0 / np.cosh(z)


def sine_gordon_initial(gamma: float):
    """Initial data psi0 = 0, psi1 = (4/gamma) sech(x/gamma)."""
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")

    def psi0(x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def psi1(x):
        return (4.0 / gamma) * _sech(np.asarray(x, dtype=float) / gamma)

    return psi0, psi1


def _exact_trace(gamma: float, x0: float):
    """u, u_t, u_x, u_xt of the exact soliton at a fixed location x0."""
    s = _sech(x0 / gamma)
    th = np.tanh(x0 / gamma)

    def value(t):
        phi, _ = _phi_and_rate(gamma, t)
        return 4.0 * np.arctan(phi * s)

    def value_t(t):
        phi, rate = _phi_and_rate(gamma, t)
        return 4.0 * rate * s / (1.0 + (phi * s) ** 2)

    def slope(t):
        phi, _ = _phi_and_rate(gamma, t)
        return -(4.0 / gamma) * phi * s * th / (1.0 + (phi * s) ** 2)

    def slope_t(t):
        phi, rate = _phi_and_rate(gamma, t)
        den = 1.0 + (phi * s) ** 2
        return -(4.0 / gamma) * s * th * rate * (1.0 - (phi * s) ** 2) / den**2

    return value, value_t, slope, slope_t


def sine_gordon_boundary_data(gamma: float, kind: str, domain=DEFAULT_DOMAIN) -> BoundaryData:
    """Boundary data matching the exact soliton: traces for Dirichlet, slopes for Neumann."""
    a, b = float(domain[0]), float(domain[1])
    la_val, la_dt, la_slope, la_slope_t = _exact_trace(gamma, a)
    rb_val, rb_dt, rb_slope, rb_slope_t = _exact_trace(gamma, b)
    if kind == "dirichlet":
        return BoundaryData(kind="dirichlet", left=la_val, left_deriv=la_dt, right=rb_val, right_deriv=rb_dt)
    if kind == "neumann":
        return BoundaryData(kind="neumann", left=la_slope, left_deriv=la_slope_t, right=rb_slope, right_deriv=rb_slope_t)
    raise ValueError(f"unknown boundary kind {kind!r}")


def sine_gordon_system(
    gamma: float = 1.0,
    bc: str = "periodic",
    scheme: str = "fd2",
    N: int = 400,
    m: int = 200,
    domain=DEFAULT_DOMAIN,
):
    """(system, y0) for the sine-Gordon problem under the requested discretization."""
    psi0, psi1 = sine_gordon_initial(gamma)
    if scheme == "fourier":
        if bc != "periodic":
            raise ValueError("the Fourier scheme requires periodic boundary conditions")
        system = build_fourier(N, m, domain, sine_gordon_f, sine_gordon_fprime, psi0, psi1, name="sine-gordon")
        return system, system.descriptor["y0"].copy()
    order = {"fd2": 2, "fd4": 4, "fd6": 6}.get(scheme)
    if order is None:
        raise ValueError(f"unknown scheme {scheme!r}")
    if bc == "periodic":
        system = build_periodic(N, order, domain, sine_gordon_f, sine_gordon_fprime, name="sine-gordon")
    else:
        if order != 2:
            raise ValueError("higher-order stencils are supported for periodic boundaries only")
        boundary = sine_gordon_boundary_data(gamma, bc, domain)
        builder = build_dirichlet if bc == "dirichlet" else build_neumann
        system = builder(N, domain, sine_gordon_f, sine_gordon_fprime, boundary, name="sine-gordon")
    x = system.descriptor["x"]
    y0 = np.concatenate([psi0(x), psi1(x)] + ([np.zeros(2)] if system.augmented else []))
    return system, y0


def quartic_wave_f(u):
    return 0.25 * u**4


def quartic_wave_fprime(u):
    return u**3


def quartic_wave_system(N: int = 32, scheme: str = "fd2", m: int = 80, domain=(0.0, 2.0 * np.pi)):
    """Periodic wave test with degree-4 polynomial energy (u0 = sin x / 2, v0 = cos x / 2)."""

    def psi0(x):
        return 0.5 * np.sin(2.0 * np.pi * (np.asarray(x) - domain[0]) / (domain[1] - domain[0]))

    def psi1(x):
        return 0.5 * np.cos(2.0 * np.pi * (np.asarray(x) - domain[0]) / (domain[1] - domain[0]))

    if scheme == "fourier":
        system = build_fourier(N, m, domain, quartic_wave_f, quartic_wave_fprime, psi0, psi1, name="quartic-wave")
        return system, system.descriptor["y0"].copy()
    order = {"fd2": 2, "fd4": 4, "fd6": 6}[scheme]
    system = build_periodic(N, order, domain, quartic_wave_f, quartic_wave_fprime, name="quartic-wave")
    x = system.descriptor["x"]
    return system, np.concatenate([psi0(x), psi1(x)])


def build_nls_periodic(N: int, domain, kappa: float) -> SemiDiscreteSystem:
    """Periodic finite-difference nonlinear Schrodinger system, state (u; v).

    udot = T v / dx^2 - 2 kappa (u^2+v^2) v, vdot = -T u / dx^2 + 2 kappa
    (u^2+v^2) u, conserving H = [u.Tu + v.Tv]/(2 dx) - (kappa dx / 2)
    sum (u^2+v^2)^2.  Not separable; solved by the generic fixed point.
    """
    if N < 3:
        raise ValueError("N must be at least 3")
    a, b = float(domain[0]), float(domain[1])
    dx = (b - a) / N
    x = a + dx * np.arange(N)
    op = _periodic_operator(N, 2, dx)

    def hamiltonian(y):
        u, v = y[:N], y[N:]
        dens = u * u + v * v
        terms = (u * op.apply(u) + v * op.apply(v)) / (2.0 * dx) - 0.5 * kappa * dx * dens * dens
        return math.fsum(terms)

    def gradient(y):
        u, v = y[:N], y[N:]
        dens = u * u + v * v
        g = np.empty(2 * N)
        g[:N] = op.apply(u) / dx - 2.0 * kappa * dx * dens * u
        g[N:] = op.apply(v) / dx - 2.0 * kappa * dx * dens * v
        return g

    return SemiDiscreteSystem(
        dim=2 * N,
        skew=SkewStructure(n=N, scale=1.0 / dx),
        hamiltonian=hamiltonian,
        gradient=gradient,
        descriptor={"name": "nls", "bc": "periodic", "domain": (a, b), "x": x, "dx": dx, "kappa": kappa},
    )


def nls_system(N: int = 64, kappa: float = 1.0, domain=(0.0, 2.0 * np.pi), amplitude: float = 1.0, mode: int = 1):
    """(system, y0) for the periodic NLS with plane-wave initial data."""
    system = build_nls_periodic(N, domain, kappa)
    x = system.descriptor["x"]
    L = domain[1] - domain[0]
    k = 2.0 * np.pi * mode / L
    u0 = amplitude * np.cos(k * (x - domain[0]))
    v0 = amplitude * np.sin(k * (x - domain[0]))
    return system, np.concatenate([u0, v0])


def _oscillator(hamiltonian, gradient, accel, linear=None):
    def accel_rows(stages, times):
        return accel(stages)

    hooks = {}
    if linear is not None:

        def linear_rows(stages):
            return linear * stages

        def make_preconditioner(h_rho, mode):
            w = 1.0 + h_rho * h_rho * linear
            return lambda rows: rows / w

        hooks = {"linear_operator": linear_rows, "make_preconditioner": make_preconditioner}
    return SemiDiscreteSystem(
        dim=2,
        skew=SkewStructure(n=1, scale=1.0),
        hamiltonian=hamiltonian,
        gradient=gradient,
        descriptor={"name": "oscillator"},
        separable=SeparableForm(nq=1, accel=accel_rows, **hooks),
    )


def harmonic_oscillator(omega: float = 1.0) -> SemiDiscreteSystem:
    """H = p^2/2 + omega^2 q^2 / 2."""
    w2 = omega * omega
    return _oscillator(
        hamiltonian=lambda y: 0.5 * (y[1] ** 2 + w2 * y[0] ** 2),
        gradient=lambda y: np.array([w2 * y[0], y[1]]),
        accel=lambda stages: -w2 * stages,
        linear=w2,
    )


def quartic_oscillator() -> SemiDiscreteSystem:
    """H = p^2/2 + q^4/4; degree-4 polynomial energy."""
    return _oscillator(
        hamiltonian=lambda y: 0.5 * y[1] ** 2 + 0.25 * y[0] ** 4,
        gradient=lambda y: np.array([y[0] ** 3, y[1]]),
        accel=lambda stages: -(stages**3),
    )


def pendulum() -> SemiDiscreteSystem:
    """H = p^2/2 + 1 - cos q; smooth non-polynomial test problem."""
    return _oscillator(
        hamiltonian=lambda y: 0.5 * y[1] ** 2 + 1.0 - np.cos(y[0]),
        gradient=lambda y: np.array([np.sin(y[0]), y[1]]),
        accel=lambda stages: -np.sin(stages),
    )


def make_problem(name: str, **kw):
    """Problem constructors addressable by name from the CLI."""
    if name == "sine-gordon":
        allowed = {k: kw[k] for k in ("gamma", "bc", "scheme", "N", "m", "domain") if k in kw}
        return sine_gordon_system(**allowed)
    if name == "quartic-wave":
        allowed = {k: kw[k] for k in ("N", "scheme", "m", "domain") if k in kw}
        return quartic_wave_system(**allowed)
    if name == "nls":
        allowed = {k: kw[k] for k in ("N", "kappa", "domain") if k in kw}
        return nls_system(**allowed)
    raise ValueError(f"unknown problem {name!r}; choose sine-gordon, quartic-wave, or nls")
