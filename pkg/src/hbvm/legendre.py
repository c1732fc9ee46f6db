"""Shifted Legendre basis on [0,1], Gauss rules, and the HBVM coefficient tables.

The polynomial basis used throughout is the L2-orthonormal shifted Legendre
family P_j on [0,1] (deg P_j = j, int_0^1 P_i P_j = delta_ij).  A method
HBVM(k,s) is assembled from the k-node Gauss rule of this family together
with the k x s matrices of basis values and basis antiderivatives at the
nodes; their product gives the s x s tridiagonal integration matrix whose
smallest eigenvalue modulus drives the blended preconditioner.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "QuadratureRule",
    "HBVMTables",
    "shifted_legendre_eval",
    "shifted_legendre_antiderivative",
    "gauss_rule",
    "hbvm_tables",
    "MAX_NODES",
    "MAX_DEGREE",
]

# Method sizes supported (covers every configuration used by the experiments,
# max k = 9, with headroom).
MAX_NODES = 20
MAX_DEGREE = 6

_NEWTON_TOL = 1e-15
_NEWTON_MAX_ITER = 100


def _legendre_pair(n: int, t):
    """Values (L_n(t), L_{n-1}(t)) of standard Legendre polynomials on [-1,1]."""
    t = np.asarray(t, dtype=float)
    p_prev = np.ones_like(t)
    if n == 0:
        return p_prev, np.zeros_like(t)
    p = t.copy()
    for j in range(2, n + 1):
        p, p_prev = ((2 * j - 1) * t * p - (j - 1) * p_prev) / j, p
    return p, p_prev


def shifted_legendre_eval(j: int, x):
    """Orthonormal shifted Legendre polynomial P_j evaluated at x in [0,1]."""
    if j < 0:
        raise ValueError("degree must be nonnegative")
    t = 2.0 * np.asarray(x, dtype=float) - 1.0
    val, _ = _legendre_pair(j, t)
    return np.sqrt(2 * j + 1) * val


def shifted_legendre_antiderivative(j: int, x):
    """Antiderivative int_0^x P_j of the orthonormal shifted Legendre P_j.

    Uses the closed form in terms of neighbouring standard Legendre values,
    L_{j+1}(2x-1) - L_{j-1}(2x-1), which vanishes at x = 0 and (for j >= 1)
    at x = 1.
    """
    if j < 0:
        raise ValueError("degree must be nonnegative")
    x = np.asarray(x, dtype=float)
    if j == 0:
        return x + 0.0
    t = 2.0 * x - 1.0
    up, _ = _legendre_pair(j + 1, t)
    lo, _ = _legendre_pair(j - 1, t)
    return (up - lo) / (2.0 * np.sqrt(2 * j + 1))


def _legendre_value_and_derivative(k: int, t):
    """(L_k(t), L_k'(t)) on [-1,1]; derivative via the standard identity."""
    p, p_prev = _legendre_pair(k, t)
    dp = k * (t * p - p_prev) / (t * t - 1.0)
    return p, dp


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule on [0,1]: k nodes in (0,1), positive weights."""

    k: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def order(self) -> int:
        return 2 * self.k


@lru_cache(maxsize=None)
def _gauss_rule_cached(k: int) -> QuadratureRule:
    # Newton iteration on L_k over [-1,1] from the Chebyshev approximation of
    # its roots; well conditioned for the k range supported here.
    i = np.arange(1, k + 1)
    t = np.cos(np.pi * (4 * i - 1) / (4 * k + 2))
    if k == 1:
        t = np.zeros(1)
    else:
        for _ in range(_NEWTON_MAX_ITER):
            val, dval = _legendre_value_and_derivative(k, t)
            dt = val / dval
            t = t - dt
            if np.max(np.abs(dt)) < _NEWTON_TOL:
                break
        else:
            raise RuntimeError(f"Gauss node iteration failed to converge for k={k}")
    # Enforce the exact root symmetry t_i = -t_{k+1-i} before mapping to [0,1].
    t = 0.5 * (t - t[::-1])
    nodes = 0.5 * (1.0 + t[::-1])
    # Christoffel weights of the orthonormal family: b_i = 1 / sum_j P_j(c_i)^2.
    table = np.array([shifted_legendre_eval(j, nodes) for j in range(k)])
    weights = 1.0 / np.sum(table * table, axis=0)
    weights = 0.5 * (weights + weights[::-1])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(k=k, nodes=nodes, weights=weights)


def gauss_rule(k: int) -> QuadratureRule:
    """k-node Gauss rule on [0,1] (order 2k)."""
    if k < 1:
        raise ValueError("node count must be at least 1")
    if k > MAX_NODES:
        raise ValueError(f"node count {k} exceeds supported maximum {MAX_NODES}")
    return _gauss_rule_cached(k)


def _integration_matrix(s: int) -> np.ndarray:
    """The s x s matrix of Legendre integration coefficients.

    Entry (1,1) is 1/2; sub/super-diagonals hold +/- xi_i with
    xi_i = 1 / (2 sqrt(4 i^2 - 1)); all other entries vanish.
    """
    xs = np.zeros((s, s))
    xs[0, 0] = 0.5
    for i in range(1, s):
        xi = 0.5 / np.sqrt(4.0 * i * i - 1.0)
        xs[i - 1, i] = -xi
        xs[i, i - 1] = xi
    return xs


@dataclass(frozen=True)
class HBVMTables:
    """Per-(k,s) quadrature and coefficient matrices of an HBVM method.

    node_values[i,j]    = P_j(c_i)            (k x s)
    node_integrals[i,j] = int_0^{c_i} P_j     (k x s)
    integration_matrix  = node_values^T diag(b) node_integrals  (s x s, exact
                          tridiagonal form for k >= s)
    rho                 = min |lambda| over its spectrum
    """

    k: int
    s: int
    rule: QuadratureRule
    node_values: np.ndarray
    node_integrals: np.ndarray
    integration_matrix: np.ndarray
    rho: float

    @property
    def nodes(self) -> np.ndarray:
        return self.rule.nodes

    @property
    def weights(self) -> np.ndarray:
        return self.rule.weights

    @property
    def xi1(self) -> float:
        """Off-diagonal coefficient used by the end-of-step position update."""
        return 0.5 / np.sqrt(3.0) if self.s > 1 else 0.0


@lru_cache(maxsize=None)
def _hbvm_tables_cached(k: int, s: int) -> HBVMTables:
    rule = gauss_rule(k)
    vals = np.column_stack([shifted_legendre_eval(j, rule.nodes) for j in range(s)])
    ints = np.column_stack(
        [shifted_legendre_antiderivative(j, rule.nodes) for j in range(s)]
    )
    xs = _integration_matrix(s)
    rho = float(np.min(np.abs(np.linalg.eigvals(xs))))
    vals.setflags(write=False)
    ints.setflags(write=False)
    xs.setflags(write=False)
    return HBVMTables(
        k=k,
        s=s,
        rule=rule,
        node_values=vals,
        node_integrals=ints,
        integration_matrix=xs,
        rho=rho,
    )


def hbvm_tables(k: int, s: int) -> HBVMTables:
    """Coefficient tables of the HBVM(k,s) method; cached per (k,s)."""
    if s < 1:
        raise ValueError("polynomial degree count s must be at least 1")
    if k < s:
        raise ValueError(f"invalid method: requires k >= s, got k={k}, s={s}")
    if s > MAX_DEGREE:
        raise ValueError(f"s={s} exceeds supported maximum {MAX_DEGREE}")
    return _hbvm_tables_cached(k, s)
