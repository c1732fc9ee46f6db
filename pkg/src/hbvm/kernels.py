"""Hot numeric kernels: stencil products in difference form and tridiagonal solves.

Two interchangeable implementations are provided: numba-compiled loops and a
pure numpy/scipy path.  The numpy path is selected by setting the environment
variable ``HBVM_PURE_NUMPY`` (any non-empty value) before import, or when
numba is unavailable.  ``benchmarks/kernel_bench.py`` compares the two.

Stencil applications accumulate second differences per offset,
(q[i+r] - q[i]) - (q[i] - q[i-r]), instead of expanding the band products;
differences of neighbouring values are nearly exact in floating point, which
keeps the noise floor of T q / dx^2 evaluations an order of magnitude below
the naive form and lets the stage iterations converge to tight tolerances.

All kernels operate on float64 arrays.  Batched variants take stage matrices
of shape (k, n) and apply the operator row-wise.
"""

from __future__ import annotations

import os

import numpy as np
import scipy.linalg

__all__ = [
    "BACKEND",
    "circulant_apply",
    "circulant_apply_batch",
    "tridiag_diff_apply",
    "tridiag_diff_apply_batch",
    "tridiag_solve_batch",
    "numpy_impl",
]

_USE_NUMBA = not os.environ.get("HBVM_PURE_NUMPY")
if _USE_NUMBA:
    try:
        from numba import njit
    except ImportError:
        _USE_NUMBA = False

BACKEND = "numba" if _USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# pure numpy implementations
# ---------------------------------------------------------------------------

def _np_circulant_apply(weights: np.ndarray, q: np.ndarray) -> np.ndarray:
    out = np.zeros_like(q)
    for r in range(1, weights.size + 1):
        fwd = np.roll(q, -r) - q
        bwd = q - np.roll(q, r)
        out -= weights[r - 1] * (fwd - bwd)
    return out


def _np_circulant_apply_batch(weights: np.ndarray, stages: np.ndarray) -> np.ndarray:
    out = np.zeros_like(stages)
    for r in range(1, weights.size + 1):
        fwd = np.roll(stages, -r, axis=1) - stages
        bwd = stages - np.roll(stages, r, axis=1)
        out -= weights[r - 1] * (fwd - bwd)
    return out


def _np_tridiag_diff_apply(q: np.ndarray, corner: float) -> np.ndarray:
    d = q[1:] - q[:-1]
    out = np.empty_like(q)
    out[0] = -d[0] + corner * q[0]
    out[1:-1] = d[:-1] - d[1:]
    out[-1] = d[-1] + corner * q[-1]
    return out


def _np_tridiag_diff_apply_batch(stages: np.ndarray, corner: float) -> np.ndarray:
    d = stages[:, 1:] - stages[:, :-1]
    out = np.empty_like(stages)
    out[:, 0] = -d[:, 0] + corner * stages[:, 0]
    out[:, 1:-1] = d[:, :-1] - d[:, 1:]
    out[:, -1] = d[:, -1] + corner * stages[:, -1]
    return out


def _np_tridiag_solve_batch(diag: np.ndarray, off: float, rhs: np.ndarray) -> np.ndarray:
    n = diag.size
    ab = np.zeros((3, n))
    ab[0, 1:] = off
    ab[1] = diag
    ab[2, :-1] = off
    return scipy.linalg.solve_banded((1, 1), ab, rhs.T).T


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if _USE_NUMBA:

    @njit(cache=True)
    def _nb_circulant_apply(weights, q):
        n = q.size
        nr = weights.size
        out = np.zeros(n)
        for d in range(1, nr + 1):
            w = weights[d - 1]
            for i in range(n):
                lo = i - d
                if lo < 0:
                    lo += n
                hi = i + d
                if hi >= n:
                    hi -= n
                out[i] -= w * ((q[hi] - q[i]) - (q[i] - q[lo]))
        return out

    @njit(cache=True)
    def _nb_circulant_apply_batch(weights, stages):
        k, n = stages.shape
        nr = weights.size
        out = np.zeros((k, n))
        for row in range(k):
            for d in range(1, nr + 1):
                w = weights[d - 1]
                for i in range(n):
                    lo = i - d
                    if lo < 0:
                        lo += n
                    hi = i + d
                    if hi >= n:
                        hi -= n
                    out[row, i] -= w * (
                        (stages[row, hi] - stages[row, i]) - (stages[row, i] - stages[row, lo])
                    )
        return out

    @njit(cache=True)
    def _nb_tridiag_diff_apply(q, corner):
        n = q.size
        out = np.empty(n)
        out[0] = -(q[1] - q[0]) + corner * q[0]
        for i in range(1, n - 1):
            out[i] = (q[i] - q[i - 1]) - (q[i + 1] - q[i])
        out[n - 1] = (q[n - 1] - q[n - 2]) + corner * q[n - 1]
        return out

    @njit(cache=True)
    def _nb_tridiag_diff_apply_batch(stages, corner):
        k, n = stages.shape
        out = np.empty((k, n))
        for row in range(k):
            out[row, 0] = -(stages[row, 1] - stages[row, 0]) + corner * stages[row, 0]
            for i in range(1, n - 1):
                out[row, i] = (stages[row, i] - stages[row, i - 1]) - (
                    stages[row, i + 1] - stages[row, i]
                )
            out[row, n - 1] = (stages[row, n - 1] - stages[row, n - 2]) + corner * stages[row, n - 1]
        return out

    @njit(cache=True)
    def _nb_tridiag_solve_batch(diag, off, rhs):
        # Thomas algorithm; constant off-diagonal, refactored per call.
        m, n = rhs.shape
        c = np.empty(n)
        out = np.empty((m, n))
        for row in range(m):
            beta = diag[0]
            out[row, 0] = rhs[row, 0] / beta
            for i in range(1, n):
                c[i - 1] = off / beta
                beta = diag[i] - off * c[i - 1]
                out[row, i] = (rhs[row, i] - off * out[row, i - 1]) / beta
            for i in range(n - 2, -1, -1):
                out[row, i] -= c[i] * out[row, i + 1]
        return out


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

if _USE_NUMBA:

    def circulant_apply(weights, q):
        """Circulant stencil sum_r w_r * (2 q_i - q_{i-r} - q_{i+r})."""
        return _nb_circulant_apply(weights, q)

    def circulant_apply_batch(weights, stages):
        return _nb_circulant_apply_batch(weights, np.ascontiguousarray(stages))

    def tridiag_diff_apply(q, corner):
        """Tridiagonal stencil (off-diagonal -1); corner 1 -> value ends, 0 -> slope ends."""
        return _nb_tridiag_diff_apply(q, corner)

    def tridiag_diff_apply_batch(stages, corner):
        return _nb_tridiag_diff_apply_batch(np.ascontiguousarray(stages), corner)

    def tridiag_solve_batch(diag, off, rhs):
        """Row-wise solve of the symmetric tridiagonal system."""
        return _nb_tridiag_solve_batch(diag, off, np.atleast_2d(np.ascontiguousarray(rhs)))

else:
    circulant_apply = _np_circulant_apply
    circulant_apply_batch = _np_circulant_apply_batch
    tridiag_diff_apply = _np_tridiag_diff_apply
    tridiag_diff_apply_batch = _np_tridiag_diff_apply_batch

    def tridiag_solve_batch(diag, off, rhs):
        return _np_tridiag_solve_batch(diag, off, np.atleast_2d(rhs))


def numpy_impl():
    """The pure-numpy kernel set, regardless of the active backend."""
    return {
        "circulant_apply": _np_circulant_apply,
        "circulant_apply_batch": _np_circulant_apply_batch,
        "tridiag_diff_apply": _np_tridiag_diff_apply,
        "tridiag_diff_apply_batch": _np_tridiag_diff_apply_batch,
        "tridiag_solve_batch": lambda d, o, r: _np_tridiag_solve_batch(d, o, np.atleast_2d(r)),
    }
