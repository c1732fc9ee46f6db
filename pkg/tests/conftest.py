"""Shared test helpers: independent reference integration and RK oracles."""

import numpy as np
import pytest
from scipy.integrate import solve_ivp


def reference_solve(system, y0, t_span, t_eval=None, rtol=1e-12, atol=1e-13):
    """High-accuracy reference trajectory from an independent integrator."""
    sol = solve_ivp(
        lambda t, y: system.rhs(y),
        t_span,
        np.asarray(y0, dtype=float),
        method="DOP853",
        rtol=rtol,
        atol=atol,
        t_eval=t_eval,
        dense_output=t_eval is None,
    )
    assert sol.success
    return sol


def rk_step_direct(rhs, y0, h, a_matrix, b, c, tol=1e-14, max_iter=400):
    """One implicit RK step solved by plain stage iteration on the tableau.

    Independent of the package's stage-coefficient formulation; used as the
    oracle for tableau equivalence.
    """
    k = len(b)
    y0 = np.asarray(y0, dtype=float)
    stages = np.tile(y0, (k, 1))
    for _ in range(max_iter):
        f_rows = np.array([rhs(stages[i]) for i in range(k)])
        new = y0[None, :] + h * (a_matrix @ f_rows)
        delta = np.max(np.abs(new - stages))
        stages = new
        if delta <= tol * (1.0 + np.max(np.abs(y0))):
            break
    f_rows = np.array([rhs(stages[i]) for i in range(k)])
    return y0 + h * (b @ f_rows)


def fitted_rate(hs, errs):
    """Least-squares convergence order from (h, error) samples."""
    return np.polyfit(np.log(hs), np.log(errs), 1)[0]


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
