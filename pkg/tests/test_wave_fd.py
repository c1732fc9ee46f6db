import numpy as np
import pytest
from scipy.integrate import simpson

from conftest import reference_solve
from hbvm import problems
from hbvm.wave_fd import (
    BoundaryData,
    apply_stencil,
    build_dirichlet,
    build_neumann,
    build_periodic,
    _periodic_operator,
    _tridiagonal_operator,
)

ZERO = lambda u: np.zeros_like(u)


def build_sg_augmented(bc, N, domain):
    """Sine-Gordon system with exact-soliton boundary data on an arbitrary
    domain; small domains give O(1) boundary traces that exercise the
    forcing terms."""
    boundary = problems.sine_gordon_boundary_data(1.0, bc, domain)
    builder = build_dirichlet if bc == "dirichlet" else build_neumann
    system = builder(N, domain, problems.sine_gordon_f, problems.sine_gordon_fprime, boundary)
    x = system.descriptor["x"]
    psi0, psi1 = problems.sine_gordon_initial(1.0)
    y0 = np.concatenate([psi0(x), psi1(x), [0.0, 0.0]])
    return system, y0, boundary


def all_operators(n=20, dx=0.1):
    return [
        _periodic_operator(n, 2, dx),
        _periodic_operator(n, 4, dx),
        _periodic_operator(n, 6, dx),
        _tridiagonal_operator(n, "dirichlet", dx),
        _tridiagonal_operator(n, "neumann", dx),
    ]


class TestStencilOperator:
    def test_symmetry(self, rng):
        for op in all_operators():
            q = rng.standard_normal(op.n)
            z = rng.standard_normal(op.n)
            lhs = q @ op.apply(z)
            rhs = z @ op.apply(q)
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)

    def test_periodic_annihilates_constants(self):
        for order in (2, 4, 6):
            op = _periodic_operator(24, order, 0.1)
            np.testing.assert_allclose(op.apply(np.ones(24)), 0.0, atol=1e-13)

    def test_neumann_annihilates_constants(self):
        op = _tridiagonal_operator(15, "neumann", 0.1)
        np.testing.assert_allclose(op.apply(np.ones(15)), 0.0, atol=1e-14)

    def test_dirichlet_positive_definite(self, rng):
        op = _tridiagonal_operator(15, "dirichlet", 0.1)
        for _ in range(20):
            q = rng.standard_normal(15)
            assert q @ op.apply(q) > 0.0

    def test_order2_circulant_eigenvector(self):
        n, length = 32, 2.0
        dx = length / n
        op = _periodic_operator(n, 2, dx)
        x = dx * np.arange(n)
        q = np.cos(2 * np.pi * x / length)
        lam = 2.0 - 2.0 * np.cos(2 * np.pi * dx / length)
        np.testing.assert_allclose(op.apply(q), lam * q, atol=1e-12)

    def test_order2_second_derivative_exact_on_quadratic(self):
        # -T/dx^2 applied to samples of x^2 gives -2 at interior points
        n, dx = 20, 0.05
        op = _tridiagonal_operator(n, "dirichlet", dx)
        x = dx * np.arange(1, n + 1)
        vals = -op.apply(x**2) / dx**2
        np.testing.assert_allclose(vals[1:-1], 2.0, atol=1e-10)

    @pytest.mark.parametrize(
        "order,degree", [(4, 5), (6, 7)]
    )
    def test_high_order_polynomial_exactness(self, order, degree):
        # rows with full stencil support reproduce the second derivative of
        # polynomials up to the stated degree
        n, dx = 40, 0.02
        op = _periodic_operator(n, order, dx)
        x = dx * np.arange(n)
        r = order // 2
        for deg in range(degree + 1):
            vals = -op.apply(x**deg) / dx**2
            exact = deg * (deg - 1) * x ** max(deg - 2, 0) if deg >= 2 else np.zeros(n)
            np.testing.assert_allclose(vals[r : n - r], exact[r : n - r], atol=2e-7)

    def test_order4_on_quartic(self):
        # samples of x^4: interior rows reproduce 12 x^2 after scaling
        n, dx = 30, 0.1
        op = _periodic_operator(n, 4, dx)
        x = dx * np.arange(n)
        vals = op.apply(x**4)
        exact = -(dx**2) * 12.0 * x**2
        np.testing.assert_allclose(vals[2 : n - 2], exact[2 : n - 2], atol=1e-10)

    def test_dimension_mismatch(self):
        op = _periodic_operator(10, 2, 0.1)
        with pytest.raises(ValueError):
            apply_stencil(op, np.zeros(11))

    def test_symbol_matches_eigenvalues(self):
        op = _periodic_operator(16, 4, 0.1)
        dense = np.column_stack([op.apply(col) for col in np.eye(16)])
        eig = np.sort(np.linalg.eigvalsh(dense))
        np.testing.assert_allclose(np.sort(op.symbol()), eig, atol=1e-12)


class TestBuildPeriodic:
    def test_constant_state_zero_energy(self):
        system = build_periodic(16, 2, (0.0, 1.0), ZERO, ZERO)
        y = np.concatenate([np.full(16, 1.3), np.zeros(16)])
        assert system.hamiltonian(y) == pytest.approx(0.0, abs=1e-14)
        np.testing.assert_allclose(system.rhs(y), 0.0, atol=1e-13)

    def test_sine_gordon_initial_energy_level(self):
        system, y0 = problems.sine_gordon_system(gamma=1.0, bc="periodic", scheme="fd2", N=400)
        assert system.hamiltonian(y0) == pytest.approx(16.0 * np.tanh(20.0), abs=1e-8)

    def test_vector_form_equals_componentwise_sum(self, rng):
        N = 24
        system, _ = problems.sine_gordon_system(gamma=1.0, bc="periodic", scheme="fd2", N=N)
        dx = system.descriptor["dx"]
        for _ in range(5):
            q = rng.standard_normal(N)
            p = rng.standard_normal(N)
            total = 0.0
            for i in range(N):
                lap = q[(i - 1) % N] - 2.0 * q[i] + q[(i + 1) % N]
                total += 0.5 * p[i] ** 2 - q[i] * lap / (2.0 * dx**2) + (1.0 - np.cos(q[i]))
            total *= dx
            val = system.hamiltonian(np.concatenate([q, p]))
            assert val == pytest.approx(total, rel=1e-12)

    def test_translation_invariance(self, rng):
        system, _ = problems.sine_gordon_system(gamma=1.0, bc="periodic", scheme="fd2", N=32)
        q = rng.standard_normal(32)
        p = rng.standard_normal(32)
        base = system.hamiltonian(np.concatenate([q, p]))
        for shift in (1, 7):
            rolled = system.hamiltonian(np.concatenate([np.roll(q, shift), np.roll(p, shift)]))
            assert rolled == pytest.approx(base, rel=1e-12)

    def test_too_small_grid_rejected(self):
        with pytest.raises(ValueError):
            build_periodic(4, 4, (0.0, 1.0), ZERO, ZERO)
        with pytest.raises(ValueError):
            build_periodic(16, 3, (0.0, 1.0), ZERO, ZERO)


class TestHighOrderStencilRuns:
    @pytest.mark.parametrize("scheme", ["fd4", "fd6"])
    @pytest.mark.parametrize("pre", ["tridiagonal-truncation", "exact-band"])
    def test_energy_conserving_run(self, scheme, pre):
        # the truncated preconditioner drops the outer bands of high-order
        # stencils yet still converges; conservation is unaffected
        from hbvm.integrator import HBVMMethod, SolverConfig, integrate

        system, y0 = problems.sine_gordon_system(gamma=1.0, bc="periodic", scheme=scheme, N=200)
        rec = integrate(
            system, y0, 0.1, 100, HBVMMethod(5, 1), SolverConfig(preconditioner=pre), record_stride=0
        )
        assert np.max(np.abs(rec.drift)) <= 1e-12
        assert rec.iterations.max() <= 20

    def test_spatial_accuracy_ordering(self):
        # at a fixed fine stepsize the stencil order dictates the error
        from hbvm.integrator import HBVMMethod, SolverConfig, integrate

        errs = {}
        for scheme in ("fd2", "fd4", "fd6"):
            system, y0 = problems.sine_gordon_system(gamma=1.0, bc="periodic", scheme=scheme, N=100)
            x = system.descriptor["x"]
            worst = 0.0

            def observer(n, t, y):
                nonlocal worst
                worst = max(worst, float(np.max(np.abs(y[:100] - problems.sine_gordon_exact(1.0, x, t)))))

            integrate(system, y0, 0.02, 250, HBVMMethod(5, 1), SolverConfig(), record_stride=0, observer=observer)
            errs[scheme] = worst
        assert errs["fd2"] > 5 * errs["fd4"] > 5 * errs["fd6"]


class TestBuildDirichlet:
    def test_zero_boundary_matches_homogeneous(self, rng):
        zero_fn = lambda t: np.zeros_like(np.asarray(t, dtype=float)) + 0.0
        boundary = BoundaryData("dirichlet", zero_fn, zero_fn, zero_fn, zero_fn)
        system = build_dirichlet(12, (0.0, 1.0), problems.sine_gordon_f, problems.sine_gordon_fprime, boundary)
        y = 0.3 * rng.standard_normal(system.dim)
        y[-2:] = [0.7, 0.2]
        r = system.rhs(y)
        assert r[-1] == 0.0  # no energy flux without boundary motion
        # interior dynamics equal the unforced tridiagonal system
        n = system.skew.n
        dx = system.descriptor["dx"]
        op = system.descriptor["stencil"]
        expected = -op.apply(y[:n]) / dx**2 - np.sin(y[:n])
        np.testing.assert_allclose(r[n : 2 * n], expected, atol=1e-13)

    def test_augmented_energy_constant_along_reference(self):
        # small domain -> O(1) boundary forcing, the conservation is nontrivial
        system, y0, _ = build_sg_augmented("dirichlet", 50, (-2.0, 2.0))
        sol = reference_solve(system, y0, (0.0, 1.0), t_eval=np.linspace(0.0, 1.0, 6))
        h = [system.hamiltonian(sol.y[:, i]) for i in range(sol.y.shape[1])]
        assert max(abs(v - h[0]) for v in h) <= 1e-10
        # and the energy actually moves through the boundary
        phys = [system.physical_hamiltonian(sol.y[:, i]) for i in range(sol.y.shape[1])]
        assert max(abs(v - phys[0]) for v in phys) > 1e-3

    def test_energy_change_equals_boundary_flux_integral(self):
        # H(T) - H(0) must match the time integral of the discrete boundary
        # flux (one-sided slopes times boundary velocities)
        system, y0, bdata = build_sg_augmented("dirichlet", 50, (-2.0, 2.0))
        n = system.skew.n
        dx = system.descriptor["dx"]
        T = 1.0
        sol = reference_solve(system, y0, (0.0, T))
        ts = np.linspace(0.0, T, 1601)
        states = sol.sol(ts)
        flux = np.empty(ts.size)
        for i, t in enumerate(ts):
            q = states[:n, i]
            u0 = float(bdata.left(t))
            u1 = float(bdata.right(t))
            d0 = float(bdata.left_deriv(t))
            d1 = float(bdata.right_deriv(t))
            flux[i] = (u1 - q[-1]) / dx * d1 - (q[0] - u0) / dx * d0
        change = system.physical_hamiltonian(states[:, -1]) - system.physical_hamiltonian(states[:, 0])
        assert abs(change) > 1e-3  # nontrivial energy exchange
        assert change == pytest.approx(simpson(flux, x=ts), abs=1e-8)

    def test_requires_dirichlet_data(self):
        boundary = problems.sine_gordon_boundary_data(1.0, "neumann")
        with pytest.raises(ValueError):
            build_dirichlet(10, (0.0, 1.0), ZERO, ZERO, boundary)
        with pytest.raises(ValueError):
            BoundaryData("dirichlet", lambda t: 0.0, None, lambda t: 0.0, lambda t: 0.0)


class TestBuildNeumann:
    def test_constant_state_unforced(self):
        zero_fn = lambda t: np.zeros_like(np.asarray(t, dtype=float)) + 0.0
        boundary = BoundaryData("neumann", zero_fn, zero_fn, zero_fn, zero_fn)
        system = build_neumann(12, (0.0, 1.0), ZERO, ZERO, boundary)
        n = system.skew.n
        y = np.zeros(system.dim)
        y[:n] = 0.9
        r = system.rhs(y)
        np.testing.assert_allclose(r[n : 2 * n], 0.0, atol=1e-14)

    def test_augmented_energy_constant_along_reference(self):
        system, y0, _ = build_sg_augmented("neumann", 50, (-2.0, 2.0))
        sol = reference_solve(system, y0, (0.0, 1.0), t_eval=np.linspace(0.0, 1.0, 6))
        h = [system.hamiltonian(sol.y[:, i]) for i in range(sol.y.shape[1])]
        assert max(abs(v - h[0]) for v in h) <= 1e-10

    def test_vector_form_equals_expanded_scalar_form(self, rng):
        # independent evaluation from ghost values and squared differences
        N = 18
        system, _, bdata = build_sg_augmented("neumann", N, (-2.0, 2.0))
        dx = system.descriptor["dx"]
        for _ in range(5):
            q = rng.standard_normal(N)
            p = rng.standard_normal(N)
            t = rng.random()
            u0 = q[0] - float(bdata.left(t)) * dx
            u_np1 = q[-1] + float(bdata.right(t)) * dx
            ext = np.concatenate([[u0], q, [u_np1]])
            total = dx * np.sum(0.5 * p * p + (1.0 - np.cos(q)))
            total += 0.5 * np.sum((ext[1:] - ext[:-1]) ** 2) / dx
            y = np.concatenate([q, p, [t, 0.0]])
            assert system.hamiltonian(y) == pytest.approx(total, rel=1e-12)

    def test_requires_neumann_data(self):
        boundary = problems.sine_gordon_boundary_data(1.0, "dirichlet")
        with pytest.raises(ValueError):
            build_neumann(10, (0.0, 1.0), ZERO, ZERO, boundary)

    def test_strong_forcing_energy_defect_scales_with_method_order(self):
        # the momentum coupling of the time slot leaves an O(h^(2s)) global
        # energy remainder under O(1) slopes, no matter how large k is;
        # the Dirichlet counterpart stays at roundoff
        from hbvm.integrator import HBVMMethod, SolverConfig, integrate

        system, y0, _ = build_sg_augmented("neumann", 50, (-2.0, 2.0))
        drifts = []
        for h in (0.1, 0.05):
            rec = integrate(system, y0, h, round(5.0 / h), HBVMMethod(5, 1), SolverConfig(), record_stride=0)
            drifts.append(np.max(np.abs(rec.drift)))
        assert np.log2(drifts[0] / drifts[1]) == pytest.approx(2.0, abs=0.3)
        d_system, d_y0, _ = build_sg_augmented("dirichlet", 50, (-2.0, 2.0))
        rec = integrate(d_system, d_y0, 0.1, 50, HBVMMethod(5, 1), SolverConfig(), record_stride=0)
        assert np.max(np.abs(rec.drift)) <= 1e-12
