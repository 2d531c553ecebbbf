import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from adiorbit import (
    CoefficientTrajectory,
    SpinHalfParams,
    TimeGrid,
    build_frame,
    build_spin_half,
    compute_nonadiabatic_coupling,
    conservation_residual,
    evolve_coefficients,
    evolve_schrodinger,
    run_pipeline,
    solve_quasistationary,
    survival_probability_direct,
    survival_probability_exact,
    time_ordered_exponential,
)
from adiorbit.errors import GridMismatch

from conftest import SX, constant_model


def zero_diag_hermitian(entries):
    """Build a stack of Hermitian zero-diagonal matrices from the upper
    triangle entries, entries[(i, j)] -> array over samples."""
    n = next(iter(entries.values())).shape[0]
    d = max(max(i, j) for i, j in entries) + 1
    out = np.zeros((n, d, d), dtype=complex)
    for (i, j), vals in entries.items():
        out[:, i, j] = vals
        out[:, j, i] = np.conj(vals)
    return out


class TestEvolveSchrodinger:
    def test_constant_eigenstate_survives_with_phase(self):
        grid = TimeGrid(tau_end=3.0, n_steps=3000)
        model = constant_model(np.diag([1.0, 2.0]))
        traj = evolve_schrodinger(model, np.array([0.0, 1.0]), grid)
        expected = np.exp(-2j * grid.samples)
        assert np.abs(traj.states[:, 1] - expected).max() < 1e-12
        assert np.abs(traj.states[:, 0]).max() == 0.0

    def test_rabi_flip_under_sigma_x(self):
        grid = TimeGrid(tau_end=6.0, n_steps=6000)
        traj = evolve_schrodinger(constant_model(SX), np.array([1.0, 0.0]), grid)
        survival = np.abs(traj.states[:, 0]) ** 2
        assert np.abs(survival - np.cos(grid.samples) ** 2).max() < 1e-10

    def test_spin_a_closed_form(self, spin_a_model):
        # the quoted probability with the rotation-frame frequency
        # wt^2 = w0^2 + w^2 + 2 w0 w cos(theta)
        grid = TimeGrid(tau_end=20.0, n_steps=20000)
        _, vecs = spin_a_model.analytic_frame(np.array([0.0]))
        traj = evolve_schrodinger(spin_a_model, vecs[0][:, 0], grid)
        _, frame_vecs = spin_a_model.analytic_frame(grid.samples)
        survival = np.abs(np.einsum("ki,ki->k", frame_vecs[:, :, 0].conj(), traj.states)) ** 2
        w0, w, th = 1.0, 0.1, np.pi / 4
        wt = np.sqrt(w0**2 + w**2 + 2 * w0 * w * np.cos(th))
        closed = 1.0 - (w**2 * np.sin(th) ** 2 / wt**2) * np.sin(wt * grid.samples / 2) ** 2
        assert np.abs(survival - closed).max() < 1e-6

    def test_requires_normalized_state(self):
        grid = TimeGrid(tau_end=1.0, n_steps=10)
        with pytest.raises(ValueError):
            evolve_schrodinger(constant_model(SX), np.array([1.0, 1.0]), grid)

    def test_norm_preserved(self, spin_a_model):
        grid = TimeGrid(tau_end=10.0, n_steps=5000)
        traj = evolve_schrodinger(spin_a_model, np.array([1.0, 0.0]), grid)
        norms = np.linalg.norm(traj.states, axis=1)
        assert np.abs(norms - 1.0).max() < 1e-12


class TestEvolveCoefficients:
    def test_zero_coupling_is_frozen(self):
        grid = TimeGrid(tau_end=5.0, n_steps=100)
        coupling = np.zeros((101, 3, 3), dtype=complex)
        traj = evolve_coefficients(coupling, grid, initial_level=1)
        assert np.abs(traj.coefficients[:, 1] - 1.0).max() == 0.0
        assert survival_probability_exact(traj).min() == 1.0

    def test_constant_coupling_rabi(self):
        g = 0.3
        grid = TimeGrid(tau_end=8.0, n_steps=8000)
        coupling = zero_diag_hermitian({(0, 1): np.full(grid.n_steps + 1, g)})
        traj = evolve_coefficients(coupling, grid, initial_level=0)
        p = survival_probability_exact(traj)
        assert np.abs(p - np.cos(g * grid.samples) ** 2).max() < 1e-10

    def test_dual_route_against_schrodinger(self, conjugated_example, medium_grid):
        # coefficients from the coupling ODE must equal the projections of
        # the directly integrated state on the dressed frame
        _, model = conjugated_example
        spec = solve_quasistationary(model, medium_grid)
        frame = build_frame(spec, compute_nonadiabatic_coupling(spec))
        traj = evolve_coefficients(frame.coupling, medium_grid, initial_level=0)
        basis = frame.basis_vectors()
        state = evolve_schrodinger(model, basis[0, :, 0], medium_grid)
        projected = np.einsum("kin,ki->kn", basis.conj(), state.states)
        assert np.abs(projected - traj.coefficients).max() < 1e-6

    def test_rejects_non_hermitian(self):
        grid = TimeGrid(tau_end=1.0, n_steps=10)
        bad = np.zeros((11, 2, 2), dtype=complex)
        bad[:, 0, 1] = 1.0  # missing conjugate partner
        with pytest.raises(ValueError):
            evolve_coefficients(bad, grid, 0)

    def test_rejects_nonzero_diagonal(self):
        grid = TimeGrid(tau_end=1.0, n_steps=10)
        bad = np.zeros((11, 2, 2), dtype=complex)
        bad[:, 0, 0] = 0.5
        with pytest.raises(ValueError):
            evolve_coefficients(bad, grid, 0)

    def test_grid_mismatch(self):
        grid = TimeGrid(tau_end=1.0, n_steps=10)
        with pytest.raises(GridMismatch):
            evolve_coefficients(np.zeros((5, 2, 2), dtype=complex), grid, 0)


class TestTimeOrderedExponential:
    def test_zero_coupling_gives_identity(self):
        grid = TimeGrid(tau_end=1.0, n_steps=20)
        u = time_ordered_exponential(np.zeros((21, 2, 2), dtype=complex), grid)
        assert np.abs(u - np.eye(2)).max() == 0.0

    def test_single_step_matches_expm(self):
        grid = TimeGrid(tau_end=1.0, n_steps=2)
        m = np.array([[0.0, 0.3 - 0.1j], [0.3 + 0.1j, 0.0]])
        coupling = np.broadcast_to(m, (3, 2, 2)).copy()
        u = time_ordered_exponential(coupling, grid)
        assert np.abs(u[1] - expm(1j * grid.dtau * m)).max() < 1e-14

    def test_columns_reproduce_coefficients(self, spin_a_model):
        grid = TimeGrid(tau_end=10.0, n_steps=5000)
        spec = solve_quasistationary(spin_a_model, grid)
        frame = build_frame(spec, compute_nonadiabatic_coupling(spec))
        u = time_ordered_exponential(frame.coupling, grid)
        for m in (0, 1):
            traj = evolve_coefficients(frame.coupling, grid, m)
            assert np.abs(u[:, :, m] - traj.coefficients).max() < 1e-12

    def test_unitary(self, spin_a_model):
        grid = TimeGrid(tau_end=10.0, n_steps=5000)
        spec = solve_quasistationary(spin_a_model, grid)
        frame = build_frame(spec, compute_nonadiabatic_coupling(spec))
        u = time_ordered_exponential(frame.coupling, grid)
        gram = np.einsum("kji,kjl->kil", u.conj(), u)
        assert np.abs(gram - np.eye(2)).max() < 1e-9

    def test_against_independent_ode_solver(self):
        # random smooth 3-level coupling, checked against solve_ivp at
        # tight tolerance
        rng = np.random.default_rng(12)
        amps = rng.uniform(0.05, 0.15, size=3)
        rates = rng.uniform(0.5, 1.5, size=3)
        offsets = rng.uniform(0.0, 2 * np.pi, size=3)
        pairs = [(0, 1), (0, 2), (1, 2)]

        def coupling_at(tau):
            out = np.zeros((3, 3), dtype=complex)
            for (i, j), a, w, p in zip(pairs, amps, rates, offsets):
                out[i, j] = a * np.exp(1j * (w * tau + p))
                out[j, i] = np.conj(out[i, j])
            return out

        grid = TimeGrid(tau_end=5.0, n_steps=10000)
        samples = np.array([coupling_at(t) for t in grid.samples])
        u = time_ordered_exponential(samples, grid)

        def rhs(tau, y):
            return (1j * coupling_at(tau) @ y.reshape(3, 3)).ravel()

        sol = solve_ivp(
            rhs,
            (0.0, grid.tau_end),
            np.eye(3, dtype=complex).ravel(),
            t_eval=[grid.tau_end / 2, grid.tau_end],
            rtol=1e-11,
            atol=1e-13,
        )
        mid = sol.y[:, 0].reshape(3, 3)
        end = sol.y[:, 1].reshape(3, 3)
        assert np.abs(u[grid.n_steps // 2] - mid).max() < 1e-8
        assert np.abs(u[-1] - end).max() < 1e-8


class TestSurvivalProbabilities:
    def test_constant_model_all_one(self):
        grid = TimeGrid(tau_end=5.0, n_steps=500)
        result = run_pipeline(constant_model(np.diag([1.0, 2.0])), grid)
        assert np.abs(result.p_exact - 1.0).max() < 1e-12
        assert np.abs(result.p_direct - 1.0).max() < 1e-12

    def test_routes_agree_on_builtins(self, spin_a_model, conjugated_example):
        for model in (spin_a_model, conjugated_example[1]):
            grid = TimeGrid(tau_end=20.0, n_steps=20000)
            result = run_pipeline(model, grid)
            assert np.abs(result.p_exact - result.p_direct).max() < 1e-6

    def test_direct_route_gauge_invariant(self, spin_a_model):
        from adiorbit import apply_phase_redressing

        grid = TimeGrid(tau_end=10.0, n_steps=10000)
        spec = solve_quasistationary(spin_a_model, grid)
        frame = build_frame(spec, compute_nonadiabatic_coupling(spec))
        state = evolve_schrodinger(spin_a_model, frame.basis_vectors()[0, :, 0], grid)
        p_ref = survival_probability_direct(state, frame, 0)

        def phase_fn(taus):
            return np.stack([0.04 * np.sin(0.3 * taus), -0.03 * np.sin(0.5 * taus)], axis=1)

        spec2 = apply_phase_redressing(spec, phase_fn)
        frame2 = build_frame(spec2, compute_nonadiabatic_coupling(spec2))
        p_new = survival_probability_direct(state, frame2, 0)
        assert np.abs(p_ref - p_new).max() < 1e-10

    def test_direct_grid_mismatch(self, spin_a_model):
        grid = TimeGrid(tau_end=5.0, n_steps=1000)
        other = TimeGrid(tau_end=5.0, n_steps=500)
        spec = solve_quasistationary(spin_a_model, grid)
        frame = build_frame(spec, compute_nonadiabatic_coupling(spec))
        spec_o = solve_quasistationary(spin_a_model, other)
        frame_o = build_frame(spec_o, compute_nonadiabatic_coupling(spec_o))
        state = evolve_schrodinger(spin_a_model, frame.basis_vectors()[0, :, 0], grid)
        with pytest.raises(GridMismatch):
            survival_probability_direct(state, frame_o, 0)

    def test_probability_bounds(self, spin_a_model):
        grid = TimeGrid(tau_end=30.0, n_steps=30000)
        result = run_pipeline(spin_a_model, grid)
        for p in (result.p_exact, result.p_direct):
            assert p[0] == pytest.approx(1.0, abs=1e-12)
            assert p.max() <= 1.0 + 1e-9
            assert p.min() >= 0.0

    def test_adiabatic_limit_scaling(self):
        # slowing the drive by 10 shrinks the worst deficit ~100x
        def worst_deficit(omega):
            model = build_spin_half(SpinHalfParams(omega0=1.0, omega=omega, theta=np.pi / 4))
            grid = TimeGrid(tau_end=20.0, n_steps=20000)
            return 1.0 - run_pipeline(model, grid).p_exact.min()

        ratio = worst_deficit(0.05) / worst_deficit(0.005)
        assert 80.0 < ratio < 120.0


class TestConservation:
    def test_builtin_float_noise(self, spin_a_model):
        # per-step drift is ~2e-16, so a 2000-step run stays below 1e-12
        grid = TimeGrid(tau_end=20.0, n_steps=2000)
        result = run_pipeline(spin_a_model, grid)
        assert conservation_residual(result.coefficients) < 1e-12

    def test_non_hermitian_generator_is_detected(self):
        # negative control: stepping with a non-Hermitian generator leaks norm
        grid = TimeGrid(tau_end=5.0, n_steps=200)
        m = np.array([[0.0, 0.4], [0.2, 0.0]], dtype=complex)  # deliberately lopsided
        c = np.zeros((grid.n_steps + 1, 2), dtype=complex)
        c[0, 0] = 1.0
        step = expm(1j * grid.dtau * m)
        for k in range(grid.n_steps):
            c[k + 1] = step @ c[k]
        traj = CoefficientTrajectory(grid, c, initial_level=0)
        assert conservation_residual(traj) > 1e-3

    def test_random_five_level_long_run(self):
        from conftest import smooth_random_model

        model = smooth_random_model(5, seed=9)
        grid = TimeGrid(tau_end=50.0, n_steps=100000)
        result = run_pipeline(model, grid)
        assert conservation_residual(result.coefficients) < 1e-10
