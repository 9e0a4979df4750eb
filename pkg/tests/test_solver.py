import numpy as np
import pytest

from loop_bie.config import (
    QuadratureConfig,
    SystemConfig
)
from loop_bie.mesh import limit_sphere
from loop_bie.operators import (
    OperatorSet,
    assemble_gram
)
from loop_bie.operators.assembly import (
    basis_integrals,
    constant_vectors
)
from loop_bie.operators.constants import Wavenumber
from loop_bie.postproc import (
    far_field,
    far_field_error,
    mie_reference,
    phi_cut
)
from loop_bie.solver import (
    CalderonSystem,
    ConvergenceError,
    GramSolver,
    PolarizationError,
    SolveResult,
    assemble_rhs,
    gmres,
    plane_wave,
    solve_mfie,
    solve_scattering,
    solve_system
)
from loop_bie.solver.calderon import (
    cfie_operator,
    rotate
)
from loop_bie.spectral import (
    assemble_lbo,
    solve_mhb
)
from loop_bie.surface import (
    LimitSurface,
    SurfaceQuadrature
)


@pytest.fixture(scope="module")
def gram_solver(sphere_quadrature):
    return GramSolver(assemble_gram(sphere_quadrature), basis_integrals(sphere_quadrature))


def _synthetic_ops(quadrature, K, T_kp=None):
    V = quadrature.n_vertices
    return OperatorSet(
        T_k=-np.eye(2 * V),
        T_kp=T_kp,
        K=K,
        G=assemble_gram(quadrature),
        kappa=Wavenumber(kappa=1.0),
        kappa_p=None,
        basis_integrals=basis_integrals(quadrature),
        metadata={},
    )


class TestGmres():

    def test_identity(self):
        rhs = np.arange(1.0, 6.0)
        result = gmres(np.eye(5), rhs)
        assert result.converged
        assert result.iterations == 1
        assert np.allclose(result.x, rhs)

    def test_zero_rhs(self):
        result = gmres(np.eye(3), np.zeros(3))
        assert result.residuals == [0.0]
        assert result.iterations == 0
        assert np.array_equal(result.x, np.zeros(3))

    def test_diagonal_system(self):
        A = np.diag(np.arange(1.0, 21.0)) + 0.01 * np.triu(np.ones((20, 20)), 1)
        rhs = np.ones(20)
        result = gmres(A, rhs, tol=1e-10)
        assert np.allclose(A @ result.x, rhs, atol=1e-8)
        assert result.residuals[0] == pytest.approx(1.0)
        assert result.residual <= 1e-10

    def test_restarts(self):
        A = np.diag(np.arange(1.0, 21.0))
        result = gmres(A, np.ones(20), tol=1e-10, restart=5)
        assert result.iterations > 5
        assert np.allclose(result.x, 1.0 / np.arange(1.0, 21.0))

    def test_callable_and_preconditioner(self):
        d = np.arange(1.0, 11.0)
        result = gmres(lambda x: d * x, np.ones(10), preconditioner=lambda x: x / d)
        assert result.iterations == 1
        assert np.allclose(result.x, 1.0 / d)

    def test_history_on_failure(self):
        with pytest.raises(ConvergenceError) as error:
            gmres(np.diag(np.arange(1.0, 101.0)), np.ones(100), tol=1e-12, max_iter=2)
        assert len(error.value.history) == 3
        assert not error.value.result.converged


class TestGramSolver():

    def test_recovers_gauge_fixed_solution(self, gram_solver, sphere_quadrature):
        V = sphere_quadrature.n_vertices
        x0 = gram_solver.gauge(np.random.default_rng(9).standard_normal(2 * V))
        x = gram_solver.solve(assemble_gram(sphere_quadrature) @ x0)
        assert np.allclose(x, x0, rtol=1e-6, atol=1e-8)
        assert gram_solver.constant_component(x) < 1e-10
        assert gram_solver.solves >= 1
        assert gram_solver.iterations > 0

    def test_project(self, gram_solver, sphere_quadrature):
        V = sphere_quadrature.n_vertices
        projected = gram_solver.project(np.arange(2.0 * V))
        assert projected[:V].sum() == pytest.approx(0.0, abs=1e-9)
        assert projected[V:].sum() == pytest.approx(0.0, abs=1e-9)

    def test_constant_component(self, gram_solver, sphere_quadrature):
        V = sphere_quadrature.n_vertices
        assert gram_solver.constant_component(np.ones(2 * V)) > 0.1


class TestExcitation():

    def test_plane_wave(self):
        wave = plane_wave([0.0, 0.0, 2.0], [1.0, 0.0, 0.0], 3.0)
        assert np.allclose(wave.direction, [0.0, 0.0, 1.0])
        field = wave.electric(np.array([[0.0, 0.0, np.pi / 6.0]]))
        assert np.allclose(field, [[-1j, 0.0, 0.0]])

    def test_polarization_not_transverse(self):
        with pytest.raises(PolarizationError):
            plane_wave([0.0, 0.0, 1.0], [0.0, 0.6, 0.8], 1.0)

    def test_polarization_not_unit(self):
        with pytest.raises(PolarizationError):
            plane_wave([0.0, 0.0, 1.0], [2.0, 0.0, 0.0], 1.0)

    @pytest.mark.parametrize(("direction", "kappa"), [([0.0, 0.0, 0.0], 1.0), ([0.0, 0.0, 1.0], 0.0)])
    def test_invalid_wave(self, direction, kappa):
        with pytest.raises(ValueError):
            plane_wave(direction, [1.0, 0.0, 0.0], kappa)

    def test_rhs_layout(self, sphere_quadrature):
        V = sphere_quadrature.n_vertices
        wave = plane_wave([0.0, 0.0, 1.0], [1.0, 0.0, 0.0], 1.0)
        (V_T, V_K) = assemble_rhs(wave, sphere_quadrature)
        assert V_T.shape == V_K.shape == (2 * V,)
        # constant coefficients carry no current
        assert abs(V_T[:V].sum()) < 1e-10 * np.abs(V_T).sum()
        assert abs(V_K[V:].sum()) < 1e-10 * np.abs(V_K).sum()


class TestSystems():

    def test_rotation(self):
        assert np.array_equal(rotate(np.array([1.0, 2.0, 3.0, 4.0])), [-3.0, -4.0, 1.0, 2.0])

    def test_basis_needs_cc_cfier(self):
        with pytest.raises(ValueError):
            solve_system(None, None, SystemConfig(formulation="cfie"), basis=object())

    def test_cfie_weight(self, sphere_quadrature):
        ops = _synthetic_ops(sphere_quadrature, np.eye(2 * sphere_quadrature.n_vertices))
        with pytest.raises(ValueError):
            cfie_operator(ops, 1.5)

    def test_regularizer_required(self, sphere_quadrature):
        ops = _synthetic_ops(sphere_quadrature, np.eye(2 * sphere_quadrature.n_vertices))
        with pytest.raises(ValueError):
            CalderonSystem(ops, SystemConfig())

    def test_magnetic_solve_is_gauged(self, sphere_quadrature, gram_solver):
        V = sphere_quadrature.n_vertices
        ops = _synthetic_ops(sphere_quadrature, 2.0 * np.eye(2 * V))
        V_K = np.random.default_rng(10).standard_normal(2 * V)
        result = solve_mfie(ops, (np.zeros(2 * V), V_K))
        assert result.formulation == "mfie"
        assert np.allclose(result.coefficients, gram_solver.gauge(V_K / 2.0), atol=1e-5)

    def test_result_records(self):
        result = SolveResult(
            formulation="efie",
            coefficients=np.arange(4.0),
            iterations=2,
            residuals=[1.0, 0.1, 1e-6],
            wall_time=0.5,
            metadata={"alpha": 0.5},
        )
        (a1, a2) = result.currents()
        assert np.array_equal(a2, [2.0, 3.0])
        assert result.n_unknowns == 4
        assert "space=loop" in result.to_text()
        assert result.to_text().endswith("alpha=0.5\n")
        assert result.history_csv().splitlines() == [
            "iteration,residual", "0,1.000000e+00", "1,1.000000e-01", "2,1.000000e-06"
        ]


class TestDeflation():

    def test_far_field_ignores_constants(self, sphere_quadrature):
        V = sphere_quadrature.n_vertices
        x = np.random.default_rng(14).standard_normal(2 * V)
        shifted = x + constant_vectors(V) @ np.array([3.0, -2.0])
        grid = phi_cut(15.0)
        assert far_field_error(
            far_field(shifted, sphere_quadrature, grid, 2.0),
            far_field(x, sphere_quadrature, grid, 2.0),
        ) <= 1e-8

    def test_gram_solve_ignores_constant_rhs(self, gram_solver, sphere_quadrature):
        V = sphere_quadrature.n_vertices
        b = assemble_gram(sphere_quadrature) @ np.random.default_rng(15).standard_normal(2 * V)
        x = gram_solver.solve(b)
        y = gram_solver.solve(b + constant_vectors(V) @ np.array([5.0, 1.5]))
        assert np.linalg.norm(x - y) <= 1e-6 * np.linalg.norm(x)

    def test_constant_rhs_is_gauge(self, sphere_quadrature):
        V = sphere_quadrature.n_vertices
        ops = _synthetic_ops(sphere_quadrature, 2.0 * np.eye(2 * V))
        V_K = np.random.default_rng(16).standard_normal(2 * V)
        plain = solve_mfie(ops, (np.zeros(2 * V), V_K))
        shifted = solve_mfie(ops, (np.zeros(2 * V), V_K + 4.0 * np.ones(2 * V)))
        grid = phi_cut(15.0)
        assert far_field_error(
            far_field(shifted.coefficients, sphere_quadrature, grid, 1.0),
            far_field(plain.coefficients, sphere_quadrature, grid, 1.0),
        ) <= 1e-8


@pytest.mark.slow
class TestSphereScattering():

    @pytest.fixture(scope="class")
    def setup(self):
        surface = LimitSurface(limit_sphere(2))
        config = QuadratureConfig()
        samples = SurfaceQuadrature(surface, config.regular_depth, config.regular_rule)
        wave = plane_wave([0.0, 0.0, 1.0], [1.0, 0.0, 0.0], 1.0)
        grid = phi_cut(5.0)
        return (surface, samples, wave, grid, mie_reference(1.0, wave, grid))

    def test_cc_cfier_matches_mie(self, setup):
        (surface, samples, wave, grid, reference) = setup
        (result, ops) = solve_scattering(surface, wave, Wavenumber(kappa=1.0), samples=samples)
        assert result.converged
        assert ops.kappa_p is not None
        assert far_field_error(far_field(result.coefficients, samples, grid, 1.0), reference) < 0.1

    def test_cfie_matches_mie(self, setup):
        (surface, samples, wave, grid, reference) = setup
        (result, ops) = solve_scattering(
            surface, wave, Wavenumber(kappa=1.0), system=SystemConfig(formulation="cfie"), samples=samples
        )
        assert ops.kappa_p is None
        assert far_field_error(far_field(result.coefficients, samples, grid, 1.0), reference) < 0.1

    def test_full_harmonic_basis_matches_loop_space(self, setup):
        (surface, samples, wave, grid, _) = setup
        basis = solve_mhb(assemble_lbo(samples), surface.n_vertices).without_constant()
        (loop, _) = solve_scattering(surface, wave, Wavenumber(kappa=1.0), samples=samples)
        (harmonic, _) = solve_scattering(surface, wave, Wavenumber(kappa=1.0), samples=samples, basis=basis)
        assert harmonic.n_unknowns == 2 * basis.size
        assert far_field_error(
            far_field(harmonic.coefficients, samples, grid, 1.0),
            far_field(loop.coefficients, samples, grid, 1.0),
        ) < 1e-3


@pytest.mark.slow
class TestLocalizedRegularizer():

    def test_far_fields_agree_with_full_regularizer(self):
        surface = LimitSurface(limit_sphere(2))
        kappa = 2.0 * np.pi
        config = QuadratureConfig()
        samples = SurfaceQuadrature(surface, config.regular_depth, config.regular_rule)
        wave = plane_wave([0.0, 0.0, 1.0], [1.0, 0.0, 0.0], kappa)
        grid = phi_cut(5.0)

        patterns = []
        for radius in (1.25, None):
            (result, ops) = solve_scattering(
                surface, wave, Wavenumber(kappa=kappa),
                system=SystemConfig(localization_radius=radius), samples=samples,
            )
            assert ops.metadata["localization_radius"] == radius
            patterns.append(far_field(result.coefficients, samples, grid, kappa))

        assert far_field_error(*patterns) < 1e-2
