import numpy as np
import pytest

from loop_bie.operators.assembly import (
    assemble_gram,
    basis_integrals
)
from loop_bie.spectral import (
    EigensolverError,
    ZeroEigenvalueError,
    assemble_lbo,
    current_mht,
    current_mht_inverse,
    mht_forward,
    mht_inverse,
    orthonormality_defect,
    reconstruction_error,
    solve_mhb
)
from loop_bie.spectral.laplace_beltrami import (
    harmonic_samples,
    sign_changes
)
from loop_bie.surface import SurfaceQuadrature


@pytest.fixture(scope="module")
def mats(sphere_quadrature):
    return assemble_lbo(sphere_quadrature)


@pytest.fixture(scope="module")
def basis(mats):
    return solve_mhb(mats, mats.A.shape[0])


class TestGalerkinMatrices():

    def test_symmetric(self, mats):
        assert abs(mats.A - mats.A.T).max() == 0.0
        assert abs(mats.B - mats.B.T).max() == 0.0

    def test_constants_in_kernel(self, mats):
        ones = np.ones(mats.A.shape[0])
        assert np.allclose(mats.A @ ones, 0.0, atol=1e-10)

    def test_mass_sums_to_area(self, mats, sphere_quadrature):
        assert mats.B.sum() == pytest.approx(sphere_quadrature.area)
        assert np.allclose(np.asarray(mats.B.sum(axis=1)).reshape(-1), basis_integrals(sphere_quadrature))

    def test_stiffness_is_gram_block(self, mats, sphere_quadrature):
        gram = assemble_gram(sphere_quadrature)
        V = sphere_quadrature.n_vertices
        assert np.allclose(gram[:V, :V].toarray(), mats.A.toarray(), atol=1e-12)
        assert abs(gram[:V, V:]).max() == 0.0


class TestEigenpairs():

    def test_ascending_and_orthonormal(self, basis, mats):
        assert np.all(np.diff(basis.eigenvalues) >= -1e-10)
        (mass, stiffness) = orthonormality_defect(basis, mats)
        assert mass < 1e-8
        assert stiffness < 1e-7

    def test_constant_mode(self, basis):
        assert basis.includes_constant
        assert abs(basis.eigenvalues[0]) < 1e-8
        assert np.allclose(np.abs(basis.coefficients[:, 0]), np.abs(basis.coefficients[0, 0]))

    def test_first_band_is_threefold(self, basis):
        band = basis.eigenvalues[1:4]
        assert band == pytest.approx(np.full(3, band[0]), rel=1e-6)
        assert band[0] == pytest.approx(2.0, rel=0.1)
        assert basis.eigenvalues[4] > 1.5 * band[0]

    def test_signs_are_fixed(self, basis):
        largest = basis.coefficients[np.argmax(np.abs(basis.coefficients), axis=0), np.arange(basis.size)]
        assert np.all(largest > 0.0)

    def test_partial_solve_matches_full(self, mats, basis):
        partial = solve_mhb(mats, 10)
        assert np.allclose(partial.eigenvalues, basis.eigenvalues[:10], atol=1e-9)

    def test_eigenvalues_scale_inversely_with_area(self, basis, sphere_surface):
        doubled = SurfaceQuadrature(sphere_surface.scaled(2.0), depth=1, base_rule=6)
        scaled = solve_mhb(assemble_lbo(doubled), 10)
        assert np.allclose(scaled.eigenvalues[1:], basis.eigenvalues[1:10] / 4.0, rtol=1e-6, atol=0.0)


    def test_band_solver(self, mats, basis):
        banded = solve_mhb(mats, 12, dense_limit=10, band_size=20)
        assert banded.size == 12
        assert np.allclose(banded.eigenvalues, basis.eigenvalues[:12], rtol=1e-6, atol=1e-9)

    @pytest.mark.parametrize("M", [0, -1, 10_000])
    def test_count_out_of_range(self, mats, M):
        with pytest.raises(ValueError):
            solve_mhb(mats, M)

    def test_first_harmonic_has_one_nodal_line(self, basis, sphere_surface):
        # a degree one harmonic changes sign across a single great circle
        edges = sphere_surface.mesh.edges
        changes = sign_changes(basis.coefficients[:, 1], edges)
        assert 0 < changes < len(edges) // 3

    def test_to_csv(self, basis):
        lines = basis.truncated(3).to_csv().splitlines()
        assert lines[0] == "index,eigenvalue,residual"
        assert len(lines) == 4

    def test_without_constant(self, basis):
        stripped = basis.without_constant()
        assert stripped.size == basis.size - 1
        assert not stripped.includes_constant
        assert stripped.without_constant() is stripped

    def test_harmonic_samples(self, basis, sphere_quadrature):
        values = harmonic_samples(basis, sphere_quadrature, [0, 1])
        assert values.shape == (sphere_quadrature.n_samples, 2)


class TestTransforms():

    def test_scalar_round_trip(self, basis, mats):
        rng = np.random.default_rng(3)
        a = rng.standard_normal(basis.size)
        assert np.allclose(mht_inverse(mht_forward(a, basis, mats.B), basis), a, atol=1e-8)

    def test_current_spectrum_forms_agree(self, basis, mats):
        rng = np.random.default_rng(4)
        a1 = rng.standard_normal(basis.size)
        spectrum = current_mht(a1, a1, basis.without_constant().truncated(15), mats)
        assert np.allclose(spectrum.v, spectrum.v_stiffness, rtol=1e-6, atol=1e-8)
        assert np.allclose(spectrum.v, spectrum.w)

    def test_constant_mode_is_refused(self, basis, mats):
        a = np.ones(basis.size)
        with pytest.raises(ZeroEigenvalueError):
            current_mht(a, a, basis, mats)
        with pytest.raises(ZeroEigenvalueError):
            current_mht_inverse(a[:3], a[:3], basis.truncated(3))

    def test_full_reconstruction_is_exact(self, basis, mats):
        rng = np.random.default_rng(5)
        a1 = rng.standard_normal(basis.size) + 1j * rng.standard_normal(basis.size)
        a2 = rng.standard_normal(basis.size)
        assert reconstruction_error(a1, a2, basis.size - 1, basis, mats) < 1e-8

    def test_reconstruction_improves(self, basis, mats, sphere_surface):
        z = sphere_surface.mesh.vertices[:, 2] ** 2
        coarse = reconstruction_error(z, z, 3, basis, mats)
        fine = reconstruction_error(z, z, 30, basis, mats)
        assert fine <= coarse + 1e-12
        assert fine < 0.5

    def test_reconstruction_count_out_of_range(self, basis, mats):
        a = np.ones(basis.size)
        with pytest.raises(ValueError):
            reconstruction_error(a, a, basis.size, basis, mats)

    def test_zero_current(self, basis, mats):
        a = np.zeros(basis.size)
        assert reconstruction_error(a, a, 5, basis, mats) == 0.0


class TestEigensolverError():

    def test_attached_data(self):
        error = EigensolverError("too few", residuals=np.array([1e-12, 1e-3]), achieved=1)
        assert error.achieved == 1
        assert len(error.residuals) == 2
