import numpy as np
import pytest

from loop_bie.operators import ETA_0
from loop_bie.postproc import (
    DirectionGrid,
    FarFieldPattern,
    GridMismatchError,
    efficiencies,
    far_field,
    far_field_error,
    mie_reference,
    phi_cut,
    rayleigh_backscatter
)
from loop_bie.postproc.far_field import sample_currents
from loop_bie.postproc.mie import (
    amplitudes,
    coefficients,
    series_length
)
from loop_bie.solver import plane_wave


@pytest.fixture
def wave():
    return plane_wave([0.0, 0.0, 1.0], [1.0, 0.0, 0.0], 2.0)


def _pattern(grid, scale=1.0):
    field = np.zeros((len(grid), 3), dtype=np.complex128)
    field[:, 0] = scale * (1.0 + np.cos(grid.theta))
    return FarFieldPattern(grid=grid, field=field)


class TestDirectionGrid():

    def test_phi_cut(self):
        grid = phi_cut(1.0)
        assert len(grid) == 181
        assert grid.theta[0] == 0.0
        assert grid.theta[-1] == pytest.approx(np.pi)
        assert np.allclose(np.linalg.norm(grid.directions, axis=1), 1.0)

    def test_phi_cut_plane(self):
        grid = phi_cut(45.0, 90.0)
        assert len(grid) == 5
        assert np.allclose(grid.directions[:, 0], 0.0)


class TestFarFieldPattern():

    def test_components(self):
        grid = DirectionGrid(theta=np.array([np.pi / 2.0]), phi=np.array([0.0]))
        pattern = FarFieldPattern(grid=grid, field=np.array([[0.0, 2.0j, -1.0]]))
        assert pattern.e_theta[0] == pytest.approx(1.0)
        assert pattern.e_phi[0] == pytest.approx(2.0j)
        assert pattern.rcs[0] == pytest.approx(4.0 * np.pi * 5.0)

    def test_zero_field_in_decibels(self):
        grid = phi_cut(90.0)
        pattern = FarFieldPattern(grid=grid, field=np.zeros((len(grid), 3)))
        assert np.all(np.isfinite(pattern.rcs_dbsm))

    def test_sum(self):
        grid = phi_cut(10.0)
        total = _pattern(grid) + _pattern(grid, 2.0)
        assert np.allclose(total.field, _pattern(grid, 3.0).field)

    def test_csv(self):
        lines = _pattern(phi_cut(90.0)).to_csv({"kappa": 2.0}).splitlines()
        assert lines[0] == "# kappa=2.0"
        assert lines[1] == "theta_deg,phi_deg,sigma_dbsm,re_Etheta,im_Etheta,re_Ephi,im_Ephi"
        assert len(lines) == 5
        assert lines[2].startswith("0.000000,0.000000,")


class TestFarFieldError():

    def test_relative_to_maximum(self):
        grid = phi_cut(5.0)
        assert far_field_error(_pattern(grid, 1.01), _pattern(grid)) == pytest.approx(0.01)

    def test_zero_reference(self):
        grid = phi_cut(5.0)
        assert far_field_error(_pattern(grid), _pattern(grid, 0.0)) == pytest.approx(2.0)

    def test_grid_mismatch(self):
        with pytest.raises(GridMismatchError):
            far_field_error(_pattern(phi_cut(5.0)), _pattern(phi_cut(10.0)))
        with pytest.raises(GridMismatchError):
            _pattern(phi_cut(5.0)) + _pattern(phi_cut(5.0, 90.0))


class TestRadiation():

    def test_zero_current(self, sphere_quadrature):
        grid = phi_cut(30.0)
        pattern = far_field(np.zeros(2 * sphere_quadrature.n_vertices), sphere_quadrature, grid, 1.0)
        assert np.array_equal(pattern.field, np.zeros((len(grid), 3)))

    def test_field_is_transverse(self, sphere_quadrature):
        coefficients = np.random.default_rng(11).standard_normal(2 * sphere_quadrature.n_vertices)
        pattern = far_field(coefficients, sphere_quadrature, phi_cut(15.0), 2.0)
        radial = np.einsum("ni,ni->n", pattern.field, pattern.directions)
        assert np.allclose(radial, 0.0, atol=1e-10 * np.abs(pattern.field).max())

    def test_sampled_currents_are_tangent(self, sphere_quadrature):
        coefficients = np.random.default_rng(12).standard_normal(2 * sphere_quadrature.n_vertices)
        J = sample_currents(coefficients, sphere_quadrature)
        assert J.shape == (sphere_quadrature.n_samples, 3)
        assert np.allclose(np.einsum("ni,ni->n", J, sphere_quadrature.normals), 0.0, atol=1e-9)

    def test_linear_in_currents(self, sphere_quadrature):
        rng = np.random.default_rng(13)
        (a, b) = rng.standard_normal((2, 2 * sphere_quadrature.n_vertices))
        grid = phi_cut(15.0)
        combined = far_field(a + 2.0j * b, sphere_quadrature, grid, 2.0)
        separate = far_field(a, sphere_quadrature, grid, 2.0).field + 2.0j * far_field(b, sphere_quadrature, grid, 2.0).field
        assert np.allclose(combined.field, separate, rtol=0.0, atol=1e-12 * np.abs(combined.field).max())

    def test_outgoing_sign(self, sphere_quadrature):
        # a current along x on a small sphere radiates -j kappa eta / 4 pi times its moment at broadside
        V = sphere_quadrature.n_vertices
        x = sphere_quadrature.surface.mesh.vertices[:, 0]
        coefficients = np.concatenate([x, np.zeros(V)])
        moment = sample_currents(coefficients, sphere_quadrature).T @ sphere_quadrature.area_elements
        grid = DirectionGrid(theta=np.array([np.pi / 2.0]), phi=np.array([np.pi / 2.0]))
        pattern = far_field(coefficients, sphere_quadrature, grid, 1e-3)
        expected = -(1j * 1e-3 * ETA_0 / (4.0 * np.pi)) * moment[0]
        assert pattern.field[0, 0] == pytest.approx(expected, rel=1e-5)



class TestMie():

    def test_methods_agree(self):
        mu = np.cos(np.linspace(0.0, np.pi, 37))
        (S1, S2) = amplitudes(3.0, mu)
        (R1, R2) = amplitudes(3.0, mu, method="riccati")
        assert np.allclose(S1, R1, rtol=1e-8, atol=1e-10)
        assert np.allclose(S2, R2, rtol=1e-8, atol=1e-10)

    def test_forward_amplitudes_coincide(self):
        (S1, S2) = amplitudes(1.5, np.array([1.0, -1.0]))
        assert S1[0] == pytest.approx(S2[0])
        assert S1[1] == pytest.approx(-S2[1])

    @pytest.mark.parametrize("x", [0.5, 2.0, 10.0])
    def test_lossless_efficiencies(self, x):
        (q_ext, q_sca) = efficiencies(x)
        assert q_ext == pytest.approx(q_sca, rel=1e-8)

    def test_optical_limit(self):
        (q_ext, _) = efficiencies(60.0)
        assert q_ext == pytest.approx(2.0, rel=0.2)

    def test_coefficient_count(self):
        (a, b) = coefficients(2.0, 12)
        assert a.shape == b.shape == (12,)

    def test_rayleigh_limit(self):
        radius = 0.05
        wave = plane_wave([0.0, 0.0, 1.0], [1.0, 0.0, 0.0], 1.0)
        grid = DirectionGrid(theta=np.array([np.pi]), phi=np.array([0.0]))
        pattern = mie_reference(radius, wave, grid)
        assert pattern.rcs[0] == pytest.approx(rayleigh_backscatter(radius, 1.0), rel=1e-2)

    def test_pattern_is_transverse(self, wave):
        pattern = mie_reference(1.0, wave, phi_cut(10.0, 30.0))
        radial = np.einsum("ni,ni->n", pattern.field, pattern.directions)
        assert np.allclose(radial, 0.0, atol=1e-12)

    def test_linear_in_polarization(self):
        grid = phi_cut(10.0, 30.0)
        (e1, e2) = (np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]))
        (first, second) = (mie_reference(1.0, plane_wave([0.0, 0.0, 1.0], e, 2.0), grid) for e in (e1, e2))
        combined = mie_reference(1.0, plane_wave([0.0, 0.0, 1.0], (e1 + e2) / np.sqrt(2.0), 2.0), grid)
        expected = (first.field + second.field) / np.sqrt(2.0)
        assert np.allclose(combined.field, expected, rtol=0.0, atol=1e-12 * np.abs(expected).max())

    @pytest.mark.parametrize("x", [0.5, 4.0, 20.0])
    def test_series_is_converged(self, x):
        mu = np.cos(np.linspace(0.0, np.pi, 19))
        (S1, S2) = amplitudes(x, mu)
        (L1, L2) = amplitudes(x, mu, n_max=series_length(x) + 10)
        scale = max(np.abs(S1).max(), np.abs(S2).max())
        assert np.abs(L1 - S1).max() <= 1e-10 * scale
        assert np.abs(L2 - S2).max() <= 1e-10 * scale


    def test_rotated_frame(self, wave):
        # the same physical problem described along a different axis
        grid = phi_cut(10.0)
        tilted = plane_wave([1.0, 0.0, 0.0], [0.0, 0.0, -1.0], 2.0)
        rotated = DirectionGrid(
            theta=np.arccos(-np.sin(grid.theta)),
            phi=np.where(np.cos(grid.theta) >= 0.0, 0.0, np.pi),
        )
        expected = mie_reference(1.0, wave, grid).rcs
        actual = mie_reference(1.0, tilted, rotated).rcs
        assert np.allclose(actual, expected, rtol=1e-8)

    @pytest.mark.parametrize("radius", [0.0, -1.0])
    def test_radius_must_be_positive(self, wave, radius):
        with pytest.raises(ValueError):
            mie_reference(radius, wave, phi_cut(10.0))
