import numpy as np
import pytest

from loop_bie.mesh import (
    ControlMesh,
    bumpy_cube,
    limit_sphere
)
from loop_bie.surface import (
    LimitSurface,
    SurfaceQuadrature,
    composite_rule,
    current_basis_at,
    evaluate_patch,
    mean_curvature_max,
    surface_area
)
from loop_bie.surface.box_spline import box_spline
from loop_bie.surface.evaluation import patch_basis
from loop_bie.surface.stencils import (
    PRECOMPUTED_VALENCES,
    irregular_stencils
)


def _triangle_params(steps: int = 6) -> np.ndarray:
    return np.array([
        (i / steps, j / steps)
        for i in range(steps + 1)
        for j in range(steps + 1 - i)
    ])


class TestBoxSpline():

    def test_partition_of_unity(self):
        values = box_spline(_triangle_params())
        assert np.allclose(values.value.sum(axis=1), 1.0)
        for derivative in (values.d_v, values.d_w, values.d_vv, values.d_vw, values.d_ww):
            assert np.allclose(derivative.sum(axis=1), 0.0, atol=1e-12)

    def test_non_negative(self):
        values = box_spline(_triangle_params())
        assert np.all(values.value >= -1e-14)

    def test_shapes(self):
        values = box_spline(np.array([0.2, 0.3]))
        assert values.value.shape == (1, 12)


class TestPatchBasis():

    @pytest.mark.parametrize("valence", [3, 4, 5, 7, 8])
    def test_irregular_partition_of_unity(self, valence):
        params = _triangle_params()
        basis = patch_basis(valence, False, params)
        assert basis.value.shape == (len(params), valence + 6)
        assert np.allclose(basis.value.sum(axis=1), 1.0)
        # row 0 sits on the extraordinary corner
        assert np.allclose(basis.d_v[1:].sum(axis=1), 0.0, atol=1e-9)
        assert np.allclose(basis.d_w[1:].sum(axis=1), 0.0, atol=1e-9)

    def test_corner_uses_limit_mask(self):
        basis = patch_basis(5, False, np.array([[0.0, 0.0]]))
        assert np.allclose(basis.value[0], irregular_stencils(5).limit_mask)

    def test_subdivision_rows_sum_to_one(self):
        for valence in (3, 5, 9):
            stencils = irregular_stencils(valence)
            assert np.allclose(stencils.subdivision.sum(axis=1), 1.0)
            assert np.allclose(stencils.picks.sum(axis=2), 1.0)

    def test_valence_below_three(self):
        with pytest.raises(ValueError):
            irregular_stencils(2)

    def test_common_valences_are_precomputed(self):
        hits = irregular_stencils.cache_info().hits
        for valence in PRECOMPUTED_VALENCES:
            irregular_stencils(valence)
        assert irregular_stencils.cache_info().hits == hits + len(PRECOMPUTED_VALENCES)



class TestLimitSurface():

    def test_corners_lie_on_sphere(self, sphere_surface):
        for patch in sphere_surface.patches:
            samples = sphere_surface.evaluate(patch.face_index, np.array([[0.0, 0.0]]))
            assert np.linalg.norm(samples.position[0]) == pytest.approx(1.0, abs=1e-9)

    def test_normals_point_outward(self, sphere_quadrature):
        assert np.allclose(np.linalg.norm(sphere_quadrature.normals, axis=1), 1.0)
        assert np.all(np.einsum("ni,ni->n", sphere_quadrature.normals, sphere_quadrature.points) > 0.0)

    def test_mean_curvature(self, sphere_quadrature):
        assert np.median(sphere_quadrature.mean_curvature) == pytest.approx(1.0, rel=0.15)

    def test_evaluate_patch(self, sphere_surface):
        patch = sphere_surface.patches[0]
        sample = evaluate_patch(patch, sphere_surface.mesh, (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0))
        samples = sphere_surface.evaluate(0, np.array([[1.0 / 3.0, 1.0 / 3.0]]))
        assert np.allclose(sample.position, samples.position[0])
        assert sample.basis_values.sum() == pytest.approx(1.0)

        (j1, j2) = current_basis_at(sample)
        assert np.allclose(j1 @ sample.normal, 0.0, atol=1e-10)
        assert np.allclose(np.einsum("kd,kd->k", j1, j2), 0.0, atol=1e-10)

    def test_evaluate_patch_outside(self, sphere_surface):
        with pytest.raises(ValueError):
            evaluate_patch(sphere_surface.patches[0], sphere_surface.mesh, (0.8, 0.4, -0.2))

    def test_scaled(self, sphere_surface):
        scaled = sphere_surface.scaled(2.0)
        assert surface_area(scaled, depth=1) == pytest.approx(4.0 * surface_area(sphere_surface, depth=1))

    def test_area(self):
        surface = LimitSurface(limit_sphere(2))
        assert surface_area(surface) == pytest.approx(4.0 * np.pi, rel=2e-2)


def _shared_edges(surface):
    owners = {}
    for patch in surface.patches:
        corners = tuple(int(c) for c in patch.corners)
        for i in range(3):
            edge = tuple(sorted((corners[i], corners[(i + 1) % 3])))
            owners.setdefault(edge, []).append((patch.face_index, corners))
    return owners.items()


def _edge_params(corners, a, b, t):
    bary = np.zeros((len(t), 3))
    bary[:, corners.index(a)] = 1.0 - t
    bary[:, corners.index(b)] = t
    return bary[:, 1:]


class TestSmoothness():

    @pytest.fixture(scope="class")
    def surface(self):
        return LimitSurface(bumpy_cube())

    def test_normals_agree_across_edges(self, surface):
        t = np.array([0.25, 0.5, 0.75])
        for ((a, b), [(f, one), (g, two)]) in _shared_edges(surface):
            first = surface.evaluate(f, _edge_params(one, a, b, t))
            second = surface.evaluate(g, _edge_params(two, a, b, t))
            assert np.allclose(first.position, second.position, rtol=0.0, atol=1e-10)
            assert np.allclose(first.normal, second.normal, rtol=0.0, atol=1e-8)

    def test_affine_precision(self):
        mesh = limit_sphere(1)
        A = np.array([[1.2, 0.3, 0.0], [0.1, 0.9, 0.2], [0.0, -0.1, 1.1]])
        offset = np.array([0.5, -1.0, 2.0])
        mapped = LimitSurface(ControlMesh(mesh.vertices @ A.T + offset, mesh.triangles))
        surface = LimitSurface(mesh)

        params = _triangle_params(4)
        for face in (0, 7, 33):
            expected = surface.evaluate(face, params).position @ A.T + offset
            assert np.allclose(mapped.evaluate(face, params).position, expected, rtol=0.0, atol=1e-12)

    def test_gradient_of_linear_field(self, sphere_surface, sphere_quadrature):
        c = np.array([0.3, -1.2, 0.7])
        a = sphere_surface.mesh.vertices @ c
        gradient = np.stack([component @ a for component in sphere_quadrature.gradients], axis=1)
        normals = sphere_quadrature.normals
        tangential = c - normals * (normals @ c)[:, None]
        assert np.allclose(gradient, tangential, rtol=0.0, atol=1e-10)


class TestMeanCurvature():

    @pytest.fixture(scope="class")
    def surface(self):
        return LimitSurface(limit_sphere(2))

    def test_sphere(self, surface):
        # finite near extraordinary corners, close to 1/a elsewhere
        assert mean_curvature_max(surface, 2) == pytest.approx(1.0, rel=0.25)

    def test_non_decreasing_in_depth(self, surface):
        assert mean_curvature_max(surface, 3) >= mean_curvature_max(surface, 2) * (1.0 - 1e-12)

    def test_scaling(self, surface):
        half = LimitSurface(limit_sphere(2, 0.5))
        assert mean_curvature_max(half, 2) == pytest.approx(2.0 * mean_curvature_max(surface, 2), rel=1e-9)


class TestQuadrature():

    @pytest.mark.parametrize("rule", [1, 3, 6, 7])
    def test_weights_sum_to_reference_area(self, rule):
        for depth in (0, 1, 2):
            composite = composite_rule(depth, rule)
            assert composite.weights.sum() == pytest.approx(0.5)
            assert len(composite.weights) == rule * 4 ** depth

    def test_unknown_rule(self):
        with pytest.raises(ValueError):
            composite_rule(0, 5)

    def test_sample_layout(self, sphere_surface, sphere_quadrature):
        n_faces = len(sphere_surface.patches)
        assert sphere_quadrature.n_samples == n_faces * sphere_quadrature.points_per_patch
        assert sphere_quadrature.values.shape == (sphere_quadrature.n_samples, sphere_surface.n_vertices)
        assert np.all(sphere_quadrature.patch_of_sample[sphere_quadrature.patch_samples(3)] == 3)

    def test_partition_of_unity(self, sphere_quadrature):
        ones = np.ones(sphere_quadrature.n_vertices)
        assert np.allclose(sphere_quadrature.values @ ones, 1.0)
        for component in sphere_quadrature.gradients:
            assert np.allclose(component @ ones, 0.0, atol=1e-10)

    def test_rotated_gradients_are_tangent(self, sphere_quadrature):
        rotated = np.stack([c.toarray() for c in sphere_quadrature.current_basis(2)], axis=-1)
        assert np.allclose(np.einsum("nkd,nd->nk", rotated, sphere_quadrature.normals), 0.0, atol=1e-10)

    def test_area_agrees_with_finer_rule(self, sphere_surface, sphere_quadrature):
        assert sphere_quadrature.area == pytest.approx(surface_area(sphere_surface), rel=1e-3)

    def test_divergence_matches_laplacian(self, sphere_quadrature):
        difference = (sphere_quadrature.divergences - sphere_quadrature.laplacians).toarray()
        scale = np.abs(sphere_quadrature.laplacians.toarray()).max()
        assert np.abs(difference).max() <= 1e-6 * scale
