import io

import numpy as np
import pytest
from scipy.spatial import cKDTree

from loop_bie.mesh import (
    ControlMesh,
    DegenerateFaceError,
    MeshFormatError,
    NonManifoldError,
    OrientationError,
    TopologyError,
    build_patches,
    bumpy_cube,
    cube,
    dump_control_mesh,
    fitted_radius,
    icosahedron,
    icosphere,
    limit_normals,
    limit_position_matrix,
    limit_sphere,
    load_control_mesh,
    loop_subdivide,
    octahedron,
    validate_topology
)
from loop_bie.mesh.shapes import torus_arrays
from loop_bie.mesh.subdivision import (
    limit_chi,
    loop_beta
)


class TestControlMesh():

    def test_tetrahedron_counts(self, tetra):
        report = tetra.topology()
        assert (report.V, report.E, report.F, report.chi) == (4, 6, 4, 2)
        assert report.genus == 0
        assert report.supported

    def test_edges_are_sorted_pairs(self, ico):
        edges = ico.edges
        assert len(edges) == 30
        assert np.all(edges[:, 0] < edges[:, 1])
        assert [tuple(e) for e in edges.tolist()] == sorted(tuple(e) for e in edges.tolist())

    def test_valence(self, ico, tetra):
        assert np.all(ico.valence == 5)
        assert np.all(tetra.valence == 3)

    def test_rings_are_counterclockwise_fans(self, ico):
        for (v, ring) in enumerate(ico.rings):
            assert len(ring) == 5
            # consecutive ring vertices with v form a face of the mesh
            faces = {tuple(f[f.index(v):] + f[:f.index(v)]) for f in ico.triangles.tolist() if v in f}
            for i in range(5):
                assert (v, ring[i], ring[(i + 1) % 5]) in faces

    def test_half_edge_twins(self, ico):
        half_edges = ico.half_edges
        assert len(half_edges.origin) == 60
        assert np.array_equal(half_edges.twin[half_edges.twin], np.arange(60))
        assert np.array_equal(half_edges.origin[half_edges.twin], half_edges.target)
        assert np.array_equal(half_edges.origin[half_edges.next], half_edges.target)

    def test_metadata_is_copied(self, tetra):
        metadata = tetra.metadata
        metadata["shape"] = "changed"
        assert "shape" not in tetra.metadata

    def test_scaled(self, ico):
        scaled = ico.scaled(2.0)
        assert np.allclose(np.linalg.norm(scaled.vertices, axis=1), 2.0)
        assert np.array_equal(scaled.triangles, ico.triangles)

    def test_vertices_are_read_only(self, tetra):
        with pytest.raises(ValueError):
            tetra.vertices[0, 0] = 5.0


class TestValidation():

    def test_index_out_of_range(self, tetra):
        triangles = tetra.triangles.copy()
        triangles[0, 0] = 7
        with pytest.raises(MeshFormatError):
            ControlMesh(tetra.vertices, triangles)

    def test_degenerate_face(self, tetra):
        triangles = tetra.triangles.copy()
        triangles[0] = [0, 0, 1]
        with pytest.raises(DegenerateFaceError):
            ControlMesh(tetra.vertices, triangles)

    def test_open_surface(self, tetra):
        with pytest.raises(NonManifoldError):
            ControlMesh(tetra.vertices, tetra.triangles[:3])

    def test_flipped_face(self, tetra):
        triangles = tetra.triangles.copy()
        triangles[0] = triangles[0][::-1]
        with pytest.raises(OrientationError):
            ControlMesh(tetra.vertices, triangles)

    def test_torus_is_rejected(self):
        (vertices, triangles) = torus_arrays()
        with pytest.raises(TopologyError) as error:
            ControlMesh(vertices, triangles)
        assert error.value.euler_characteristic == 0

    def test_torus_report_never_raises(self):
        (vertices, triangles) = torus_arrays()
        report = validate_topology(vertices, triangles)
        assert report.chi == 0
        assert report.genus == 1
        assert not report.supported

    def test_report_text(self, tetra):
        text = tetra.topology().to_text()
        assert "chi = 2" in text
        assert "supported = True" in text


class TestMeshFiles():

    def test_obj_reload_is_exact(self):
        mesh = limit_sphere(1)
        reloaded = load_control_mesh(io.StringIO(dump_control_mesh(mesh, "obj")), format="obj")
        assert np.array_equal(reloaded.vertices, mesh.vertices)
        assert np.array_equal(reloaded.triangles, mesh.triangles)

    def test_off_reload(self, ico):
        reloaded = load_control_mesh(io.StringIO(dump_control_mesh(ico, "off")), format="off")
        assert np.array_equal(reloaded.vertices, ico.vertices)
        assert np.array_equal(reloaded.triangles, ico.triangles)

    def test_format_guessed_from_extension(self, dir):
        file = f"{dir}/octahedron.off"
        with open(file, "w") as stream:
            stream.write(dump_control_mesh(octahedron(), "off"))
        assert load_control_mesh(file).n_vertices == 6

    def test_stream_needs_format(self, tetra):
        with pytest.raises(MeshFormatError):
            load_control_mesh(io.StringIO(dump_control_mesh(tetra)))

    def test_quad_faces_are_rejected(self):
        text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n"
        with pytest.raises(MeshFormatError):
            load_control_mesh(io.StringIO(text), format="obj")

    def test_bad_record(self):
        with pytest.raises(MeshFormatError):
            load_control_mesh(io.StringIO("v 0 zero 0\n"), format="obj")

    def test_no_faces(self):
        with pytest.raises(MeshFormatError):
            load_control_mesh(io.StringIO("v 0 0 0\nv 1 0 0\nv 0 1 0\n"), format="obj")

    def test_missing_file(self, dir):
        with pytest.raises(FileNotFoundError):
            load_control_mesh(f"{dir}/missing.obj")

    def test_bumpy_cube_asset(self, bumpy_cube_file):
        mesh = load_control_mesh(bumpy_cube_file)
        generated = bumpy_cube(4)
        assert (mesh.n_vertices, mesh.n_faces) == (98, 192)
        assert np.array_equal(mesh.triangles, generated.triangles)
        assert np.allclose(mesh.vertices, generated.vertices, atol=1e-9)


class TestSubdivision():

    def test_counts(self, ico):
        refined = loop_subdivide(ico)
        assert refined.n_vertices == ico.n_vertices + len(ico.edges)
        assert refined.n_faces == 4 * ico.n_faces
        assert refined.metadata["subdivisions"] == 1
        assert loop_subdivide(refined).metadata["subdivisions"] == 2

    def test_refined_mesh_is_valid(self, tetra):
        refined = loop_subdivide(tetra)
        refined.validate()
        assert refined.topology().chi == 2

    def test_new_vertices_are_regular(self, ico_refined):
        valence = ico_refined.valence
        assert np.all(valence[:12] == 5)
        assert np.all(valence[12:] == 6)

    def test_beta(self):
        assert loop_beta(3) == pytest.approx(3.0 / 16.0)
        assert loop_beta(6) == pytest.approx(1.0 / 16.0)

    def test_limit_mask_rows_sum_to_one(self, ico_refined):
        matrix = limit_position_matrix(ico_refined)
        assert np.allclose(np.asarray(matrix.sum(axis=1)).reshape(-1), 1.0)

    def test_regular_limit_mask(self):
        assert 6 * limit_chi(6) == pytest.approx(0.5)

    def test_subdivision_shrinks_convex_hull(self, ico):
        refined = loop_subdivide(ico)
        assert np.max(np.linalg.norm(refined.vertices, axis=1)) <= 1.0 + 1e-12

    def test_icosahedral_symmetry_is_kept(self, ico):
        refined = loop_subdivide(loop_subdivide(ico))
        tree = cKDTree(refined.vertices)
        # a mirror plane and the threefold axis through (1, 1, 1)
        for image in (refined.vertices * [-1.0, 1.0, 1.0], refined.vertices[:, [1, 2, 0]]):
            (gaps, _) = tree.query(image)
            assert gaps.max() < 1e-14



class TestPatches():

    def test_icosahedron_is_pre_subdivided(self, ico):
        table = build_patches(ico)
        assert table.pre_subdivided
        assert len(table) == 80
        assert table.mesh.metadata["pre_subdivided"] == 1

    def test_at_most_one_extraordinary_corner(self, ico_refined):
        table = build_patches(ico_refined)
        assert not table.pre_subdivided
        valence = table.mesh.valence
        for patch in table:
            irregular = [v for v in patch.corners if valence[v] != 6]
            assert len(irregular) <= 1
            assert len(patch.ring) == patch.valence + 6
            if irregular:
                assert patch.corners[0] == irregular[0]
                assert not patch.is_regular

    def test_ring_starts_with_corner_fan(self, ico_refined):
        table = build_patches(ico_refined)
        for patch in table:
            (e, b, c) = patch.corners
            assert patch.ring[0] == e
            assert patch.ring[1] == b
            assert c in patch.ring[1:patch.valence + 1]


class TestShapes():

    @pytest.mark.parametrize("level", [0, 1, 2, 3])
    def test_icosphere_counts(self, level):
        mesh = icosphere(level, 2.0)
        assert mesh.n_vertices == 10 * 4 ** level + 2
        assert np.allclose(np.linalg.norm(mesh.vertices, axis=1), 2.0)

    def test_limit_sphere_interpolates(self):
        mesh = limit_sphere(2, 0.5)
        limit = limit_position_matrix(mesh) @ mesh.vertices
        assert np.allclose(np.linalg.norm(limit, axis=1), 0.5, atol=1e-10)

    def test_limit_normals_point_outward(self):
        mesh = limit_sphere(2)
        radial = mesh.vertices / np.linalg.norm(mesh.vertices, axis=1)[:, None]
        normals = limit_normals(mesh)
        assert np.allclose(np.linalg.norm(normals, axis=1), 1.0)
        assert np.all(np.einsum("ni,ni->n", normals, radial) > 0.98)

    def test_fitted_radius(self):
        points = icosphere(2, 3.0).vertices + np.array([1.0, -2.0, 0.5])
        (radius, center) = fitted_radius(points)
        assert radius == pytest.approx(3.0)
        assert np.allclose(center, [1.0, -2.0, 0.5])

    def test_cube_counts(self):
        for n in (1, 2, 3):
            mesh = cube(n, 0.5)
            assert mesh.n_vertices == 6 * n ** 2 + 2
            assert np.max(np.abs(mesh.vertices)) == pytest.approx(0.5)

    def test_bumpy_cube_is_valid(self):
        mesh = bumpy_cube()
        assert mesh.topology().supported
        assert mesh.n_vertices == 98
