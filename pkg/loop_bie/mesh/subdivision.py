from __future__ import annotations

from typing import (
    List,
    NamedTuple,
    Optional,
    Tuple
)

import logging
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from ..__about__ import __name_public__
from .control_mesh import ControlMesh

_logger = logging.getLogger(f"{__name_public__}:mesh")

# Ring position (own ordering) of each box-spline control point 1..12
BOX_SPLINE_ORDER = np.array([5, 4, 6, 0, 3, 7, 1, 2, 11, 8, 9, 10])


def loop_beta(valence: int) -> float:
    """Neighbour weight of the Loop vertex rule."""
    n = float(valence)
    return (5.0 / 8.0 - (3.0 / 8.0 + np.cos(2.0 * np.pi / n) / 4.0) ** 2) / n


def limit_chi(valence: int) -> float:
    """Neighbour weight of the limit position mask (centre weight is `1 - n * chi`)."""
    return 1.0 / (3.0 / (8.0 * loop_beta(valence)) + valence)


def subdivision_matrix(mesh: ControlMesh) -> Tuple[sp.csr_matrix, np.ndarray]:
    """One Loop step as a sparse `(V + E) x V` matrix, plus the refined triangles.

    Old vertices keep their indices, edge vertices follow in `mesh.edges` order.
    """

    vertices_count = mesh.n_vertices
    triangles = mesh.triangles
    edges = mesh.edges
    edges_count = len(edges)

    valence = mesh.valence
    beta = np.array([0.0] + [loop_beta(n) for n in range(1, int(valence.max()) + 1)])

    rows: List[np.ndarray] = []
    cols: List[np.ndarray] = []
    data: List[np.ndarray] = []

    # Vertex rule
    rows.append(np.arange(vertices_count))
    cols.append(np.arange(vertices_count))
    data.append(1.0 - valence * beta[valence])

    (i, j) = edges.T
    rows += [i, j]
    cols += [j, i]
    data += [beta[valence[i]], beta[valence[j]]]

    # Edge rule
    edge_rows = vertices_count + np.arange(edges_count)
    rows += [edge_rows, edge_rows]
    cols += [i, j]
    data += [np.full(edges_count, 3.0 / 8.0)] * 2

    key = edges[:, 0] * vertices_count + edges[:, 1]
    face_edges = np.empty_like(triangles)
    for corner in range(3):
        a = triangles[:, corner]
        b = triangles[:, (corner + 1) % 3]
        c = triangles[:, (corner + 2) % 3]
        edge_index = np.searchsorted(key, np.minimum(a, b) * vertices_count + np.maximum(a, b))
        face_edges[:, corner] = edge_index

        rows.append(vertices_count + edge_index)
        cols.append(c)
        data.append(np.full(len(c), 1.0 / 8.0))

    matrix = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(vertices_count + edges_count, vertices_count)
    ).tocsr()

    (a, b, c) = triangles.T
    (m_ab, m_bc, m_ca) = (vertices_count + face_edges).T
    refined = np.concatenate([
        np.stack([a, m_ab, m_ca], axis=1),
        np.stack([b, m_bc, m_ab], axis=1),
        np.stack([c, m_ca, m_bc], axis=1),
        np.stack([m_ab, m_bc, m_ca], axis=1),
    ])

    return (matrix, refined)


def loop_subdivide(mesh: ControlMesh) -> ControlMesh:
    """One step of Loop subdivision. `V' = V + E`, `F' = 4F`."""

    (matrix, refined) = subdivision_matrix(mesh)

    metadata = mesh.metadata
    metadata["subdivisions"] = int(metadata.get("subdivisions", 0)) + 1

    refined_mesh = ControlMesh(matrix @ mesh.vertices, refined, metadata=metadata, validate=False)

    _logger.debug(f"Loop subdivision {mesh.n_vertices} -> {refined_mesh.n_vertices} vertices")

    return refined_mesh


def limit_position_matrix(mesh: ControlMesh) -> sp.csr_matrix:
    """Sparse map from control points to the limit positions of the control vertices."""

    valence = mesh.valence
    chi = np.array([limit_chi(n) if n > 0 else 0.0 for n in range(int(valence.max()) + 1)])
    (i, j) = mesh.edges.T

    return sp.coo_matrix(
        (
            np.concatenate([1.0 - valence * chi[valence], chi[valence[i]], chi[valence[j]]]),
            (np.concatenate([np.arange(mesh.n_vertices), i, j]), np.concatenate([np.arange(mesh.n_vertices), j, i]))
        ),
        shape=(mesh.n_vertices, mesh.n_vertices)
    ).tocsr()


def limit_normals(mesh: ControlMesh) -> np.ndarray:
    """Unit limit normals at the control vertices from the cosine and sine tangent masks."""

    normals = np.empty((mesh.n_vertices, 3))
    for (v, ring) in enumerate(mesh.rings):
        n = len(ring)
        angles = 2.0 * np.pi * np.arange(n) / n
        points = mesh.vertices[ring]
        t1 = np.cos(angles) @ points
        t2 = np.sin(angles) @ points
        normal = np.cross(t1, t2)
        normals[v] = normal / np.linalg.norm(normal)
    return normals


class PatchParameterization(NamedTuple):
    """A limit-surface patch.

    `ring` holds the `N + 6` control indices: the (irregular or lowest) corner `e`, its
    counterclockwise one-ring starting at the next corner `b`, then three vertices around `b`
    and two around `c`. Barycentric parameters are `(u, v, w)` with `u = 1` at `e`, `v = 1` at
    `b` and `w = 1` at `c`.
    """

    face_index: int
    ring: np.ndarray
    corners: Tuple[int, int, int]
    valence: int
    irregular_corner: Optional[int]

    @property
    def is_regular(self) -> bool:
        return self.irregular_corner is None


def _rotate_face(face: Tuple[int, int, int], valence: np.ndarray) -> Tuple[Tuple[int, int, int], Optional[int]]:
    irregular = [corner for corner in range(3) if valence[face[corner]] != 6]

    if irregular:
        start = irregular[0]
    else:
        start = int(np.argmin(face))

    return ((face[start], face[(start + 1) % 3], face[(start + 2) % 3]), irregular[0] if irregular else None)


def patch_ring(mesh: ControlMesh, e: int, b: int, c: int) -> np.ndarray:
    around_e = mesh.fan(e, b)
    around_b = mesh.fan(b, c)
    around_c = mesh.fan(c, e)
    return np.array([e, *around_e, *around_b[3:6], *around_c[3:5]], dtype=np.int64)


class PatchTable():
    """All patches of a control mesh that has at most one extraordinary corner per face."""

    _mesh: ControlMesh
    _pre_subdivided: bool

    def __init__(self, mesh: ControlMesh, pre_subdivided: bool = False):
        self._mesh = mesh
        self._pre_subdivided = pre_subdivided

    @property
    def mesh(self) -> ControlMesh:
        return self._mesh

    @property
    def pre_subdivided(self) -> bool:
        return self._pre_subdivided

    def __len__(self) -> int:
        return self._mesh.n_faces

    def __getitem__(self, index: int) -> PatchParameterization:
        return self.patches[index]

    def __iter__(self):
        return iter(self.patches)

    @cached_property
    def patches(self) -> List[PatchParameterization]:
        mesh = self._mesh
        valence = mesh.valence
        patches = []

        for (face_index, face) in enumerate(mesh.triangles.tolist()):
            ((e, b, c), irregular_corner) = _rotate_face(tuple(face), valence)
            patches.append(PatchParameterization(
                face_index=face_index,
                ring=patch_ring(mesh, e, b, c),
                corners=(e, b, c),
                valence=int(valence[e]),
                irregular_corner=irregular_corner,
            ))

        return patches

    @cached_property
    def adjacency(self) -> List[set]:
        """Patches sharing at least one corner vertex with each patch (itself included)."""
        triangles = self._mesh.triangles
        incident: List[List[int]] = [[] for _ in range(self._mesh.n_vertices)]
        for (face_index, face) in enumerate(triangles.tolist()):
            for v in face:
                incident[v].append(face_index)
        return [set(f for v in face for f in incident[v]) for face in triangles.tolist()]

    @cached_property
    def centers(self) -> np.ndarray:
        return self._mesh.vertices[self._mesh.triangles].mean(axis=1)


def _needs_refinement(mesh: ControlMesh) -> bool:
    irregular = (mesh.valence != 6)[mesh.triangles]
    return bool(np.any(irregular.sum(axis=1) >= 2))


def build_patches(mesh: ControlMesh) -> PatchTable:
    """One patch per face. Subdivides once first when a face has two or more extraordinary corners.

    The pre-subdivision is recorded in `PatchTable.pre_subdivided` and in the mesh metadata.
    """

    if _needs_refinement(mesh):
        _logger.info("Faces with several extraordinary corners found, subdividing once")
        refined = loop_subdivide(mesh)
        metadata = refined.metadata
        metadata["pre_subdivided"] = 1
        return PatchTable(ControlMesh(refined.vertices, refined.triangles, metadata=metadata, validate=False), pre_subdivided=True)

    return PatchTable(mesh)
