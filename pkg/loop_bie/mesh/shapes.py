"""Control meshes used by the test suites and the run files."""

from __future__ import annotations

from typing import (
    Tuple
)

import logging

import numpy as np
import scipy.sparse.linalg as spla

from ..__about__ import __name_public__
from .control_mesh import ControlMesh
from .subdivision import (
    limit_position_matrix,
    subdivision_matrix
)

_logger = logging.getLogger(f"{__name_public__}:mesh")


def tetrahedron() -> ControlMesh:
    vertices = np.array([
        [1.0, 1.0, 1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
    ])
    triangles = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
    return ControlMesh(vertices, triangles)


def octahedron() -> ControlMesh:
    vertices = np.array([
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ])
    triangles = np.array([
        [0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4],
        [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5],
    ])
    return ControlMesh(vertices, triangles)


def icosahedron() -> ControlMesh:
    """Regular icosahedron with vertices on the unit sphere."""

    t = (1.0 + np.sqrt(5.0)) / 2.0
    vertices = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=np.float64)
    vertices /= np.linalg.norm(vertices, axis=1)[:, None]
    triangles = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ])
    return ControlMesh(vertices, triangles)


def icosphere(level: int, radius: float = 1.0) -> ControlMesh:
    """Icosahedron refined `level` times by edge midpoints projected on the sphere.

    Vertex counts are `10 * 4**level + 2` (12, 42, 162, 642, 2562, ...).
    """

    mesh = icosahedron()
    for _ in range(level):
        (_, refined) = subdivision_matrix(mesh)
        (i, j) = mesh.edges.T
        vertices = np.concatenate([mesh.vertices, (mesh.vertices[i] + mesh.vertices[j]) / 2.0])
        vertices /= np.linalg.norm(vertices, axis=1)[:, None]
        mesh = ControlMesh(vertices, refined, validate=False)

    return ControlMesh(mesh.vertices * radius, mesh.triangles, metadata={"shape": "icosphere", "level": level})


def limit_sphere(level: int, radius: float = 1.0) -> ControlMesh:
    """Control net whose limit surface passes through the icosphere vertices on a sphere of `radius`.

    The control points solve `L X = P` with `L` the limit position masks and `P` the icosphere.
    """

    target = icosphere(level, radius)
    matrix = limit_position_matrix(target).tocsc()
    control = np.column_stack([spla.spsolve(matrix, target.vertices[:, axis]) for axis in range(3)])

    _logger.debug(f"Limit sphere control net fitted ({target.n_vertices} vertices)")

    return ControlMesh(control, target.triangles, metadata={"shape": "limit-sphere", "level": level, "radius": radius})


def fitted_radius(points: np.ndarray) -> Tuple[float, np.ndarray]:
    """Least-squares sphere through points, returns `(radius, center)`."""

    points = np.asarray(points, dtype=np.float64)
    system = np.column_stack([2.0 * points, np.ones(len(points))])
    (solution, *_) = np.linalg.lstsq(system, np.sum(points ** 2, axis=1), rcond=None)
    center = solution[:3]
    radius = float(np.sqrt(solution[3] + center @ center))
    return (radius, center)


def torus_arrays(n_major: int = 12, n_minor: int = 8, major: float = 1.0, minor: float = 0.35) -> Tuple[np.ndarray, np.ndarray]:
    """A genus one triangulated torus, returned as raw arrays (it is not a valid control mesh)."""

    theta = 2.0 * np.pi * np.arange(n_major) / n_major
    phi = 2.0 * np.pi * np.arange(n_minor) / n_minor
    (T, P) = np.meshgrid(theta, phi, indexing="ij")
    vertices = np.stack([
        (major + minor * np.cos(P)) * np.cos(T),
        (major + minor * np.cos(P)) * np.sin(T),
        minor * np.sin(P),
    ], axis=-1).reshape(-1, 3)

    def index(i, j):
        return (i % n_major) * n_minor + (j % n_minor)

    triangles = []
    for i in range(n_major):
        for j in range(n_minor):
            (a, b, c, d) = (index(i, j), index(i + 1, j), index(i + 1, j + 1), index(i, j + 1))
            triangles += [[a, b, c], [a, c, d]]

    return (vertices, np.array(triangles))


def cube(n: int = 2, half_size: float = 1.0) -> ControlMesh:
    """Surface of a cube with `n x n` quads per side, each split in two triangles."""

    faces = []
    # outward normal axis, sign and an in-plane basis (u, v) with u x v = outward normal
    for (axis, sign) in [(0, 1), (0, -1), (1, 1), (1, -1), (2, 1), (2, -1)]:
        (u_axis, v_axis) = ((axis + 1) % 3, (axis + 2) % 3)
        if sign < 0:
            (u_axis, v_axis) = (v_axis, u_axis)
        faces.append((axis, sign, u_axis, v_axis))

    grid_points = []
    grid_triangles = []
    offset = 0
    for (axis, sign, u_axis, v_axis) in faces:
        for i in range(n + 1):
            for j in range(n + 1):
                point = np.zeros(3, dtype=np.int64)
                point[axis] = sign * n
                point[u_axis] = 2 * i - n
                point[v_axis] = 2 * j - n
                grid_points.append(point)
        for i in range(n):
            for j in range(n):
                a = offset + i * (n + 1) + j
                b = offset + (i + 1) * (n + 1) + j
                c = b + 1
                d = a + 1
                grid_triangles += [[a, b, c], [a, c, d]]
        offset += (n + 1) ** 2

    (unique, inverse) = np.unique(np.array(grid_points), axis=0, return_inverse=True)
    triangles = inverse.reshape(-1)[np.array(grid_triangles)]
    vertices = unique.astype(np.float64) * (half_size / n)

    return ControlMesh(vertices, triangles, metadata={"shape": "cube", "n": n})


def bumpy_cube(n: int = 4, half_size: float = 1.0, amplitude: float = 0.15, bumps: int = 2) -> ControlMesh:
    """Cube with a cosine relief of `bumps` bumps per side edge pushed along the radial direction."""

    base = cube(n, half_size)
    x = base.vertices / half_size
    relief = np.prod(np.cos(bumps * np.pi * x), axis=1)
    vertices = base.vertices * (1.0 + amplitude * relief)[:, None]

    return ControlMesh(vertices, base.triangles, metadata={"shape": "bumpy-cube", "n": n})
