from __future__ import annotations

from typing import (
    List,
    Literal,
    NamedTuple,
    Tuple
)

import logging
from functools import cache, cached_property

import numpy as np
import scipy.sparse as sp

from ..__about__ import __name_public__
from ..mesh.subdivision import PatchParameterization
from .evaluation import surface_divergence_of_gradients
from .limit_surface import (
    LimitSurface,
    SurfaceSamples
)

_logger = logging.getLogger(f"{__name_public__}:surface")

BaseRule = Literal[1, 3, 6, 7]


class QuadratureRule(NamedTuple):
    """Rule on the reference triangle `v, w >= 0, v + w <= 1`. Weights sum to its area, 1/2."""

    params: np.ndarray
    weights: np.ndarray


def _symmetric_orbit(a: float, b: float) -> List[Tuple[float, float, float]]:
    return [(a, b, b), (b, a, b), (b, b, a)]


def _base_rule(points: int) -> QuadratureRule:
    if points == 1:
        bary = [(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)]
        weights = [1.0]
    elif points == 3:
        bary = _symmetric_orbit(2.0 / 3.0, 1.0 / 6.0)
        weights = [1.0 / 3.0] * 3
    elif points == 6:
        bary = (
            _symmetric_orbit(0.108103018168070, 0.445948490915965)
            + _symmetric_orbit(0.816847572980459, 0.091576213509771)
        )
        weights = [0.223381589678011] * 3 + [0.109951743655322] * 3
    elif points == 7:
        bary = (
            [(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)]
            + _symmetric_orbit(0.059715871789770, 0.470142064105115)
            + _symmetric_orbit(0.797426985353087, 0.101286507323456)
        )
        weights = [0.225] + [0.132394152788506] * 3 + [0.125939180544827] * 3
    else:
        raise ValueError(f"No {points}-point triangle rule")

    bary = np.array(bary)
    return QuadratureRule(params=bary[:, 1:].copy(), weights=0.5 * np.array(weights))


def split_triangle(triangle: np.ndarray) -> np.ndarray:
    """Four children of a parameter-space triangle `(3, 2)`, keeping orientation."""
    (a, b, c) = triangle
    (ab, bc, ca) = ((a + b) / 2.0, (b + c) / 2.0, (c + a) / 2.0)
    return np.array([
        [a, ab, ca],
        [ab, b, bc],
        [ca, bc, c],
        [ab, bc, ca],
    ])


@cache
def subtriangles(depth: int) -> np.ndarray:
    """The `4**depth` uniform subtriangles of the reference triangle, shape `(4**depth, 3, 2)`."""
    triangles = np.array([[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]])
    for _ in range(depth):
        triangles = np.concatenate([split_triangle(triangle) for triangle in triangles])
    return triangles


def map_rule(rule: QuadratureRule, triangle: np.ndarray) -> QuadratureRule:
    """Maps a reference rule onto a parameter-space triangle."""
    (a, b, c) = triangle
    u = 1.0 - rule.params.sum(axis=1)
    params = u[:, None] * a + rule.params[:, :1] * b + rule.params[:, 1:] * c
    area = 0.5 * abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    return QuadratureRule(params=params, weights=rule.weights * 2.0 * area)


@cache
def composite_rule(depth: int, base_rule: BaseRule = 3) -> QuadratureRule:
    """`base_rule` points on each of the `4**depth` uniform subtriangles."""
    rule = _base_rule(base_rule)
    mapped = [map_rule(rule, triangle) for triangle in subtriangles(depth)]
    return QuadratureRule(
        params=np.concatenate([m.params for m in mapped]),
        weights=np.concatenate([m.weights for m in mapped]),
    )


class QuadratureTable(NamedTuple):
    """Quadrature of one patch. Parametric weights and jacobians are kept apart."""

    samples: SurfaceSamples
    weights: np.ndarray
    subdivision_depth: int
    base_rule: int

    @property
    def area(self) -> float:
        return float(np.sum(self.weights * self.samples.jacobian))


def build_quadrature(
    surface: LimitSurface,
    patch: PatchParameterization,
    depth: int = 1,
    base_rule: BaseRule = 3
) -> QuadratureTable:
    """
    Raises:
        ValueError: negative depth or unknown base rule
    """

    if depth < 0:
        raise ValueError(f"Quadrature depth must be non negative ({depth})")

    rule = composite_rule(depth, base_rule)
    return QuadratureTable(
        samples=surface.evaluate(patch.face_index, rule.params),
        weights=rule.weights,
        subdivision_depth=depth,
        base_rule=base_rule,
    )


class SurfaceQuadrature():
    """The same composite rule on every patch, flattened into global sample arrays.

    Samples are numbered patch by patch (`face * points_per_patch + i`). Basis data is held as
    sparse `(samples, vertices)` matrices: values, the three components of the surface gradients
    `J1 = grad xi`, of the rotated gradients `J2 = n x grad xi`, and the surface Laplacians.
    """

    _surface: LimitSurface
    _rule: QuadratureRule
    _depth: int
    _base_rule: int

    points: np.ndarray
    normals: np.ndarray
    jacobian: np.ndarray
    weights: np.ndarray
    mean_curvature: np.ndarray
    patch_of_sample: np.ndarray
    values: sp.csr_matrix
    gradients: Tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]
    rotated: Tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]
    laplacians: sp.csr_matrix

    def __init__(self, surface: LimitSurface, depth: int = 1, base_rule: BaseRule = 3):
        self._surface = surface
        self._depth = depth
        self._base_rule = base_rule
        self._rule = composite_rule(depth, base_rule)

        n_faces = len(surface.patches)
        per_patch = len(self._rule.weights)
        n_samples = n_faces * per_patch
        n_vertices = surface.n_vertices

        self.points = np.empty((n_samples, 3))
        self.normals = np.empty((n_samples, 3))
        self.jacobian = np.empty(n_samples)
        self.mean_curvature = np.empty(n_samples)
        self.weights = np.tile(self._rule.weights, n_faces)
        self.patch_of_sample = np.repeat(np.arange(n_faces), per_patch)

        rows: List[np.ndarray] = []
        cols: List[np.ndarray] = []
        values: List[np.ndarray] = []
        gradients: List[np.ndarray] = []
        rotated: List[np.ndarray] = []
        laplacians: List[np.ndarray] = []

        for group in surface.sample_groups(self._rule.params):
            samples = (group.faces[:, None] * per_patch + np.arange(per_patch)[None, :])
            geo = group.geometry

            self.points[samples] = geo.position
            self.normals[samples] = geo.normal
            self.jacobian[samples] = geo.jacobian
            self.mean_curvature[samples] = geo.mean_curvature

            size = group.rings.shape[1]
            rows.append(np.repeat(samples.reshape(-1), size))
            cols.append(np.repeat(group.rings, per_patch, axis=0).reshape(-1))
            values.append(np.broadcast_to(group.basis.value, (len(group.faces), per_patch, size)).reshape(-1))
            gradients.append(group.gradients.reshape(-1, 3))
            rotated.append(np.cross(geo.normal[:, :, None, :], group.gradients).reshape(-1, 3))
            laplacians.append(group.laplacians.reshape(-1))

        (rows_, cols_) = (np.concatenate(rows), np.concatenate(cols))
        gradients_ = np.concatenate(gradients)
        rotated_ = np.concatenate(rotated)

        def assemble(data: np.ndarray) -> sp.csr_matrix:
            return sp.coo_matrix((data, (rows_, cols_)), shape=(n_samples, n_vertices)).tocsr()

        self.values = assemble(np.concatenate(values))
        self.gradients = tuple(assemble(gradients_[:, axis]) for axis in range(3))
        self.rotated = tuple(assemble(rotated_[:, axis]) for axis in range(3))
        self.laplacians = assemble(np.concatenate(laplacians))

        _logger.info(
            f"Surface quadrature: {n_faces} patches, depth {depth}, {base_rule}-point rule, {n_samples} samples"
        )

    @property
    def surface(self) -> LimitSurface:
        return self._surface

    @property
    def depth(self) -> int:
        return self._depth

    @property
    def base_rule(self) -> int:
        return self._base_rule

    @property
    def rule(self) -> QuadratureRule:
        return self._rule

    @property
    def points_per_patch(self) -> int:
        return len(self._rule.weights)

    @property
    def n_samples(self) -> int:
        return len(self.weights)

    @property
    def n_vertices(self) -> int:
        return self._surface.n_vertices

    @cached_property
    def area_elements(self) -> np.ndarray:
        """`weights * jacobian`, the measure of each sample."""
        return self.weights * self.jacobian

    @property
    def area(self) -> float:
        return float(np.sum(self.area_elements))

    @cached_property
    def divergences(self) -> sp.csr_matrix:
        """Surface divergence of `J1` obtained by differentiating the gradient field, same layout as `laplacians`."""

        per_patch = self.points_per_patch
        rows: List[np.ndarray] = []
        cols: List[np.ndarray] = []
        data: List[np.ndarray] = []
        for group in self._surface.sample_groups(self._rule.params):
            samples = group.faces[:, None] * per_patch + np.arange(per_patch)[None, :]
            size = group.rings.shape[1]
            rows.append(np.repeat(samples.reshape(-1), size))
            cols.append(np.repeat(group.rings, per_patch, axis=0).reshape(-1))
            data.append(surface_divergence_of_gradients(group.basis, group.geometry).reshape(-1))

        return sp.coo_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n_samples, self.n_vertices),
        ).tocsr()

    def patch_samples(self, face: int) -> slice:
        return slice(face * self.points_per_patch, (face + 1) * self.points_per_patch)

    def current_basis(self, component: int) -> Tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]:
        """Cartesian components of `J1` (component 1) or `J2` (component 2) at the samples."""
        return self.gradients if component == 1 else self.rotated


def surface_area(surface: LimitSurface, depth: int = 3, base_rule: BaseRule = 6) -> float:
    """Area of the limit surface from the composite rule (weights times jacobians)."""

    rule = composite_rule(depth, base_rule)
    area = 0.0
    for group in surface.sample_groups(rule.params):
        area += float(np.sum(group.geometry.jacobian @ rule.weights))
    return area
