from __future__ import annotations

from typing import (
    Dict,
    Iterator,
    List,
    NamedTuple,
    Tuple
)

import logging
from functools import cached_property

import numpy as np

from ..__about__ import __name_public__
from ..mesh.control_mesh import ControlMesh
from ..mesh.subdivision import (
    PatchParameterization,
    PatchTable,
    build_patches
)
from .evaluation import (
    DEFAULT_CORNER_CLAMP,
    BasisDerivatives,
    Geometry,
    geometry,
    patch_basis,
    surface_gradients,
    surface_laplacians
)
from .stencils import irregular_stencils

_logger = logging.getLogger(f"{__name_public__}:surface")


class SurfaceSample(NamedTuple):
    """A point of the limit surface with the Loop basis supported there.

    `d_u` and `d_v` are the derivatives along the free barycentric parameters `(v, w)`.
    """

    position: np.ndarray
    d_u: np.ndarray
    d_v: np.ndarray
    normal: np.ndarray
    jacobian: float
    mean_curvature: float
    basis_ids: np.ndarray
    basis_values: np.ndarray
    basis_surface_gradients: np.ndarray
    basis_laplacians: np.ndarray


class SurfaceSamples(NamedTuple):
    """Samples of a single patch, leading dimension `n`."""

    params: np.ndarray
    position: np.ndarray
    d_u: np.ndarray
    d_v: np.ndarray
    normal: np.ndarray
    jacobian: np.ndarray
    mean_curvature: np.ndarray
    basis_ids: np.ndarray
    basis_values: np.ndarray
    basis_surface_gradients: np.ndarray
    basis_laplacians: np.ndarray

    def __len__(self) -> int:
        return len(self.params)

    def __getitem__(self, index):
        if isinstance(index, str):
            return getattr(self, index)
        return SurfaceSample(
            position=self.position[index],
            d_u=self.d_u[index],
            d_v=self.d_v[index],
            normal=self.normal[index],
            jacobian=float(self.jacobian[index]),
            mean_curvature=float(self.mean_curvature[index]),
            basis_ids=self.basis_ids,
            basis_values=self.basis_values[index],
            basis_surface_gradients=self.basis_surface_gradients[index],
            basis_laplacians=self.basis_laplacians[index],
        )


class PatchGroup(NamedTuple):
    """Patches sharing a ring layout, evaluated together at common parameters."""

    faces: np.ndarray
    rings: np.ndarray
    basis: BasisDerivatives
    geometry: Geometry
    gradients: np.ndarray
    laplacians: np.ndarray


class LimitSurface():
    """The Loop limit surface of a control mesh.

    Meshes with faces carrying several extraordinary corners are subdivided once on construction,
    `mesh` then refers to the refined control net (same limit surface).
    """

    _patches: PatchTable
    _clamp: float

    def __init__(self, mesh: ControlMesh, *, clamp: float = DEFAULT_CORNER_CLAMP):
        self._patches = build_patches(mesh)
        self._clamp = clamp

    @property
    def patches(self) -> PatchTable:
        return self._patches

    @property
    def mesh(self) -> ControlMesh:
        return self._patches.mesh

    @property
    def n_vertices(self) -> int:
        return self.mesh.n_vertices

    @property
    def clamp(self) -> float:
        return self._clamp

    @cached_property
    def groups(self) -> List[Tuple[Tuple[int, bool], np.ndarray]]:
        kinds: Dict[Tuple[int, bool], List[int]] = {}
        for patch in self._patches:
            kinds.setdefault((patch.valence, patch.is_regular), []).append(patch.face_index)
        return [(kind, np.array(faces)) for (kind, faces) in sorted(kinds.items())]

    def sample_groups(self, params: np.ndarray, faces: np.ndarray = None) -> Iterator[PatchGroup]:
        """Evaluates the given parameters on every patch (or on `faces`), one ring layout at a time."""

        params = np.atleast_2d(np.asarray(params, dtype=np.float64))
        vertices = self.mesh.vertices
        selected = None if faces is None else set(np.asarray(faces).tolist())

        for ((valence, regular), group_faces) in self.groups:
            if selected is not None:
                group_faces = np.array([f for f in group_faces.tolist() if f in selected], dtype=np.int64)
                if len(group_faces) == 0:
                    continue

            basis = patch_basis(valence, regular, params, clamp=self._clamp)
            rings = np.array([self._patches[f].ring for f in group_faces.tolist()])
            geo = geometry(basis, vertices[rings])

            yield PatchGroup(
                faces=group_faces,
                rings=rings,
                basis=basis,
                geometry=geo,
                gradients=surface_gradients(basis, geo),
                laplacians=surface_laplacians(basis, geo),
            )

    def evaluate(self, face: int, params: np.ndarray) -> SurfaceSamples:
        """Samples patch `face` at parameters `(v, w)` of shape `(n, 2)`."""

        params = np.atleast_2d(np.asarray(params, dtype=np.float64))
        patch = self._patches[face]

        basis = patch_basis(patch.valence, patch.is_regular, params, clamp=self._clamp)
        geo = geometry(basis, self.mesh.vertices[patch.ring][None])

        return SurfaceSamples(
            params=params,
            position=geo.position[0],
            d_u=geo.d_u[0],
            d_v=geo.d_v[0],
            normal=geo.normal[0],
            jacobian=geo.jacobian[0],
            mean_curvature=geo.mean_curvature[0],
            basis_ids=patch.ring,
            basis_values=basis.value,
            basis_surface_gradients=surface_gradients(basis, geo)[0],
            basis_laplacians=surface_laplacians(basis, geo)[0],
        )

    def scaled(self, factor: float) -> LimitSurface:
        return LimitSurface(self.mesh.scaled(factor), clamp=self._clamp)


def evaluate_patch(
    patch: PatchParameterization,
    control: ControlMesh,
    bary: Tuple[float, float, float],
    *,
    clamp: float = DEFAULT_CORNER_CLAMP
) -> SurfaceSample:
    """Exact limit-surface sample of one patch at barycentric `(u, v, w)`.

    Raises:
        ValueError: parameters outside the patch
    """

    (u, v, w) = bary
    if min(u, v, w) < -1e-14 or abs(u + v + w - 1.0) > 1e-12:
        raise ValueError(f"Barycentric parameters {bary} outside the patch")

    basis = patch_basis(patch.valence, patch.is_regular, np.array([[v, w]]), clamp=clamp)
    geo = geometry(basis, control.vertices[patch.ring][None])

    gradients = surface_gradients(basis, geo)[0, 0]
    laplacians = surface_laplacians(basis, geo)[0, 0]

    normal = geo.normal[0, 0]
    if not patch.is_regular and v + w < clamp:
        normal = _corner_normal(patch, control)

    return SurfaceSample(
        position=geo.position[0, 0],
        d_u=geo.d_u[0, 0],
        d_v=geo.d_v[0, 0],
        normal=normal,
        jacobian=float(geo.jacobian[0, 0]),
        mean_curvature=float(geo.mean_curvature[0, 0]),
        basis_ids=patch.ring,
        basis_values=basis.value[0],
        basis_surface_gradients=gradients,
        basis_laplacians=laplacians,
    )


def _corner_normal(patch: PatchParameterization, control: ControlMesh) -> np.ndarray:
    masks = irregular_stencils(patch.valence).tangent_masks
    (t1, t2) = masks @ control.vertices[patch.ring]
    normal = np.cross(t1, t2)
    return normal / np.linalg.norm(normal)


def current_basis_at(sample: SurfaceSample) -> Tuple[np.ndarray, np.ndarray]:
    """Loop current basis at a sample: `J1 = grad xi` and `J2 = n x grad xi`, shape `(K, 3)` each."""

    j1 = sample.basis_surface_gradients
    j2 = np.cross(sample.normal, j1)
    return (j1, j2)


def _lattice(depth: int) -> np.ndarray:
    steps = 2 ** depth
    return np.array([
        (i / steps, j / steps)
        for i in range(steps + 1)
        for j in range(steps + 1 - i)
    ])


def mean_curvature_max(surface: LimitSurface, sampling_depth: int = 2) -> float:
    """Largest absolute mean curvature over the nested parameter lattice of spacing `2**-depth`.

    The extraordinary corner of irregular patches is skipped: the limit curvature is not defined
    there and the clamped evaluation diverges.
    """

    params = _lattice(sampling_depth)
    at_corner = params.sum(axis=1) == 0.0

    curvature = 0.0
    for (((_, regular), _), group) in zip(surface.groups, surface.sample_groups(params)):
        values = np.abs(group.geometry.mean_curvature)
        if not regular:
            values = values[:, ~at_corner]
        curvature = max(curvature, float(np.max(values)))
    return curvature
