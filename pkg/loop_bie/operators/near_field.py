"""Accurate integration of close patch pairs.

The operators are assembled with one regular rule over every pair of samples. Close pairs
(sharing a corner, or with centers nearer than a threshold) get a sparse correction: the pair
integral with singularity-aware rules minus the regular-rule estimate of the same pair.
"""

from __future__ import annotations

from typing import (
    Dict,
    List,
    NamedTuple,
    Optional,
    Sequence,
    Tuple
)

import logging
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from ..__about__ import __name_public__
from ..config import QuadratureConfig
from ..surface.limit_surface import LimitSurface
from ..surface.quadrature import (
    QuadratureRule,
    composite_rule
)
from .constants import Wavenumber
from .greens import (
    kernel_gradient_factors,
    kernel_values
)
from .singular import (
    QuadratureError,
    adaptive_rule,
    duffy_rule
)

_logger = logging.getLogger(f"{__name_public__}:operators")


class PatchData(NamedTuple):
    """Samples of one patch with its ring basis.

    `currents` has shape `(n, 2, K, 3)`: `J1 = grad xi` and `J2 = n x grad xi` of the `K` ring
    functions. `measure` is the rule weight times the surface jacobian.
    """

    ring: np.ndarray
    params: np.ndarray
    points: np.ndarray
    normals: np.ndarray
    measure: np.ndarray
    currents: np.ndarray
    divergence: np.ndarray


def patch_data(surface: LimitSurface, face: int, rule: QuadratureRule) -> PatchData:
    samples = surface.evaluate(face, rule.params)
    j1 = samples.basis_surface_gradients
    j2 = np.cross(samples.normal[:, None, :], j1)
    return PatchData(
        ring=samples.basis_ids,
        params=rule.params,
        points=samples.position,
        normals=samples.normal,
        measure=rule.weights * samples.jacobian,
        currents=np.stack([j1, j2], axis=1),
        divergence=samples.basis_laplacians,
    )


class PairBlocks(NamedTuple):
    """Tested blocks of one patch pair, each `(2, 2, K_obs, K_src)` indexed `[l, k, i, j]`.

    `T` holds one block per wavenumber, `K` the principal-value part of the magnetic operator
    (without the identity term), or None.
    """

    T: List[np.ndarray]
    K: Optional[np.ndarray]


def pair_blocks(
    observation: PatchData,
    points: np.ndarray,
    measure: np.ndarray,
    currents: np.ndarray,
    divergence: np.ndarray,
    wavenumbers: Sequence[Wavenumber],
    magnetic: Optional[Wavenumber] = None
) -> PairBlocks:
    """Blocks from source samples given per observation point.

    Source arrays have a leading `(n_obs, m)` shape (broadcast views are fine). Coincident
    observation and source points contribute nothing.
    """

    d = observation.points[:, None, :] - points
    R = np.sqrt(np.einsum("nmi,nmi->nm", d, d))
    w_obs = observation.measure

    T_blocks = []
    for k in wavenumbers:
        kappa = complex(k)
        weighted = kernel_values(R, kappa) * measure
        vector = np.einsum("nm,nmkja->nkja", weighted, currents)
        scalar = np.einsum("nm,nmj->nj", weighted, divergence)

        block = -1j * kappa * np.einsum("n,nlia,nkja->lkij", w_obs, observation.currents, vector)
        block[0, 0] += (1j / kappa) * np.einsum("n,ni,nj->ij", w_obs, observation.divergence, scalar)
        T_blocks.append(block)

    K_block = None
    if magnetic is not None:
        weighted = kernel_gradient_factors(R, complex(magnetic)) * measure
        curls = np.cross(d[:, :, None, None, :], currents)
        field = np.einsum("nm,nmkja->nkja", weighted, curls)
        rotated = np.cross(observation.currents, observation.normals[:, None, None, :])
        K_block = np.einsum("n,nlia,nkja->lkij", w_obs, rotated, field)

    return PairBlocks(T=T_blocks, K=K_block)


def _shared(source: PatchData, n_obs: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    m = len(source.measure)
    return (
        np.broadcast_to(source.points, (n_obs, m, 3)),
        np.broadcast_to(source.measure, (n_obs, m)),
        np.broadcast_to(source.currents, (n_obs,) + source.currents.shape),
        np.broadcast_to(source.divergence, (n_obs,) + source.divergence.shape),
    )


class NearBlocks(NamedTuple):
    """Sparse `(2 N_v, 2 N_v)` corrections, one per wavenumber for `T` and one for the magnetic part."""

    T: List[sp.csr_matrix]
    K: Optional[sp.csr_matrix]


class NearField():
    """Close patch pairs of a limit surface and their quadrature corrections."""

    _surface: LimitSurface
    _config: QuadratureConfig
    _wavelength: float
    _regular: Dict[int, PatchData]
    _observation: Dict[int, PatchData]

    def __init__(self, surface: LimitSurface, config: QuadratureConfig, wavelength: float):
        self._surface = surface
        self._config = config
        self._wavelength = wavelength
        self._regular = {}
        self._observation = {}

    @property
    def surface(self) -> LimitSurface:
        return self._surface

    @property
    def config(self) -> QuadratureConfig:
        return self._config

    @cached_property
    def pairs(self) -> np.ndarray:
        """Ordered close pairs `(observation face, source face)`, self pairs included, sorted."""

        patches = self._surface.patches
        centers = patches.centers
        tree = cKDTree(centers)
        within = tree.query_ball_point(centers, r=self._config.near_distance * self._wavelength)

        pairs = set()
        for face in range(len(patches)):
            for other in patches.adjacency[face]:
                pairs.add((face, other))
            for other in within[face]:
                pairs.add((face, int(other)))

        result = np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)
        _logger.info(f"{len(result)} close patch pairs ({len(result) / max(len(patches), 1):.1f} per patch)")
        return result

    def center_distance(self, pair: Tuple[int, int]) -> float:
        centers = self._surface.patches.centers
        return float(np.linalg.norm(centers[pair[0]] - centers[pair[1]]))

    @cached_property
    def _corners(self) -> np.ndarray:
        corners = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        return np.array([self._surface.evaluate(face, corners).position for face in range(len(self._surface.patches))])

    def regular_data(self, face: int) -> PatchData:
        if face not in self._regular:
            rule = composite_rule(self._config.regular_depth, self._config.regular_rule)
            self._regular[face] = patch_data(self._surface, face, rule)
        return self._regular[face]

    def observation_data(self, face: int) -> PatchData:
        if face not in self._observation:
            rule = composite_rule(self._config.near_obs_depth, self._config.near_obs_rule)
            self._observation[face] = patch_data(self._surface, face, rule)
        return self._observation[face]

    def _self_sources(self, face: int, observation: PatchData) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        rules = [duffy_rule(p, self._config.duffy_order) for p in observation.params]
        m = len(rules[0].weights)
        rule = QuadratureRule(
            params=np.concatenate([r.params for r in rules]),
            weights=np.concatenate([r.weights for r in rules]),
        )
        source = patch_data(self._surface, face, rule)
        n = len(observation.params)
        return (
            source.points.reshape(n, m, 3),
            source.measure.reshape(n, m),
            source.currents.reshape((n, m) + source.currents.shape[1:]),
            source.divergence.reshape(n, m, -1),
        )

    def _near_sources(self, face: int, observation: PatchData) -> PatchData:
        rule = adaptive_rule(
            self._corners[face],
            observation.points,
            max_depth=self._config.near_max_depth,
            base_rule=self._config.near_rule,
            duffy_order=self._config.duffy_order,
            tolerance=self._config.near_tolerance,
        )
        return patch_data(self._surface, face, rule)

    def accurate_blocks(
        self,
        pair: Tuple[int, int],
        wavenumbers: Sequence[Wavenumber],
        magnetic: Optional[Wavenumber] = None
    ) -> PairBlocks:
        """Pair blocks with Duffy rules for self pairs and adaptive source rules otherwise.

        Raises:
            QuadratureError: the adaptive rule misses the configured tolerance
        """

        (p, q) = pair
        observation = self.observation_data(p)
        n = len(observation.measure)

        if p == q:
            sources = self._self_sources(q, observation)
        else:
            try:
                sources = _shared(self._near_sources(q, observation), n)
            except QuadratureError as error:
                raise QuadratureError(f"{error} between patches {p} and {q}", pair=(p, q)) from error

        return pair_blocks(observation, *sources, wavenumbers, magnetic)

    def regular_blocks(
        self,
        pair: Tuple[int, int],
        wavenumbers: Sequence[Wavenumber],
        magnetic: Optional[Wavenumber] = None
    ) -> PairBlocks:
        (p, q) = pair
        observation = self.regular_data(p)
        source = self.regular_data(q)
        return pair_blocks(observation, *_shared(source, len(observation.measure)), wavenumbers, magnetic)

    def corrections(
        self,
        wavenumbers: Sequence[Wavenumber],
        magnetic: Optional[Wavenumber] = None,
        cutoffs: Optional[Sequence[Optional[float]]] = None
    ) -> NearBlocks:
        """Sparse corrections for every close pair.

        `cutoffs` (meters, one per wavenumber) drop pairs whose centers are further apart,
        matching a localized regular part.

        Raises:
            QuadratureError: a non-finite pair integral, or a near rule missing its tolerance
        """

        n_vertices = self._surface.n_vertices
        cutoffs = list(cutoffs) if cutoffs is not None else [None] * len(wavenumbers)

        rows: List[np.ndarray] = []
        cols: List[np.ndarray] = []
        t_data: List[List[np.ndarray]] = [[] for _ in wavenumbers]
        k_data: List[np.ndarray] = []

        patches = self._surface.patches
        for (p, q) in self.pairs.tolist():
            accurate = self.accurate_blocks((p, q), wavenumbers, magnetic)
            regular = self.regular_blocks((p, q), wavenumbers, magnetic)

            blocks = accurate.T + ([accurate.K] if accurate.K is not None else [])
            if not all(np.all(np.isfinite(block)) for block in blocks):
                raise QuadratureError(f"Non-finite integral between patches {p} and {q}", pair=(p, q))

            ring_p = patches[p].ring
            ring_q = patches[q].ring
            offsets = np.arange(2)[:, None, None, None] * n_vertices
            row = np.broadcast_to(offsets + ring_p[None, None, :, None], (2, 2, len(ring_p), len(ring_q)))
            col = np.broadcast_to(
                np.arange(2)[None, :, None, None] * n_vertices + ring_q[None, None, None, :],
                (2, 2, len(ring_p), len(ring_q))
            )
            rows.append(row.reshape(-1))
            cols.append(col.reshape(-1))

            distance = self.center_distance((p, q))
            for (index, cutoff) in enumerate(cutoffs):
                if cutoff is not None and distance > cutoff:
                    t_data[index].append(np.zeros(row.size, dtype=np.complex128))
                else:
                    t_data[index].append((accurate.T[index] - regular.T[index]).reshape(-1))

            if magnetic is not None:
                k_data.append((accurate.K - regular.K).reshape(-1))

        size = 2 * n_vertices
        (rows_, cols_) = (np.concatenate(rows), np.concatenate(cols)) if rows else (np.zeros(0, int), np.zeros(0, int))

        def assemble(data: List[np.ndarray]) -> sp.csr_matrix:
            values = np.concatenate(data) if data else np.zeros(0, dtype=np.complex128)
            return sp.coo_matrix((values, (rows_, cols_)), shape=(size, size)).tocsr()

        T = []
        for data in t_data:
            correction = assemble(data)
            T.append(((correction + correction.T) / 2.0).tocsr())

        return NearBlocks(T=T, K=assemble(k_data) if magnetic is not None else None)
