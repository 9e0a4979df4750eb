"""Local subdivision stencils of an extraordinary patch.

The `(N + 6)`-point ring of a patch whose first corner has valence `N` is subdivided by a fixed
matrix, and three of the four child triangles are regular. Both the matrix and the picking
matrices of the regular children are obtained by subdividing a canonical neighbourhood of the
patch with symbolic (weight vector) control points, so no table is typed in by hand.
"""

from __future__ import annotations

from typing import (
    Dict,
    Hashable,
    Iterable,
    List,
    NamedTuple,
    Tuple
)

import logging
from functools import cache

import numpy as np

from ..__about__ import __name_public__
from ..mesh.subdivision import (
    BOX_SPLINE_ORDER,
    loop_beta,
    limit_chi
)

_logger = logging.getLogger(f"{__name_public__}:surface")

# Child triangles of the unit patch: (corners, affine map s -> (v', w'), jacobian d(v', w')/ds)
CHILD_MAPS: Tuple[Tuple[np.ndarray, np.ndarray], ...] = (
    # around b
    (np.array([0.0, 2.0]), np.array([[0.0, 2.0], [-2.0, -2.0]])),
    # around c
    (np.array([2.0, 0.0]), np.array([[-2.0, -2.0], [2.0, 0.0]])),
    # middle
    (np.array([1.0, 1.0]), np.array([[-2.0, 0.0], [0.0, -2.0]])),
)


class IrregularStencils(NamedTuple):
    valence: int
    subdivision: np.ndarray
    picks: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    eigenvectors_inverse: np.ndarray
    diagonalizable: bool
    limit_mask: np.ndarray
    tangent_masks: np.ndarray

    @property
    def size(self) -> int:
        return self.valence + 6

    def power(self, level: int) -> np.ndarray:
        """`subdivision ** level`, from the eigen-decomposition when it is well conditioned."""
        if level == 0:
            return np.eye(self.size)
        if self.diagonalizable:
            return np.real((self.eigenvectors * self.eigenvalues ** level) @ self.eigenvectors_inverse)
        return np.linalg.matrix_power(self.subdivision, level)


def canonical_neighbourhood(valence: int) -> List[Tuple[int, int, int]]:
    """Triangles around a patch `(0, 1, 2)` whose corner `0` has the given valence.

    Labels follow the ring ordering: `0` is the corner, `1..N` its one-ring, `N+1..N+3` the
    outer vertices around `1` and `N+4, N+5` those around `2`.
    """

    n = valence
    triangles = [(0, i, i % n + 1) for i in range(1, n + 1)]
    triangles += [
        (1, 0, n),
        (1, n, n + 1),
        (1, n + 1, n + 2),
        (1, n + 2, n + 3),
        (1, n + 3, 2),
        (2, n + 3, n + 4),
        (2, n + 4, n + 5),
        (2, n + 5, 3),
    ]

    unique: Dict[Tuple[int, int, int], Tuple[int, int, int]] = {}
    for (a, b, c) in triangles:
        rotations = [(a, b, c), (b, c, a), (c, a, b)]
        unique.setdefault(min(rotations), (a, b, c))
    return list(unique.values())


def _corner_next(triangles: List[Tuple[Hashable, Hashable, Hashable]]) -> Dict[Tuple[Hashable, Hashable], Hashable]:
    corner_next = {}
    for (a, b, c) in triangles:
        corner_next[(a, b)] = c
        corner_next[(b, c)] = a
        corner_next[(c, a)] = b
    return corner_next


def _fan(corner_next, v, start) -> list:
    fan = [start]
    w = corner_next[(v, start)]
    while w != start:
        fan.append(w)
        w = corner_next[(v, w)]
    return fan


def _ring(corner_next, e, b, c) -> list:
    return [e, *_fan(corner_next, e, b), *_fan(corner_next, b, c)[3:6], *_fan(corner_next, c, e)[3:5]]


@cache
def irregular_stencils(valence: int) -> IrregularStencils:
    """Subdivision and picking matrices of a patch with one corner of the given valence.

    Raises:
        ValueError: valence below 3
    """

    if valence < 3:
        raise ValueError(f"Valence {valence} not supported")

    size = valence + 6
    triangles = canonical_neighbourhood(valence)
    corner_next = _corner_next(triangles)

    def vertex_point(p: int) -> np.ndarray:
        neighbours = _fan(corner_next, p, next(q for (r, q) in corner_next if r == p))
        beta = loop_beta(len(neighbours))
        weights = np.zeros(size)
        weights[p] = 1.0 - len(neighbours) * beta
        weights[neighbours] += beta
        return weights

    def edge_point(p: int, q: int) -> np.ndarray:
        weights = np.zeros(size)
        weights[[p, q]] += 3.0 / 8.0
        weights[corner_next[(p, q)]] += 1.0 / 8.0
        weights[corner_next[(q, p)]] += 1.0 / 8.0
        return weights

    def node(p: int, q: int = -1) -> tuple:
        return ("v", p) if q < 0 else ("e", min(p, q), max(p, q))

    refined = []
    for (a, b, c) in triangles:
        refined += [
            (node(a), node(a, b), node(c, a)),
            (node(b), node(b, c), node(a, b)),
            (node(c), node(c, a), node(b, c)),
            (node(a, b), node(b, c), node(c, a)),
        ]
    refined_next = _corner_next(refined)

    weights_cache: Dict[tuple, np.ndarray] = {}

    def weights(key: tuple) -> np.ndarray:
        if key not in weights_cache:
            weights_cache[key] = vertex_point(key[1]) if key[0] == "v" else edge_point(key[1], key[2])
        return weights_cache[key]

    def ring_weights(e: tuple, b: tuple, c: tuple) -> np.ndarray:
        return np.array([weights(key) for key in _ring(refined_next, e, b, c)])

    subdivision = ring_weights(node(0), node(0, 1), node(0, 2))
    picks = np.array([
        ring_weights(node(1), node(1, 2), node(0, 1))[BOX_SPLINE_ORDER],
        ring_weights(node(2), node(0, 2), node(1, 2))[BOX_SPLINE_ORDER],
        ring_weights(node(1, 2), node(0, 2), node(0, 1))[BOX_SPLINE_ORDER],
    ])

    (eigenvalues, eigenvectors) = np.linalg.eig(subdivision)
    diagonalizable = False
    eigenvectors_inverse = np.zeros_like(eigenvectors)
    if np.linalg.cond(eigenvectors) < 1e10:
        eigenvectors_inverse = np.linalg.inv(eigenvectors)
        reconstruction = (eigenvectors * eigenvalues) @ eigenvectors_inverse
        diagonalizable = bool(np.max(np.abs(reconstruction - subdivision)) < 1e-11)

    if not diagonalizable:
        _logger.debug(f"Valence {valence} subdivision matrix is ill-conditioned, using matrix powers")

    chi = limit_chi(valence)
    limit_mask = np.zeros(size)
    limit_mask[0] = 1.0 - valence * chi
    limit_mask[1:valence + 1] = chi

    angles = 2.0 * np.pi * np.arange(valence) / valence
    tangent_masks = np.zeros((2, size))
    tangent_masks[0, 1:valence + 1] = np.cos(angles)
    tangent_masks[1, 1:valence + 1] = np.sin(angles)

    return IrregularStencils(
        valence=valence,
        subdivision=subdivision,
        picks=picks,
        eigenvalues=eigenvalues,
        eigenvectors=eigenvectors,
        eigenvectors_inverse=eigenvectors_inverse,
        diagonalizable=diagonalizable,
        limit_mask=limit_mask,
        tangent_masks=tangent_masks,
    )


PRECOMPUTED_VALENCES = range(3, 13)


def precompute_stencils(valences: Iterable[int] = PRECOMPUTED_VALENCES):
    for valence in valences:
        irregular_stencils(valence)


precompute_stencils()
