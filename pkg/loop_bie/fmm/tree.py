from __future__ import annotations

from typing import (
    Dict,
    List,
    Literal,
    NamedTuple,
    Tuple
)

import itertools
import logging

import numpy as np

from ..__about__ import __name_public__

_logger = logging.getLogger(f"{__name_public__}:fmm")

Regime = Literal["spectral", "cartesian"]

# Chebyshev distance (in boxes) up to which two boxes of a level are not well separated
SEPARATION: Dict[Regime, int] = {
    "spectral": 1,
    "cartesian": 2,
}


class IllSeparatedError(ValueError):
    """Translation requested between boxes that are not well separated"""
    pass


class FmmLevel(NamedTuple):
    """Non-empty boxes of one octree level.

    `members[b]` lists the samples inside box `b`, `interactions[b]` the boxes whose far field is
    translated into `b` at this level, `near[b]` (leaf level only) the boxes handled directly.
    """

    index: int
    box_size: float
    coords: np.ndarray
    centers: np.ndarray
    parents: np.ndarray
    members: List[np.ndarray]
    regime: Regime
    interactions: List[np.ndarray]
    near: List[np.ndarray]

    @property
    def n_boxes(self) -> int:
        return len(self.coords)

    @property
    def separation(self) -> int:
        return SEPARATION[self.regime]


class FmmTree(NamedTuple):
    corner: np.ndarray
    root_size: float
    leaf_size: float
    levels: List[FmmLevel]
    leaf_of_point: np.ndarray
    regime_split_level: int

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def leaves(self) -> FmmLevel:
        return self.levels[-1]

    def to_text(self) -> str:
        lines = [
            f"depth={self.depth}",
            f"root_size={self.root_size!r}",
            f"leaf_size={self.leaf_size!r}",
            f"regime_split_level={self.regime_split_level}",
            f"points={len(self.leaf_of_point)}",
        ]
        for level in self.levels:
            lines.append(
                f"level.{level.index}=boxes:{level.n_boxes},size:{level.box_size!r},regime:{level.regime},"
                f"interactions:{sum(len(i) for i in level.interactions)}"
            )
        return "\n".join(lines) + "\n"


def chebyshev(a: np.ndarray, b: np.ndarray) -> int:
    return int(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def _offsets(radius: int) -> np.ndarray:
    span = range(-radius, radius + 1)
    return np.array(list(itertools.product(span, span, span)), dtype=np.int64)


def build_tree(
    points: np.ndarray,
    leaf_size: float,
    wavelength: float,
    *,
    regime_split: float = 0.2
) -> FmmTree:
    """Octree over `points` with leaves no larger than `leaf_size` (meters).

    Boxes of at least `regime_split` wavelengths use plane-wave expansions, smaller ones
    Cartesian Taylor expansions. Empty boxes are pruned.

    Raises:
        ValueError: non-positive leaf size
    """

    if not leaf_size > 0.0:
        raise ValueError(f"Leaf size must be positive ({leaf_size})")

    points = np.asarray(points, dtype=np.float64)
    low = points.min(axis=0)
    high = points.max(axis=0)
    extent = float(np.max(high - low)) * (1.0 + 1e-9) + 1e-12
    center = (low + high) / 2.0

    depth = max(0, int(np.ceil(np.log2(extent / leaf_size))))
    root_size = extent if depth == 0 else leaf_size * 2 ** depth
    corner = center - root_size / 2.0

    leaf_box = root_size / 2 ** depth
    leaf_coords = np.clip(np.floor((points - corner) / leaf_box).astype(np.int64), 0, 2 ** depth - 1)

    levels: List[FmmLevel] = []
    previous: Tuple[Dict[Tuple[int, int, int], int], np.ndarray, int] = None
    leaf_of_point = np.zeros(len(points), dtype=np.int64)

    for index in range(depth + 1):
        shift = depth - index
        point_coords = leaf_coords >> shift
        (coords, inverse) = np.unique(point_coords, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        lookup = {tuple(c): b for (b, c) in enumerate(coords.tolist())}

        box_size = root_size / 2 ** index
        regime: Regime = "spectral" if box_size >= regime_split * wavelength else "cartesian"
        separation = SEPARATION[regime]

        order = np.argsort(inverse, kind="stable")
        bounds = np.searchsorted(inverse[order], np.arange(len(coords) + 1))
        members = [order[bounds[b]:bounds[b + 1]] for b in range(len(coords))]

        if previous is None:
            parents = np.full(len(coords), -1, dtype=np.int64)
        else:
            (parent_lookup, _, _) = previous
            parents = np.array([parent_lookup[tuple(c)] for c in (coords >> 1).tolist()], dtype=np.int64)

        interactions: List[np.ndarray] = [np.zeros(0, dtype=np.int64) for _ in range(len(coords))]
        if previous is not None:
            (_, parent_coords, parent_separation) = previous
            candidates = _offsets(2 * parent_separation + 1)
            for (b, c) in enumerate(coords.tolist()):
                found = []
                for offset in candidates.tolist():
                    other = (c[0] + offset[0], c[1] + offset[1], c[2] + offset[2])
                    o = lookup.get(other)
                    if o is None:
                        continue
                    if max(abs(offset[0]), abs(offset[1]), abs(offset[2])) <= separation:
                        continue
                    if chebyshev(parent_coords[parents[b]], parent_coords[parents[o]]) > parent_separation:
                        continue
                    found.append(o)
                interactions[b] = np.array(sorted(found), dtype=np.int64)

        near: List[np.ndarray] = []
        if index == depth:
            close = _offsets(separation)
            for c in coords.tolist():
                near.append(np.array(sorted(
                    lookup[(c[0] + o[0], c[1] + o[1], c[2] + o[2])]
                    for o in close.tolist()
                    if (c[0] + o[0], c[1] + o[1], c[2] + o[2]) in lookup
                ), dtype=np.int64))
            leaf_of_point = inverse

        levels.append(FmmLevel(
            index=index,
            box_size=box_size,
            coords=coords,
            centers=corner + (coords + 0.5) * box_size,
            parents=parents,
            members=members,
            regime=regime,
            interactions=interactions,
            near=near,
        ))
        previous = (lookup, coords, separation)

    split = next((level.index for level in levels if level.regime == "cartesian"), len(levels))

    tree = FmmTree(
        corner=corner,
        root_size=root_size,
        leaf_size=leaf_box,
        levels=levels,
        leaf_of_point=leaf_of_point,
        regime_split_level=split,
    )
    _logger.info(f"FMM tree: depth {tree.depth}, {tree.leaves.n_boxes} leaves, leaf size {leaf_box:.4g} m")
    return tree
