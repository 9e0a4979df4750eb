"""Controlled accuracy test: the interaction of two separated flat patches, FMM against direct sums."""

from __future__ import annotations

from typing import (
    Iterable,
    List,
    NamedTuple
)

import logging

import numpy as np

from ..__about__ import __name_public__
from ..config import FmmConfig
from .engine import (
    FmmEngine,
    direct_potentials
)
from .tree import build_tree

_logger = logging.getLogger(f"{__name_public__}:fmm")

PATCH_SIZE = 0.25
PATCH_GAP = 0.25


class OrderError(NamedTuple):
    leaf_size: float
    digits: int
    order: int
    error: float


def two_patches(samples_per_side: int = 8, *, wavelength: float = 1.0, seed: int = 0) -> np.ndarray:
    """Samples of two parallel square patches of side `0.25 lambda`, `0.25 lambda` apart.

    Returns `(2 n^2, 3)` points, the first half on the source patch.
    """

    rng = np.random.default_rng(seed)
    side = PATCH_SIZE * wavelength
    grid = (np.arange(samples_per_side) + 0.5) / samples_per_side * side
    (u, v) = np.meshgrid(grid, grid, indexing="ij")
    plane = np.stack([u.reshape(-1), v.reshape(-1), np.zeros(u.size)], axis=1)
    plane[:, :2] += rng.uniform(-0.1, 0.1, size=(len(plane), 2)) * side / samples_per_side

    offset = np.array([side + PATCH_GAP * wavelength, 0.0, 0.0])
    return np.concatenate([plane, plane + offset])


def patch_interaction_error(
    leaf_size: float,
    digits: int,
    *,
    samples_per_side: int = 8,
    wavelength: float = 1.0,
    seed: int = 0
) -> OrderError:
    """Relative l2 error of the potentials on the observer patch due to the source patch.

    `leaf_size` is in wavelengths.

    Raises:
        PrecisionError:
    """

    points = two_patches(samples_per_side, wavelength=wavelength, seed=seed)
    n_source = len(points) // 2
    kappa = 2.0 * np.pi / wavelength

    rng = np.random.default_rng(seed + 1)
    charges = np.zeros(len(points), dtype=np.complex128)
    charges[:n_source] = rng.standard_normal(n_source) + 1j * rng.standard_normal(n_source)

    config = FmmConfig(leaf_size=leaf_size, digits=digits)
    tree = build_tree(points, leaf_size * wavelength, wavelength, regime_split=config.regime_split)
    engine = FmmEngine(tree, points, kappa, config)

    (approximate, _) = engine.potentials(charges)
    (reference, _) = direct_potentials(points[:n_source], charges[:n_source], kappa, targets=points[n_source:])
    error = float(np.linalg.norm(approximate[n_source:] - reference) / np.linalg.norm(reference))

    _logger.debug(f"Two-patch test: leaf {leaf_size} lambda, {digits} digits, error {error:.3e}")
    return OrderError(leaf_size=leaf_size, digits=digits, order=engine.order, error=error)


def error_vs_order(
    leaf_sizes: Iterable[float] = (0.125, 0.0625),
    digits: Iterable[int] = range(1, 9),
    **kwargs
) -> List[OrderError]:
    return [
        patch_interaction_error(leaf_size, d, **kwargs)
        for leaf_size in leaf_sizes
        for d in digits
    ]


def error_vs_order_report(rows: Iterable[OrderError]) -> str:
    """Comma-separated `leaf_size,digits,p,error` table."""
    lines = ["leaf_size,digits,p,error"]
    lines.extend(f"{row.leaf_size!r},{row.digits},{row.order},{row.error:.6e}" for row in rows)
    return "\n".join(lines) + "\n"
