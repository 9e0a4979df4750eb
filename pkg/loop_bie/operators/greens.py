from __future__ import annotations

from typing import (
    Optional,
    Tuple
)

import numpy as np


class CoincidentPointsError(ValueError):
    """The Green's function was requested at coincident points"""
    pass


_FOUR_PI = 4.0 * np.pi


def greens(r: np.ndarray, r_source: np.ndarray, kappa: complex) -> Tuple[complex, np.ndarray]:
    """`G = exp(-j kappa R) / (4 pi R)` and its gradient with respect to `r`.

    Raises:
        CoincidentPointsError:
    """

    d = np.asarray(r, dtype=np.float64) - np.asarray(r_source, dtype=np.float64)
    R = float(np.linalg.norm(d))
    if R == 0.0:
        raise CoincidentPointsError(f"Green's function at coincident points {r}")

    value = np.exp(-1j * kappa * R) / (_FOUR_PI * R)
    gradient = -(1.0 + 1j * kappa * R) * value / R ** 2 * d
    return (complex(value), gradient)


def distances(x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Pairwise differences `x_i - y_j` of shape `(n, m, 3)` and their norms `(n, m)`."""
    d = x[:, None, :] - y[None, :, :]
    return (d, np.sqrt(np.einsum("nmi,nmi->nm", d, d)))


def kernel_values(
    R: np.ndarray,
    kappa: complex,
    *,
    mask: Optional[np.ndarray] = None
) -> np.ndarray:
    """Green's function values for an array of distances. Zero distances (and masked entries) give 0."""

    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.exp(-1j * kappa * R) / (_FOUR_PI * R)
    values[R == 0.0] = 0.0
    if mask is not None:
        values[~mask] = 0.0
    return values


def kernel_gradient_factors(
    R: np.ndarray,
    kappa: complex,
    *,
    mask: Optional[np.ndarray] = None
) -> np.ndarray:
    """`h(R)` such that `grad_x G(x, y) = h(R) (x - y)`. Zero distances (and masked entries) give 0."""

    with np.errstate(divide="ignore", invalid="ignore"):
        factors = -(1.0 + 1j * kappa * R) * np.exp(-1j * kappa * R) / (_FOUR_PI * R ** 3)
    factors[R == 0.0] = 0.0
    if mask is not None:
        factors[~mask] = 0.0
    return factors
