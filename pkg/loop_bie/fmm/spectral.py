"""Plane-wave (spectral) expansions of the Helmholtz Green's function.

For well separated boxes with centers `c_obs`, `c_src` and `X = c_obs - c_src`::

    G(x, y) = -j kappa / (16 pi^2) * integral over S^2 of
              exp(-j kappa k.(x - c_obs)) T_L(k, X) exp(+j kappa k.(y - c_src)) dk

with the translation operator `T_L(k, X) = sum_{n <= L} (-j)^n (2n + 1) h2_n(kappa |X|) P_n(k.X/|X|)`.
"""

from __future__ import annotations

from typing import (
    NamedTuple
)

from functools import cache

import numpy as np
import scipy.special

_FACTOR = 1.0 / (16.0 * np.pi ** 2)


class SphereSampling(NamedTuple):
    """Directions on the unit sphere with weights summing to `4 pi`, exact to degree `2L + 1`."""

    directions: np.ndarray
    weights: np.ndarray
    bandlimit: int

    @property
    def size(self) -> int:
        return len(self.weights)


def bandlimit(kappa: complex, box_diagonal: float, digits: int) -> int:
    """Excess-bandwidth rule `L = kd + 1.8 digits^(2/3) (kd)^(1/3)`."""
    kd = abs(np.real(kappa)) * box_diagonal
    return max(1, int(np.ceil(kd + 1.8 * digits ** (2.0 / 3.0) * kd ** (1.0 / 3.0))))


@cache
def sphere_sampling(L: int) -> SphereSampling:
    """Gauss-Legendre nodes in `cos(theta)` times uniform `phi`, `(L + 1) (2L + 2)` directions."""

    (x, wx) = np.polynomial.legendre.leggauss(L + 1)
    n_phi = 2 * L + 2
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi

    (cos_theta, phi_grid) = np.meshgrid(x, phi, indexing="ij")
    sin_theta = np.sqrt(1.0 - cos_theta ** 2)
    directions = np.stack([
        sin_theta * np.cos(phi_grid),
        sin_theta * np.sin(phi_grid),
        cos_theta,
    ], axis=-1).reshape(-1, 3)
    weights = np.repeat(wx, n_phi) * (2.0 * np.pi / n_phi)

    return SphereSampling(directions=directions, weights=weights, bandlimit=L)


def spherical_hankel2(n: np.ndarray, z: complex) -> np.ndarray:
    return scipy.special.spherical_jn(n, z) - 1j * scipy.special.spherical_yn(n, z)


def _legendre_table(L: int, x: np.ndarray) -> np.ndarray:
    table = np.empty((L + 1, len(x)))
    table[0] = 1.0
    if L >= 1:
        table[1] = x
    for n in range(1, L):
        table[n + 1] = ((2 * n + 1) * x * table[n] - n * table[n - 1]) / (n + 1)
    return table


def translation_operator(kappa: complex, X: np.ndarray, sampling: SphereSampling) -> np.ndarray:
    """Diagonal translation `T_L(k, X)` at every sampled direction."""

    X = np.asarray(X, dtype=np.float64)
    distance = float(np.linalg.norm(X))
    L = sampling.bandlimit
    n = np.arange(L + 1)

    coefficients = (-1j) ** n * (2 * n + 1) * spherical_hankel2(n, kappa * distance)
    cosines = sampling.directions @ (X / distance)
    return coefficients @ _legendre_table(L, cosines)


def outgoing(
    points: np.ndarray,
    charges: np.ndarray,
    center: np.ndarray,
    kappa: complex,
    sampling: SphereSampling
) -> np.ndarray:
    """Radiation pattern `sum_t q_t exp(+j kappa k.(y_t - c))`, shape `(directions, columns)`."""
    phases = np.exp(1j * kappa * (sampling.directions @ (points - center).T))
    return phases @ charges


def incoming(
    points: np.ndarray,
    local: np.ndarray,
    center: np.ndarray,
    kappa: complex,
    sampling: SphereSampling,
    gradient: bool = False
):
    """Potentials (and gradients) at `points` of a local plane-wave expansion.

    Returns `(potentials (n, columns), gradients (n, columns, 3) or None)`.
    """

    phases = np.exp(-1j * kappa * ((points - center) @ sampling.directions.T)) * sampling.weights
    scale = -1j * kappa * _FACTOR
    potentials = scale * (phases @ local)

    gradients = None
    if gradient:
        gradients = np.stack([
            scale * ((phases * (-1j * kappa * sampling.directions[:, axis])) @ local)
            for axis in range(3)
        ], axis=-1)

    return (potentials, gradients)
