from __future__ import annotations

from typing import (
    NamedTuple,
    Tuple
)

import logging

import numpy as np

from ..__about__ import __name_public__
from ..operators.assembly import (
    Operator,
    OperatorSet
)
from ..spectral.laplace_beltrami import (
    SpectralBasis,
    ZeroEigenvalueError
)
from .calderon import rotate

_logger = logging.getLogger(f"{__name_public__}:solver")


class ReducedSystem(NamedTuple):
    """The regularized system in manifold-harmonic coordinates `(v, w)` of size `2 M`.

    `harmonics` maps each component back to Loop coefficients: `a1 = harmonics @ v`.
    """

    Z: np.ndarray
    rhs: np.ndarray
    gram: np.ndarray
    harmonics: np.ndarray
    scaled: bool

    @property
    def size(self) -> int:
        return len(self.rhs)

    def loop_coefficients(self, reduced: np.ndarray) -> np.ndarray:
        M = self.harmonics.shape[1]
        return np.concatenate([self.harmonics @ reduced[:M], self.harmonics @ reduced[M:]])


def _congruence(operator: Operator, Q: np.ndarray) -> np.ndarray:
    return Q.T @ np.asarray(operator @ Q)


def _block(Q: np.ndarray) -> np.ndarray:
    (V, M) = Q.shape
    result = np.zeros((2 * V, 2 * M), dtype=Q.dtype)
    result[:V, :M] = Q
    result[V:, M:] = Q
    return result


def compress_mh(
    ops: OperatorSet,
    rhs: Tuple[np.ndarray, np.ndarray],
    basis: SpectralBasis,
    *,
    scaled: bool = True
) -> ReducedSystem:
    """Congruence of the regularized system with the block-diagonal harmonic map.

    With `scaled` the harmonics are divided by `sqrt(lambda)` so the reduced Gram matrix is the
    identity.

    Raises:
        ZeroEigenvalueError: the basis contains the constant mode
        ValueError: operators assembled without the regularizer
    """

    if basis.includes_constant or np.any(basis.eigenvalues <= 0.0):
        raise ZeroEigenvalueError("Manifold-harmonic compression needs a basis without the constant mode")
    if ops.T_kp is None:
        raise ValueError("The regularized system needs the complexified-wavenumber operator")

    Q = basis.coefficients / np.sqrt(basis.eigenvalues)[None, :] if scaled else basis.coefficients
    Q2 = _block(Q)

    G_H = _congruence(ops.G, Q2).real
    T_H = _congruence(ops.T_k, Q2)
    T_kp_H = _congruence(ops.T_kp, Q2)
    K_H = _congruence(ops.K, Q2)

    def solve_gram(y: np.ndarray) -> np.ndarray:
        return np.linalg.solve(G_H, y)

    regularizer = 2.0 * rotate(T_kp_H @ solve_gram(rotate(T_H)))
    Z = solve_gram(K_H - regularizer)

    (V_T, V_K) = rhs
    V_T_H = Q2.T @ V_T
    V_K_H = Q2.T @ V_K
    reduced_rhs = solve_gram(V_K_H + 2.0 * rotate(T_kp_H @ solve_gram(rotate(V_T_H))))

    _logger.info(f"Manifold-harmonic system of size {2 * basis.size} (from {ops.G.shape[0]} Loop unknowns)")
    return ReducedSystem(Z=Z, rhs=reduced_rhs, gram=G_H, harmonics=Q, scaled=scaled)
