"""Calderon-preconditioned combined field system and the single-operator formulations.

`T` is assembled in its symmetric tested-by-`J` form. The operator tested by `n x J` equals `P T`
with the block rotation `P (a1, a2) = (-a2, a1)` (`n x J1 = J2`, `n x J2 = -J1`), so the
regularized system reads::

    Z x = G^-1 (K x - 2 P T_kp G^-1 P T_k x)
    V   = G^-1 (V_K + 2 P T_kp G^-1 P V_T)
"""

from __future__ import annotations

from typing import (
    Tuple
)

import logging

import numpy as np
import scipy.sparse.linalg as spla

from ..__about__ import __name_public__
from ..config import SystemConfig
from ..operators.assembly import (
    OperatorSet,
    split,
    stacked
)
from .gram import GramSolver

_logger = logging.getLogger(f"{__name_public__}:solver")


def rotate(x: np.ndarray) -> np.ndarray:
    """`P x`, the coefficients of `n x J` for the current with coefficients `x`."""
    (a1, a2) = split(np.asarray(x))
    return stacked(-a2, a1)


def gram_solver(ops: OperatorSet, config: SystemConfig) -> GramSolver:
    return GramSolver(
        ops.G,
        ops.basis_integrals,
        tol=config.gmres_tol_gram,
        preconditioner=config.gram_preconditioner,
        restart=config.restart,
        max_iter=config.max_iter,
    )


class CalderonSystem():
    """Matrix-free regularized operator `Z` with nested Gram solves.

    Every application performs two Gram solves, so results carry zero weighted constant mode.
    """

    _ops: OperatorSet
    _gram: GramSolver
    _applications: int

    def __init__(self, ops: OperatorSet, config: SystemConfig):
        """
        Raises:
            ValueError: operators assembled without the regularizer
        """

        if ops.T_kp is None:
            raise ValueError("The regularized system needs the complexified-wavenumber operator")

        self._ops = ops
        self._gram = gram_solver(ops, config)
        self._applications = 0

    @property
    def gram(self) -> GramSolver:
        return self._gram

    @property
    def applications(self) -> int:
        return self._applications

    @property
    def shape(self) -> Tuple[int, int]:
        return self._ops.G.shape

    def _regularizer(self, y: np.ndarray) -> np.ndarray:
        """`2 P T_kp G^-1 P y`."""
        return 2.0 * rotate(self._ops.T_kp @ self._gram.solve(rotate(y)))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """
        Raises:
            GramSolveError:
        """

        x = np.asarray(x, dtype=np.complex128).reshape(-1)
        self._applications += 1
        return self._gram.solve(self._ops.K @ x - self._regularizer(self._ops.T_k @ x))

    def rhs(self, V_T: np.ndarray, V_K: np.ndarray) -> np.ndarray:
        return self._gram.solve(V_K + self._regularizer(V_T))

    def as_linear_operator(self) -> spla.LinearOperator:
        return spla.LinearOperator(self.shape, matvec=self.matvec, dtype=np.complex128)


def cfie_operator(ops: OperatorSet, alpha: float) -> spla.LinearOperator:
    """`(1 - alpha) K - alpha T`; `alpha = 1` is the (sign-flipped) electric and `alpha = 0` the magnetic equation.

    Raises:
        ValueError: alpha outside [0, 1]
    """

    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"CFIE weight {alpha} outside [0, 1]")

    def matvec(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128).reshape(-1)
        result = np.zeros(len(x), dtype=np.complex128)
        if alpha < 1.0:
            result += (1.0 - alpha) * (ops.K @ x)
        if alpha > 0.0:
            result -= alpha * (ops.T_k @ x)
        return result

    return spla.LinearOperator(ops.G.shape, matvec=matvec, dtype=np.complex128)


def cfie_rhs(V_T: np.ndarray, V_K: np.ndarray, alpha: float) -> np.ndarray:
    return (1.0 - alpha) * V_K + alpha * V_T
