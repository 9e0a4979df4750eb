from __future__ import annotations

from typing import (
    Optional
)

import logging

import numpy as np
import scipy.sparse as sp

from ..__about__ import __name_public__
from .gmres import (
    ConvergenceError,
    gmres
)

_logger = logging.getLogger(f"{__name_public__}:solver")


class GramSolveError(ArithmeticError):
    """An inner Gram solve did not converge"""
    pass


def _blocks(x: np.ndarray, n_vertices: int) -> np.ndarray:
    return x.reshape(2, n_vertices)


class GramSolver():
    """Inverse of the singular block-diagonal Gram matrix on the complement of the constants.

    Each Helmholtz block is the stiffness matrix, whose kernel is the constant vector. Right-hand
    sides are projected onto the Euclidean complement of the constants per block, GMRES runs there
    with a projected Jacobi preconditioner and the solution is gauge-fixed to zero mean
    `sum_n a_n int xi_n = 0` per block.
    """

    _gram: sp.csr_matrix
    _n_vertices: int
    _integrals: np.ndarray
    _inverse_diagonal: Optional[np.ndarray]
    _tol: float
    _restart: int
    _max_iter: int
    _solves: int
    _iterations: int

    def __init__(
        self,
        gram: sp.spmatrix,
        integrals: np.ndarray,
        *,
        tol: float = 1e-11,
        preconditioner: str = "diagonal",
        restart: int = 200,
        max_iter: int = 1000
    ):
        self._gram = sp.csr_matrix(gram)
        self._n_vertices = self._gram.shape[0] // 2
        self._integrals = np.asarray(integrals, dtype=np.float64)
        self._tol = tol
        self._restart = restart
        self._max_iter = max_iter
        self._solves = 0
        self._iterations = 0

        self._inverse_diagonal = None
        if preconditioner == "diagonal":
            self._inverse_diagonal = 1.0 / self._gram.diagonal()

    @property
    def solves(self) -> int:
        return self._solves

    @property
    def iterations(self) -> int:
        """Inner iterations summed over all solves."""
        return self._iterations

    def project(self, b: np.ndarray) -> np.ndarray:
        """Euclidean projection off the constants of each block."""
        blocks = _blocks(np.asarray(b), self._n_vertices)
        return (blocks - blocks.mean(axis=1, keepdims=True)).reshape(b.shape)

    def gauge(self, x: np.ndarray) -> np.ndarray:
        """Adds the constants making `sum_n x_n int xi_n` vanish in each block."""
        blocks = _blocks(np.asarray(x), self._n_vertices)
        shift = (blocks @ self._integrals) / self._integrals.sum()
        return (blocks - shift[:, None]).reshape(x.shape)

    def constant_component(self, x: np.ndarray) -> float:
        """Largest relative weighted mean of the two blocks, zero for gauge-fixed vectors."""
        blocks = _blocks(np.asarray(x), self._n_vertices)
        scale = max(float(np.linalg.norm(x)), np.finfo(float).tiny)
        means = np.abs(blocks @ self._integrals) / np.linalg.norm(self._integrals)
        return float(np.max(means)) / scale

    def _operator(self, x: np.ndarray) -> np.ndarray:
        return self.project(self._gram @ x)

    def _preconditioner(self, x: np.ndarray) -> np.ndarray:
        return self.project(self._inverse_diagonal * x)

    def solve(self, b: np.ndarray) -> np.ndarray:
        """
        Raises:
            GramSolveError:
        """

        b = self.project(np.asarray(b, dtype=np.complex128))
        try:
            result = gmres(
                self._operator,
                b,
                tol=self._tol,
                restart=self._restart,
                max_iter=self._max_iter,
                preconditioner=self._preconditioner if self._inverse_diagonal is not None else None,
                label="Gram",
                log_level=logging.DEBUG,
            )
        except ConvergenceError as error:
            raise GramSolveError(
                f"Gram solve stopped at residual {error.result.residual:.3e} after {error.result.iterations} iterations"
            ) from error

        self._solves += 1
        self._iterations += result.iterations
        return self.gauge(result.x)

    def __matmul__(self, b: np.ndarray) -> np.ndarray:
        return self.solve(b)
