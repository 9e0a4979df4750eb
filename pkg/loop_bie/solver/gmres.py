from __future__ import annotations

from typing import (
    Callable,
    List,
    NamedTuple,
    Optional,
    Union
)

import logging

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..__about__ import __name_public__

_logger = logging.getLogger(f"{__name_public__}:solver")

LinearMap = Union[Callable[[np.ndarray], np.ndarray], np.ndarray, sp.spmatrix, spla.LinearOperator]


class GmresResult(NamedTuple):
    """Solution and relative (preconditioned) residual history, starting with the initial residual."""

    x: np.ndarray
    iterations: int
    residuals: List[float]
    converged: bool

    @property
    def residual(self) -> float:
        return self.residuals[-1]


class ConvergenceError(ArithmeticError):
    """GMRES stopped before reaching the tolerance"""

    _result: GmresResult

    @property
    def result(self) -> GmresResult:
        return self._result

    @property
    def history(self) -> List[float]:
        return self._result.residuals

    def __init__(self, *args: object, result: GmresResult):
        super().__init__(*args)
        self._result = result


def as_callable(operator: LinearMap) -> Callable[[np.ndarray], np.ndarray]:
    if callable(operator) and not isinstance(operator, spla.LinearOperator):
        return operator
    return lambda x: operator @ x


def gmres(
    operator: LinearMap,
    rhs: np.ndarray,
    *,
    tol: float = 1e-5,
    restart: int = 200,
    max_iter: int = 1000,
    preconditioner: Optional[LinearMap] = None,
    x0: Optional[np.ndarray] = None,
    label: str = "GMRES",
    log_level: int = logging.INFO
) -> GmresResult:
    """Restarted GMRES with modified Gram-Schmidt and Givens rotations.

    Stops when the (left-preconditioned) residual relative to the preconditioned right-hand
    side drops below `tol`.

    Raises:
        ConvergenceError: `max_iter` reached (the history is attached)
    """

    apply = as_callable(operator)
    precondition = as_callable(preconditioner) if preconditioner is not None else (lambda v: v)

    rhs = np.asarray(rhs, dtype=np.complex128)
    n = len(rhs)
    x = np.zeros(n, dtype=np.complex128) if x0 is None else np.asarray(x0, dtype=np.complex128).copy()

    reference = float(np.linalg.norm(precondition(rhs)))
    if reference == 0.0:
        return GmresResult(x=np.zeros(n, dtype=np.complex128), iterations=0, residuals=[0.0], converged=True)

    r = precondition(rhs - apply(x)) if x0 is not None else precondition(rhs)
    beta = float(np.linalg.norm(r))
    residuals = [beta / reference]
    iterations = 0

    while residuals[-1] > tol and iterations < max_iter:
        m = min(restart, max_iter - iterations)
        Q = np.zeros((m + 1, n), dtype=np.complex128)
        H = np.zeros((m + 1, m), dtype=np.complex128)
        cs = np.zeros(m, dtype=np.complex128)
        sn = np.zeros(m, dtype=np.complex128)
        g = np.zeros(m + 1, dtype=np.complex128)

        Q[0] = r / beta
        g[0] = beta
        steps = 0
        breakdown = False

        for j in range(m):
            w = precondition(apply(Q[j]))
            for i in range(j + 1):
                H[i, j] = np.vdot(Q[i], w)
                w = w - H[i, j] * Q[i]
            h_next = float(np.linalg.norm(w))
            H[j + 1, j] = h_next

            for i in range(j):
                (a, b) = (H[i, j], H[i + 1, j])
                H[i, j] = np.conj(cs[i]) * a + np.conj(sn[i]) * b
                H[i + 1, j] = -sn[i] * a + cs[i] * b

            norm = np.hypot(abs(H[j, j]), abs(H[j + 1, j]))
            if norm == 0.0:
                (cs[j], sn[j]) = (1.0, 0.0)
            else:
                (cs[j], sn[j]) = (H[j, j] / norm, H[j + 1, j] / norm)
            breakdown = h_next <= 1e-14 * max(norm, 1.0)
            H[j, j] = norm
            H[j + 1, j] = 0.0
            (g[j], g[j + 1]) = (np.conj(cs[j]) * g[j], -sn[j] * g[j])

            steps = j + 1
            iterations += 1
            residuals.append(abs(g[j + 1]) / reference)
            _logger.debug(f"{label} iteration {iterations}: residual {residuals[-1]:.3e}")

            if residuals[-1] <= tol or breakdown:
                break
            Q[j + 1] = w / h_next

        y = np.linalg.solve(np.triu(H[:steps, :steps]), g[:steps]) if steps else np.zeros(0)
        x = x + Q[:steps].T @ y

        r = precondition(rhs - apply(x))
        beta = float(np.linalg.norm(r))
        if breakdown and residuals[-1] > tol:
            break

    result = GmresResult(x=x, iterations=iterations, residuals=residuals, converged=residuals[-1] <= tol)
    if not result.converged:
        raise ConvergenceError(
            f"{label} reached {iterations} iterations with residual {residuals[-1]:.3e} (tolerance {tol:.1e})",
            result=result,
        )

    _logger.log(log_level, f"{label} converged in {iterations} iterations (residual {residuals[-1]:.3e})")
    return result
