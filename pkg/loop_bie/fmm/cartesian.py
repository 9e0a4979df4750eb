"""Cartesian Taylor expansions of the Helmholtz Green's function for small boxes.

Coordinates inside a box are scaled by the box size `s`: `x = c_obs + s a`, `y = c_src + s b`.
With `T_alpha` the Taylor coefficients of `G(X + s t)` in `t` (total order `<= p`)::

    moments    M_beta  = sum_t q_t (-b_t)^beta
    local      L_gamma = sum_beta C(gamma + beta; gamma, beta) T_(gamma + beta) M_beta
    potential  phi(x)  = sum_gamma L_gamma a^gamma
"""

from __future__ import annotations

from typing import (
    NamedTuple,
    Optional,
    Tuple
)

from functools import cache

import numpy as np
import scipy.sparse as sp
import scipy.signal
import scipy.special


class MultiIndices(NamedTuple):
    """All `(i, j, k)` with `i + j + k <= p` and the sparse structure of the translation."""

    order: int
    indices: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    sums: np.ndarray
    multinomials: np.ndarray

    @property
    def size(self) -> int:
        return len(self.indices)


@cache
def multi_indices(p: int) -> MultiIndices:
    indices = np.array([
        (i, j, k)
        for total in range(p + 1)
        for i in range(total, -1, -1)
        for j in range(total - i, -1, -1)
        for k in [total - i - j]
    ], dtype=np.int64).reshape(-1, 3)

    totals = indices.sum(axis=1)
    (rows, cols) = np.nonzero(totals[:, None] + totals[None, :] <= p)
    sums = indices[rows] + indices[cols]
    multinomials = np.prod(scipy.special.comb(sums, indices[rows], exact=False), axis=1)

    return MultiIndices(
        order=p,
        indices=indices,
        rows=rows,
        cols=cols,
        sums=sums,
        multinomials=multinomials,
    )


def _truncate(polynomial: np.ndarray, p: int) -> np.ndarray:
    (i, j, k) = np.ogrid[:p + 1, :p + 1, :p + 1]
    result = polynomial[:p + 1, :p + 1, :p + 1].copy()
    result[(i + j + k) > p] = 0.0
    return result


def _multiply(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    return _truncate(scipy.signal.fftconvolve(a, b), p)


def taylor_coefficients(kappa: complex, X: np.ndarray, scale: float, p: int) -> np.ndarray:
    """Coefficients of `G(X + scale t)` in the monomials `t^alpha`, a `(p+1)^3` array.

    Obtained by composing power series: `R / |X| = sqrt(1 + u)` and
    `G = G(|X|) exp(-j kappa |X| delta) / (1 + delta)` with `delta = R / |X| - 1`.
    """

    X = np.asarray(X, dtype=np.float64)
    rho = float(np.linalg.norm(X))

    u = np.zeros((p + 1, p + 1, p + 1), dtype=np.complex128)
    unit = np.eye(3, dtype=np.int64)
    for axis in range(3):
        if p >= 1:
            u[tuple(unit[axis])] += 2.0 * scale * X[axis] / rho ** 2
        if p >= 2:
            u[tuple(2 * unit[axis])] += scale ** 2 / rho ** 2

    def compose(series: np.ndarray, argument: np.ndarray) -> np.ndarray:
        result = np.zeros_like(argument)
        result[0, 0, 0] = series[0]
        power = np.zeros_like(argument)
        power[0, 0, 0] = 1.0
        for n in range(1, p + 1):
            power = _multiply(power, argument, p)
            result += series[n] * power
        return result

    n = np.arange(p + 1)
    sqrt_series = scipy.special.binom(0.5, n).astype(np.complex128)
    sqrt_series[0] = 0.0
    delta = compose(sqrt_series, u)

    exponential = (-1j * kappa * rho) ** n / scipy.special.factorial(n)
    geometric = (-1.0) ** n
    outer = np.convolve(exponential, geometric)[:p + 1]

    value = np.exp(-1j * kappa * rho) / (4.0 * np.pi * rho)
    return value * compose(outer, delta)


def translation_matrix(kappa: complex, X: np.ndarray, scale: float, p: int) -> sp.csr_matrix:
    """Sparse map from scaled moments to scaled local coefficients."""

    table = multi_indices(p)
    taylor = taylor_coefficients(kappa, X, scale, p)
    data = table.multinomials * taylor[table.sums[:, 0], table.sums[:, 1], table.sums[:, 2]]
    return sp.csr_matrix((data, (table.rows, table.cols)), shape=(table.size, table.size))


def monomials(points: np.ndarray, p: int) -> np.ndarray:
    """`points^alpha` for every multi-index, shape `(n, size)`."""
    table = multi_indices(p)
    powers = points[:, :, None] ** np.arange(p + 1)
    return (
        powers[:, 0, table.indices[:, 0]]
        * powers[:, 1, table.indices[:, 1]]
        * powers[:, 2, table.indices[:, 2]]
    )


def monomial_gradients(points: np.ndarray, p: int) -> np.ndarray:
    """Derivatives of `points^alpha`, shape `(n, size, 3)`."""
    table = multi_indices(p)
    powers = points[:, :, None] ** np.arange(p + 1)
    lowered = np.maximum(table.indices - 1, 0)

    result = np.empty((len(points), table.size, 3))
    for axis in range(3):
        factors = []
        for other in range(3):
            if other == axis:
                factors.append(table.indices[:, axis] * powers[:, axis, lowered[:, axis]])
            else:
                factors.append(powers[:, other, table.indices[:, other]])
        result[:, :, axis] = factors[0] * factors[1] * factors[2]
    return result


def multipole(points: np.ndarray, charges: np.ndarray, center: np.ndarray, scale: float, p: int) -> np.ndarray:
    """Scaled moments `sum_t q_t (-(y_t - c) / s)^beta`, shape `(size, columns)`."""
    return monomials(-(points - center) / scale, p).T @ charges


def evaluate_local(
    points: np.ndarray,
    local: np.ndarray,
    center: np.ndarray,
    scale: float,
    p: int,
    gradient: bool = False
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Potentials `(n, columns)` and optionally gradients `(n, columns, 3)` of a local expansion."""

    scaled = (points - center) / scale
    potentials = monomials(scaled, p) @ local

    gradients = None
    if gradient:
        derivatives = monomial_gradients(scaled, p)
        gradients = np.einsum("nsa,sc->nca", derivatives, local) / scale

    return (potentials, gradients)
