"""Quartic box-spline basis of a regular Loop patch.

Basis functions are written over the barycentric monomials `u^a v^b w^c` (`a + b + c = 4`) and
numbered like the regular twelve-point ring (rows `1 2 / 3 4 5 / 6 7 8 9 / 10 11 12`, the patch
being the triangle `4 7 8` with `u = 1` at 4, `v = 1` at 7, `w = 1` at 8).
"""

from __future__ import annotations

from typing import (
    Dict,
    List,
    NamedTuple,
    Tuple
)

import numpy as np

Monomial = Tuple[int, int, int]
Polynomial = Dict[Monomial, float]

_BASIS_TERMS: List[List[Tuple[float, Monomial]]] = [
    [(1, (4, 0, 0)), (2, (3, 1, 0))],
    [(1, (4, 0, 0)), (2, (3, 0, 1))],
    [(1, (4, 0, 0)), (2, (3, 0, 1)), (6, (3, 1, 0)), (6, (2, 1, 1)), (12, (2, 2, 0)), (6, (1, 2, 1)),
     (6, (1, 3, 0)), (2, (0, 3, 1)), (1, (0, 4, 0))],
    [(6, (4, 0, 0)), (24, (3, 0, 1)), (24, (2, 0, 2)), (8, (1, 0, 3)), (1, (0, 0, 4)), (24, (3, 1, 0)),
     (60, (2, 1, 1)), (36, (1, 1, 2)), (6, (0, 1, 3)), (24, (2, 2, 0)), (36, (1, 2, 1)), (12, (0, 2, 2)),
     (8, (1, 3, 0)), (6, (0, 3, 1)), (1, (0, 4, 0))],
    [(1, (4, 0, 0)), (6, (3, 0, 1)), (12, (2, 0, 2)), (6, (1, 0, 3)), (1, (0, 0, 4)), (2, (3, 1, 0)),
     (6, (2, 1, 1)), (6, (1, 1, 2)), (2, (0, 1, 3))],
    [(2, (1, 3, 0)), (1, (0, 4, 0))],
    [(1, (4, 0, 0)), (6, (3, 0, 1)), (12, (2, 0, 2)), (6, (1, 0, 3)), (1, (0, 0, 4)), (8, (3, 1, 0)),
     (36, (2, 1, 1)), (36, (1, 1, 2)), (8, (0, 1, 3)), (24, (2, 2, 0)), (60, (1, 2, 1)), (24, (0, 2, 2)),
     (24, (1, 3, 0)), (24, (0, 3, 1)), (6, (0, 4, 0))],
    [(1, (4, 0, 0)), (8, (3, 0, 1)), (24, (2, 0, 2)), (24, (1, 0, 3)), (6, (0, 0, 4)), (6, (3, 1, 0)),
     (36, (2, 1, 1)), (60, (1, 1, 2)), (24, (0, 1, 3)), (12, (2, 2, 0)), (36, (1, 2, 1)), (24, (0, 2, 2)),
     (6, (1, 3, 0)), (8, (0, 3, 1)), (1, (0, 4, 0))],
    [(2, (1, 0, 3)), (1, (0, 0, 4))],
    [(2, (0, 3, 1)), (1, (0, 4, 0))],
    [(2, (1, 0, 3)), (1, (0, 0, 4)), (6, (1, 1, 2)), (6, (0, 1, 3)), (6, (1, 2, 1)), (12, (0, 2, 2)),
     (2, (1, 3, 0)), (6, (0, 3, 1)), (1, (0, 4, 0))],
    [(1, (0, 0, 4)), (2, (0, 1, 3))],
]


def _derive(polynomial: Polynomial, variable: int) -> Polynomial:
    """Total derivative along `v` (variable 1) or `w` (variable 2) with `u = 1 - v - w`."""
    derivative: Polynomial = {}
    for (exponents, coefficient) in polynomial.items():
        for (index, sign) in ((variable, 1.0), (0, -1.0)):
            power = exponents[index]
            if power == 0:
                continue
            lowered = list(exponents)
            lowered[index] -= 1
            key = (lowered[0], lowered[1], lowered[2])
            derivative[key] = derivative.get(key, 0.0) + sign * power * coefficient
    return derivative


def _coefficients(derivatives: Tuple[int, ...]) -> Tuple[np.ndarray, List[Monomial]]:
    order = 4 - len(derivatives)
    monomials = [(order - b - c, b, c) for b in range(order + 1) for c in range(order + 1 - b)]
    index = {monomial: i for (i, monomial) in enumerate(monomials)}

    matrix = np.zeros((12, len(monomials)))
    for (basis_index, terms) in enumerate(_BASIS_TERMS):
        polynomial: Polynomial = {exponents: coefficient / 12.0 for (coefficient, exponents) in terms}
        for variable in derivatives:
            polynomial = _derive(polynomial, variable)
        for (exponents, coefficient) in polynomial.items():
            matrix[basis_index, index[exponents]] += coefficient
    return (matrix, monomials)


_TABLES = {
    derivatives: _coefficients(derivatives)
    for derivatives in [(), (1,), (2,), (1, 1), (1, 2), (2, 2)]
}


class BoxSplineValues(NamedTuple):
    """Basis values and parametric derivatives at `n` points, each of shape `(n, 12)`."""

    value: np.ndarray
    d_v: np.ndarray
    d_w: np.ndarray
    d_vv: np.ndarray
    d_vw: np.ndarray
    d_ww: np.ndarray


def _monomial_values(params: np.ndarray, monomials: List[Monomial]) -> np.ndarray:
    v = params[:, 0]
    w = params[:, 1]
    u = 1.0 - v - w
    exponents = np.array(monomials).T
    return (
        u[:, None] ** exponents[0]
        * v[:, None] ** exponents[1]
        * w[:, None] ** exponents[2]
    )


def box_spline(params: np.ndarray) -> BoxSplineValues:
    """Evaluates the twelve basis functions at parameters `(v, w)` of shape `(n, 2)`."""

    params = np.atleast_2d(params)
    tables = {}
    for (derivatives, (matrix, monomials)) in _TABLES.items():
        tables[derivatives] = _monomial_values(params, monomials) @ matrix.T

    return BoxSplineValues(
        value=tables[()],
        d_v=tables[(1,)],
        d_w=tables[(2,)],
        d_vv=tables[(1, 1)],
        d_vw=tables[(1, 2)],
        d_ww=tables[(2, 2)],
    )
