"""Quadrature rules for singular and near-singular patch integrals.

All rules live on the reference triangle `v, w >= 0, v + w <= 1` and are returned as
`QuadratureRule` objects whose weights carry the parametric measure (they sum to 1/2).
"""

from __future__ import annotations

from typing import (
    List,
    Optional,
    Tuple
)

from functools import cache

import numpy as np

from ..surface.quadrature import (
    BaseRule,
    QuadratureRule,
    composite_rule,
    map_rule,
    split_triangle
)


class QuadratureError(ArithmeticError):
    """A patch pair integral could not be evaluated to the requested accuracy"""

    _pair: Optional[Tuple[int, int]]

    @property
    def pair(self) -> Optional[Tuple[int, int]]:
        return self._pair

    def __init__(self, *args: object, pair: Optional[Tuple[int, int]] = None):
        super().__init__(*args)
        self._pair = pair


REFERENCE_TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


@cache
def gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on `[0, 1]`."""
    (nodes, weights) = np.polynomial.legendre.leggauss(order)
    return ((nodes + 1.0) / 2.0, weights / 2.0)


def _triangle_area(triangle: np.ndarray) -> float:
    (a, b, c) = triangle
    return 0.5 * abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))


def collapsed_rule(apex: np.ndarray, b: np.ndarray, c: np.ndarray, order: int) -> QuadratureRule:
    """Duffy rule on the triangle `(apex, b, c)`, collapsing the unit square onto `apex`.

    `y = apex + s ((b - apex) + t (c - b))` with measure `2 area s ds dt` cancels a `1/R`
    singularity at the apex. The remaining `1 / |(b - apex) + t (c - b)|` factor peaks along the
    edge when the apex is close to it; `t = foot + (h / L) sinh(u)`, with `foot` the projection
    of the apex on the edge line, `h` its distance and `L` the edge length, makes it constant in `u`.
    """

    (nodes, weights) = gauss_legendre(order)
    area = _triangle_area(np.array([apex, b, c]))

    edge = c - b
    length = float(np.linalg.norm(edge))
    foot = float((apex - b) @ edge) / length ** 2
    scale = 2.0 * area / length ** 2
    (lower, upper) = (np.arcsinh(-foot / scale), np.arcsinh((1.0 - foot) / scale))
    u = lower + (upper - lower) * nodes
    t_nodes = foot + scale * np.sinh(u)
    t_weights = (upper - lower) * weights * scale * np.cosh(u)

    (s, t) = np.meshgrid(nodes, t_nodes, indexing="ij")
    (ws, wt) = np.meshgrid(weights, t_weights, indexing="ij")
    (s, t, ws, wt) = (s.reshape(-1), t.reshape(-1), ws.reshape(-1), wt.reshape(-1))

    params = apex + s[:, None] * ((b - apex) + t[:, None] * edge)
    return QuadratureRule(params=params, weights=2.0 * area * s * ws * wt)


def duffy_rule(point: np.ndarray, order: int, triangle: np.ndarray = REFERENCE_TRIANGLE) -> QuadratureRule:
    """Rule for an integrand singular at `point` inside `triangle`.

    The triangle is split into the three triangles joining `point` to its edges, each integrated
    with a collapsed rule. Degenerate pieces (point on an edge or corner) are dropped.
    """

    point = np.asarray(point, dtype=np.float64)
    parts: List[QuadratureRule] = []
    for i in range(3):
        (b, c) = (triangle[i], triangle[(i + 1) % 3])
        if _triangle_area(np.array([point, b, c])) <= 1e-15 * max(_triangle_area(triangle), 1e-300):
            continue
        parts.append(collapsed_rule(point, b, c, order))

    return QuadratureRule(
        params=np.concatenate([part.params for part in parts]),
        weights=np.concatenate([part.weights for part in parts]),
    )


def _refined_rule(
    corners: np.ndarray,
    targets: np.ndarray,
    max_depth: int,
    base: QuadratureRule,
    duffy_order: int,
    ratio: float
) -> QuadratureRule:

    def to_space(params: np.ndarray) -> np.ndarray:
        u = 1.0 - params.sum(axis=1)
        return u[:, None] * corners[0] + params[:, :1] * corners[1] + params[:, 1:] * corners[2]

    params: List[np.ndarray] = []
    weights: List[np.ndarray] = []
    stack: List[Tuple[np.ndarray, int]] = [(REFERENCE_TRIANGLE, 0)]

    while stack:
        (triangle, depth) = stack.pop()
        points = to_space(triangle)
        center = points.mean(axis=0)
        diameter = max(np.linalg.norm(points[i] - points[(i + 1) % 3]) for i in range(3))
        gaps = np.linalg.norm(targets - center, axis=1)
        close = gaps.min() < ratio * diameter

        if close and depth < max_depth:
            stack.extend((child, depth + 1) for child in split_triangle(triangle))
        elif close:
            corner_gaps = [np.min(np.linalg.norm(targets - p, axis=1)) for p in points]
            i = int(np.argmin(corner_gaps))
            rule = collapsed_rule(triangle[i], triangle[(i + 1) % 3], triangle[(i + 2) % 3], duffy_order)
            params.append(rule.params)
            weights.append(rule.weights)
        else:
            rule = map_rule(base, triangle)
            params.append(rule.params)
            weights.append(rule.weights)

    return QuadratureRule(params=np.concatenate(params), weights=np.concatenate(weights))


def adaptive_rule(
    corners: np.ndarray,
    targets: np.ndarray,
    *,
    max_depth: int = 4,
    base_rule: BaseRule = 6,
    duffy_order: int = 8,
    ratio: float = 1.5,
    tolerance: Optional[float] = None
) -> QuadratureRule:
    """Rule for a smooth integrand with a source patch close to the `targets` points.

    `corners` are the patch corner positions (the flat approximation used to measure distances).
    Subtriangles closer to the targets than `ratio` times their diameter are split, up to
    `max_depth`; those still close at the deepest level get a collapsed rule towards their
    corner nearest the targets.

    With a `tolerance` the depth grows from 0 and stops at the first rule integrating `1/R` over
    the flat triangle to that relative error at every target, against the closed form.

    Raises:
        QuadratureError: `tolerance` not met at `max_depth`
    """

    base = composite_rule(0, base_rule)
    corners = np.asarray(corners, dtype=np.float64)
    targets = np.atleast_2d(targets)

    if tolerance is None:
        return _refined_rule(corners, targets, max_depth, base, duffy_order, ratio)

    exact = np.array([flat_triangle_inverse_distance(corners, x) for x in targets])
    error = np.inf
    for depth in range(max_depth + 1):
        rule = _refined_rule(corners, targets, depth, base, duffy_order, ratio)
        error = float(np.max(np.abs(_inverse_distance_sums(corners, targets, rule) - exact) / exact))
        if error <= tolerance:
            return rule

    raise QuadratureError(
        f"Near-singular rule error {error:.1e} above {tolerance:.1e} at depth {max_depth}"
    )


def _inverse_distance_sums(corners: np.ndarray, targets: np.ndarray, rule: QuadratureRule) -> np.ndarray:
    u = 1.0 - rule.params.sum(axis=1)
    points = u[:, None] * corners[0] + rule.params[:, :1] * corners[1] + rule.params[:, 1:] * corners[2]
    jacobian = np.linalg.norm(np.cross(corners[1] - corners[0], corners[2] - corners[0]))
    R = np.linalg.norm(points[None] - targets[:, None], axis=2)
    return (rule.weights * jacobian / R).sum(axis=1)


def flat_triangle_inverse_distance(vertices: np.ndarray, x: np.ndarray) -> float:
    """Closed form of `integral over a flat triangle of 1 / |x - y| dy` for any point `x`.

    Raises:
        ValueError: degenerate triangle
    """

    vertices = np.asarray(vertices, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)

    normal = np.cross(vertices[1] - vertices[0], vertices[2] - vertices[0])
    norm = np.linalg.norm(normal)
    if norm == 0.0:
        raise ValueError("Degenerate triangle")
    normal /= norm

    w = float(normal @ (x - vertices[0]))
    projection = x - w * normal
    abs_w = abs(w)

    total = 0.0
    for i in range(3):
        (a, b) = (vertices[i], vertices[(i + 1) % 3])
        along = (b - a) / np.linalg.norm(b - a)
        outward = np.cross(along, normal)

        l_plus = float((b - projection) @ along)
        l_minus = float((a - projection) @ along)
        p0 = float((a - projection) @ outward)
        r_plus = float(np.linalg.norm(x - b))
        r_minus = float(np.linalg.norm(x - a))
        r0_squared = p0 ** 2 + w ** 2

        if abs(p0) > 1e-14 * np.linalg.norm(b - a):
            total += p0 * np.log((r_plus + l_plus) / (r_minus + l_minus))
        if abs_w > 0.0:
            total -= abs_w * (
                np.arctan(p0 * l_plus / (r0_squared + abs_w * r_plus))
                - np.arctan(p0 * l_minus / (r0_squared + abs_w * r_minus))
            )

    return float(total)


def flat_triangle_rule_integral(
    vertices: np.ndarray,
    x: np.ndarray,
    rule: QuadratureRule,
    kappa: complex = 0.0
) -> complex:
    """`integral over a flat triangle of exp(-j kappa R) / R` with a reference-triangle rule."""

    vertices = np.asarray(vertices, dtype=np.float64)
    u = 1.0 - rule.params.sum(axis=1)
    points = u[:, None] * vertices[0] + rule.params[:, :1] * vertices[1] + rule.params[:, 1:] * vertices[2]
    jacobian = np.linalg.norm(np.cross(vertices[1] - vertices[0], vertices[2] - vertices[0]))
    R = np.linalg.norm(points - np.asarray(x), axis=1)
    return complex(np.sum(rule.weights * jacobian * np.exp(-1j * kappa * R) / R))


def parameters_of(vertices: np.ndarray, x: np.ndarray) -> Optional[np.ndarray]:
    """Free barycentric parameters `(v, w)` of the in-plane projection of `x`, None outside."""

    vertices = np.asarray(vertices, dtype=np.float64)
    basis = np.stack([vertices[1] - vertices[0], vertices[2] - vertices[0]], axis=1)
    (params, *_) = np.linalg.lstsq(basis, np.asarray(x) - vertices[0], rcond=None)
    if params.min() < 0.0 or params.sum() > 1.0:
        return None
    return params
