from __future__ import annotations

from typing import (
    NamedTuple
)

import logging

import numpy as np

from ..__about__ import __name_public__
from ..mesh.subdivision import BOX_SPLINE_ORDER
from .box_spline import box_spline
from .stencils import (
    CHILD_MAPS,
    irregular_stencils
)

_logger = logging.getLogger(f"{__name_public__}:surface")

DEFAULT_CORNER_CLAMP = 1e-12


class BasisDerivatives(NamedTuple):
    """Ring basis values and parametric derivatives, each of shape `(n, K)`.

    Derivatives are taken with respect to the free barycentric parameters `(v, w)`.
    """

    value: np.ndarray
    d_v: np.ndarray
    d_w: np.ndarray
    d_vv: np.ndarray
    d_vw: np.ndarray
    d_ww: np.ndarray


def _regular_basis(params: np.ndarray) -> BasisDerivatives:
    box = box_spline(params)
    n = len(params)
    tables = []
    for table in box:
        ring_table = np.zeros((n, 12))
        ring_table[:, BOX_SPLINE_ORDER] = table
        tables.append(ring_table)
    return BasisDerivatives(*tables)


def _irregular_basis(valence: int, params: np.ndarray, clamp: float) -> BasisDerivatives:
    stencils = irregular_stencils(valence)
    size = stencils.size
    n = len(params)

    params = np.array(params, dtype=np.float64)
    total = params.sum(axis=1)
    at_corner = total < clamp

    # Derivatives at the extraordinary corner are taken just off it
    shifted = params.copy()
    if np.any(at_corner):
        scale = np.where(total[at_corner] > 0, 2.0 * clamp / np.maximum(total[at_corner], 1e-300), 0.0)
        shifted[at_corner] = params[at_corner] * scale[:, None]
        shifted[at_corner & (total <= 0)] = clamp
        total = shifted.sum(axis=1)

    level = np.maximum(np.floor(-np.log2(total)), 0).astype(np.int64)
    scaled = shifted * (2.0 ** level)[:, None]
    child = np.where(scaled[:, 0] >= 0.5, 0, np.where(scaled[:, 1] >= 0.5, 1, 2))

    tables = [np.zeros((n, size)) for _ in range(6)]

    for key in set(zip(level.tolist(), child.tolist())):
        (m, k) = key
        selection = np.flatnonzero((level == m) & (child == k))
        (offset, jacobian) = CHILD_MAPS[k]
        local = offset + scaled[selection] @ jacobian.T

        box = box_spline(local)
        pick = stencils.picks[k] @ stencils.power(m)

        scale = 2.0 ** m
        value = box.value @ pick
        first = np.stack([box.d_v @ pick, box.d_w @ pick], axis=-1)
        second = np.stack([
            np.stack([box.d_vv @ pick, box.d_vw @ pick], axis=-1),
            np.stack([box.d_vw @ pick, box.d_ww @ pick], axis=-1),
        ], axis=-2)

        first = scale * np.einsum("ca,nkc->nka", jacobian, first)
        second = scale ** 2 * np.einsum("ca,nkcd,db->nkab", jacobian, second, jacobian)

        tables[0][selection] = value
        tables[1][selection] = first[..., 0]
        tables[2][selection] = first[..., 1]
        tables[3][selection] = second[..., 0, 0]
        tables[4][selection] = second[..., 0, 1]
        tables[5][selection] = second[..., 1, 1]

    tables[0][at_corner] = stencils.limit_mask

    return BasisDerivatives(*tables)


def patch_basis(
    valence: int,
    regular: bool,
    params: np.ndarray,
    *,
    clamp: float = DEFAULT_CORNER_CLAMP
) -> BasisDerivatives:
    """Ring basis of a patch at parameters `(v, w)` of shape `(n, 2)`.

    Regular patches use the box-spline basis directly, irregular ones are evaluated through the
    subdivision eigenstructure of their valence. At the extraordinary corner (`v + w < clamp`)
    values come from the limit position mask.
    """

    params = np.atleast_2d(np.asarray(params, dtype=np.float64))

    if regular:
        return _regular_basis(params)
    else:
        return _irregular_basis(valence, params, clamp)


class Geometry(NamedTuple):
    """Limit-surface differential geometry at a batch of points (leading shapes `(..., n)`)."""

    position: np.ndarray
    d_u: np.ndarray
    d_v: np.ndarray
    d_uu: np.ndarray
    d_uv: np.ndarray
    d_vv: np.ndarray
    normal: np.ndarray
    jacobian: np.ndarray
    mean_curvature: np.ndarray
    inverse_metric: np.ndarray


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("...d,...d->...", a, b)


def geometry(basis: BasisDerivatives, control: np.ndarray) -> Geometry:
    """Geometry of a batch of patches of one kind. `control` has shape `(P, K, 3)`, results `(P, n, ...)`."""

    (x, x_u, x_v, x_uu, x_uv, x_vv) = (np.einsum("nk,pkd->pnd", table, control) for table in basis)

    E = _dot(x_u, x_u)
    F = _dot(x_u, x_v)
    G = _dot(x_v, x_v)
    det = E * G - F ** 2
    jacobian = np.sqrt(det)

    normal = np.cross(x_u, x_v) / jacobian[..., None]

    e = _dot(x_uu, normal)
    f = _dot(x_uv, normal)
    g = _dot(x_vv, normal)
    mean_curvature = -(e * G - 2.0 * f * F + g * E) / (2.0 * det)

    inverse_metric = np.stack([
        np.stack([G, -F], axis=-1),
        np.stack([-F, E], axis=-1),
    ], axis=-2) / det[..., None, None]

    return Geometry(
        position=x,
        d_u=x_u,
        d_v=x_v,
        d_uu=x_uu,
        d_uv=x_uv,
        d_vv=x_vv,
        normal=normal,
        jacobian=jacobian,
        mean_curvature=mean_curvature,
        inverse_metric=inverse_metric,
    )


def _tangents(geo: Geometry) -> np.ndarray:
    return np.stack([geo.d_u, geo.d_v], axis=-2)


def _second_derivatives(geo: Geometry) -> np.ndarray:
    return np.stack([
        np.stack([geo.d_uu, geo.d_uv], axis=-2),
        np.stack([geo.d_uv, geo.d_vv], axis=-2),
    ], axis=-3)


def _basis_first(basis: BasisDerivatives) -> np.ndarray:
    return np.stack([basis.d_v, basis.d_w], axis=-1)


def _basis_second(basis: BasisDerivatives) -> np.ndarray:
    return np.stack([
        np.stack([basis.d_vv, basis.d_vw], axis=-1),
        np.stack([basis.d_vw, basis.d_ww], axis=-1),
    ], axis=-2)


def surface_gradients(basis: BasisDerivatives, geo: Geometry) -> np.ndarray:
    """Tangential gradients of the ring basis, shape `(P, n, K, 3)`."""

    components = np.einsum("pnlk,nKk->pnKl", geo.inverse_metric, _basis_first(basis))
    return np.einsum("pnKl,pnld->pnKd", components, _tangents(geo))


def surface_laplacians(basis: BasisDerivatives, geo: Geometry) -> np.ndarray:
    """Laplace-Beltrami operator of each ring basis function (Christoffel form), shape `(P, n, K)`."""

    g = geo.inverse_metric
    projections = np.einsum("pnijd,pnld->pnijl", _second_derivatives(geo), _tangents(geo))
    christoffel = np.einsum("pnkl,pnijl->pnkij", g, projections)

    covariant = _basis_second(basis)[None] - np.einsum("pnkij,nKk->pnKij", christoffel, _basis_first(basis))
    return np.einsum("pnij,pnKij->pnK", g, covariant)


def surface_divergence_of_gradients(basis: BasisDerivatives, geo: Geometry) -> np.ndarray:
    """Surface divergence of each basis gradient field, obtained by differentiating the field.

    Independent of `surface_laplacians`, both agree on smooth patches. Shape `(P, n, K)`.
    """

    g = geo.inverse_metric
    tangents = _tangents(geo)
    second = _second_derivatives(geo)
    first = _basis_first(basis)

    d_metric = (
        np.einsum("pnaid,pnbd->pniab", second, tangents)
        + np.einsum("pnad,pnbid->pniab", tangents, second)
    )
    d_inverse = -np.einsum("pnla,pniab,pnbk->pnilk", g, d_metric, g)

    components = np.einsum("pnlk,nKk->pnKl", g, first)
    d_components = (
        np.einsum("pnilk,nKk->pnKil", d_inverse, first)
        + np.einsum("pnlk,nKki->pnKil", g, _basis_second(basis))
    )

    return (
        np.einsum("pnKii->pnK", d_components)
        + np.einsum("pnij,pnKl,pnlid,pnjd->pnK", g, components, second, tangents)
    )
