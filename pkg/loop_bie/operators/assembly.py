from __future__ import annotations

from typing import (
    Any,
    Dict,
    Iterator,
    List,
    NamedTuple,
    Optional,
    Tuple,
    Union
)

import logging
import time

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..__about__ import __name_public__
from ..config import QuadratureConfig
from ..surface.limit_surface import (
    LimitSurface,
    mean_curvature_max
)
from ..surface.quadrature import SurfaceQuadrature
from .constants import (
    Wavenumber,
    complexified
)
from .greens import (
    kernel_gradient_factors,
    kernel_values
)
from .near_field import (
    NearBlocks,
    NearField
)

_logger = logging.getLogger(f"{__name_public__}:operators")

Operator = Union[np.ndarray, sp.spmatrix, spla.LinearOperator]

_CHUNK_ELEMENTS = 2 ** 21


class DimensionError(ValueError):
    """Operator and vector sizes do not match"""
    pass


class OperatorSet(NamedTuple):
    """Discretized operators on the `2 N_v` Loop current coefficients `(a1, a2)`.

    `T_k` and `T_kp` are the symmetric electric field operators at the physical and the
    regularizing wavenumber, `K` the magnetic field operator including its identity term and
    `G` the block-diagonal Gram matrix. `basis_integrals` holds `int xi_n`, the row sums of the mass matrix.
    """

    T_k: Operator
    T_kp: Optional[Operator]
    K: Operator
    G: sp.csr_matrix
    kappa: Wavenumber
    kappa_p: Optional[Wavenumber]
    basis_integrals: np.ndarray
    metadata: Dict[str, Any]

    @property
    def n_vertices(self) -> int:
        return self.G.shape[0] // 2


def _chunks(n_samples: int) -> Iterator[slice]:
    size = max(1, _CHUNK_ELEMENTS // max(n_samples, 1))
    for start in range(0, n_samples, size):
        yield slice(start, min(start + size, n_samples))


def weighted_basis(quadrature: SurfaceQuadrature, matrix: sp.csr_matrix) -> sp.csr_matrix:
    return (sp.diags(quadrature.area_elements) @ matrix).tocsr()


def _product(kernel: np.ndarray, weighted: sp.csr_matrix) -> np.ndarray:
    """`kernel @ weighted` for a dense kernel chunk and a sparse sample-by-vertex matrix."""
    return (weighted.T @ kernel.T).T


def tested_against_normal(quadrature: SurfaceQuadrature, component: int) -> List[sp.csr_matrix]:
    """Cartesian components of `J x n` for the given current component."""
    C = quadrature.current_basis(component)
    n = quadrature.normals
    return [
        (sp.diags(n[:, (a + 2) % 3]) @ C[(a + 1) % 3] - sp.diags(n[:, (a + 1) % 3]) @ C[(a + 2) % 3]).tocsr()
        for a in range(3)
    ]


def _localization_mask(quadrature: SurfaceQuadrature, rows: slice, cutoff: Optional[float]) -> Optional[np.ndarray]:
    if cutoff is None:
        return None
    centers = quadrature.surface.patches.centers
    observer = centers[quadrature.patch_of_sample[rows]]
    source = centers[quadrature.patch_of_sample]
    gaps = np.linalg.norm(observer[:, None, :] - source[None, :, :], axis=-1)
    return gaps <= cutoff


def regular_electric(
    quadrature: SurfaceQuadrature,
    k: Wavenumber,
    *,
    cutoff: Optional[float] = None,
    divergence: str = "laplacian"
) -> Tuple[np.ndarray, np.ndarray]:
    """Regular-rule vector and scalar potential parts of the symmetric electric operator.

    Returns the `(2 N_v, 2 N_v)` vector part `-j kappa <J_n, S J_m>` and the `(N_v, N_v)`
    scalar part `(j / kappa) <div J1_n, S div J1_m>`. `divergence` selects the
    Laplace-Beltrami route (`"laplacian"`) or the divergence of the gradient field (`"gradient"`).
    """

    kappa = complex(k)
    V = quadrature.n_vertices
    x = quadrature.points

    currents = [[weighted_basis(quadrature, c) for c in quadrature.current_basis(component)] for component in (1, 2)]
    source_div = quadrature.laplacians if divergence == "laplacian" else quadrature.divergences
    weighted_div = weighted_basis(quadrature, source_div)

    vector = np.zeros((2 * V, 2 * V), dtype=np.complex128)
    scalar = np.zeros((V, V), dtype=np.complex128)

    for rows in _chunks(quadrature.n_samples):
        d = x[rows, None, :] - x[None, :, :]
        R = np.sqrt(np.einsum("nmi,nmi->nm", d, d))
        g = kernel_values(R, kappa, mask=_localization_mask(quadrature, rows, cutoff))

        potentials = [[_product(g, c) for c in component] for component in currents]
        for l in range(2):
            for k_ in range(2):
                block = sum(currents[l][a][rows].T @ potentials[k_][a] for a in range(3))
                vector[l * V:(l + 1) * V, k_ * V:(k_ + 1) * V] += block

        scalar += weighted_div[rows].T @ _product(g, weighted_div)

    return (-1j * kappa * vector, (1j / kappa) * scalar)


def regular_magnetic(quadrature: SurfaceQuadrature, k: Wavenumber) -> np.ndarray:
    """Regular-rule principal-value part `<J_n, n x int grad G x J_m>` of the magnetic operator."""

    kappa = complex(k)
    V = quadrature.n_vertices
    x = quadrature.points

    currents = [[weighted_basis(quadrature, c) for c in quadrature.current_basis(component)] for component in (1, 2)]
    tested = [[weighted_basis(quadrature, c) for c in tested_against_normal(quadrature, component)] for component in (1, 2)]

    result = np.zeros((2 * V, 2 * V), dtype=np.complex128)

    for rows in _chunks(quadrature.n_samples):
        d = x[rows, None, :] - x[None, :, :]
        R = np.sqrt(np.einsum("nmi,nmi->nm", d, d))
        h = kernel_gradient_factors(R, kappa)
        weighted_offsets = [h * d[:, :, b] for b in range(3)]

        for k_ in range(2):
            # (d x J)_a = d_b J_c - d_c J_b with (a, b, c) cyclic
            field = []
            for a in range(3):
                (b, c) = ((a + 1) % 3, (a + 2) % 3)
                field.append(
                    _product(weighted_offsets[b], currents[k_][c])
                    - _product(weighted_offsets[c], currents[k_][b])
                )
            for l in range(2):
                block = sum(tested[l][a][rows].T @ field[a] for a in range(3))
                result[l * V:(l + 1) * V, k_ * V:(k_ + 1) * V] += block

    return result


def assemble_gram(quadrature: SurfaceQuadrature) -> sp.csr_matrix:
    """Block-diagonal Gram matrix `diag(<J1_n, J1_m>, <J2_n, J2_m>)`."""

    blocks = []
    for component in (1, 2):
        C = quadrature.current_basis(component)
        block = sum(weighted_basis(quadrature, c).T @ c for c in C)
        blocks.append(((block + block.T) / 2.0).tocsr())

    return sp.block_diag(blocks, format="csr")


def basis_integrals(quadrature: SurfaceQuadrature) -> np.ndarray:
    return quadrature.values.T @ quadrature.area_elements


def _cutoff(radius: Optional[float], k: Wavenumber) -> Optional[float]:
    return None if radius is None else radius * 2.0 * np.pi / k.real


def assemble_T(
    k: Wavenumber,
    quadrature: SurfaceQuadrature,
    config: QuadratureConfig,
    localization_radius: Optional[float] = None,
    *,
    near: Optional[NearField] = None,
    corrections: Optional[NearBlocks] = None
) -> np.ndarray:
    """Symmetric electric field operator `(2 N_v, 2 N_v)`.

    `localization_radius` (wavelengths of the real part of `kappa`) drops interactions between
    patches whose centers are further apart.

    Raises:
        QuadratureError:
    """

    start = time.perf_counter()
    V = quadrature.n_vertices
    cutoff = _cutoff(localization_radius, k)

    (vector, scalar) = regular_electric(quadrature, k, cutoff=cutoff)
    T = vector
    T[:V, :V] += scalar

    if corrections is None:
        near = near or NearField(quadrature.surface, config, 2.0 * np.pi / k.real)
        corrections = near.corrections([k], cutoffs=[cutoff])
    T += corrections.T[0].toarray()

    T = (T + T.T) / 2.0
    _logger.info(f"T assembled at kappa={complex(k):.6g} ({2 * V} unknowns, {time.perf_counter() - start:.1f}s)")
    return T


def assemble_K(
    k: Wavenumber,
    quadrature: SurfaceQuadrature,
    config: QuadratureConfig,
    *,
    near: Optional[NearField] = None,
    corrections: Optional[NearBlocks] = None,
    gram: Optional[sp.csr_matrix] = None
) -> np.ndarray:
    """Magnetic field operator `<J_n, J_m / 2 - n x int grad G x J_m>`.

    The identity term is half the block-diagonal Gram matrix (cross terms vanish on closed surfaces).

    Raises:
        QuadratureError:
    """

    start = time.perf_counter()
    gram = assemble_gram(quadrature) if gram is None else gram

    principal = regular_magnetic(quadrature, k)
    if corrections is None:
        near = near or NearField(quadrature.surface, config, 2.0 * np.pi / k.real)
        corrections = near.corrections([], magnetic=k)
    principal += corrections.K.toarray()

    _logger.info(f"K assembled ({principal.shape[0]} unknowns, {time.perf_counter() - start:.1f}s)")
    return 0.5 * gram.toarray() - principal


def assemble_operators(
    surface: LimitSurface,
    k: Wavenumber,
    config: QuadratureConfig,
    *,
    localization_radius: Optional[float] = 1.25,
    regularizer: bool = True,
    curvature: Optional[float] = None,
    quadrature: Optional[SurfaceQuadrature] = None
) -> OperatorSet:
    """All operators of one scattering problem, sharing quadrature and close-pair integration.

    The regularizing wavenumber uses the largest absolute mean curvature of the surface unless
    `curvature` is given.
    """

    quadrature = quadrature or SurfaceQuadrature(surface, config.regular_depth, config.regular_rule)
    near = NearField(surface, config, k.wavelength)

    kappa_p = None
    wavenumbers = [k]
    cutoffs: List[Optional[float]] = [None]
    if regularizer:
        if curvature is None:
            curvature = mean_curvature_max(surface)
        kappa_p = complexified(k, curvature)
        wavenumbers.append(kappa_p)
        cutoffs.append(_cutoff(localization_radius, k))

    start = time.perf_counter()
    corrections = near.corrections(wavenumbers, magnetic=k, cutoffs=cutoffs)
    _logger.info(f"Close pairs integrated in {time.perf_counter() - start:.1f}s")

    gram = assemble_gram(quadrature)
    T_k = assemble_T(k, quadrature, config, corrections=NearBlocks(T=[corrections.T[0]], K=None))
    T_kp = None
    if kappa_p is not None:
        T_kp = assemble_T(
            kappa_p, quadrature, config,
            localization_radius=localization_radius,
            corrections=NearBlocks(T=[corrections.T[1]], K=None),
        )
    K = assemble_K(k, quadrature, config, corrections=NearBlocks(T=[], K=corrections.K), gram=gram)

    metadata = {
        "quadrature": config.model_dump(),
        "localization_radius": localization_radius,
        "curvature": curvature,
        "n_samples": quadrature.n_samples,
        "near_pairs": int(len(near.pairs)),
    }

    return OperatorSet(
        T_k=T_k,
        T_kp=T_kp,
        K=K,
        G=gram,
        kappa=k,
        kappa_p=kappa_p,
        basis_integrals=basis_integrals(quadrature),
        metadata=metadata,
    )


def apply_operator(operator: Operator, x: np.ndarray) -> np.ndarray:
    """
    Raises:
        DimensionError:
    """

    x = np.asarray(x)
    if operator.shape[1] != x.shape[0]:
        raise DimensionError(f"Operator of shape {operator.shape} applied to a vector of length {x.shape[0]}")

    return operator @ x


def stacked(a1: np.ndarray, a2: np.ndarray) -> np.ndarray:
    return np.concatenate([np.asarray(a1), np.asarray(a2)])


def split(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    n = len(x) // 2
    return (x[:n], x[n:])


def constant_vectors(n_vertices: int) -> np.ndarray:
    """The two constant coefficient vectors `(1, 0)` and `(0, 1)`, shape `(2 N_v, 2)`."""
    basis = np.zeros((2 * n_vertices, 2))
    basis[:n_vertices, 0] = 1.0
    basis[n_vertices:, 1] = 1.0
    return basis
