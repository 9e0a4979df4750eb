from __future__ import annotations

from typing import (
    List,
    Literal,
    Optional
)

import logging

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..__about__ import __name_public__
from ..config import (
    FmmConfig,
    QuadratureConfig
)
from ..operators.assembly import (
    DimensionError,
    OperatorSet,
    assemble_T,
    assemble_gram,
    basis_integrals,
    split,
    stacked,
    tested_against_normal,
    weighted_basis
)
from ..operators.constants import (
    Wavenumber,
    complexified
)
from ..operators.near_field import (
    NearBlocks,
    NearField
)
from ..surface.limit_surface import (
    LimitSurface,
    mean_curvature_max
)
from ..surface.quadrature import SurfaceQuadrature
from .engine import FmmEngine
from .tree import build_tree

_logger = logging.getLogger(f"{__name_public__}:fmm")

OperatorKind = Literal["T", "K"]


class FmmOperator():
    """Matrix-free `T` or `K` on the Loop current coefficients.

    The regular-rule sums run through the FMM, the close-pair corrections are the same sparse
    blocks the dense assembly adds.
    """

    _kind: OperatorKind
    _k: Wavenumber
    _quadrature: SurfaceQuadrature
    _engine: FmmEngine
    _correction: sp.csr_matrix
    _gram: Optional[sp.csr_matrix]
    _currents: List[List[sp.csr_matrix]]
    _tested: Optional[List[List[sp.csr_matrix]]]
    _divergence: sp.csr_matrix
    _applications: int

    def __init__(
        self,
        kind: OperatorKind,
        k: Wavenumber,
        quadrature: SurfaceQuadrature,
        engine: FmmEngine,
        correction: sp.csr_matrix,
        *,
        gram: Optional[sp.csr_matrix] = None
    ):
        """
        Raises:
            ValueError: a magnetic operator without Gram matrix
        """

        if kind == "K" and gram is None:
            raise ValueError("The magnetic operator needs the Gram matrix for its identity term")

        self._kind = kind
        self._k = k
        self._quadrature = quadrature
        self._engine = engine
        self._correction = correction.tocsr()
        self._gram = gram
        self._applications = 0

        self._currents = [
            [weighted_basis(quadrature, c) for c in quadrature.current_basis(component)]
            for component in (1, 2)
        ]
        self._tested = None
        if kind == "K":
            self._tested = [
                [weighted_basis(quadrature, c) for c in tested_against_normal(quadrature, component)]
                for component in (1, 2)
            ]
        self._divergence = weighted_basis(quadrature, quadrature.laplacians)

    @property
    def kind(self) -> OperatorKind:
        return self._kind

    @property
    def shape(self):
        n = 2 * self._quadrature.n_vertices
        return (n, n)

    @property
    def applications(self) -> int:
        return self._applications

    def _sample_currents(self, x: np.ndarray) -> np.ndarray:
        (a1, a2) = split(x)
        return np.stack([
            (self._currents[0][axis] @ a1) + (self._currents[1][axis] @ a2) for axis in range(3)
        ], axis=1)

    def _electric(self, x: np.ndarray) -> np.ndarray:
        kappa = complex(self._k)
        (a1, _) = split(x)
        charges = np.concatenate([self._sample_currents(x), (self._divergence @ a1)[:, None]], axis=1)
        (potentials, _) = self._engine.potentials(charges)

        result = []
        for l in range(2):
            vector = sum(self._currents[l][axis].T @ potentials[:, axis] for axis in range(3))
            result.append(-1j * kappa * vector)
        result[0] = result[0] + (1j / kappa) * (self._divergence.T @ potentials[:, 3])

        return stacked(*result) + self._correction @ x

    def _magnetic(self, x: np.ndarray) -> np.ndarray:
        (_, gradients) = self._engine.potentials(self._sample_currents(x), gradient=True)

        # (grad G x J)_a = d_b A_c - d_c A_b with (a, b, c) cyclic, gradients[:, c, b] = d_b A_c
        field = np.stack([
            gradients[:, (a + 2) % 3, (a + 1) % 3] - gradients[:, (a + 1) % 3, (a + 2) % 3]
            for a in range(3)
        ], axis=1)

        principal = stacked(*[
            sum(self._tested[l][a].T @ field[:, a] for a in range(3)) for l in range(2)
        ])
        return 0.5 * (self._gram @ x) - (principal + self._correction @ x)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """
        Raises:
            DimensionError:
        """

        x = np.asarray(x, dtype=np.complex128).reshape(-1)
        if len(x) != self.shape[1]:
            raise DimensionError(f"Operator of shape {self.shape} applied to a vector of length {len(x)}")

        self._applications += 1
        return self._electric(x) if self._kind == "T" else self._magnetic(x)

    def as_linear_operator(self) -> spla.LinearOperator:
        return spla.LinearOperator(self.shape, matvec=self.matvec, dtype=np.complex128)


def fmm_engine(quadrature: SurfaceQuadrature, k: Wavenumber, config: FmmConfig) -> FmmEngine:
    """Octree and engine over the regular samples, leaf size given in wavelengths.

    Raises:
        PrecisionError:
    """

    wavelength = k.wavelength
    tree = build_tree(
        quadrature.points,
        config.leaf_size * wavelength,
        wavelength,
        regime_split=config.regime_split,
    )
    return FmmEngine(tree, quadrature.points, complex(k), config)


def fmm_apply(
    kind: OperatorKind,
    k: Wavenumber,
    quadrature: SurfaceQuadrature,
    correction: sp.csr_matrix,
    x: np.ndarray,
    *,
    config: FmmConfig = FmmConfig(),
    gram: Optional[sp.csr_matrix] = None,
    engine: Optional[FmmEngine] = None
) -> np.ndarray:
    """One application of `T` or `K` to `x` through the FMM.

    Raises:
        DimensionError:
        PrecisionError:
    """

    engine = engine or fmm_engine(quadrature, k, config)
    return FmmOperator(kind, k, quadrature, engine, correction, gram=gram).matvec(x)


def fmm_operator_set(
    surface: LimitSurface,
    k: Wavenumber,
    quadrature_config: QuadratureConfig,
    config: FmmConfig,
    *,
    localization_radius: Optional[float] = 1.25,
    regularizer: bool = True,
    quadrature: Optional[SurfaceQuadrature] = None
) -> OperatorSet:
    """Operators of one scattering problem with `T_k` and `K` applied through the FMM.

    The localized regularizer `T_kp` stays an assembled matrix.

    Raises:
        PrecisionError:
        QuadratureError:
    """

    quadrature = quadrature or SurfaceQuadrature(surface, quadrature_config.regular_depth, quadrature_config.regular_rule)
    near = NearField(surface, quadrature_config, k.wavelength)

    kappa_p = None
    curvature = None
    wavenumbers = [k]
    cutoffs: List[Optional[float]] = [None]
    if regularizer:
        curvature = mean_curvature_max(surface)
        kappa_p = complexified(k, curvature)
        wavenumbers.append(kappa_p)
        cutoffs.append(None if localization_radius is None else localization_radius * k.wavelength)

    corrections = near.corrections(wavenumbers, magnetic=k, cutoffs=cutoffs)
    gram = assemble_gram(quadrature)
    engine = fmm_engine(quadrature, k, config)

    T_kp = None
    if kappa_p is not None:
        T_kp = assemble_T(
            kappa_p, quadrature, quadrature_config,
            localization_radius=localization_radius,
            corrections=NearBlocks(T=[corrections.T[1]], K=None),
        )

    _logger.info(
        f"FMM operators: Cartesian order {engine.order}, bandlimits {engine.bandlimits()}, "
        f"{len(near.pairs)} close pairs"
    )

    return OperatorSet(
        T_k=FmmOperator("T", k, quadrature, engine, corrections.T[0]).as_linear_operator(),
        T_kp=T_kp,
        K=FmmOperator("K", k, quadrature, engine, corrections.K, gram=gram).as_linear_operator(),
        G=gram,
        kappa=k,
        kappa_p=kappa_p,
        basis_integrals=basis_integrals(quadrature),
        metadata={
            "quadrature": quadrature_config.model_dump(),
            "fmm": config.model_dump(),
            "localization_radius": localization_radius,
            "curvature": curvature,
            "n_samples": quadrature.n_samples,
            "near_pairs": int(len(near.pairs)),
            "fmm_order": engine.order,
        },
    )
