from __future__ import annotations

from typing import (
    Optional,
    Tuple
)

import logging
import time

import numpy as np

from ..__about__ import __name_public__
from ..config import (
    FmmConfig,
    QuadratureConfig,
    SystemConfig
)
from ..fmm.apply import fmm_operator_set
from ..operators.assembly import (
    OperatorSet,
    assemble_operators
)
from ..operators.constants import Wavenumber
from ..spectral.laplace_beltrami import SpectralBasis
from ..surface.limit_surface import LimitSurface
from ..surface.quadrature import SurfaceQuadrature
from .calderon import (
    CalderonSystem,
    cfie_operator,
    cfie_rhs,
    gram_solver
)
from .compression import compress_mh
from .excitation import (
    PlaneWave,
    assemble_rhs
)
from .gmres import (
    GmresResult,
    gmres
)
from .result import SolveResult

_logger = logging.getLogger(f"{__name_public__}:solver")

Rhs = Tuple[np.ndarray, np.ndarray]


def solve_cc_cfier(ops: OperatorSet, rhs: Rhs, config: SystemConfig = SystemConfig()) -> SolveResult:
    """
    Raises:
        ConvergenceError:
        GramSolveError:
    """

    system = CalderonSystem(ops, config)
    start = time.perf_counter()
    result = gmres(
        system.as_linear_operator(),
        system.rhs(*rhs),
        tol=config.gmres_tol_outer,
        restart=config.restart,
        max_iter=config.max_iter,
        label="CC-CFIER",
    )
    wall_time = time.perf_counter() - start

    return SolveResult(
        formulation="cc-cfier",
        coefficients=system.gram.gauge(result.x),
        iterations=result.iterations,
        residuals=result.residuals,
        wall_time=wall_time,
        inner_iterations=system.gram.iterations,
    )


def _solve_single(ops: OperatorSet, rhs: np.ndarray, alpha: float, config: SystemConfig, label: str) -> Tuple[np.ndarray, GmresResult, float]:
    start = time.perf_counter()
    result = gmres(
        cfie_operator(ops, alpha),
        rhs,
        tol=config.gmres_tol_outer,
        restart=config.restart,
        max_iter=config.max_iter,
        label=label,
    )
    return (gram_solver(ops, config).gauge(result.x), result, time.perf_counter() - start)


def solve_cfie(
    ops: OperatorSet,
    rhs: Rhs,
    config: SystemConfig = SystemConfig(),
    alpha: Optional[float] = None
) -> SolveResult:
    """`((1 - alpha) K - alpha T) a = (1 - alpha) V_K + alpha V_T`, without regularization.

    Raises:
        ConvergenceError:
        ValueError: alpha outside [0, 1]
    """

    alpha = config.alpha if alpha is None else alpha
    (V_T, V_K) = rhs
    (x, result, wall_time) = _solve_single(ops, cfie_rhs(V_T, V_K, alpha), alpha, config, "CFIE")

    return SolveResult(
        formulation="cfie",
        coefficients=x,
        iterations=result.iterations,
        residuals=result.residuals,
        wall_time=wall_time,
        metadata={"alpha": alpha},
    )


def solve_efie(ops: OperatorSet, rhs: Rhs, config: SystemConfig = SystemConfig()) -> SolveResult:
    """`T a = -V_T`

    Raises:
        ConvergenceError:
    """

    (x, result, wall_time) = _solve_single(ops, rhs[0], 1.0, config, "EFIE")
    return SolveResult(
        formulation="efie",
        coefficients=x,
        iterations=result.iterations,
        residuals=result.residuals,
        wall_time=wall_time,
    )


def solve_mfie(ops: OperatorSet, rhs: Rhs, config: SystemConfig = SystemConfig()) -> SolveResult:
    """`K a = V_K`

    Raises:
        ConvergenceError:
    """

    (x, result, wall_time) = _solve_single(ops, rhs[1], 0.0, config, "MFIE")
    return SolveResult(
        formulation="mfie",
        coefficients=x,
        iterations=result.iterations,
        residuals=result.residuals,
        wall_time=wall_time,
    )


def solve_mh(
    ops: OperatorSet,
    rhs: Rhs,
    basis: SpectralBasis,
    config: SystemConfig = SystemConfig()
) -> SolveResult:
    """Regularized system compressed onto `basis` (per Helmholtz component), mapped back to Loop space.

    Raises:
        ConvergenceError:
        ZeroEigenvalueError:
    """

    reduced = compress_mh(ops, rhs, basis, scaled=config.mh_scaled)

    start = time.perf_counter()
    result = gmres(
        reduced.Z,
        reduced.rhs,
        tol=config.gmres_tol_outer,
        restart=config.restart,
        max_iter=config.max_iter,
        label="MH CC-CFIER",
    )
    wall_time = time.perf_counter() - start

    return SolveResult(
        formulation="cc-cfier",
        coefficients=reduced.loop_coefficients(result.x),
        iterations=result.iterations,
        residuals=result.residuals,
        wall_time=wall_time,
        reduced=result.x,
        metadata={"harmonics": basis.size, "scaled": str(reduced.scaled).lower()},
    )


def solve_system(
    ops: OperatorSet,
    rhs: Rhs,
    config: SystemConfig = SystemConfig(),
    *,
    basis: Optional[SpectralBasis] = None
) -> SolveResult:
    """Dispatch on `config.formulation`; a `basis` selects the manifold-harmonic system.

    Raises:
        ConvergenceError:
        GramSolveError:
        ValueError: a basis given for a formulation other than cc-cfier
    """

    if basis is not None:
        if config.formulation != "cc-cfier":
            raise ValueError(f"Manifold-harmonic compression is defined for cc-cfier, not {config.formulation}")
        return solve_mh(ops, rhs, basis, config)

    if config.formulation == "cc-cfier":
        return solve_cc_cfier(ops, rhs, config)
    elif config.formulation == "cfie":
        return solve_cfie(ops, rhs, config)
    elif config.formulation == "efie":
        return solve_efie(ops, rhs, config)
    else:
        return solve_mfie(ops, rhs, config)


def solve_scattering(
    surface: LimitSurface,
    wave: PlaneWave,
    k: Wavenumber,
    *,
    system: SystemConfig = SystemConfig(),
    quadrature: QuadratureConfig = QuadratureConfig(),
    fmm: Optional[FmmConfig] = None,
    basis: Optional[SpectralBasis] = None,
    samples: Optional[SurfaceQuadrature] = None
) -> Tuple[SolveResult, OperatorSet]:
    """Assembles the operators (dense, or FMM-backed when `fmm` is given) and solves.

    Raises:
        ConvergenceError:
        GramSolveError:
        PrecisionError:
        QuadratureError:
    """

    samples = samples or SurfaceQuadrature(surface, quadrature.regular_depth, quadrature.regular_rule)
    regularizer = system.formulation == "cc-cfier"

    start = time.perf_counter()
    if fmm is None:
        ops = assemble_operators(
            surface, k, quadrature,
            localization_radius=system.localization_radius,
            regularizer=regularizer,
            quadrature=samples,
        )
    else:
        ops = fmm_operator_set(
            surface, k, quadrature, fmm,
            localization_radius=system.localization_radius,
            regularizer=regularizer,
            quadrature=samples,
        )
    assembly_time = time.perf_counter() - start

    rhs = assemble_rhs(wave, samples)
    result = solve_system(ops, rhs, system, basis=basis)

    metadata = dict(result.metadata)
    metadata.update({
        "assembly_time": f"{assembly_time:.3f}",
        "backend": "dense" if fmm is None else "fmm",
        "kappa_p": "" if ops.kappa_p is None else f"{complex(ops.kappa_p):.9g}",
    })
    return (result._replace(metadata=metadata), ops)
