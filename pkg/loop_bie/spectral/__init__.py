from .laplace_beltrami import (
    GalerkinMatrices,
    SpectralBasis,
    CurrentSpectrum,
    assemble_lbo,
    solve_mhb,
    mht_forward,
    mht_inverse,
    current_mht,
    current_mht_inverse,
    reconstruction_error,
    orthonormality_defect,
    EigensolverError,
    ZeroEigenvalueError,
)
