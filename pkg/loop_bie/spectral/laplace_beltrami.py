from __future__ import annotations

from typing import (
    Iterator,
    List,
    NamedTuple,
    Optional,
    Tuple
)

import logging

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..__about__ import __name_public__
from ..surface.quadrature import SurfaceQuadrature

_logger = logging.getLogger(f"{__name_public__}:spectral")

# relative gap below which eigenvalues are treated as one cluster
CLUSTER_TOLERANCE = 1e-8


class EigensolverError(ArithmeticError):
    """The eigensolver did not deliver the requested eigenpairs to tolerance"""

    _residuals: np.ndarray
    _achieved: int

    @property
    def residuals(self) -> np.ndarray:
        return self._residuals

    @property
    def achieved(self) -> int:
        return self._achieved

    def __init__(self, *args: object, residuals: np.ndarray, achieved: int):
        super().__init__(*args)
        self._residuals = residuals
        self._achieved = achieved


class ZeroEigenvalueError(ValueError):
    """A zero (constant) mode is present where only positive eigenvalues are allowed"""
    pass


class GalerkinMatrices(NamedTuple):
    """Stiffness `A_ij = <grad xi_i, grad xi_j>` and mass `B_ij = <xi_i, xi_j>` on the limit surface."""

    A: sp.csr_matrix
    B: sp.csr_matrix


class SpectralBasis(NamedTuple):
    """Manifold harmonics: `A h = lambda B h`, `H^T B H = I`, eigenvalues ascending."""

    eigenvalues: np.ndarray
    coefficients: np.ndarray
    residuals: np.ndarray
    includes_constant: bool

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    def truncated(self, M: int) -> SpectralBasis:
        return SpectralBasis(
            eigenvalues=self.eigenvalues[:M],
            coefficients=self.coefficients[:, :M],
            residuals=self.residuals[:M],
            includes_constant=self.includes_constant,
        )

    def without_constant(self) -> SpectralBasis:
        """Drops the leading constant mode, if present."""
        if not self.includes_constant:
            return self
        return SpectralBasis(
            eigenvalues=self.eigenvalues[1:],
            coefficients=self.coefficients[:, 1:],
            residuals=self.residuals[1:],
            includes_constant=False,
        )

    def to_csv(self) -> str:
        lines = ["index,eigenvalue,residual"]
        lines += [f"{m},{value!r},{residual!r}" for (m, (value, residual)) in enumerate(zip(self.eigenvalues, self.residuals))]
        return "\n".join(lines) + "\n"


def _weighted_product(left: sp.csr_matrix, right: sp.csr_matrix, measure: np.ndarray) -> sp.csr_matrix:
    return (left.T @ sp.diags(measure) @ right).tocsr()


def assemble_lbo(quadrature: SurfaceQuadrature) -> GalerkinMatrices:
    """Stiffness and mass matrices by summing per-sample contributions of the quadrature.

    The same quadrature yields the Gram blocks of the current basis, so `A` equals `G11`.
    """

    measure = quadrature.area_elements

    A = sum(
        _weighted_product(component, component, measure)
        for component in quadrature.gradients
    )
    B = _weighted_product(quadrature.values, quadrature.values, measure)

    A = ((A + A.T) / 2.0).tocsr()
    B = ((B + B.T) / 2.0).tocsr()

    _logger.info(f"LBO assembled: {A.shape[0]} vertices, {A.nnz} stiffness non-zeros")

    return GalerkinMatrices(A=A, B=B)


def _residuals(mats: GalerkinMatrices, eigenvalues: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    return np.linalg.norm(mats.A @ vectors - (mats.B @ vectors) * eigenvalues, axis=0)


def _dense_eigenpairs(mats: GalerkinMatrices, M: int) -> Tuple[np.ndarray, np.ndarray]:
    (eigenvalues, vectors) = la.eigh(mats.A.toarray(), mats.B.toarray(), subset_by_index=[0, M - 1])
    return (eigenvalues, vectors)


def _bands(mats: GalerkinMatrices, M: int, band_size: int) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """Shift-invert Lanczos, one band of eigenpairs at a time, shifting past the previous band."""

    def separated(lower: float, upper: float) -> bool:
        return upper - lower > CLUSTER_TOLERANCE * max(abs(upper), 1.0)

    found = 0
    sigma = -1e-3 * abs(mats.A.diagonal().min() or 1.0)
    previous_top = None

    while found < M:
        count = min(band_size, M - found + 8, mats.A.shape[0] - 2)
        (eigenvalues, vectors) = spla.eigsh(mats.A, k=count, M=mats.B, sigma=sigma, which="LM")
        order = np.argsort(eigenvalues)
        (eigenvalues, vectors) = (eigenvalues[order], vectors[:, order])

        if previous_top is not None:
            keep = np.array([separated(previous_top, value) for value in eigenvalues], dtype=bool)
            (eigenvalues, vectors) = (eigenvalues[keep], vectors[:, keep])

        # the top of a band is the least accurate part, keep the lower 3/4 unless it is the last band
        next_value = None
        if found + len(eigenvalues) < M:
            keep_count = max(1, (3 * len(eigenvalues)) // 4)
            boundaries = [j for j in range(1, len(eigenvalues)) if separated(eigenvalues[j - 1], eigenvalues[j])]
            # clusters of equal eigenvalues stay in one band
            below = [j for j in boundaries if j <= keep_count]
            keep_count = below[-1] if below else (boundaries[0] if boundaries else len(eigenvalues))
            if keep_count < len(eigenvalues):
                next_value = eigenvalues[keep_count]
            (eigenvalues, vectors) = (eigenvalues[:keep_count], vectors[:, :keep_count])

        if len(eigenvalues) == 0:
            return

        yield (eigenvalues, vectors)

        found += len(eigenvalues)
        previous_top = eigenvalues[-1]
        if next_value is None:
            sigma = previous_top + 1e-3 * max(abs(previous_top), 1.0)
        else:
            sigma = (previous_top + next_value) / 2.0


def solve_mhb(
    mats: GalerkinMatrices,
    M: int,
    *,
    dense_limit: int = 4000,
    band_size: int = 200,
    tolerance: float = 1e-8
) -> SpectralBasis:
    """The `M` smallest eigenpairs of `A h = lambda B h`, B-orthonormal and ascending.

    Raises:
        ValueError: `M` outside `[1, N_v]`
        EigensolverError: residuals above `tolerance * ||A||` or too few pairs
    """

    n = mats.A.shape[0]
    if not 1 <= M <= n:
        raise ValueError(f"Requested {M} eigenpairs of a {n} vertex problem")

    if n <= dense_limit or M > n - 2:
        (eigenvalues, vectors) = _dense_eigenpairs(mats, M)
    else:
        values: List[np.ndarray] = []
        blocks: List[np.ndarray] = []
        for (band_values, band_vectors) in _bands(mats, M, band_size):
            _logger.info(f"Eigen band [{band_values[0]:.6g}, {band_values[-1]:.6g}] ({len(band_values)} pairs)")
            values.append(band_values)
            blocks.append(band_vectors)

        eigenvalues = np.concatenate(values)[:M] if values else np.zeros(0)
        vectors = np.concatenate(blocks, axis=1)[:, :M] if blocks else np.zeros((n, 0))

        if len(eigenvalues) == M:
            # re-orthonormalize across bands
            gram = vectors.T @ (mats.B @ vectors)
            factor = la.cholesky((gram + gram.T) / 2.0, lower=True)
            vectors = la.solve_triangular(factor, vectors.T, lower=True).T

    residuals = _residuals(mats, eigenvalues, vectors)
    scale = spla.norm(mats.A, ord=1) if mats.A.nnz else 1.0

    if len(eigenvalues) < M or np.any(residuals > tolerance * scale):
        raise EigensolverError(
            f"Eigensolver delivered {len(eigenvalues)}/{M} pairs, worst residual {residuals.max(initial=0.0):.3e}",
            residuals=residuals,
            achieved=int(np.sum(residuals <= tolerance * scale)),
        )

    # fix the sign of each eigenvector for reproducible outputs
    signs = np.sign(vectors[np.argmax(np.abs(vectors), axis=0), np.arange(vectors.shape[1])])
    vectors = vectors * np.where(signs == 0, 1.0, signs)

    includes_constant = bool(len(eigenvalues) > 1 and abs(eigenvalues[0]) <= 1e-8 * max(abs(eigenvalues[1]), 1e-300))

    return SpectralBasis(
        eigenvalues=eigenvalues,
        coefficients=vectors,
        residuals=residuals,
        includes_constant=includes_constant or (len(eigenvalues) == 1 and abs(eigenvalues[0]) < 1e-8 * scale),
    )


def mht_forward(a: np.ndarray, basis: SpectralBasis, B: sp.spmatrix) -> np.ndarray:
    """Manifold harmonic transform `f_m = h_m^T B a`."""
    return basis.coefficients.T @ (B @ a)


def mht_inverse(coefficients: np.ndarray, basis: SpectralBasis) -> np.ndarray:
    """`a = sum_m f_m h_m` over the first `len(coefficients)` harmonics."""
    coefficients = np.asarray(coefficients)
    return basis.coefficients[:, :len(coefficients)] @ coefficients


def _require_positive(basis: SpectralBasis):
    if basis.includes_constant or np.any(basis.eigenvalues <= 0.0):
        raise ZeroEigenvalueError("Current transforms need a basis without the constant mode")


class CurrentSpectrum(NamedTuple):
    v: np.ndarray
    w: np.ndarray
    v_stiffness: np.ndarray


def current_mht(
    a1: np.ndarray,
    a2: np.ndarray,
    basis: SpectralBasis,
    mats: GalerkinMatrices
) -> CurrentSpectrum:
    """Coefficients of a current `a1 . J1 + a2 . J2` in the normalized harmonic current basis.

    `v_m = sqrt(lambda_m) h_m^T B a1` and the stiffness form `h_m^T A a1 / sqrt(lambda_m)` are both
    returned, they agree because `A h = lambda B h`.

    Raises:
        ZeroEigenvalueError:
    """

    _require_positive(basis)
    root = np.sqrt(basis.eigenvalues)
    H = basis.coefficients

    v = root * (H.T @ (mats.B @ a1))
    w = root * (H.T @ (mats.B @ a2))
    v_stiffness = (H.T @ (mats.A @ a1)) / root

    return CurrentSpectrum(v=v, w=w, v_stiffness=v_stiffness)


def current_mht_inverse(v: np.ndarray, w: np.ndarray, basis: SpectralBasis) -> Tuple[np.ndarray, np.ndarray]:
    """Loop coefficients of a current given in the normalized harmonic current basis."""

    _require_positive(basis)
    root = np.sqrt(basis.eigenvalues[:len(v)])
    H = basis.coefficients[:, :len(v)]
    return (H @ (np.asarray(v) / root), H @ (np.asarray(w) / root))


def reconstruction_error(
    a1: np.ndarray,
    a2: np.ndarray,
    M: int,
    basis: SpectralBasis,
    mats: GalerkinMatrices
) -> float:
    """Relative error of the `M`-term harmonic reconstruction of a current, in the A-norm.

    The A-quadratic form of the Loop coefficients is the squared L2 norm of the current.
    """

    basis = basis.without_constant()
    if M > basis.size:
        raise ValueError(f"Reconstruction with {M} terms from a {basis.size} harmonic basis")

    spectrum = current_mht(a1, a2, basis.truncated(M), mats)
    (r1, r2) = current_mht_inverse(spectrum.v, spectrum.w, basis.truncated(M))

    def energy(x1, x2) -> float:
        return float(np.real(np.vdot(x1, mats.A @ x1) + np.vdot(x2, mats.A @ x2)))

    reference = energy(a1, a2)
    if reference == 0.0:
        return 0.0

    return float(np.sqrt(max(energy(a1 - r1, a2 - r2), 0.0) / reference))


def sign_changes(vector: np.ndarray, edges: np.ndarray) -> int:
    """Number of mesh edges across which a vertex field changes sign."""
    (i, j) = edges.T
    return int(np.sum(vector[i] * vector[j] < 0.0))


def orthonormality_defect(basis: SpectralBasis, mats: GalerkinMatrices) -> Tuple[float, float]:
    """`max|H^T B H - I|` and `max|H^T A H - diag(lambda)|`."""

    H = basis.coefficients
    mass = H.T @ (mats.B @ H)
    stiffness = H.T @ (mats.A @ H)
    return (
        float(np.max(np.abs(mass - np.eye(basis.size)))),
        float(np.max(np.abs(stiffness - np.diag(basis.eigenvalues)))),
    )


def harmonic_samples(basis: SpectralBasis, quadrature: SurfaceQuadrature, indices: Optional[List[int]] = None) -> np.ndarray:
    """Values of selected harmonics at the quadrature samples, shape `(samples, len(indices))`."""
    indices = list(range(basis.size)) if indices is None else indices
    return quadrature.values @ basis.coefficients[:, indices]
