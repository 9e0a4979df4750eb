from __future__ import annotations

from typing import (
    Dict,
    Optional,
    Tuple
)

import logging
import time

import numpy as np

from ..__about__ import __name_public__
from ..config import FmmConfig
from ..operators.greens import (
    kernel_gradient_factors,
    kernel_values
)
from . import cartesian, spectral
from .tree import (
    FmmLevel,
    FmmTree,
    IllSeparatedError,
    chebyshev
)

_logger = logging.getLogger(f"{__name_public__}:fmm")


class PrecisionError(ValueError):
    """The requested precision needs expansion orders above the configured maximum"""
    pass


def cartesian_order(digits: int) -> int:
    """Total Taylor order reaching `digits` for the typical separation ratio of 1/2."""
    return int(np.ceil(digits / np.log10(2.0)))


class FmmEngine():
    """Potentials `sum_t G(x_s, y_t) q_t` (and gradients) over a fixed set of points, `s != t`.

    Far interactions are translated level by level. Each box forms its outgoing expansion directly
    from its own samples and evaluates its incoming expansion directly at them, so no
    interpolation between levels takes place.
    """

    _tree: FmmTree
    _points: np.ndarray
    _kappa: complex
    _config: FmmConfig
    _order: int
    _samplings: Dict[int, spectral.SphereSampling]
    _translations: Dict[Tuple[int, Tuple[int, int, int]], object]

    def __init__(
        self,
        tree: FmmTree,
        points: np.ndarray,
        kappa: complex,
        config: FmmConfig = FmmConfig()
    ):
        """
        Raises:
            PrecisionError:
        """

        self._tree = tree
        self._points = np.asarray(points, dtype=np.float64)
        self._kappa = complex(kappa)
        self._config = config
        self._translations = {}
        self._samplings = {}

        self._order = config.order if config.order is not None else cartesian_order(config.digits)
        if self._order > config.max_order:
            raise PrecisionError(
                f"{config.digits} digits need Cartesian order {self._order} (max_order {config.max_order})"
            )

        for level in tree.levels:
            if level.regime == "spectral" and any(len(i) for i in level.interactions):
                L = spectral.bandlimit(self._kappa, np.sqrt(3.0) * level.box_size, config.digits)
                if L > 4 * config.max_order:
                    raise PrecisionError(f"Bandlimit {L} at level {level.index} above the configured maximum")
                self._samplings[level.index] = spectral.sphere_sampling(L)

    @property
    def tree(self) -> FmmTree:
        return self._tree

    @property
    def order(self) -> int:
        return self._order

    @property
    def kappa(self) -> complex:
        return self._kappa

    def bandlimits(self) -> Dict[int, int]:
        return {index: sampling.bandlimit for (index, sampling) in self._samplings.items()}

    def translate(self, level: FmmLevel, source: int, target: int, expansion: np.ndarray) -> np.ndarray:
        """Local expansion at box `target` of the outgoing `expansion` of box `source`.

        Raises:
            IllSeparatedError:
        """

        offset = level.coords[target] - level.coords[source]
        if chebyshev(offset, 0) <= level.separation:
            raise IllSeparatedError(f"Boxes {source} and {target} of level {level.index} are not well separated")

        key = (level.index, tuple(int(o) for o in offset))
        operator = self._translations.get(key)
        if operator is None:
            X = offset * level.box_size
            if level.regime == "spectral":
                operator = spectral.translation_operator(self._kappa, X, self._samplings[level.index])
            else:
                operator = cartesian.translation_matrix(self._kappa, X, level.box_size, self._order)
            self._translations[key] = operator

        if level.regime == "spectral":
            return operator[:, None] * expansion
        return operator @ expansion

    def _near(self, charges: np.ndarray, gradient: bool) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        leaves = self._tree.leaves
        x = self._points
        potentials = np.zeros(charges.shape, dtype=np.complex128)
        gradients = np.zeros(charges.shape + (3,), dtype=np.complex128) if gradient else None

        for (box, targets) in enumerate(leaves.members):
            sources = np.concatenate([leaves.members[b] for b in leaves.near[box]])
            d = x[targets, None, :] - x[None, sources, :]
            R = np.sqrt(np.einsum("nmi,nmi->nm", d, d))
            potentials[targets] += kernel_values(R, self._kappa) @ charges[sources]
            if gradient:
                h = kernel_gradient_factors(R, self._kappa)
                for axis in range(3):
                    gradients[targets, :, axis] += (h * d[:, :, axis]) @ charges[sources]

        return (potentials, gradients)

    def _far(self, level: FmmLevel, charges: np.ndarray, potentials: np.ndarray, gradients: Optional[np.ndarray]):
        x = self._points
        active = [b for b in range(level.n_boxes) if len(level.interactions[b])]
        if not active:
            return

        sources = sorted(set(int(o) for b in active for o in level.interactions[b]))

        if level.regime == "spectral":
            sampling = self._samplings[level.index]
            outgoing = {
                b: spectral.outgoing(x[level.members[b]], charges[level.members[b]], level.centers[b], self._kappa, sampling)
                for b in sources
            }
        else:
            outgoing = {
                b: cartesian.multipole(x[level.members[b]], charges[level.members[b]], level.centers[b], level.box_size, self._order)
                for b in sources
            }

        for b in active:
            local = sum(self.translate(level, int(o), b, outgoing[int(o)]) for o in level.interactions[b])
            targets = level.members[b]

            if level.regime == "spectral":
                (phi, grad) = spectral.incoming(
                    x[targets], local, level.centers[b], self._kappa, self._samplings[level.index], gradient=gradients is not None
                )
            else:
                (phi, grad) = cartesian.evaluate_local(
                    x[targets], local, level.centers[b], level.box_size, self._order, gradient=gradients is not None
                )

            potentials[targets] += phi
            if gradients is not None:
                gradients[targets] += grad

    def potentials(self, charges: np.ndarray, gradient: bool = False) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        """Potentials `(n, columns)` and optionally gradients `(n, columns, 3)` at every point.

        Raises:
            ValueError: charges not matching the points
        """

        charges = np.asarray(charges)
        squeeze = charges.ndim == 1
        charges = charges.reshape(len(charges), -1).astype(np.complex128)
        if len(charges) != len(self._points):
            raise ValueError(f"{len(charges)} charges for {len(self._points)} points")

        start = time.perf_counter()
        (potentials, gradients) = self._near(charges, gradient)
        for level in self._tree.levels:
            self._far(level, charges, potentials, gradients)
        _logger.debug(f"FMM pass with {charges.shape[1]} columns in {time.perf_counter() - start:.2f}s")

        if squeeze:
            potentials = potentials[:, 0]
            gradients = gradients[:, 0] if gradients is not None else None
        return (potentials, gradients)


def direct_potentials(
    points: np.ndarray,
    charges: np.ndarray,
    kappa: complex,
    gradient: bool = False,
    targets: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Reference `O(N^2)` evaluation of the same sums (coincident points skipped)."""

    targets = points if targets is None else targets
    d = targets[:, None, :] - points[None, :, :]
    R = np.sqrt(np.einsum("nmi,nmi->nm", d, d))
    potentials = kernel_values(R, kappa) @ charges

    gradients = None
    if gradient:
        h = kernel_gradient_factors(R, kappa)
        gradients = np.stack([(h * d[:, :, axis]) @ charges for axis in range(3)], axis=-1)
    return (potentials, gradients)

