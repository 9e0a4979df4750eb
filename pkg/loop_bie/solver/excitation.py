from __future__ import annotations

from typing import (
    NamedTuple,
    Sequence,
    Tuple
)

import numpy as np

from ..operators.assembly import stacked
from ..operators.constants import ETA_0
from ..surface.quadrature import SurfaceQuadrature


class PolarizationError(ValueError):
    """The plane wave polarization is not a unit vector transverse to the propagation direction"""
    pass


class PlaneWave(NamedTuple):
    """Incident field `E = amplitude e exp(-j kappa k.r)` (time dependence `exp(+j omega t)`)."""

    direction: np.ndarray
    polarization: np.ndarray
    kappa: float
    amplitude: complex = 1.0

    def electric(self, points: np.ndarray) -> np.ndarray:
        phase = np.exp(-1j * self.kappa * (points @ self.direction))
        return self.amplitude * phase[:, None] * self.polarization[None, :]

    def magnetic(self, points: np.ndarray) -> np.ndarray:
        return np.cross(self.direction, self.electric(points)) / ETA_0

    def scaled(self, factor: complex) -> PlaneWave:
        return self._replace(amplitude=self.amplitude * factor)


def plane_wave(
    direction: Sequence[float],
    polarization: Sequence[float],
    kappa: float,
    amplitude: complex = 1.0,
    *,
    tolerance: float = 1e-12
) -> PlaneWave:
    """
    Raises:
        PolarizationError:
        ValueError: non-positive wavenumber or zero direction
    """

    if not kappa > 0.0:
        raise ValueError(f"Wavenumber must be positive ({kappa})")

    direction = np.asarray(direction, dtype=np.float64)
    polarization = np.asarray(polarization, dtype=np.float64)

    norm = np.linalg.norm(direction)
    if norm == 0.0:
        raise ValueError("Propagation direction is the zero vector")
    direction = direction / norm

    if abs(np.linalg.norm(polarization) - 1.0) > 1e-6:
        raise PolarizationError(f"Polarization {polarization.tolist()} is not a unit vector")
    if abs(float(direction @ polarization)) > tolerance:
        raise PolarizationError(
            f"Polarization {polarization.tolist()} not orthogonal to direction {direction.tolist()}"
        )

    polarization = polarization / np.linalg.norm(polarization)
    return PlaneWave(direction=direction, polarization=polarization, kappa=float(kappa), amplitude=amplitude)


def assemble_rhs(wave: PlaneWave, quadrature: SurfaceQuadrature) -> Tuple[np.ndarray, np.ndarray]:
    """Tested excitations `V_T = <J_n, E> / eta` and `V_K = <J_n, n x H>`, each of length `2 N_v`."""

    x = quadrature.points
    w = quadrature.area_elements
    E = wave.electric(x) / ETA_0
    n_cross_H = np.cross(quadrature.normals, wave.magnetic(x))

    def tested(field: np.ndarray) -> np.ndarray:
        return stacked(*[
            sum(C[axis].T @ (w * field[:, axis]) for axis in range(3))
            for C in (quadrature.current_basis(1), quadrature.current_basis(2))
        ])

    return (tested(E), tested(n_cross_H))
