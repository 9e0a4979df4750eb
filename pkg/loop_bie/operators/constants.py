"""Free-space constants and wavenumbers. Time dependence `exp(+j omega t)` is suppressed throughout."""

from __future__ import annotations

from typing import (
    NamedTuple
)

import numpy as np
import scipy.constants

SPEED_OF_LIGHT = scipy.constants.c
MU_0 = scipy.constants.mu_0
EPSILON_0 = scipy.constants.epsilon_0
ETA_0 = float(np.sqrt(MU_0 / EPSILON_0))


class Wavenumber(NamedTuple):
    """A (possibly complex) wavenumber in rad/m, `Im(kappa) <= 0` so that `exp(-j kappa R)` decays."""

    kappa: complex
    is_regularizer: bool = False

    @property
    def real(self) -> float:
        return float(np.real(self.kappa))

    @property
    def wavelength(self) -> float:
        """Wavelength of the real part."""
        return 2.0 * np.pi / self.real

    def __complex__(self) -> complex:
        return complex(self.kappa)


def wavenumber(frequency: float) -> Wavenumber:
    """
    Raises:
        ValueError: non-positive frequency
    """

    if not frequency > 0.0:
        raise ValueError(f"Frequency must be positive ({frequency} Hz)")

    return Wavenumber(kappa=complex(2.0 * np.pi * frequency / SPEED_OF_LIGHT))


def wavelength(frequency: float) -> float:
    return SPEED_OF_LIGHT / frequency


def complexified(k: Wavenumber, curvature: float) -> Wavenumber:
    """Regularizing wavenumber `kappa - 0.4j curvature^(2/3) kappa^(1/3)`.

    `curvature` is the largest absolute mean curvature of the surface (1/m).

    Raises:
        ValueError: negative curvature
    """

    if curvature < 0.0:
        raise ValueError(f"Curvature must be non negative ({curvature})")

    kappa = k.real
    return Wavenumber(
        kappa=complex(kappa, -0.4 * curvature ** (2.0 / 3.0) * kappa ** (1.0 / 3.0)),
        is_regularizer=True,
    )
