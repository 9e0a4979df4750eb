"""Mie series for a perfectly conducting sphere, time dependence `exp(+j omega t)`.

With `x = kappa a`, `psi_n = x j_n(x)` and `zeta_n = x h2_n(x)`::

    a_n = psi_n'(x) / zeta_n'(x)        b_n = psi_n(x) / zeta_n(x)
    S1 = sum (2n + 1) / (n (n + 1)) (a_n pi_n + b_n tau_n)
    S2 = sum (2n + 1) / (n (n + 1)) (a_n tau_n + b_n pi_n)

and in the frame of the incident wave (`z` along propagation, `x` along polarization)
`E_inf = (-j / kappa) (cos(phi) S2 theta_hat - sin(phi) S1 phi_hat)`.
"""

from __future__ import annotations

from typing import (
    Literal,
    Optional,
    Tuple
)

import logging

import numpy as np
import scipy.special

from ..__about__ import __name_public__
from ..solver.excitation import PlaneWave
from .far_field import (
    DirectionGrid,
    FarFieldPattern
)

_logger = logging.getLogger(f"{__name_public__}:postproc")

Method = Literal["recurrence", "riccati"]


def series_length(x: float) -> int:
    return int(np.ceil(x + 4.0 * x ** (1.0 / 3.0) + 10.0))


def coefficients(x: float, n_max: int) -> Tuple[np.ndarray, np.ndarray]:
    """`(a_n, b_n)` for `n = 1 .. n_max` from spherical Bessel functions and upward derivative relations."""

    n = np.arange(n_max + 1)
    j = scipy.special.spherical_jn(n, x)
    y = scipy.special.spherical_yn(n, x)
    psi = x * j
    zeta = x * (j - 1j * y)

    order = n[1:]
    psi_prime = psi[:-1] - order * psi[1:] / x
    zeta_prime = zeta[:-1] - order * zeta[1:] / x

    return (psi_prime / zeta_prime, psi[1:] / zeta[1:])


def _angular_recurrence(mu: np.ndarray, n_max: int) -> Tuple[np.ndarray, np.ndarray]:
    pi = np.zeros((n_max + 1, len(mu)))
    tau = np.zeros((n_max + 1, len(mu)))
    pi[1] = 1.0
    tau[1] = mu
    for n in range(2, n_max + 1):
        pi[n] = ((2 * n - 1) * mu * pi[n - 1] - n * pi[n - 2]) / (n - 1)
        tau[n] = n * mu * pi[n] - (n + 1) * pi[n - 1]
    return (pi[1:], tau[1:])


def _riccati_coefficients(x: float, n_max: int) -> Tuple[np.ndarray, np.ndarray]:
    (psi, psi_prime) = scipy.special.riccati_jn(n_max, x)
    (chi, chi_prime) = scipy.special.riccati_yn(n_max, x)
    zeta = psi - 1j * chi
    zeta_prime = psi_prime - 1j * chi_prime
    return (psi_prime[1:] / zeta_prime[1:], psi[1:] / zeta[1:])


def _angular_legendre(mu: np.ndarray, n_max: int) -> Tuple[np.ndarray, np.ndarray]:
    """`pi_n = P_n'(mu)` and `tau_n = mu P_n'(mu) - (1 - mu^2) P_n''(mu)` from Legendre series."""

    pi = np.empty((n_max, len(mu)))
    tau = np.empty((n_max, len(mu)))
    for n in range(1, n_max + 1):
        series = np.zeros(n + 1)
        series[n] = 1.0
        first = np.polynomial.legendre.legval(mu, np.polynomial.legendre.legder(series, 1))
        second = np.polynomial.legendre.legval(mu, np.polynomial.legendre.legder(series, 2)) if n >= 2 else 0.0
        pi[n - 1] = first
        tau[n - 1] = mu * first - (1.0 - mu ** 2) * second
    return (pi, tau)


def amplitudes(x: float, mu: np.ndarray, *, n_max: Optional[int] = None, method: Method = "recurrence") -> Tuple[np.ndarray, np.ndarray]:
    """Scattering amplitudes `(S1, S2)` at `mu = cos(theta)`."""

    n_max = n_max or series_length(x)
    if method == "recurrence":
        (a, b) = coefficients(x, n_max)
        (pi, tau) = _angular_recurrence(mu, n_max)
    else:
        (a, b) = _riccati_coefficients(x, n_max)
        (pi, tau) = _angular_legendre(mu, n_max)

    n = np.arange(1, n_max + 1)
    weights = (2 * n + 1) / (n * (n + 1))
    S1 = (weights * a) @ pi + (weights * b) @ tau
    S2 = (weights * a) @ tau + (weights * b) @ pi
    return (S1, S2)


def mie_reference(
    radius: float,
    wave: PlaneWave,
    grid: DirectionGrid,
    *,
    n_max: Optional[int] = None,
    method: Method = "recurrence"
) -> FarFieldPattern:
    """Far field of a PEC sphere of `radius` centered at the origin under `wave`.

    Raises:
        ValueError: non-positive radius
    """

    if not radius > 0.0:
        raise ValueError(f"Sphere radius must be positive ({radius})")

    kappa = wave.kappa
    x = kappa * radius
    z_axis = wave.direction
    x_axis = wave.polarization
    y_axis = np.cross(z_axis, x_axis)

    directions = grid.directions
    mu = np.clip(directions @ z_axis, -1.0, 1.0)
    (px, py) = (directions @ x_axis, directions @ y_axis)
    transverse = np.hypot(px, py)
    on_axis = transverse < 1e-12
    cos_phi = np.where(on_axis, 1.0, px / np.where(on_axis, 1.0, transverse))
    sin_phi = np.where(on_axis, 0.0, py / np.where(on_axis, 1.0, transverse))

    theta_hat = (
        mu[:, None] * (cos_phi[:, None] * x_axis + sin_phi[:, None] * y_axis)
        - transverse[:, None] * z_axis
    )
    phi_hat = -sin_phi[:, None] * x_axis + cos_phi[:, None] * y_axis

    (S1, S2) = amplitudes(x, mu, n_max=n_max, method=method)
    field = (-1j / kappa) * (
        (cos_phi * S2)[:, None] * theta_hat - (sin_phi * S1)[:, None] * phi_hat
    ) * wave.amplitude

    _logger.debug(f"Mie series for ka={x:.4g} with {n_max or series_length(x)} terms ({method})")
    return FarFieldPattern(grid=grid, field=field, incident_amplitude=abs(wave.amplitude))


def efficiencies(x: float, *, n_max: Optional[int] = None) -> Tuple[float, float]:
    """Extinction and scattering efficiencies `(Q_ext, Q_sca)`; equal for a lossless sphere."""

    n_max = n_max or series_length(x)
    (a, b) = coefficients(x, n_max)
    n = np.arange(1, n_max + 1)
    q_ext = 2.0 / x ** 2 * np.sum((2 * n + 1) * (a + b).real)
    q_sca = 2.0 / x ** 2 * np.sum((2 * n + 1) * (np.abs(a) ** 2 + np.abs(b) ** 2))
    return (float(q_ext), float(q_sca))


def rayleigh_backscatter(radius: float, kappa: float) -> float:
    """Small-sphere monostatic cross section `9 pi a^2 (kappa a)^4`."""
    return 9.0 * np.pi * radius ** 2 * (kappa * radius) ** 4
