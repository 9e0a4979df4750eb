from __future__ import annotations

from typing import (
    Any,
    Dict,
    NamedTuple,
    Optional
)

import logging

import numpy as np

from ..__about__ import __name_public__
from ..operators.assembly import split
from ..operators.constants import ETA_0
from ..surface.quadrature import SurfaceQuadrature

_logger = logging.getLogger(f"{__name_public__}:postproc")


class GridMismatchError(ValueError):
    """Far-field patterns sampled on different direction grids"""
    pass


def directions_of(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    return np.stack([
        np.sin(theta) * np.cos(phi),
        np.sin(theta) * np.sin(phi),
        np.cos(theta),
    ], axis=-1)


def spherical_units(theta: np.ndarray, phi: np.ndarray):
    """`(theta_hat, phi_hat)` at the given angles, each `(n, 3)`."""
    theta_hat = np.stack([np.cos(theta) * np.cos(phi), np.cos(theta) * np.sin(phi), -np.sin(theta)], axis=-1)
    phi_hat = np.stack([-np.sin(phi), np.cos(phi), np.zeros_like(phi)], axis=-1)
    return (theta_hat, phi_hat)


class DirectionGrid(NamedTuple):
    theta: np.ndarray
    phi: np.ndarray

    @property
    def directions(self) -> np.ndarray:
        return directions_of(self.theta, self.phi)

    def __len__(self) -> int:
        return len(self.theta)


def phi_cut(step_degrees: float = 1.0, phi_degrees: float = 0.0) -> DirectionGrid:
    """`theta` from 0 to 180 degrees inclusive at fixed `phi`."""
    theta = np.deg2rad(np.linspace(0.0, 180.0, int(round(180.0 / step_degrees)) + 1))
    return DirectionGrid(theta=theta, phi=np.full_like(theta, np.deg2rad(phi_degrees)))


class FarFieldPattern(NamedTuple):
    """Far-field amplitude `E_inf` with `E_s(r x) ~ exp(-j kappa r) / r E_inf(x)` as `r` grows."""

    grid: DirectionGrid
    field: np.ndarray
    incident_amplitude: float = 1.0

    @property
    def directions(self) -> np.ndarray:
        return self.grid.directions

    @property
    def e_theta(self) -> np.ndarray:
        (theta_hat, _) = spherical_units(self.grid.theta, self.grid.phi)
        return np.einsum("ni,ni->n", self.field, theta_hat)

    @property
    def e_phi(self) -> np.ndarray:
        (_, phi_hat) = spherical_units(self.grid.theta, self.grid.phi)
        return np.einsum("ni,ni->n", self.field, phi_hat)

    @property
    def rcs(self) -> np.ndarray:
        """Bistatic radar cross section `4 pi |E_inf|^2 / |E_i|^2` (m^2)."""
        return 4.0 * np.pi * np.sum(np.abs(self.field) ** 2, axis=1) / abs(self.incident_amplitude) ** 2

    @property
    def rcs_dbsm(self) -> np.ndarray:
        return 10.0 * np.log10(np.maximum(self.rcs, np.finfo(float).tiny))

    def __add__(self, other: FarFieldPattern) -> FarFieldPattern:
        _check_grids(self, other)
        return self._replace(field=self.field + other.field)

    def to_csv(self, metadata: Optional[Dict[str, Any]] = None) -> str:
        lines = []
        if metadata:
            lines.append("# " + " ".join(f"{key}={value}" for (key, value) in metadata.items()))
        lines.append("theta_deg,phi_deg,sigma_dbsm,re_Etheta,im_Etheta,re_Ephi,im_Ephi")

        (e_theta, e_phi) = (self.e_theta, self.e_phi)
        for (i, (theta, phi)) in enumerate(zip(np.rad2deg(self.grid.theta), np.rad2deg(self.grid.phi))):
            lines.append(
                f"{theta:.6f},{phi:.6f},{self.rcs_dbsm[i]:.6f},"
                f"{e_theta[i].real:.9e},{e_theta[i].imag:.9e},{e_phi[i].real:.9e},{e_phi[i].imag:.9e}"
            )
        return "\n".join(lines) + "\n"


def sample_currents(coefficients: np.ndarray, quadrature: SurfaceQuadrature) -> np.ndarray:
    """Surface current `J = sum a1 J1 + a2 J2` at the quadrature samples, `(S, 3)`."""
    (a1, a2) = split(np.asarray(coefficients))
    return np.stack([
        quadrature.current_basis(1)[axis] @ a1 + quadrature.current_basis(2)[axis] @ a2
        for axis in range(3)
    ], axis=1)


def far_field(
    coefficients: np.ndarray,
    quadrature: SurfaceQuadrature,
    grid: DirectionGrid,
    kappa: float,
    *,
    incident_amplitude: float = 1.0
) -> FarFieldPattern:
    """`E_inf(x) = -(j kappa eta / 4 pi) (I - x x) int J(r) exp(+j kappa x.r) dr`.

    With `A` the integral, `(I - x x) A = -x cross (x cross A)`: the field is
    `+(j kappa eta / 4 pi) x cross (x cross A)`, the sign that matches `mie_reference` under
    the `exp(-j kappa R)` convention.
    """

    currents = sample_currents(coefficients, quadrature) * quadrature.area_elements[:, None]
    x = grid.directions

    phases = np.exp(1j * kappa * (x @ quadrature.points.T))
    potential = phases @ currents
    transverse = potential - x * np.einsum("ni,ni->n", x, potential)[:, None]

    field = -(1j * kappa * ETA_0 / (4.0 * np.pi)) * transverse
    return FarFieldPattern(grid=grid, field=field, incident_amplitude=incident_amplitude)


def _check_grids(a: FarFieldPattern, b: FarFieldPattern):
    if len(a.grid) != len(b.grid) or not (
        np.allclose(a.grid.theta, b.grid.theta, atol=1e-12) and np.allclose(a.grid.phi, b.grid.phi, atol=1e-12)
    ):
        raise GridMismatchError(f"Patterns on grids of {len(a.grid)} and {len(b.grid)} directions differ")


def far_field_error(calculated: FarFieldPattern, reference: FarFieldPattern) -> float:
    """`max |E_calc - E_ref| / max |E_ref|` over the shared grid.

    Raises:
        GridMismatchError:
    """

    _check_grids(calculated, reference)
    difference = np.linalg.norm(calculated.field - reference.field, axis=1)
    scale = np.max(np.linalg.norm(reference.field, axis=1))
    if scale == 0.0:
        return float(np.max(difference))
    return float(np.max(difference) / scale)
