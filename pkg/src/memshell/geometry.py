"""Analytic benchmark surfaces, tangent-plane projector, material law, exact fields.

The two benchmark geometries (axis-aligned cylinder, z-axis torus) provide
signed distances, outward unit normals, and closest-point projections, plus
the closed-form loads and statically determinate stress fields used for error
measurement.
"""

import abc
import dataclasses
from typing import Callable

import numpy as np

__all__ = [
    "GeometryError",
    "AnalyticSurface",
    "Cylinder",
    "Torus",
    "MaterialModel",
    "ExactSolution",
    "projector",
    "cylinder_exact",
    "torus_exact",
]

#: A point is accepted as lying on a surface if its unsigned distance is below
#: this tolerance (geometries here have O(1) dimensions).
ON_SURFACE_TOL = 1e-8


class GeometryError(ValueError):
    """Invalid geometric parameters or evaluation outside a surface's domain."""


def projector(n) -> np.ndarray:
    """Orthogonal projector ``I - n (x) n`` onto the plane normal to unit ``n``.

    The result is symmetric, idempotent, annihilates ``n``, and has trace 2.
    Raises :class:`GeometryError` if ``n`` is not unit length (tol 1e-12).
    """
    n = np.asarray(n, dtype=float)
    if abs(np.linalg.norm(n) - 1.0) > 1e-12:
        raise GeometryError(f"projector requires a unit vector, |n| = {np.linalg.norm(n)}")
    return np.eye(3) - np.outer(n, n)


class AnalyticSurface(abc.ABC):
    """A smooth closed-form surface with signed distance and outward normal."""

    @abc.abstractmethod
    def signed_distance(self, x) -> np.ndarray:
        """Signed distance to the surface, positive outside."""

    @abc.abstractmethod
    def project(self, x) -> np.ndarray:
        """Closest point on the surface."""

    @abc.abstractmethod
    def _normal(self, x) -> np.ndarray:
        """Outward unit normal field evaluated via the closest point (no checks)."""

    def normal_at(self, x) -> np.ndarray:
        """Outward unit normal at point(s) ``x`` lying on the surface.

        Raises :class:`GeometryError` if any point is farther than
        ``ON_SURFACE_TOL`` from the surface.
        """
        x = np.asarray(x, dtype=float)
        d = np.abs(self.signed_distance(x))
        if np.any(d > ON_SURFACE_TOL):
            raise GeometryError(
                f"point off surface: max |distance| = {float(np.max(d)):.3e}"
            )
        return self._normal(x)


@dataclasses.dataclass(frozen=True)
class Cylinder(AnalyticSurface):
    """Open cylinder of radius ``r`` about the x-axis, ends at x=0 and x=L.

    The signed distance refers to the lateral surface only (the ends are open
    boundary circles, not part of the surface).
    """

    r: float
    L: float

    def __post_init__(self):
        if self.r <= 0 or self.L <= 0:
            raise GeometryError(f"cylinder requires r, L > 0, got r={self.r}, L={self.L}")

    def signed_distance(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.hypot(x[..., 1], x[..., 2]) - self.r

    def _radial(self, x) -> tuple[np.ndarray, np.ndarray]:
        rho = np.hypot(x[..., 1], x[..., 2])
        if np.any(rho <= 1e-12 * self.r):
            raise GeometryError("normal undefined on the cylinder axis")
        return rho, x

    def _normal(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        rho, x = self._radial(x)
        n = np.zeros_like(x)
        n[..., 1] = x[..., 1] / rho
        n[..., 2] = x[..., 2] / rho
        return n

    def project(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        rho, x = self._radial(x)
        p = x.copy()
        p[..., 1] *= self.r / rho
        p[..., 2] *= self.r / rho
        return p


@dataclasses.dataclass(frozen=True)
class Torus(AnalyticSurface):
    """Torus around the z-axis with major radius ``R``, minor (tube) radius ``r``.

    Angle convention (shared with :func:`memshell.mesh.build_torus_mesh`):
    ``phi`` is the toroidal angle about the z-axis; the poloidal angle
    ``theta`` is measured so that the distance from the axis is
    ``R + r*sin(theta)`` and ``z = r*cos(theta)``. Thus ``sin(theta) = +1`` on
    the outer equator and ``-1`` on the inner equator.
    """

    R: float
    r: float

    def __post_init__(self):
        if self.r <= 0:
            raise GeometryError(f"torus requires r > 0, got r={self.r}")
        if self.R <= self.r:
            raise GeometryError(
                f"torus requires R > r (non self-intersecting), got R={self.R}, r={self.r}"
            )

    def _tube_frame(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(rho, q, x): axis distance, tube-center distance; validates the domain."""
        x = np.asarray(x, dtype=float)
        rho = np.hypot(x[..., 0], x[..., 1])
        if np.any(rho <= 1e-12 * self.R):
            raise GeometryError("projection undefined on the torus symmetry axis")
        q = np.hypot(rho - self.R, x[..., 2])
        return rho, q, x

    def signed_distance(self, x) -> np.ndarray:
        _, q, _ = self._tube_frame(x)
        return q - self.r

    def _normal(self, x) -> np.ndarray:
        rho, q, x = self._tube_frame(x)
        # sin(theta) = (rho - R)/q, cos(theta) = z/q from the closest tube point
        st = (rho - self.R) / q
        n = np.empty_like(x)
        n[..., 0] = st * x[..., 0] / rho
        n[..., 1] = st * x[..., 1] / rho
        n[..., 2] = x[..., 2] / q
        return n

    def project(self, x) -> np.ndarray:
        rho, q, x = self._tube_frame(x)
        if np.any(q <= 1e-12 * self.r):
            raise GeometryError("projection undefined on the tube center circle")
        c = np.zeros_like(x)
        c[..., 0] = self.R * x[..., 0] / rho
        c[..., 1] = self.R * x[..., 1] / rho
        return c + (x - c) * (self.r / q)[..., None]


@dataclasses.dataclass(frozen=True)
class MaterialModel:
    """Linear isotropic material for a thin membrane.

    Parameters
    ----------
    E : float
        Young's modulus, positive.
    nu : float
        Poisson's ratio. Valid range is ``(-1, 1)`` for plane stress (the
        incompressible value 1/2 is allowed there) and ``(-1, 1/2)`` for
        plane strain.
    t : float
        Thickness, positive.
    mode : {"plane_stress", "plane_strain"}
        Selects the effective second Lame parameter used by the constitutive
        law: ``E*nu/(1 - nu^2)`` for plane stress, the full
        ``E*nu/((1 + nu)(1 - 2 nu))`` for plane strain.
    """

    E: float
    nu: float
    t: float
    mode: str = "plane_stress"

    def __post_init__(self):
        if self.E <= 0:
            raise GeometryError(f"Young's modulus must be positive, got {self.E}")
        if self.t <= 0:
            raise GeometryError(f"thickness must be positive, got {self.t}")
        if self.mode == "plane_stress":
            if not -1.0 < self.nu < 1.0:
                raise GeometryError(
                    f"plane stress requires -1 < nu < 1, got nu={self.nu}"
                )
        elif self.mode == "plane_strain":
            if not -1.0 < self.nu < 0.5:
                raise GeometryError(
                    f"plane strain requires -1 < nu < 1/2, got nu={self.nu}"
                )
        else:
            raise GeometryError(f"unknown material mode {self.mode!r}")

    @property
    def mu(self) -> float:
        """Shear modulus E / (2 (1 + nu))."""
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def lam(self) -> float:
        """First Lame parameter E nu / ((1 + nu)(1 - 2 nu))."""
        return self.E * self.nu / ((1.0 + self.nu) * (1.0 - 2.0 * self.nu))

    @property
    def lam0(self) -> float:
        """Plane-stress effective Lame parameter 2 lam mu / (lam + 2 mu) = E nu / (1 - nu^2)."""
        return self.E * self.nu / (1.0 - self.nu**2)

    @property
    def lame_effective(self) -> float:
        """The Lame parameter entering the membrane constitutive law."""
        return self.lam0 if self.mode == "plane_stress" else self.lam


@dataclasses.dataclass(frozen=True)
class ExactSolution:
    """Closed-form load and stress fields of a benchmark problem.

    Both callables are vectorized: they accept points of shape ``(..., 3)``
    and return ``(..., 3)`` (force per unit midsurface area) respectively
    ``(..., 3, 3)`` (symmetric in-plane stress tensors).
    """

    load_at: Callable[[np.ndarray], np.ndarray]
    stress_at: Callable[[np.ndarray], np.ndarray]


def cylinder_exact(F: float, material: MaterialModel, surface: Cylinder) -> ExactSolution:
    """Exact fields for the axially loaded open cylinder.

    The load is the axial surface traction ``f(x) = F/(2 pi r) * x/L^2`` in
    the +x direction (force per unit midsurface area, ``F`` a total-force
    scale). The resulting membrane stress is uniaxial along the axis,
    ``sigma(x) = F (1 - (x/L)^2) / (4 pi r t)``.
    """
    if not isinstance(surface, Cylinder):
        raise GeometryError("cylinder_exact requires a Cylinder surface")
    r, L, t = surface.r, surface.L, material.t

    def load_at(x):
        x = np.asarray(x, dtype=float)
        f = np.zeros_like(x)
        f[..., 0] = F / (2.0 * np.pi * r) * x[..., 0] / L**2
        return f

    def stress_at(x):
        x = np.asarray(x, dtype=float)
        s = F * (1.0 - (x[..., 0] / L) ** 2) / (4.0 * np.pi * r * t)
        sig = np.zeros(x.shape[:-1] + (3, 3))
        sig[..., 0, 0] = s
        return sig

    return ExactSolution(load_at=load_at, stress_at=stress_at)


def torus_exact(p: float, material: MaterialModel, surface: Torus) -> ExactSolution:
    """Exact fields for the torus under internal gauge pressure ``p``.

    The load is ``p n`` (outward). The membrane stresses are statically
    determinate: along the tube centerline (toroidal direction)
    ``sigma_1 = p r / (2 t)``; around the tube cross section (poloidal
    direction, the hoop stress of the straight-pipe limit)
    ``sigma_2 = (p r / t) (1 - r sin(theta) / (2 (R + r sin(theta))))``.
    Evaluation at a point slightly off the surface uses the angles of its
    closest-point projection.
    """
    if not isinstance(surface, Torus):
        raise GeometryError("torus_exact requires a Torus surface")
    R, r, t = surface.R, surface.r, material.t

    def _angles(x):
        x = np.asarray(x, dtype=float)
        rho = np.hypot(x[..., 0], x[..., 1])
        q = np.hypot(rho - R, x[..., 2])
        st = (rho - R) / q
        ct = x[..., 2] / q
        cp = x[..., 0] / rho
        sp = x[..., 1] / rho
        return st, ct, cp, sp

    def load_at(x):
        st, ct, cp, sp = _angles(x)
        f = np.empty(st.shape + (3,))
        f[..., 0] = p * st * cp
        f[..., 1] = p * st * sp
        f[..., 2] = p * ct
        return f

    def stress_at(x):
        st, ct, cp, sp = _angles(x)
        sig1 = p * r / (2.0 * t)
        sig2 = (p * r / t) * (1.0 - r * st / (2.0 * (R + r * st)))
        e1 = np.stack([-sp, cp, np.zeros_like(sp)], axis=-1)
        e2 = np.stack([ct * cp, ct * sp, -st], axis=-1)
        sig = sig1 * e1[..., :, None] * e1[..., None, :]
        sig += sig2[..., None, None] * e2[..., :, None] * e2[..., None, :]
        return sig

    return ExactSolution(load_at=load_at, stress_at=stress_at)
