"""Analytic level-set geometry for embedded interfaces.

Each geometry supplies a closed-form level-set function phi (negative
inside, positive outside), its exact gradient and Laplacian, and a
parameterization of the zero set Gamma. Derived features used by the
solver (indicator labels, the kinked level set |phi| with its one-sided
derivatives, unit normals, 2D signed curvature) are computed here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

INTERFACE_TOL = 1e-14
PROJECTION_TOL = 1e-12


class OnInterfaceError(ValueError):
    """A point lies on the interface where the side label is undefined."""


class DegenerateGradientError(ValueError):
    """The level-set gradient vanishes where a normal was requested."""


class UnsupportedGeometryError(TypeError):
    """Operation not defined for this geometry (e.g. 2D curvature in 3D)."""


@dataclass(frozen=True)
class InterfacePoint:
    """One collocation point on Gamma with its geometric data."""

    position: np.ndarray
    normal: np.ndarray
    grad_phi_norm: float
    curvature: float | None = None
    alpha: float | None = None


@dataclass(frozen=True)
class InterfacePoints:
    """Batch of interface points (positions row-wise)."""

    position: np.ndarray        # (m, d)
    normal: np.ndarray          # (m, d), unit, pointing from the inside out
    grad_phi_norm: np.ndarray   # (m,)
    curvature: np.ndarray | None = None  # (m,), 2D only
    alpha: np.ndarray | None = None      # (m,), polar parameter, 2D only

    def __len__(self) -> int:
        return self.position.shape[0]

    def __getitem__(self, i: int) -> InterfacePoint:
        return InterfacePoint(
            position=self.position[i],
            normal=self.normal[i],
            grad_phi_norm=float(self.grad_phi_norm[i]),
            curvature=None if self.curvature is None else float(self.curvature[i]),
            alpha=None if self.alpha is None else float(self.alpha[i]),
        )


class LevelSetGeometry:
    """Base class: closed-form phi, grad phi, lap phi and a parameterization."""

    dim: int

    def phi(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad_phi(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def lap_phi(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def interface_points(self, count=None, rng=None, alphas=None) -> InterfacePoints:
        raise NotImplementedError


def _as_batch(x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return x[None, :], True
    return x, False


def _polar_curvature(r, rp, rpp):
    # curvature of the polar curve rho = r(alpha), counterclockwise;
    # positive where the curve bulges toward the outside (circle: +1/R)
    return (r * r + 2.0 * rp * rp - r * rpp) / (r * r + rp * rp) ** 1.5


class Circle(LevelSetGeometry):
    """Unit-style circle interface, phi(x) = x1^2 + x2^2 - R^2."""

    dim = 2

    def __init__(self, radius: float):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)

    def phi(self, x):
        x, single = _as_batch(x)
        out = np.sum(x * x, axis=1) - self.radius**2
        return out[0] if single else out

    def grad_phi(self, x):
        x, single = _as_batch(x)
        out = 2.0 * x
        return out[0] if single else out

    def lap_phi(self, x):
        x, single = _as_batch(x)
        out = np.full(x.shape[0], 2.0 * self.dim)
        return out[0] if single else out

    def curvature(self, alpha):
        return np.full_like(np.asarray(alpha, dtype=float), 1.0 / self.radius)

    def interface_points(self, count=None, rng=None, alphas=None):
        alphas = _angles(count, rng, alphas)
        pos = self.radius * np.stack([np.cos(alphas), np.sin(alphas)], axis=1)
        normal = pos / self.radius
        return InterfacePoints(
            position=pos,
            normal=normal,
            grad_phi_norm=np.full(len(alphas), 2.0 * self.radius),
            curvature=self.curvature(alphas),
            alpha=alphas,
        )


class Sphere(LevelSetGeometry):
    """Sphere interface in 3D, phi(x) = ||x||^2 - R^2."""

    dim = 3

    def __init__(self, radius: float):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)

    def phi(self, x):
        x, single = _as_batch(x)
        out = np.sum(x * x, axis=1) - self.radius**2
        return out[0] if single else out

    def grad_phi(self, x):
        x, single = _as_batch(x)
        out = 2.0 * x
        return out[0] if single else out

    def lap_phi(self, x):
        x, single = _as_batch(x)
        out = np.full(x.shape[0], 2.0 * self.dim)
        return out[0] if single else out

    def interface_points(self, count=None, rng=None, alphas=None):
        if alphas is not None:
            raise UnsupportedGeometryError("sphere has no scalar angle parameter")
        if count is None:
            raise ValueError("count required for sphere interface sampling")
        # Fibonacci lattice: deterministic quasi-uniform point set on the sphere
        i = np.arange(count)
        z = 1.0 - (2.0 * i + 1.0) / count
        theta = np.pi * (3.0 - np.sqrt(5.0)) * i
        s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        direction = np.stack([s * np.cos(theta), s * np.sin(theta), z], axis=1)
        pos = self.radius * direction
        return InterfacePoints(
            position=pos,
            normal=direction,
            grad_phi_norm=np.full(count, 2.0 * self.radius),
        )


class PolarFlower(LevelSetGeometry):
    """Petaled interface rho = r(alpha), r(alpha) = base - amplitude*cos(lobes*alpha).

    The level set is kept in the same quadratic family as the circle,
    phi(x) = x1^2 + x2^2 - r(alpha_x)^2, so its zero set is exactly the
    parameterized curve rho = r(alpha) and phi < 0 inside.
    """

    dim = 2

    def __init__(self, base: float, amplitude: float, lobes: int):
        if base - abs(amplitude) <= 0:
            raise ValueError("r(alpha) must stay positive")
        self.base = float(base)
        self.amplitude = float(amplitude)
        self.lobes = int(lobes)

    def r(self, alpha):
        return self.base - self.amplitude * np.cos(self.lobes * alpha)

    def r_prime(self, alpha):
        return self.amplitude * self.lobes * np.sin(self.lobes * alpha)

    def r_second(self, alpha):
        return self.amplitude * self.lobes**2 * np.cos(self.lobes * alpha)

    def phi(self, x):
        x, single = _as_batch(x)
        alpha = np.arctan2(x[:, 1], x[:, 0])
        out = np.sum(x * x, axis=1) - self.r(alpha) ** 2
        return out[0] if single else out

    def grad_phi(self, x):
        x, single = _as_batch(x)
        rho2 = np.sum(x * x, axis=1)
        alpha = np.arctan2(x[:, 1], x[:, 0])
        # grad(r^2) = 2 r r' grad(alpha), grad(alpha) = (-x2, x1)/rho^2
        c = 2.0 * self.r(alpha) * self.r_prime(alpha) / rho2
        out = np.empty_like(x)
        out[:, 0] = 2.0 * x[:, 0] + c * x[:, 1]
        out[:, 1] = 2.0 * x[:, 1] - c * x[:, 0]
        return out[0] if single else out

    def lap_phi(self, x):
        x, single = _as_batch(x)
        rho2 = np.sum(x * x, axis=1)
        alpha = np.arctan2(x[:, 1], x[:, 0])
        r, rp, rpp = self.r(alpha), self.r_prime(alpha), self.r_second(alpha)
        # lap(f(alpha)) = f''(alpha)/rho^2 since alpha is harmonic off the origin
        out = 4.0 - 2.0 * (rp * rp + r * rpp) / rho2
        return out[0] if single else out

    def curvature(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        return _polar_curvature(self.r(alpha), self.r_prime(alpha), self.r_second(alpha))

    def interface_points(self, count=None, rng=None, alphas=None):
        alphas = _angles(count, rng, alphas)
        r = self.r(alphas)
        pos = np.stack([r * np.cos(alphas), r * np.sin(alphas)], axis=1)
        grad = self.grad_phi(pos)
        norm = np.linalg.norm(grad, axis=1)
        return InterfacePoints(
            position=pos,
            normal=grad / norm[:, None],
            grad_phi_norm=norm,
            curvature=self.curvature(alphas),
            alpha=alphas,
        )


def _angles(count, rng, alphas):
    if alphas is not None:
        return np.asarray(alphas, dtype=float)
    if count is None:
        raise ValueError("either count or alphas required")
    if rng is None:
        return np.linspace(0.0, 2.0 * np.pi, count, endpoint=False)
    # Latin hypercube in the angle: one point per stratum, shuffled
    strata = rng.permutation(count)
    return (strata + rng.random(count)) * (2.0 * np.pi / count)


def phi(geom: LevelSetGeometry, x) -> np.ndarray:
    """Level-set value; negative inside, positive outside."""
    return geom.phi(x)


def indicator(geom: LevelSetGeometry, x) -> np.ndarray:
    """Side label: -1 inside (phi<0), +1 outside. Rejects on-interface points."""
    p = np.asarray(geom.phi(x))
    if np.any(np.abs(p) <= INTERFACE_TOL):
        raise OnInterfaceError("indicator undefined on the interface")
    return np.where(p < 0, -1.0, 1.0)[()] if p.ndim == 0 else np.where(p < 0, -1.0, 1.0)


def cusp_features(geom: LevelSetGeometry, x):
    """|phi| and its gradient/Laplacian at off-interface points.

    Returns (phi_a, grad_phi_a, lap_phi_a) with grad |phi| = sign(phi) grad phi
    and lap |phi| = sign(phi) lap phi away from Gamma.
    """
    p = np.asarray(geom.phi(x), dtype=float)
    if np.any(np.abs(p) <= INTERFACE_TOL):
        raise OnInterfaceError("cusp features undefined on the interface")
    s = np.sign(p)
    grad = geom.grad_phi(x)
    lap = geom.lap_phi(x)
    if p.ndim == 0:
        return abs(float(p)), s * grad, float(s * lap)
    return np.abs(p), s[:, None] * grad, s * lap


def unit_normal(geom: LevelSetGeometry, x_gamma) -> np.ndarray:
    """Unit normal grad phi / ||grad phi||, pointing from the inside out."""
    g = geom.grad_phi(x_gamma)
    n = np.linalg.norm(g, axis=-1)
    if np.any(n < 1e-12):
        raise DegenerateGradientError("vanishing level-set gradient")
    return g / (n[..., None] if g.ndim > 1 else n)


def curvature2d(geom: LevelSetGeometry, alpha):
    """Signed curvature of a 2D interface at polar parameter alpha."""
    if geom.dim != 2 or not hasattr(geom, "curvature"):
        raise UnsupportedGeometryError("curvature2d requires a 2D polar geometry")
    return geom.curvature(alpha)


def parameterize_interface(geom: LevelSetGeometry, count=None, rng=None, alphas=None) -> InterfacePoints:
    """Collocation points exactly on Gamma with normals (and 2D curvatures)."""
    pts = geom.interface_points(count=count, rng=rng, alphas=alphas)
    pts = _project_onto_interface(geom, pts)
    return pts


def _project_onto_interface(geom, pts: InterfacePoints, max_iter: int = 5) -> InterfacePoints:
    # Newton correction along grad phi; a no-op for the shipped closed forms,
    # kept to enforce |phi| <= 1e-12 for any future geometry
    pos = pts.position.copy()
    for _ in range(max_iter):
        p = geom.phi(pos)
        if np.all(np.abs(p) <= PROJECTION_TOL):
            break
        g = geom.grad_phi(pos)
        n2 = np.sum(g * g, axis=1)
        pos -= (p / n2)[:, None] * g
    return InterfacePoints(
        position=pos,
        normal=pts.normal,
        grad_phi_norm=pts.grad_phi_norm,
        curvature=pts.curvature,
        alpha=pts.alpha,
    )
