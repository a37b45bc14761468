"""Benchmark catalog: five Stokes interface problems.

Problems 1-4 carry closed-form exact solutions with hand-written
one-sided gradients and Laplacians (validated against finite differences
in the test suite). Their interfacial force is derived from the traction
balance with the exact one-sided fields, which guarantees the stated
solution is an exact minimizer of the training loss; the force formulas
printed in the source literature are retained as a logged cross-check
only (their tangential component differs in sign for problems 1 and 4).
Problem 5 (flower interface, surface-tension force) has no exact
solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import Circle, InterfacePoints, LevelSetGeometry, PolarFlower, Sphere
from .sampling import Ball, Box


class NoExactSolutionError(ValueError):
    """The problem has no exact fields to evaluate errors against."""


class FieldOracle:
    """Exact field pair with one-sided evaluation.

    side is +-1 (arrays broadcast against points). Implementations give
    values, first derivatives and Laplacians of each component.
    """

    def pressure(self, x, side):
        raise NotImplementedError

    def pressure_grad(self, x, side):
        raise NotImplementedError

    def velocity(self, x, side):
        raise NotImplementedError

    def velocity_grad(self, x, side):
        """(m, d, d) array with entry [k, j] = du_k/dx_j."""
        raise NotImplementedError

    def velocity_laplacian(self, x, side):
        raise NotImplementedError


class PiecewiseFields(FieldOracle):
    """FieldOracle built from per-side callables."""

    def __init__(self, d, p, p_grad, u, u_grad, u_lap):
        self.d = d
        self._p = p
        self._p_grad = p_grad
        self._u = u
        self._u_grad = u_grad
        self._u_lap = u_lap

    @staticmethod
    def _blend(minus, plus, side):
        side = np.asarray(side)
        w = (side > 0)
        shape_extra = (1,) * (minus.ndim - side.ndim)
        return np.where(w.reshape(side.shape + shape_extra), plus, minus)

    def pressure(self, x, side):
        return self._blend(self._p(x, -1), self._p(x, +1), side)

    def pressure_grad(self, x, side):
        return self._blend(self._p_grad(x, -1), self._p_grad(x, +1), side)

    def velocity(self, x, side):
        return self._blend(self._u(x, -1), self._u(x, +1), side)

    def velocity_grad(self, x, side):
        return self._blend(self._u_grad(x, -1), self._u_grad(x, +1), side)

    def velocity_laplacian(self, x, side):
        return self._blend(self._u_lap(x, -1), self._u_lap(x, +1), side)


@dataclass
class ProblemSpec:
    """Domain, geometry, data callbacks and optional exact fields."""

    name: str
    dim: int
    domain: object
    geometry: LevelSetGeometry
    mu_minus: float
    mu_plus: float
    body_force: Callable          # (x, side) -> (m, d)
    interfacial_force: Callable   # InterfacePoints -> (m, d)
    boundary_velocity: Callable   # (x,) -> (m, d)
    exact: FieldOracle | None = None
    printed_interfacial_force: Callable | None = None  # positions -> (m, d)
    pressure_anchor: tuple | None = None  # (x_ref, value): pins the additive constant
    description: str = ""


def derive_traction_force(exact: FieldOracle, mu_minus, mu_plus):
    """Interfacial force consistent with the traction balance.

    F_k = [p] n_k - [mu du_k/dn] - [mu du/dx_k] . n with one-sided limits
    of the exact fields; substituting it back into the traction residual
    gives zero by construction.
    """

    def force(iface: InterfacePoints):
        x, n = iface.position, iface.normal
        jump_p = exact.pressure(x, +1) - exact.pressure(x, -1)
        gp = exact.velocity_grad(x, +1)
        gm = exact.velocity_grad(x, -1)
        # [mu du_k/dn]
        jn = mu_plus * np.einsum("mkj,mj->mk", gp, n) - mu_minus * np.einsum("mkj,mj->mk", gm, n)
        # [mu du/dx_k] . n  (jump of the k-th column of the gradient, dotted with n)
        jx = mu_plus * np.einsum("mjk,mj->mk", gp, n) - mu_minus * np.einsum("mjk,mj->mk", gm, n)
        return jump_p[:, None] * n - jn - jx

    return force


def printed_force_discrepancy(problem: ProblemSpec, n_points: int = 1000) -> float:
    """Max |F_printed - F_derived| over interface samples (reported, not asserted)."""
    if problem.printed_interfacial_force is None:
        raise ValueError(f"{problem.name} has no printed force formula")
    pts = problem.geometry.interface_points(count=n_points)
    derived = problem.interfacial_force(pts)
    printed = problem.printed_interfacial_force(pts.position)
    return float(np.max(np.abs(printed - derived)))


def _r2(x):
    return np.sum(x * x, axis=1)


def example1() -> ProblemSpec:
    """2D circle interface, constant pressure jump, rigid-rotation-like inner flow."""
    d = 2

    def p(x, side):
        m = x.shape[0]
        return np.ones(m) if side < 0 else np.zeros(m)

    def p_grad(x, side):
        return np.zeros_like(x)

    def u(x, side):
        if side > 0:
            return np.zeros_like(x)
        w = _r2(x) - 1.0
        return np.stack([x[:, 1] * w, -x[:, 0] * w], axis=1)

    def u_grad(x, side):
        m = x.shape[0]
        g = np.zeros((m, d, d))
        if side < 0:
            w = _r2(x) - 1.0
            g[:, 0, 0] = 2.0 * x[:, 0] * x[:, 1]
            g[:, 0, 1] = w + 2.0 * x[:, 1] ** 2
            g[:, 1, 0] = -w - 2.0 * x[:, 0] ** 2
            g[:, 1, 1] = -2.0 * x[:, 0] * x[:, 1]
        return g

    def u_lap(x, side):
        m = x.shape[0]
        out = np.zeros((m, d))
        if side < 0:
            out[:, 0] = 8.0 * x[:, 1]
            out[:, 1] = -8.0 * x[:, 0]
        return out

    exact = PiecewiseFields(d, p, p_grad, u, u_grad, u_lap)
    mu_minus, mu_plus = 1.0, 0.5

    def body_force(x, side):
        out = np.zeros_like(x)
        inner = np.asarray(side) < 0
        out[inner, 0] = -8.0 * x[inner, 1]
        out[inner, 1] = 8.0 * x[inner, 0]
        return out

    def printed_force(x):
        return np.stack([-x[:, 0] - 2.0 * x[:, 1], -x[:, 1] + 2.0 * x[:, 0]], axis=1)

    return ProblemSpec(
        name="example1",
        dim=d,
        domain=Box([-2.0, -2.0], [2.0, 2.0]),
        geometry=Circle(1.0),
        mu_minus=mu_minus,
        mu_plus=mu_plus,
        body_force=body_force,
        interfacial_force=derive_traction_force(exact, mu_minus, mu_plus),
        boundary_velocity=lambda x: np.zeros_like(x),
        exact=exact,
        printed_interfacial_force=printed_force,
        pressure_anchor=(np.array([1.5, 0.0]), 0.0),
        description="2D, unit circle in [-2,2]^2, (mu-,mu+)=(1,0.5), constant [p]",
    )


def example2(mu_minus: float = 1.0, mu_plus: float = 0.1) -> ProblemSpec:
    """2D circle interface with polynomial pressure jump; viscosity contrast varies."""
    d = 2

    def p(x, side):
        if side > 0:
            return np.zeros(x.shape[0])
        return (0.375 - 0.75 * x[:, 0] ** 2) * x[:, 0] * x[:, 1]

    def p_grad(x, side):
        m = x.shape[0]
        g = np.zeros((m, d))
        if side < 0:
            g[:, 0] = (0.375 - 2.25 * x[:, 0] ** 2) * x[:, 1]
            g[:, 1] = (0.375 - 0.75 * x[:, 0] ** 2) * x[:, 0]
        return g

    def u(x, side):
        x1, x2 = x[:, 0], x[:, 1]
        if side < 0:
            return np.stack([0.25 * x2, -0.25 * x1 * (1.0 - x1**2)], axis=1)
        return np.stack([0.25 * x2 * (x1**2 + x2**2), -0.25 * x1 * x2**2], axis=1)

    def u_grad(x, side):
        m = x.shape[0]
        x1, x2 = x[:, 0], x[:, 1]
        g = np.zeros((m, d, d))
        if side < 0:
            g[:, 0, 1] = 0.25
            g[:, 1, 0] = -0.25 * (1.0 - 3.0 * x1**2)
        else:
            g[:, 0, 0] = 0.5 * x1 * x2
            g[:, 0, 1] = 0.25 * (x1**2 + 3.0 * x2**2)
            g[:, 1, 0] = -0.25 * x2**2
            g[:, 1, 1] = -0.5 * x1 * x2
        return g

    def u_lap(x, side):
        m = x.shape[0]
        out = np.zeros((m, d))
        if side < 0:
            out[:, 1] = 1.5 * x[:, 0]
        else:
            out[:, 0] = 2.0 * x[:, 1]
            out[:, 1] = -0.5 * x[:, 0]
        return out

    exact = PiecewiseFields(d, p, p_grad, u, u_grad, u_lap)

    def body_force(x, side):
        side = np.asarray(side)
        x1, x2 = x[:, 0], x[:, 1]
        g_in = np.stack([(0.375 - 2.25 * x1**2) * x2,
                         (0.375 - 1.5 * mu_minus - 0.75 * x1**2) * x1], axis=1)
        g_out = np.stack([-2.0 * mu_plus * x2, 0.5 * mu_plus * x1], axis=1)
        return np.where((side > 0)[:, None], g_out, g_in)

    dmu = mu_plus - mu_minus

    def printed_force(x):
        x1, x2 = x[:, 0], x[:, 1]
        f1 = ((0.75 * x1**2 - 0.375) * x1**2 * x2 - 1.5 * dmu * x1**4 * x2
              + 0.5 * mu_plus * x2 + 0.75 * dmu * x1**2 * (1.0 - 2.0 * x1**2) * x2)
        f2 = ((0.75 * x1**2 - 0.375) * x1 * x2**2 - 1.5 * dmu * x1**3 * x2**2
              - 0.5 * mu_plus * x1 - 0.75 * dmu * x1**3 * (1.0 - 2.0 * x1**2))
        return np.stack([f1, f2], axis=1)

    def boundary_velocity(x):
        return u(x, +1)

    return ProblemSpec(
        name="example2",
        dim=d,
        domain=Box([-2.0, -2.0], [2.0, 2.0]),
        geometry=Circle(1.0),
        mu_minus=mu_minus,
        mu_plus=mu_plus,
        body_force=body_force,
        interfacial_force=derive_traction_force(exact, mu_minus, mu_plus),
        boundary_velocity=boundary_velocity,
        exact=exact,
        printed_interfacial_force=printed_force,
        pressure_anchor=(np.array([1.5, 0.0]), 0.0),
        description=f"2D, unit circle in [-2,2]^2, (mu-,mu+)=({mu_minus:g},{mu_plus:g}), polynomial [p]",
    )


def example3() -> ProblemSpec:
    """3D sphere interface, constant pressure jump, globally smooth velocity."""
    d = 3

    def p(x, side):
        m = x.shape[0]
        return np.ones(m) if side < 0 else np.zeros(m)

    def p_grad(x, side):
        return np.zeros_like(x)

    def u(x, side):
        w = _r2(x) - 1.0
        return np.stack([x[:, 1] * x[:, 2] * w,
                         x[:, 2] * x[:, 0] * w,
                         -2.0 * x[:, 0] * x[:, 1] * w], axis=1)

    def u_grad(x, side):
        m = x.shape[0]
        x1, x2, x3 = x[:, 0], x[:, 1], x[:, 2]
        w = _r2(x) - 1.0
        g = np.empty((m, d, d))
        g[:, 0, 0] = 2.0 * x1 * x2 * x3
        g[:, 0, 1] = x3 * w + 2.0 * x2**2 * x3
        g[:, 0, 2] = x2 * w + 2.0 * x2 * x3**2
        g[:, 1, 0] = x3 * w + 2.0 * x1**2 * x3
        g[:, 1, 1] = 2.0 * x1 * x2 * x3
        g[:, 1, 2] = x1 * w + 2.0 * x1 * x3**2
        g[:, 2, 0] = -2.0 * x2 * w - 4.0 * x1**2 * x2
        g[:, 2, 1] = -2.0 * x1 * w - 4.0 * x1 * x2**2
        g[:, 2, 2] = -4.0 * x1 * x2 * x3
        return g

    def u_lap(x, side):
        return np.stack([14.0 * x[:, 1] * x[:, 2],
                         14.0 * x[:, 2] * x[:, 0],
                         -28.0 * x[:, 0] * x[:, 1]], axis=1)

    exact = PiecewiseFields(d, p, p_grad, u, u_grad, u_lap)
    mu_minus, mu_plus = 1.0, 0.1
    dmu = mu_plus - mu_minus

    def body_force(x, side):
        mu = np.where(np.asarray(side) > 0, mu_plus, mu_minus)
        return np.stack([-14.0 * mu * x[:, 1] * x[:, 2],
                         -14.0 * mu * x[:, 2] * x[:, 0],
                         28.0 * mu * x[:, 0] * x[:, 1]], axis=1)

    def printed_force(x):
        x1, x2, x3 = x[:, 0], x[:, 1], x[:, 2]
        return np.stack([-x1 - 2.0 * dmu * x2 * x3,
                         -x2 - 2.0 * dmu * x3 * x1,
                         -x3 + 4.0 * dmu * x1 * x2], axis=1)

    return ProblemSpec(
        name="example3",
        dim=d,
        domain=Box([-2.0] * 3, [2.0] * 3),
        geometry=Sphere(1.0),
        mu_minus=mu_minus,
        mu_plus=mu_plus,
        body_force=body_force,
        interfacial_force=derive_traction_force(exact, mu_minus, mu_plus),
        boundary_velocity=lambda x: u(x, +1),
        exact=exact,
        printed_interfacial_force=printed_force,
        pressure_anchor=(np.array([1.5, 0.0, 0.0]), 0.0),
        description="3D, unit sphere in [-2,2]^3, (mu-,mu+)=(1,0.1), constant [p]",
    )


def example4() -> ProblemSpec:
    """3D sphere interface with polynomial pressure jump and kinked velocity."""
    d = 3

    def p(x, side):
        if side > 0:
            return np.zeros(x.shape[0])
        return (0.375 - 0.75 * x[:, 0] ** 2) * x[:, 0] * x[:, 1] * x[:, 2]

    def p_grad(x, side):
        m = x.shape[0]
        g = np.zeros((m, d))
        if side < 0:
            x1, x2, x3 = x[:, 0], x[:, 1], x[:, 2]
            g[:, 0] = (0.375 - 2.25 * x1**2) * x2 * x3
            g[:, 1] = (0.375 - 0.75 * x1**2) * x1 * x3
            g[:, 2] = (0.375 - 0.75 * x1**2) * x1 * x2
        return g

    def u(x, side):
        x1, x2, x3 = x[:, 0], x[:, 1], x[:, 2]
        if side < 0:
            return np.stack([0.25 * x2 * x3,
                             0.25 * x3 * x1,
                             -0.5 * x1 * x2 * (1.0 - x1**2 - x2**2)], axis=1)
        r2 = _r2(x)
        return np.stack([0.25 * x2 * x3 * r2,
                         0.25 * x3 * x1 * r2,
                         -0.5 * x1 * x2 * x3**2], axis=1)

    def u_grad(x, side):
        m = x.shape[0]
        x1, x2, x3 = x[:, 0], x[:, 1], x[:, 2]
        g = np.zeros((m, d, d))
        if side < 0:
            g[:, 0, 1] = 0.25 * x3
            g[:, 0, 2] = 0.25 * x2
            g[:, 1, 0] = 0.25 * x3
            g[:, 1, 2] = 0.25 * x1
            g[:, 2, 0] = -0.5 * x2 * (1.0 - 3.0 * x1**2 - x2**2)
            g[:, 2, 1] = -0.5 * x1 * (1.0 - x1**2 - 3.0 * x2**2)
        else:
            r2 = _r2(x)
            g[:, 0, 0] = 0.5 * x1 * x2 * x3
            g[:, 0, 1] = 0.25 * x3 * (r2 + 2.0 * x2**2)
            g[:, 0, 2] = 0.25 * x2 * (r2 + 2.0 * x3**2)
            g[:, 1, 0] = 0.25 * x3 * (r2 + 2.0 * x1**2)
            g[:, 1, 1] = 0.5 * x1 * x2 * x3
            g[:, 1, 2] = 0.25 * x1 * (r2 + 2.0 * x3**2)
            g[:, 2, 0] = -0.5 * x2 * x3**2
            g[:, 2, 1] = -0.5 * x1 * x3**2
            g[:, 2, 2] = -x1 * x2 * x3
        return g

    def u_lap(x, side):
        m = x.shape[0]
        x1, x2 = x[:, 0], x[:, 1]
        out = np.zeros((m, d))
        if side < 0:
            out[:, 2] = 6.0 * x1 * x2
        else:
            out[:, 0] = 3.5 * x[:, 1] * x[:, 2]
            out[:, 1] = 3.5 * x[:, 2] * x1
            out[:, 2] = -x1 * x2
        return out

    exact = PiecewiseFields(d, p, p_grad, u, u_grad, u_lap)
    mu_minus, mu_plus = 1.0, 0.1
    dmu = mu_plus - mu_minus

    def body_force(x, side):
        side = np.asarray(side)
        x1, x2, x3 = x[:, 0], x[:, 1], x[:, 2]
        g_in = np.stack([(0.375 - 2.25 * x1**2) * x2 * x3,
                         (0.375 - 0.75 * x1**2) * x3 * x1,
                         (0.375 - 0.75 * x1**2 - 6.0 * mu_minus) * x1 * x2], axis=1)
        g_out = np.stack([-3.5 * mu_plus * x2 * x3,
                          -3.5 * mu_plus * x3 * x1,
                          mu_plus * x1 * x2], axis=1)
        return np.where((side > 0)[:, None], g_out, g_in)

    def printed_force(x):
        x1, x2, x3 = x[:, 0], x[:, 1], x[:, 2]
        a = 0.375 - 0.75 * x1**2
        f1 = (-a * x1**2 * x2 * x3 - 0.75 * dmu * x2 * x3 - mu_plus * x1**2 * x2 * x3
              - 0.5 * x2 * x3 * (mu_plus * (1.0 - x3**2) + mu_minus * (x3**2 - 2.0 * x1**2)))
        f2 = (-a * x1 * x2**2 * x3 - 0.75 * dmu * x1 * x3 - mu_plus * x1 * x2**2 * x3
              - 0.5 * x1 * x3 * (mu_plus * (1.0 - x3**2) + mu_minus * (x3**2 - 2.0 * x2**2)))
        f3 = (-a * x1 * x2 * x3**2 - 0.5 * dmu * x1 * x2 + 2.0 * mu_plus * x1 * x2 * x3**2
              - mu_minus * x1 * x2 * (x3**2 - x1**2 - x2**2))
        return np.stack([f1, f2, f3], axis=1)

    return ProblemSpec(
        name="example4",
        dim=d,
        domain=Box([-2.0] * 3, [2.0] * 3),
        geometry=Sphere(1.0),
        mu_minus=mu_minus,
        mu_plus=mu_plus,
        body_force=body_force,
        interfacial_force=derive_traction_force(exact, mu_minus, mu_plus),
        boundary_velocity=lambda x: u(x, +1),
        exact=exact,
        printed_interfacial_force=printed_force,
        pressure_anchor=(np.array([1.5, 0.0, 0.0]), 0.0),
        description="3D, unit sphere in [-2,2]^3, (mu-,mu+)=(1,0.1), polynomial [p]",
    )


def example5() -> ProblemSpec:
    """2D three-petal flower interface in a disk, surface-tension force, no exact fields."""
    d = 2
    geometry = PolarFlower(base=1.0, amplitude=0.2, lobes=3)
    gamma = 1.0

    def interfacial_force(iface: InterfacePoints):
        if iface.curvature is None:
            raise ValueError("flower force needs curvatures on the interface points")
        return -gamma * iface.curvature[:, None] * iface.normal

    return ProblemSpec(
        name="example5",
        dim=d,
        domain=Ball([0.0, 0.0], 2.0),
        geometry=geometry,
        mu_minus=10.0,
        mu_plus=1.0,
        body_force=lambda x, side: np.zeros_like(x),
        interfacial_force=interfacial_force,
        boundary_velocity=lambda x: np.zeros_like(x),
        exact=None,
        pressure_anchor=(np.array([1.5, 0.0]), 0.0),
        description="2D, three-petal flower in a radius-2 disk, (mu-,mu+)=(10,1), F=-kappa n",
    )


CATALOG = {
    "example1": example1,
    "example2": example2,
    "example3": example3,
    "example4": example4,
    "example5": example5,
}

EXAMPLE2_VARIANTS = {
    "example2": (1.0, 0.1),
    "example2-lowhigh": (1e-3, 1.0),
    "example2-highlow": (1.0, 1e-3),
}


def get_problem(name: str) -> ProblemSpec:
    """Problem by catalog name; example2-lowhigh / example2-highlow select
    the high-contrast viscosity variants."""
    if name in EXAMPLE2_VARIANTS:
        mu_minus, mu_plus = EXAMPLE2_VARIANTS[name]
        spec = example2(mu_minus, mu_plus)
        return spec if name == "example2" else ProblemSpec(
            **{**spec.__dict__, "name": name})
    if name not in CATALOG:
        raise KeyError(f"unknown problem {name!r}")
    return CATALOG[name]()


def list_problems():
    """Catalog rows: (name, dim, viscosities, has_exact, description)."""
    rows = []
    for name, factory in CATALOG.items():
        spec = factory()
        mus = f"(mu-,mu+)=({spec.mu_minus:g},{spec.mu_plus:g})"
        if name == "example2":
            pairs = ", ".join(f"({a:g},{b:g})" for a, b in EXAMPLE2_VARIANTS.values())
            mus = f"(mu-,mu+) in {{{pairs}}} via example2[-lowhigh|-highlow]"
        rows.append((name, spec.dim, mus, spec.exact is not None, spec.description))
    return rows
