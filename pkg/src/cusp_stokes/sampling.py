"""Training and test point generation.

All samplers are driven by numpy Generators so a fixed seed reproduces a
training set bit-exactly. Interior and boundary points come from Latin
hypercube sampling; interface points come from the geometry
parameterization (Latin hypercube in the angle in 2D, Fibonacci lattice
on the sphere).
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .geometry import InterfacePoints, LevelSetGeometry, parameterize_interface

MIN_INTERFACE_CLEARANCE = 1e-8


class SamplingStalledError(RuntimeError):
    """Rejection sampling accepted fewer than 1% of draws."""


class IndivisibleCountError(ValueError):
    """Boundary point count does not divide evenly over the faces."""


class Box:
    """Axis-aligned box domain [lo_i, hi_i] per axis."""

    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        if self.lo.shape != self.hi.shape or np.any(self.hi <= self.lo):
            raise ValueError("box needs lo < hi per axis")

    @property
    def dim(self):
        return self.lo.size

    def bounding_box(self):
        return self.lo, self.hi

    def contains(self, x):
        return np.all((x >= self.lo) & (x <= self.hi), axis=-1)


class Ball:
    """Ball domain ||x - center|| <= radius."""

    def __init__(self, center, radius):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @property
    def dim(self):
        return self.center.size

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def contains(self, x):
        return np.sum((x - self.center) ** 2, axis=-1) <= self.radius**2


@dataclass
class InteriorSet:
    """Interior collocation points with cached level-set features."""

    position: np.ndarray      # (m, d)
    side: np.ndarray          # (m,), -1 or +1
    phi: np.ndarray           # (m,)
    phi_a: np.ndarray         # (m,)
    grad_phi_a: np.ndarray    # (m, d)
    lap_phi_a: np.ndarray     # (m,)


@dataclass
class BoundarySet:
    position: np.ndarray  # (m, d)
    phi_a: np.ndarray     # (m,)


@dataclass
class TrainingSet:
    interior: InteriorSet
    interface: InterfacePoints
    boundary: BoundarySet
    seed: int

    @property
    def m_interior(self):
        return self.interior.position.shape[0]

    @property
    def m_interface(self):
        return len(self.interface)

    @property
    def m_boundary(self):
        return self.boundary.position.shape[0]

    @property
    def total(self):
        return self.m_interior + self.m_interface + self.m_boundary

    def to_csv(self) -> str:
        """One row per point: coordinates, class, side, phi."""
        d = self.interior.position.shape[1]
        buf = io.StringIO()
        cols = ",".join(f"x{i + 1}" for i in range(d))
        buf.write(f"{cols},class,side,phi\n")

        def emit(pos, label, side, phi):
            for i in range(pos.shape[0]):
                coords = ",".join(f"{c:.17g}" for c in pos[i])
                buf.write(f"{coords},{label},{side[i]:.0f},{phi[i]:.17g}\n")

        emit(self.interior.position, "interior", self.interior.side, self.interior.phi)
        m_g = len(self.interface)
        emit(self.interface.position, "interface", np.zeros(m_g), np.zeros(m_g))
        m_b = self.boundary.position.shape[0]
        emit(self.boundary.position, "boundary", np.ones(m_b), np.zeros(m_b))
        return buf.getvalue()


def latin_hypercube(n: int, bounds, rng: np.random.Generator) -> np.ndarray:
    """n points in the box given by bounds, one per stratum per axis.

    bounds is a pair (lo, hi) of length-d arrays.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    lo, hi = (np.asarray(b, dtype=float) for b in bounds)
    d = lo.size
    u = np.empty((n, d))
    for j in range(d):
        u[:, j] = rng.permutation(n) + rng.random(n)
    return lo + u / n * (hi - lo)


def sample_interior(domain, geom: LevelSetGeometry, m_i: int, rng: np.random.Generator) -> InteriorSet:
    """m_i points in the domain off the interface, with cached features.

    Latin hypercube over the bounding box, rejecting points outside the
    domain or within 1e-8 of the interface, redrawn until filled.
    """
    if m_i < 1:
        raise ValueError("m_i must be >= 1")
    lo, hi = domain.bounding_box()
    kept = []
    accepted = 0
    drawn = 0
    while accepted < m_i:
        batch = latin_hypercube(m_i - accepted, (lo, hi), rng)
        drawn += batch.shape[0]
        ok = domain.contains(batch)
        ok &= np.abs(geom.phi(batch)) >= MIN_INTERFACE_CLEARANCE
        batch = batch[ok]
        kept.append(batch)
        accepted += batch.shape[0]
        if drawn >= 100 * m_i and accepted < m_i:
            # still short after 100*m_i draws means acceptance rate < 1%
            raise SamplingStalledError(
                f"accepted {accepted} of {drawn} interior draws")
    pos = np.concatenate(kept, axis=0)[:m_i]
    p = geom.phi(pos)
    s = np.sign(p)
    return InteriorSet(
        position=pos,
        side=s,
        phi=p,
        phi_a=np.abs(p),
        grad_phi_a=s[:, None] * geom.grad_phi(pos),
        lap_phi_a=s * geom.lap_phi(pos),
    )


def sample_boundary(domain, m_b: int, rng: np.random.Generator) -> np.ndarray:
    """m_b points on the domain boundary.

    Boxes get equal per-face counts (Latin hypercube within each face),
    balls get stratified angles.
    """
    if isinstance(domain, Box):
        d = domain.dim
        faces = 2 * d
        if m_b % faces:
            raise IndivisibleCountError(f"{m_b} boundary points not divisible by {faces} faces")
        per_face = m_b // faces
        chunks = []
        for axis in range(d):
            for val in (domain.lo[axis], domain.hi[axis]):
                free = [j for j in range(d) if j != axis]
                pts = np.empty((per_face, d))
                pts[:, axis] = val
                if free:
                    sub = latin_hypercube(
                        per_face, (domain.lo[free], domain.hi[free]), rng)
                    pts[:, free] = sub
                chunks.append(pts)
        return np.concatenate(chunks, axis=0)
    if isinstance(domain, Ball):
        if domain.dim == 2:
            alpha = latin_hypercube(m_b, ([0.0], [2.0 * np.pi]), rng)[:, 0]
            circle = np.stack([np.cos(alpha), np.sin(alpha)], axis=1)
            return domain.center + domain.radius * circle
        # 3D ball boundary: stratify z and the azimuth (area-uniform)
        u = latin_hypercube(m_b, ([0.0, 0.0], [1.0, 2.0 * np.pi]), rng)
        z = 1.0 - 2.0 * u[:, 0]
        s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        sphere = np.stack([s * np.cos(u[:, 1]), s * np.sin(u[:, 1]), z], axis=1)
        return domain.center + domain.radius * sphere
    raise TypeError(f"unknown domain {type(domain).__name__}")


def counts_from_m0(m0: int) -> tuple[int, int, int]:
    """2D grid-parameter count map: (m0^2, 3*m0, 4*m0)."""
    return m0 * m0, 3 * m0, 4 * m0


def build_training_set(problem, *, m0=None, sizes=None, seed=0) -> TrainingSet:
    """Full labeled training set for a problem.

    Either m0 (2D count map m_i = m0^2, m_gamma = 3*m0, m_b = 4*m0) or
    explicit sizes (m_i, m_gamma, m_b) must be given.
    """
    if (m0 is None) == (sizes is None):
        raise ValueError("give exactly one of m0 or sizes")
    if m0 is not None:
        if problem.dim != 2:
            raise ValueError("the m0 count map is the 2D protocol")
        m_i, m_g, m_b = counts_from_m0(m0)
    else:
        m_i, m_g, m_b = sizes
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)]
    interior = sample_interior(problem.domain, problem.geometry, m_i, streams[0])
    interface = parameterize_interface(problem.geometry, count=m_g, rng=streams[1])
    bpos = sample_boundary(problem.domain, m_b, streams[2])
    boundary = BoundarySet(position=bpos, phi_a=np.abs(problem.geometry.phi(bpos)))
    return TrainingSet(interior=interior, interface=interface, boundary=boundary, seed=seed)


def build_test_set(problem, m_test: int, seed: int) -> InteriorSet:
    """Test points in the domain, labeled by side, off the interface tube.

    The seed must differ from the training seed; disjointness from the
    training coordinates is checked downstream before evaluation.
    """
    rng = np.random.default_rng(seed)
    return sample_interior(problem.domain, problem.geometry, m_test, rng)
