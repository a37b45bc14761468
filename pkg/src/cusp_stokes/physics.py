"""Residual families, loss assembly, and Jacobians.

The four residual families are

  momentum    -dP/dx_k (x, I(x)) + mu * (lap_x U_k + 2 grad|phi| . grad_x dU_k/dz
                + ||grad|phi|||^2 d2U_k/dz2 + dU_k/dz lap|phi|) + g_k
  divergence  div_x U + dU/dz . grad|phi|
  traction    -(P(x,+1) - P(x,-1)) n_k + D_k U + F_k
  boundary    U_k(x_B, |phi|(x_B)) - u_bk

with D_k U = [mu](grad_x U_k . n) + (mu+ + mu-) dU_k/dz ||grad phi||
           + [mu](dU/dx_k . n) + (mu+ + mu-)(dU/dz . n) dphi/dx_k,

all velocity jets taken at the augmented input z (z = 0 on the
interface) and pressure at y = +-1. Residual entries are scaled by
sqrt(1/M_I), sqrt(c_gamma/M_gamma), sqrt(c_B/M_B) so the squared norm of
the assembled vector equals the training loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import network
from .geometry import InterfacePoints
from .sampling import TrainingSet

CHUNK = 2048


@dataclass
class VelocityJets:
    """The velocity-network jet entries consumed by the residuals."""

    value: np.ndarray | None      # (m, d)
    grad_x: np.ndarray | None     # (m, d, d): dU_k/dx_j
    dz: np.ndarray | None         # (m, d)
    lap_x: np.ndarray | None      # (m, d)
    grad_dz: np.ndarray | None    # (m, d, d): d2U_k/(dx_i dz)
    dzz: np.ndarray | None        # (m, d)


class NetworkJets:
    """Jet source backed by the pressure/velocity sub-network pair."""

    def __init__(self, nets: network.NetPair):
        self.nets = nets
        self.d = nets.velocity.n_out

    @staticmethod
    def _aug(x, z):
        z = np.broadcast_to(np.asarray(z, dtype=float), (x.shape[0],))
        return np.concatenate([x, z[:, None]], axis=1)

    def pressure_grad_x(self, x, side):
        tape = network.forward_tape(self.nets.pressure, self._aug(x, side), order=1)
        return tape.grad[:, 0, :self.d]

    def pressure_interface_values(self, x):
        plus = network.forward(self.nets.pressure, self._aug(x, 1.0))[:, 0]
        minus = network.forward(self.nets.pressure, self._aug(x, -1.0))[:, 0]
        return plus, minus

    def velocity_interior_jets(self, x, phi_a, side) -> VelocityJets:
        d = self.d
        tape = network.forward_tape(self.nets.velocity, self._aug(x, phi_a), order=2)
        h = tape.hess
        return VelocityJets(
            value=tape.value,
            grad_x=tape.grad[:, :, :d],
            dz=tape.grad[:, :, d],
            lap_x=np.trace(h[:, :, :d, :d], axis1=2, axis2=3),
            grad_dz=h[:, :, :d, d],
            dzz=h[:, :, d, d],
        )

    def velocity_interface_grad(self, x, normal, grad_phi_norm):
        d = self.d
        tape = network.forward_tape(self.nets.velocity, self._aug(x, 0.0), order=1)
        return tape.grad[:, :, :d], tape.grad[:, :, d]

    def velocity_values(self, x, phi_a):
        return network.forward(self.nets.velocity, self._aug(x, phi_a))


class ExactFieldJets:
    """Jet source backed by exact one-sided fields.

    Off the interface the augmented function is taken independent of z,
    so the jets reduce to the one-sided derivatives. On the interface the
    x-gradient is the two-side average and the z-derivative carries the
    normal jump, split as grad u_k^+/- = grad_x U_k -/+ dU_k/dz grad phi.
    """

    def __init__(self, fields, dim):
        self.fields = fields
        self.d = dim

    def pressure_grad_x(self, x, side):
        return self.fields.pressure_grad(x, side)

    def pressure_interface_values(self, x):
        return self.fields.pressure(x, +1), self.fields.pressure(x, -1)

    def velocity_interior_jets(self, x, phi_a, side) -> VelocityJets:
        m, d = x.shape
        return VelocityJets(
            value=self.fields.velocity(x, side),
            grad_x=self.fields.velocity_grad(x, side),
            dz=np.zeros((m, d)),
            lap_x=self.fields.velocity_laplacian(x, side),
            grad_dz=np.zeros((m, d, d)),
            dzz=np.zeros((m, d)),
        )

    def velocity_interface_grad(self, x, normal, grad_phi_norm):
        gp = self.fields.velocity_grad(x, +1)
        gm = self.fields.velocity_grad(x, -1)
        grad_x = 0.5 * (gp + gm)
        jump_n = np.einsum("mkj,mj->mk", gp - gm, normal, optimize=True)
        dz = jump_n / (2.0 * grad_phi_norm[:, None])
        return grad_x, dz

    def velocity_values(self, x, phi_a):
        # boundary points lie in the outer region for all shipped domains
        return self.fields.velocity(x, +1)


def momentum_from_jets(p_grad_x, jets: VelocityJets, gpa, lpa, mu, g):
    lu = jets.lap_x + 2.0 * np.einsum("mi,mki->mk", gpa, jets.grad_dz, optimize=True)
    lu += np.sum(gpa * gpa, axis=1)[:, None] * jets.dzz
    lu += jets.dz * lpa[:, None]
    return -p_grad_x + mu[:, None] * lu + g


def divergence_from_jets(jets: VelocityJets, gpa):
    div = np.einsum("mkk->m", jets.grad_x, optimize=True)
    return div + np.sum(jets.dz * gpa, axis=1)


def traction_from_jets(p_plus, p_minus, grad_x, dz, normal, grad_phi_norm,
                       mu_minus, mu_plus, force):
    dmu = mu_plus - mu_minus
    smu = mu_plus + mu_minus
    gp_vec = normal * grad_phi_norm[:, None]
    dk = dmu * np.einsum("mki,mi->mk", grad_x, normal, optimize=True)
    dk += smu * dz * grad_phi_norm[:, None]
    dk += dmu * np.einsum("mjk,mj->mk", grad_x, normal, optimize=True)
    dk += smu * np.sum(dz * normal, axis=1)[:, None] * gp_vec
    return -(p_plus - p_minus)[:, None] * normal + dk + force


def _interior_context(problem, x):
    geom = problem.geometry
    p = geom.phi(x)
    side = np.sign(p)
    gpa = side[:, None] * geom.grad_phi(x)
    lpa = side * geom.lap_phi(x)
    return np.abs(p), side, gpa, lpa


def momentum_residual(source, x, problem):
    """Interior momentum residual, d entries per point."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    phi_a, side, gpa, lpa = _interior_context(problem, x)
    mu = np.where(side < 0, problem.mu_minus, problem.mu_plus)
    g = problem.body_force(x, side)
    p_grad = source.pressure_grad_x(x, side)
    jets = source.velocity_interior_jets(x, phi_a, side)
    return momentum_from_jets(p_grad, jets, gpa, lpa, mu, g)


def divergence_residual(source, x, problem):
    """Interior incompressibility residual, one entry per point."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    phi_a, side, gpa, _ = _interior_context(problem, x)
    jets = source.velocity_interior_jets(x, phi_a, side)
    return divergence_from_jets(jets, gpa)


def traction_residual(source, iface: InterfacePoints, problem, force=None):
    """Interface traction-balance residual, d entries per point."""
    x = iface.position
    if force is None:
        force = problem.interfacial_force(iface)
    p_plus, p_minus = source.pressure_interface_values(x)
    grad_x, dz = source.velocity_interface_grad(x, iface.normal, iface.grad_phi_norm)
    return traction_from_jets(p_plus, p_minus, grad_x, dz, iface.normal,
                              iface.grad_phi_norm, problem.mu_minus,
                              problem.mu_plus, force)


def boundary_residual(source, x_b, problem):
    """Boundary velocity residual, d entries per point."""
    x_b = np.atleast_2d(np.asarray(x_b, dtype=float))
    phi_a = np.abs(problem.geometry.phi(x_b))
    return source.velocity_values(x_b, phi_a) - problem.boundary_velocity(x_b)


@dataclass
class LossBreakdown:
    total: float
    interior: float
    divergence: float
    interface: float
    boundary: float
    anchor: float = 0.0


@dataclass
class ResidualVector:
    """Flat scaled residual vector whose squared norm is the loss."""

    entries: np.ndarray
    m_interior: int
    m_interface: int
    m_boundary: int
    dim: int
    has_anchor: bool = False

    @property
    def slices(self):
        d, mi, mg, mb = self.dim, self.m_interior, self.m_interface, self.m_boundary
        a = mi * d
        b = a + mi
        c = b + mg * d
        e = c + mb * d
        out = {
            "momentum": slice(0, a),
            "divergence": slice(a, b),
            "traction": slice(b, c),
            "boundary": slice(c, e),
        }
        if self.has_anchor:
            out["anchor"] = slice(e, e + 1)
        return out

    def breakdown(self) -> LossBreakdown:
        s = self.slices
        parts = {k: float(np.sum(self.entries[v] ** 2)) for k, v in s.items()}
        return LossBreakdown(
            total=sum(parts.values()),
            interior=parts["momentum"],
            divergence=parts["divergence"],
            interface=parts["traction"],
            boundary=parts["boundary"],
            anchor=parts.get("anchor", 0.0),
        )

    @property
    def loss(self) -> float:
        return float(np.sum(self.entries**2))


class ResidualAssembler:
    """Precomputed features + assembly of residuals and Jacobians.

    Bound to one problem and one training set; all geometric features
    and data callbacks are evaluated once at construction.
    """

    def __init__(self, problem, training_set: TrainingSet,
                 c_gamma: float = 1.0, c_b: float = 1.0):
        self.problem = problem
        self.ts = training_set
        d = problem.dim
        self.d = d
        ti, tg, tb = training_set.interior, training_set.interface, training_set.boundary

        self.xi = ti.position
        self.side = ti.side
        self.phi_a = ti.phi_a
        self.gpa = ti.grad_phi_a
        self.lpa = ti.lap_phi_a
        self.gpa_norm2 = np.sum(self.gpa**2, axis=1)
        self.mu = np.where(ti.side < 0, problem.mu_minus, problem.mu_plus)
        self.g = problem.body_force(ti.position, ti.side)

        self.xg = tg.position
        self.normal = tg.normal
        self.gpn = tg.grad_phi_norm
        self.gp_vec = tg.normal * tg.grad_phi_norm[:, None]
        self.force = problem.interfacial_force(tg)

        self.xb = tb.position
        self.phi_a_b = tb.phi_a
        self.u_b = problem.boundary_velocity(tb.position)

        mi, mg, mb = (training_set.m_interior, training_set.m_interface,
                      training_set.m_boundary)
        self.counts = (mi, mg, mb)
        self.s_i = np.sqrt(1.0 / mi)
        self.s_g = np.sqrt(c_gamma / mg)
        self.s_b = np.sqrt(c_b / mb)
        # the pressure is only determined up to a constant by the four
        # residual families; one anchor row pins it at a reference point
        self.anchor = getattr(problem, "pressure_anchor", None)
        self.n_rows = mi * (d + 1) + mg * d + mb * d + (1 if self.anchor else 0)
        if self.anchor is not None:
            x_ref = np.asarray(self.anchor[0], dtype=float)
            self.aug_anchor = np.concatenate([x_ref, [1.0]])[None, :]
            self.anchor_value = float(self.anchor[1])

        self.aug_u_int = np.concatenate([self.xi, self.phi_a[:, None]], axis=1)
        self.aug_p_int = np.concatenate([self.xi, self.side[:, None]], axis=1)
        self.aug_u_if = np.concatenate([self.xg, np.zeros((mg, 1))], axis=1)
        self.aug_p_plus = np.concatenate([self.xg, np.ones((mg, 1))], axis=1)
        self.aug_p_minus = np.concatenate([self.xg, -np.ones((mg, 1))], axis=1)
        self.aug_u_bnd = np.concatenate([self.xb, self.phi_a_b[:, None]], axis=1)

        # row cotangents depend on features only, never on parameters
        self._cot_interior = [self._interior_cotangents(lo, min(lo + CHUNK, mi))
                              for lo in range(0, mi, CHUNK)]
        self._cot_traction = [self._traction_cotangents(lo, min(lo + CHUNK, mg))
                              for lo in range(0, mg, CHUNK)]
        self._cot_boundary = [self._boundary_cotangents(lo, min(lo + CHUNK, mb))
                              for lo in range(0, mb, CHUNK)]

    # ---------------- residuals ----------------

    def residual_vector(self, nets: network.NetPair) -> ResidualVector:
        d = self.d
        mi, mg, mb = self.counts

        u_tape = network.forward_tape(nets.velocity, self.aug_u_int, order=2)
        p_tape = network.forward_tape(nets.pressure, self.aug_p_int, order=1)
        jets = self._velocity_jets_from_tape(u_tape)
        r_mom = momentum_from_jets(p_tape.grad[:, 0, :d], jets, self.gpa,
                                   self.lpa, self.mu, self.g) * self.s_i
        r_div = divergence_from_jets(jets, self.gpa) * self.s_i

        p_plus = network.forward(nets.pressure, self.aug_p_plus)[:, 0]
        p_minus = network.forward(nets.pressure, self.aug_p_minus)[:, 0]
        g_tape = network.forward_tape(nets.velocity, self.aug_u_if, order=1)
        r_tr = traction_from_jets(p_plus, p_minus, g_tape.grad[:, :, :d],
                                  g_tape.grad[:, :, d], self.normal, self.gpn,
                                  self.problem.mu_minus, self.problem.mu_plus,
                                  self.force) * self.s_g

        u_bnd = network.forward(nets.velocity, self.aug_u_bnd)
        r_b = (u_bnd - self.u_b) * self.s_b

        parts = [r_mom.ravel(), r_div, r_tr.ravel(), r_b.ravel()]
        if self.anchor is not None:
            p_ref = network.forward(nets.pressure, self.aug_anchor)[0, 0]
            parts.append(np.array([p_ref - self.anchor_value]))
        entries = np.concatenate(parts)
        return ResidualVector(entries=entries, m_interior=mi, m_interface=mg,
                              m_boundary=mb, dim=d, has_anchor=self.anchor is not None)

    def _velocity_jets_from_tape(self, tape) -> VelocityJets:
        d = self.d
        h = tape.hess
        return VelocityJets(
            value=tape.value,
            grad_x=tape.grad[:, :, :d],
            dz=tape.grad[:, :, d],
            lap_x=np.trace(h[:, :, :d, :d], axis1=2, axis2=3),
            grad_dz=h[:, :, :d, d],
            dzz=h[:, :, d, d],
        )

    # ---------------- cotangents ----------------

    def _interior_cotangents(self, lo, hi):
        """Row cotangents for momentum rows k=0..d-1 plus the divergence row."""
        d = self.d
        m = hi - lo
        n0 = d + 1
        mu = self.mu[lo:hi]
        gpa = self.gpa[lo:hi]
        lpa = self.lpa[lo:hi]
        gn2 = self.gpa_norm2[lo:hi]

        bg_u = np.zeros((d + 1, m, d, n0))
        bh_u = np.zeros((d + 1, m, d, n0, n0))
        for k in range(d):
            c = self.s_i * mu
            for i in range(d):
                bh_u[k, :, k, i, i] = c
                bh_u[k, :, k, i, d] = c * gpa[:, i]
                bh_u[k, :, k, d, i] = c * gpa[:, i]
            bh_u[k, :, k, d, d] = c * gn2
            bg_u[k, :, k, d] = c * lpa
        for j in range(d):
            bg_u[d, :, j, j] = self.s_i
            bg_u[d, :, j, d] = self.s_i * gpa[:, j]

        bg_p = np.zeros((d, m, 1, n0))
        for k in range(d):
            bg_p[k, :, 0, k] = -self.s_i
        return bg_p, bg_u, bh_u

    def _traction_cotangents(self, lo, hi):
        d = self.d
        m = hi - lo
        n0 = d + 1
        n = self.normal[lo:hi]
        gpn = self.gpn[lo:hi]
        gp_vec = self.gp_vec[lo:hi]
        dmu = self.problem.mu_plus - self.problem.mu_minus
        smu = self.problem.mu_plus + self.problem.mu_minus

        bg_u = np.zeros((d, m, d, n0))
        for k in range(d):
            for i in range(d):
                bg_u[k, :, k, i] += self.s_g * dmu * n[:, i]
            bg_u[k, :, k, d] += self.s_g * smu * gpn
            for j in range(d):
                bg_u[k, :, j, k] += self.s_g * dmu * n[:, j]
                bg_u[k, :, j, d] += self.s_g * smu * n[:, j] * gp_vec[:, k]

        bv_plus = np.zeros((d, m, 1))
        bv_minus = np.zeros((d, m, 1))
        for k in range(d):
            bv_plus[k, :, 0] = -self.s_g * n[:, k]
            bv_minus[k, :, 0] = self.s_g * n[:, k]
        return bv_plus, bv_minus, bg_u

    def _boundary_cotangents(self, lo, hi):
        d = self.d
        m = hi - lo
        bv_u = np.zeros((d, m, d))
        for k in range(d):
            bv_u[k, :, k] = self.s_b
        return bv_u

    # ---------------- Jacobian ----------------

    def jacobian(self, nets: network.NetPair) -> np.ndarray:
        """Dense Jacobian of the scaled residual vector, columns [theta_p | theta_u]."""
        d = self.d
        mi, mg, mb = self.counts
        n_p, n_u = nets.pressure.size, nets.velocity.size
        J = np.zeros((self.n_rows, n_p + n_u))
        rv = ResidualVector(np.empty(0), mi, mg, mb, d, has_anchor=self.anchor is not None)
        sl = rv.slices

        def fill(dst_slice, q_rows, jp, ju):
            # (q, m, n) blocks -> point-major rows within the family
            if jp is not None:
                J[dst_slice, :n_p] = jp.transpose(1, 0, 2).reshape(-1, n_p)
            if ju is not None:
                J[dst_slice, n_p:] = ju.transpose(1, 0, 2).reshape(-1, n_u)

        for ci, lo in enumerate(range(0, mi, CHUNK)):
            hi = min(lo + CHUNK, mi)
            bg_p, bg_u, bh_u = self._cot_interior[ci]
            u_tape = network.forward_tape(nets.velocity, self.aug_u_int[lo:hi], order=2)
            p_tape = network.forward_tape(nets.pressure, self.aug_p_int[lo:hi], order=1)
            ju = network.vjp_params(u_tape, bar_grad=bg_u, bar_hess=bh_u)
            jp = network.vjp_params(p_tape, bar_grad=bg_p)
            mom = slice(sl["momentum"].start + lo * d, sl["momentum"].start + hi * d)
            div = slice(sl["divergence"].start + lo, sl["divergence"].start + hi)
            fill(mom, d, jp, ju[:d])
            fill(div, 1, None, ju[d:])

        for ci, lo in enumerate(range(0, mg, CHUNK)):
            hi = min(lo + CHUNK, mg)
            bv_plus, bv_minus, bg_u = self._cot_traction[ci]
            plus_tape = network.forward_tape(nets.pressure, self.aug_p_plus[lo:hi], order=0)
            minus_tape = network.forward_tape(nets.pressure, self.aug_p_minus[lo:hi], order=0)
            g_tape = network.forward_tape(nets.velocity, self.aug_u_if[lo:hi], order=1)
            jp = (network.vjp_params(plus_tape, bar_value=bv_plus)
                  + network.vjp_params(minus_tape, bar_value=bv_minus))
            ju = network.vjp_params(g_tape, bar_grad=bg_u)
            tr = slice(sl["traction"].start + lo * d, sl["traction"].start + hi * d)
            fill(tr, d, jp, ju)

        for ci, lo in enumerate(range(0, mb, CHUNK)):
            hi = min(lo + CHUNK, mb)
            bv_u = self._cot_boundary[ci]
            b_tape = network.forward_tape(nets.velocity, self.aug_u_bnd[lo:hi], order=0)
            ju = network.vjp_params(b_tape, bar_value=bv_u)
            bd = slice(sl["boundary"].start + lo * d, sl["boundary"].start + hi * d)
            fill(bd, d, None, ju)

        if self.anchor is not None:
            a_tape = network.forward_tape(nets.pressure, self.aug_anchor, order=0)
            jp = network.vjp_params(a_tape, bar_value=np.ones((1, 1, 1)))
            J[sl["anchor"], :n_p] = jp[0]

        return J

    def normal_equations(self, nets: network.NetPair):
        """Accumulate JtJ and Jtr without materializing the full Jacobian.

        Returns (JtJ, Jtr, residual_vector). Accumulation happens in a
        fixed chunk order so results are deterministic.
        """
        d = self.d
        mi, mg, mb = self.counts
        n_p, n_u = nets.pressure.size, nets.velocity.size
        rv = self.residual_vector(nets)
        sl = rv.slices
        app = np.zeros((n_p, n_p))
        apu = np.zeros((n_p, n_u))
        auu = np.zeros((n_u, n_u))
        bp = np.zeros(n_p)
        bu = np.zeros(n_u)

        def rows(block, q, m):
            return block.transpose(1, 0, 2).reshape(q * m, -1)

        for ci, lo in enumerate(range(0, mi, CHUNK)):
            hi = min(lo + CHUNK, mi)
            m = hi - lo
            bg_p, bg_u, bh_u = self._cot_interior[ci]
            u_tape = network.forward_tape(nets.velocity, self.aug_u_int[lo:hi], order=2)
            p_tape = network.forward_tape(nets.pressure, self.aug_p_int[lo:hi], order=1)
            ju = network.vjp_params(u_tape, bar_grad=bg_u, bar_hess=bh_u)
            jp = rows(network.vjp_params(p_tape, bar_grad=bg_p), d, m)
            ju_mom = rows(ju[:d], d, m)
            ju_div = ju[d]
            r_mom = rv.entries[sl["momentum"]][lo * d:hi * d]
            r_div = rv.entries[sl["divergence"]][lo:hi]
            app += jp.T @ jp
            apu += jp.T @ ju_mom
            auu += ju_mom.T @ ju_mom
            auu += ju_div.T @ ju_div
            bp += jp.T @ r_mom
            bu += ju_mom.T @ r_mom
            bu += ju_div.T @ r_div

        for ci, lo in enumerate(range(0, mg, CHUNK)):
            hi = min(lo + CHUNK, mg)
            m = hi - lo
            bv_plus, bv_minus, bg_u = self._cot_traction[ci]
            plus_tape = network.forward_tape(nets.pressure, self.aug_p_plus[lo:hi], order=0)
            minus_tape = network.forward_tape(nets.pressure, self.aug_p_minus[lo:hi], order=0)
            g_tape = network.forward_tape(nets.velocity, self.aug_u_if[lo:hi], order=1)
            jp = rows(network.vjp_params(plus_tape, bar_value=bv_plus)
                      + network.vjp_params(minus_tape, bar_value=bv_minus), d, m)
            ju = rows(network.vjp_params(g_tape, bar_grad=bg_u), d, m)
            r_tr = rv.entries[sl["traction"]][lo * d:hi * d]
            app += jp.T @ jp
            apu += jp.T @ ju
            auu += ju.T @ ju
            bp += jp.T @ r_tr
            bu += ju.T @ r_tr

        for ci, lo in enumerate(range(0, mb, CHUNK)):
            hi = min(lo + CHUNK, mb)
            m = hi - lo
            bv_u = self._cot_boundary[ci]
            b_tape = network.forward_tape(nets.velocity, self.aug_u_bnd[lo:hi], order=0)
            ju = rows(network.vjp_params(b_tape, bar_value=bv_u), d, m)
            r_b = rv.entries[sl["boundary"]][lo * d:hi * d]
            auu += ju.T @ ju
            bu += ju.T @ r_b

        if self.anchor is not None:
            a_tape = network.forward_tape(nets.pressure, self.aug_anchor, order=0)
            ja = network.vjp_params(a_tape, bar_value=np.ones((1, 1, 1)))[0]
            r_a = rv.entries[sl["anchor"]]
            app += ja.T @ ja
            bp += ja.T @ r_a

        jtj = np.block([[app, apu], [apu.T, auu]])
        jtr = np.concatenate([bp, bu])
        return jtj, jtr, rv


def assemble(source, training_set: TrainingSet, problem):
    """Scaled residual vector and loss breakdown for any jet source.

    For a NetPair this delegates to the fused assembler path; other jet
    sources (exact-field adapters, test stubs) go through the pointwise
    residual operations.
    """
    if isinstance(source, network.NetPair):
        rv = ResidualAssembler(problem, training_set).residual_vector(source)
        return rv, rv.breakdown()
    d = problem.dim
    ti, tg, tb = training_set.interior, training_set.interface, training_set.boundary
    mi, mg, mb = (training_set.m_interior, training_set.m_interface,
                  training_set.m_boundary)
    s_i, s_g, s_b = np.sqrt(1.0 / mi), np.sqrt(1.0 / mg), np.sqrt(1.0 / mb)
    r_mom = momentum_residual(source, ti.position, problem) * s_i
    r_div = divergence_residual(source, ti.position, problem) * s_i
    r_tr = traction_residual(source, tg, problem) * s_g
    r_b = boundary_residual(source, tb.position, problem) * s_b
    parts = [r_mom.ravel(), r_div, r_tr.ravel(), r_b.ravel()]
    anchor = getattr(problem, "pressure_anchor", None)
    if anchor is not None:
        x_ref = np.asarray(anchor[0], dtype=float)[None, :]
        p_ref, _ = source.pressure_interface_values(x_ref)
        parts.append(np.array([p_ref[0] - anchor[1]]))
    entries = np.concatenate(parts)
    rv = ResidualVector(entries=entries, m_interior=mi, m_interface=mg,
                        m_boundary=mb, dim=d, has_anchor=anchor is not None)
    return rv, rv.breakdown()


def assemble_jacobian(nets: network.NetPair, training_set: TrainingSet, problem):
    """Dense Jacobian of the scaled residual vector (rows match assemble)."""
    return ResidualAssembler(problem, training_set).jacobian(nets)
