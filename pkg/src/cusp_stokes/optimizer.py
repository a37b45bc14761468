"""Full-batch Levenberg-Marquardt training loop.

One epoch is one damped Gauss-Newton step on the fixed training set:
solve (JtJ + nu I) delta = -Jt r, evaluate the gain ratio

    rho = (|r|^2 - |r_new|^2) / (delta . (nu delta - Jt r)),

accept the step and shrink nu by max(1/3, 1 - (2 rho - 1)^3) when
rho > 0, otherwise reject and double nu. The Jacobian products are
reused across rejected steps since the parameters did not move.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import network, physics

NU_MIN = 1e-12
NU_MAX = 1e12


class NonFiniteLossError(RuntimeError):
    """Training produced a non-finite loss."""


class FactorizationFailedError(RuntimeError):
    """The damped normal matrix could not be factorized."""


@dataclass
class TrainConfig:
    epsilon_theta: float = 1e-14
    epoch_max: int = 3000
    nu0: float | None = None     # default: 1e-3 * max diag(JtJ) at the start
    nu_min: float = NU_MIN
    nu_max: float = NU_MAX
    seed: int = 0

    def __post_init__(self):
        if self.epsilon_theta <= 0:
            raise ValueError("epsilon_theta must be positive")
        if self.epoch_max < 1:
            raise ValueError("epoch_max must be >= 1")


@dataclass
class EpochRecord:
    epoch: int
    total: float
    interior: float
    divergence: float
    interface: float
    boundary: float
    damping: float
    accepted: bool


@dataclass
class LMState:
    theta: np.ndarray
    nu: float
    epoch: int
    loss: float
    history: list = field(default_factory=list)
    best_theta: np.ndarray | None = None
    best_loss: float = np.inf
    # cached products at the current theta (invalidated on acceptance)
    _jtj: np.ndarray | None = None
    _jtr: np.ndarray | None = None
    _breakdown: physics.LossBreakdown | None = None


class NetworkObjective:
    """Residual/normal-equation view of a network pair on a training set."""

    def __init__(self, assembler: physics.ResidualAssembler, template: network.NetPair):
        self.assembler = assembler
        self.template = template

    def residuals(self, theta):
        nets = self.template.copy_with(theta)
        rv = self.assembler.residual_vector(nets)
        return rv.entries, rv.breakdown()

    def normal_system(self, theta):
        nets = self.template.copy_with(theta)
        jtj, jtr, rv = self.assembler.normal_equations(nets)
        return jtj, jtr, rv.entries, rv.breakdown()


class LinearObjective:
    """Least-squares toy |A theta - b|^2 used by the optimizer tests."""

    def __init__(self, a, b):
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)

    def residuals(self, theta):
        r = self.a @ theta - self.b
        loss = float(r @ r)
        return r, physics.LossBreakdown(loss, loss, 0.0, 0.0, 0.0)

    def normal_system(self, theta):
        r, bd = self.residuals(theta)
        return self.a.T @ self.a, self.a.T @ r, r, bd


def solve_damped(jtj, jtr, nu):
    """Solve (JtJ + nu I) delta = -Jtr by Cholesky factorization."""
    n = jtj.shape[0]
    a = jtj + nu * np.eye(n)
    try:
        cf = scipy.linalg.cho_factor(a, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise FactorizationFailedError(str(exc)) from exc
    return scipy.linalg.cho_solve(cf, -jtr, check_finite=False)


def lm_step(state: LMState, objective) -> tuple[LMState, bool]:
    """One Levenberg-Marquardt epoch; returns the new state and acceptance."""
    if state._jtj is None:
        jtj, jtr, r, bd = objective.normal_system(state.theta)
        state._jtj, state._jtr, state._breakdown = jtj, jtr, bd
        state.loss = bd.total
    jtj, jtr = state._jtj, state._jtr

    nu = state.nu
    delta = None
    for _ in range(10):
        try:
            delta = solve_damped(jtj, jtr, nu)
            break
        except FactorizationFailedError:
            nu = min(nu * 10.0, NU_MAX)
    if delta is None:
        state.nu = min(2.0 * nu, NU_MAX)
        state.epoch += 1
        state.history.append(EpochRecord(state.epoch, state.loss,
                                         state._breakdown.interior,
                                         state._breakdown.divergence,
                                         state._breakdown.interface,
                                         state._breakdown.boundary,
                                         state.nu, False))
        return state, False

    r_new, bd_new = objective.residuals(state.theta + delta)
    loss_new = bd_new.total
    denom = float(delta @ (nu * delta - jtr))
    rho = (state.loss - loss_new) / denom if denom > 0 else -1.0

    if rho > 0 and np.isfinite(loss_new):
        state.theta = state.theta + delta
        state.loss = loss_new
        state._breakdown = bd_new
        state._jtj = None
        state._jtr = None
        state.nu = float(np.clip(nu * max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3),
                                 NU_MIN, NU_MAX))
        accepted = True
    else:
        state.nu = float(np.clip(2.0 * nu, NU_MIN, NU_MAX))
        accepted = False
    state.epoch += 1
    bd = state._breakdown if state._breakdown is not None else bd_new
    state.history.append(EpochRecord(state.epoch, state.loss, bd.interior,
                                     bd.divergence, bd.interface, bd.boundary,
                                     state.nu, accepted))
    if state.loss < state.best_loss:
        state.best_loss = state.loss
        state.best_theta = state.theta.copy()
    return state, accepted


def train(problem, architecture, training_set, config: TrainConfig):
    """Train the sub-network pair; returns (nets, history).

    architecture is (np_width, nu_width, layers). Stops when the loss
    falls below epsilon_theta or after epoch_max epochs; the parameters
    with the best observed loss are returned.
    """
    np_width, nu_width, layers = architecture
    rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(1)[0])
    template = network.init_net_pair(problem.dim, np_width, nu_width, layers, rng)
    assembler = physics.ResidualAssembler(problem, training_set)
    objective = NetworkObjective(assembler, template)
    return _run(objective, template, config)


def _run(objective, template, config: TrainConfig):
    theta0 = template.flatten()
    jtj, jtr, r, bd = objective.normal_system(theta0)
    nu0 = config.nu0 if config.nu0 is not None else 1e-3 * float(np.max(np.diag(jtj)))
    state = LMState(theta=theta0, nu=float(np.clip(nu0, config.nu_min, config.nu_max)),
                    epoch=0, loss=bd.total)
    state._jtj, state._jtr, state._breakdown = jtj, jtr, bd
    state.best_loss = bd.total
    state.best_theta = theta0.copy()

    if not np.isfinite(state.loss):
        raise NonFiniteLossError(f"initial loss {state.loss}")
    for _ in range(config.epoch_max):
        state, _ = lm_step(state, objective)
        if not np.isfinite(state.loss):
            raise NonFiniteLossError(f"loss {state.loss} at epoch {state.epoch}")
        if state.loss < config.epsilon_theta:
            break
    nets = template.copy_with(state.best_theta)
    return nets, state.history


def history_csv(history) -> str:
    lines = ["epoch,total,interior,divergence,interface,boundary,damping,accepted"]
    for rec in history:
        lines.append(
            f"{rec.epoch},{rec.total:.17g},{rec.interior:.17g},{rec.divergence:.17g},"
            f"{rec.interface:.17g},{rec.boundary:.17g},{rec.damping:.17g},{int(rec.accepted)}")
    return "\n".join(lines) + "\n"
