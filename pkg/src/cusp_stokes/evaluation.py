"""Post-training error measurement, trial averaging, and field dumps."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from . import network, optimizer, physics, sampling
from .problems import NoExactSolutionError

EVAL_CHUNK = 65536


@dataclass
class ErrorReport:
    e_p_inf: float
    e_u_inf: float
    final_loss: float
    epochs_run: int
    trial_seed: int


@dataclass
class TrialsReport:
    reports: list
    mean_e_p: float
    mean_e_u: float
    mean_loss: float


def _predict(nets: network.NetPair, problem, x, side, phi_a):
    """Network pressure and velocity at test points (chunked, values only)."""
    m = x.shape[0]
    p = np.empty(m)
    u = np.empty((m, problem.dim))
    for lo in range(0, m, EVAL_CHUNK):
        hi = min(lo + EVAL_CHUNK, m)
        aug_p = np.concatenate([x[lo:hi], side[lo:hi, None]], axis=1)
        aug_u = np.concatenate([x[lo:hi], phi_a[lo:hi, None]], axis=1)
        p[lo:hi] = network.forward(nets.pressure, aug_p)[:, 0]
        u[lo:hi] = network.forward(nets.velocity, aug_u)
    return p, u


def check_disjoint(test_set: sampling.InteriorSet, training_set: sampling.TrainingSet):
    """Raise if any test coordinate row coincides with a training row."""
    train = np.concatenate([training_set.interior.position,
                            training_set.interface.position,
                            training_set.boundary.position], axis=0)
    seen = {t.tobytes() for t in train}
    for row in test_set.position:
        if row.tobytes() in seen:
            raise ValueError("test point coincides with a training point")


def linf_errors(nets: network.NetPair, problem, test_set: sampling.InteriorSet,
                final_loss=np.nan, epochs_run=0, trial_seed=0) -> ErrorReport:
    """Max-abs pressure error and per-component-averaged velocity error."""
    if problem.exact is None:
        raise NoExactSolutionError(f"{problem.name} has no exact solution")
    x, side, phi_a = test_set.position, test_set.side, test_set.phi_a
    p_net, u_net = _predict(nets, problem, x, side, phi_a)
    p_exact = problem.exact.pressure(x, side)
    u_exact = problem.exact.velocity(x, side)
    e_p = float(np.max(np.abs(p_exact - p_net)))
    e_u = float(np.mean(np.max(np.abs(u_exact - u_net), axis=0)))
    return ErrorReport(e_p_inf=e_p, e_u_inf=e_u, final_loss=final_loss,
                       epochs_run=epochs_run, trial_seed=trial_seed)


def run_single_trial(problem, architecture, sizes_or_m0, config: optimizer.TrainConfig,
                     m_test=None):
    """Train once and evaluate; returns (report, nets, history)."""
    seeds = np.random.SeedSequence(config.seed).spawn(2)
    train_seed = int(seeds[0].generate_state(1)[0])
    test_seed = int(seeds[1].generate_state(1)[0])
    if isinstance(sizes_or_m0, int):
        ts = sampling.build_training_set(problem, m0=sizes_or_m0, seed=train_seed)
    else:
        ts = sampling.build_training_set(problem, sizes=sizes_or_m0, seed=train_seed)
    nets, history = optimizer.train(problem, architecture, ts, config)
    final_loss = min(rec.total for rec in history) if history else np.nan
    epochs = history[-1].epoch if history else 0
    if m_test is None:
        m_test = 100 * ts.total
    if problem.exact is None:
        report = ErrorReport(e_p_inf=np.nan, e_u_inf=np.nan, final_loss=final_loss,
                             epochs_run=epochs, trial_seed=config.seed)
        return report, nets, history
    test_set = sampling.build_test_set(problem, m_test, seed=test_seed)
    check_disjoint(test_set, ts)
    report = linf_errors(nets, problem, test_set, final_loss=final_loss,
                         epochs_run=epochs, trial_seed=config.seed)
    return report, nets, history


def run_trials(problem, architecture, sizes_or_m0, config: optimizer.TrainConfig,
               n_trials: int = 5, m_test=None, keep_nets=False):
    """Independent trials with spawned seeds; arithmetic means over trials."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    seeds = np.random.SeedSequence(config.seed).spawn(n_trials)
    reports, nets_list, histories = [], [], []
    for s in seeds:
        trial_seed = int(s.generate_state(1)[0])
        cfg = optimizer.TrainConfig(epsilon_theta=config.epsilon_theta,
                                    epoch_max=config.epoch_max, nu0=config.nu0,
                                    seed=trial_seed)
        report, nets, history = run_single_trial(problem, architecture,
                                                 sizes_or_m0, cfg, m_test=m_test)
        reports.append(report)
        histories.append(history)
        if keep_nets:
            nets_list.append(nets)
    result = TrialsReport(
        reports=reports,
        mean_e_p=float(np.mean([r.e_p_inf for r in reports])),
        mean_e_u=float(np.mean([r.e_u_inf for r in reports])),
        mean_loss=float(np.mean([r.final_loss for r in reports])),
    )
    if keep_nets:
        return result, nets_list, histories
    return result


def errors_csv(reports) -> str:
    lines = ["trial,E_p_inf,E_u_inf,final_loss,epochs"]
    for i, r in enumerate(reports):
        lines.append(f"{i},{r.e_p_inf:.17g},{r.e_u_inf:.17g},"
                     f"{r.final_loss:.17g},{r.epochs_run}")
    return "\n".join(lines) + "\n"


def dump_fields(nets: network.NetPair, problem, points=None, grid_n: int = 101) -> str:
    """CSV rows (coordinates, side, p, u components) over an evaluation grid.

    Points within 1e-8 of the interface (or outside the domain) are
    skipped so the side label is unambiguous.
    """
    d = problem.dim
    if points is None:
        lo, hi = problem.domain.bounding_box()
        axes = [np.linspace(lo[i], hi[i], grid_n) for i in range(d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        points = np.stack([m.ravel() for m in mesh], axis=1)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    keep = problem.domain.contains(points)
    phi = problem.geometry.phi(points)
    keep &= np.abs(phi) >= sampling.MIN_INTERFACE_CLEARANCE
    points, phi = points[keep], phi[keep]
    side = np.sign(phi)
    p, u = _predict(nets, problem, points, side, np.abs(phi))

    buf = io.StringIO()
    coords = ",".join(f"x{i + 1}" for i in range(d))
    vels = ",".join(f"u{i + 1}" for i in range(d))
    buf.write(f"{coords},side,p,{vels}\n")
    for i in range(points.shape[0]):
        xs = ",".join(f"{c:.17g}" for c in points[i])
        us = ",".join(f"{c:.17g}" for c in u[i])
        buf.write(f"{xs},{side[i]:.0f},{p[i]:.17g},{us}\n")
    return buf.getvalue()


def pressure_jump_sign_agreement(nets: network.NetPair, problem, n_samples: int = 36,
                                 eps: float = 1e-3) -> int:
    """Count of interface samples where sign(p_in - p_out) matches sign(kappa)."""
    alphas = np.linspace(0.0, 2.0 * np.pi, n_samples, endpoint=False)
    pts = problem.geometry.interface_points(alphas=alphas)
    x_in = pts.position - eps * pts.normal
    x_out = pts.position + eps * pts.normal
    aug_in = np.concatenate([x_in, -np.ones((n_samples, 1))], axis=1)
    aug_out = np.concatenate([x_out, np.ones((n_samples, 1))], axis=1)
    p_in = network.forward(nets.pressure, aug_in)[:, 0]
    p_out = network.forward(nets.pressure, aug_out)[:, 0]
    return int(np.sum((p_in - p_out) * pts.curvature >= 0.0))


def divergence_spot_check(nets: network.NetPair, problem, n_points: int = 1000,
                          seed: int = 0) -> float:
    """Max |divergence residual| at random interior points."""
    rng = np.random.default_rng(seed)
    pts = sampling.sample_interior(problem.domain, problem.geometry, n_points, rng)
    source = physics.NetworkJets(nets)
    r = physics.divergence_residual(source, pts.position, problem)
    return float(np.max(np.abs(r)))
