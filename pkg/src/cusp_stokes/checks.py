"""Fast self-check suites behind the `check` CLI command.

These mirror the exact (non-training) validation layers: zero residuals
for the benchmarks with exact fields, derivative consistency against
finite differences, the linear-toy optimizer step, and sampler
stratification.
"""

from __future__ import annotations

import numpy as np

from . import network, optimizer, physics, problems, sampling


def check_zero_residuals(n_points: int = 200, seed: int = 0):
    """Exact fields must zero out every residual family."""
    worst = 0.0
    for name in ("example1", "example2", "example3", "example4"):
        problem = problems.get_problem(name)
        rng = np.random.default_rng(seed)
        interior = sampling.sample_interior(problem.domain, problem.geometry,
                                            n_points, rng)
        iface = problem.geometry.interface_points(count=n_points, rng=rng)
        boundary = sampling.sample_boundary(problem.domain, 6 * (n_points // 6 + 1), rng)
        source = physics.ExactFieldJets(problem.exact, problem.dim)
        worst = max(worst, float(np.max(np.abs(
            physics.momentum_residual(source, interior.position, problem)))))
        worst = max(worst, float(np.max(np.abs(
            physics.divergence_residual(source, interior.position, problem)))))
        worst = max(worst, float(np.max(np.abs(
            physics.traction_residual(source, iface, problem)))))
        worst = max(worst, float(np.max(np.abs(
            physics.boundary_residual(source, boundary, problem)))))
    return worst <= 1e-12, f"max residual {worst:.2e} (tol 1e-12)"


def check_jet_derivatives(seed: int = 0):
    """forward_jet gradients/Hessians against central differences."""
    rng = np.random.default_rng(seed)
    worst_g, worst_h = 0.0, 0.0
    for sizes in ([3, 8, 1], [4, 6, 3], [3, 5, 5, 2]):
        params = network.init_params(sizes, rng)
        x = rng.uniform(-1.5, 1.5, size=sizes[0])
        jets = network.forward_jet(params, x)
        h = 1e-4
        for k, jet in enumerate(jets):
            for i in range(sizes[0]):
                e = np.zeros(sizes[0])
                e[i] = h
                fp = network.forward(params, x + e)[0, k]
                fm = network.forward(params, x - e)[0, k]
                fd = (fp - fm) / (2 * h)
                worst_g = max(worst_g, abs(fd - jet.grad[i]) / max(1.0, abs(fd)))
                for j in range(sizes[0]):
                    e2 = np.zeros(sizes[0])
                    e2[j] = h
                    gpp = network.forward_jet(params, x + e2)[k].grad[i]
                    gmm = network.forward_jet(params, x - e2)[k].grad[i]
                    fd2 = (gpp - gmm) / (2 * h)
                    worst_h = max(worst_h, abs(fd2 - jet.hess[i, j]) / max(1.0, abs(fd2)))
    ok = worst_g <= 1e-6 and worst_h <= 1e-4
    return ok, f"grad dev {worst_g:.2e} (tol 1e-6), hess dev {worst_h:.2e} (tol 1e-4)"


def check_lm_linear_toy(seed: int = 0):
    """One barely-damped step must land on the least-squares minimizer."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((40, 7))
    b = rng.standard_normal(40)
    objective = optimizer.LinearObjective(a, b)
    theta0 = rng.standard_normal(7)
    state = optimizer.LMState(theta=theta0, nu=1e-12, epoch=0, loss=np.inf)
    state, accepted = optimizer.lm_step(state, objective)
    ref = np.linalg.lstsq(a, b, rcond=None)[0]
    dev = float(np.max(np.abs(state.theta - ref)))
    return accepted and dev <= 1e-10, f"deviation {dev:.2e} (tol 1e-10)"


def check_lhs_stratification(seed: int = 0):
    """Every axis projection puts exactly one point in each of n bins."""
    rng = np.random.default_rng(seed)
    for n, d in ((17, 2), (64, 3), (101, 1)):
        pts = sampling.latin_hypercube(n, (np.zeros(d), np.ones(d)), rng)
        for j in range(d):
            counts = np.histogram(pts[:, j], bins=n, range=(0.0, 1.0))[0]
            if not np.all(counts == 1):
                return False, f"stratification broken at n={n} d={d}"
    return True, "one point per stratum per axis"


def run_all_checks(verbose: bool = False):
    checks = [
        ("zero-residual oracle (examples 1-4)", check_zero_residuals),
        ("network jet derivatives vs finite differences", check_jet_derivatives),
        ("levenberg-marquardt linear toy", check_lm_linear_toy),
        ("latin hypercube stratification", check_lhs_stratification),
    ]
    results = []
    for name, fn in checks:
        ok, detail = fn()
        results.append((name, ok, detail))
        if verbose:
            print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return results
