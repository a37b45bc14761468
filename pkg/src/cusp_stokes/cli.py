"""Command-line entry point: list | train | dump | check.

Thread pinning must happen before numpy loads its BLAS, so this module
imports the heavy package modules lazily inside the command handlers.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

__version__ = "0.1.0"


@dataclass
class RunConfig:
    problem: str = "example1"
    np_width: int = 10
    nu_width: int | None = None   # defaults to 2 * np_width
    layers: int = 1
    m0: int | None = None
    m_i: int | None = None
    m_gamma: int | None = None
    m_b: int | None = None
    seed: int = 0
    trials: int = 5
    epochs: int = 3000
    tol: float = 1e-14
    out_dir: str = "runs/out"
    threads: int | None = None

    def validate(self):
        from . import problems
        if self.problem not in problems.CATALOG and self.problem not in problems.EXAMPLE2_VARIANTS:
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.np_width < 1 or (self.nu_width is not None and self.nu_width < 1):
            raise ValueError("network widths must be >= 1")
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        explicit = [self.m_i, self.m_gamma, self.m_b]
        if self.m0 is None and any(v is None for v in explicit):
            raise ValueError("give either --m0 or all of --m-i/--m-gamma/--m-b")

    def resolved_nu(self) -> int:
        return self.nu_width if self.nu_width is not None else 2 * self.np_width

    def sizes_or_m0(self):
        if self.m0 is not None:
            return self.m0
        return (self.m_i, self.m_gamma, self.m_b)


def _apply_threads(threads):
    os.environ.setdefault("OPENBLAS_THREAD_TIMEOUT", "4")
    os.environ.setdefault("OMP_WAIT_POLICY", "PASSIVE")
    if threads is None:
        threads = os.environ.get("CUSP_STOKES_THREADS")
    if threads is None:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(threads)


def _load_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as f:
            data = json.load(f)
        for key, value in data.items():
            if not hasattr(cfg, key):
                raise ValueError(f"unknown config field {key!r}")
            setattr(cfg, key, value)
    overrides = {
        "problem": args.problem, "np_width": args.np, "nu_width": args.nu,
        "layers": args.layers, "m0": args.m0, "m_i": args.m_i,
        "m_gamma": args.m_gamma, "m_b": args.m_b, "seed": args.seed,
        "trials": args.trials, "epochs": args.epochs, "tol": args.tol,
        "out_dir": args.out, "threads": args.threads,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    cfg.validate()
    return cfg


def cmd_list(_args) -> int:
    from . import problems
    rows = problems.list_problems()
    for name, dim, mus, has_exact, desc in rows:
        exact = "exact solution" if has_exact else "no exact solution"
        print(f"{name}  d={dim}  {mus}  [{exact}]")
        print(f"    {desc}")
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args)
    _apply_threads(cfg.threads)
    import numpy as np

    from . import evaluation, network, optimizer, problems

    problem = problems.get_problem(cfg.problem)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    echo = asdict(cfg)
    echo["resolved_nu_width"] = cfg.resolved_nu()
    echo["code_version"] = __version__
    echo["init_distribution"] = "uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))"
    echo["damping"] = "nu*I, Nielsen gain-ratio update, nu0=1e-3*max diag(JtJ)"
    (out / "run_config.json").write_text(json.dumps(echo, indent=2) + "\n",
                                         encoding="utf-8")

    arch = (cfg.np_width, cfg.resolved_nu(), cfg.layers)
    base = optimizer.TrainConfig(epsilon_theta=cfg.tol, epoch_max=cfg.epochs,
                                 seed=cfg.seed)
    try:
        result, nets_list, histories = evaluation.run_trials(
            problem, arch, cfg.sizes_or_m0(), base, n_trials=cfg.trials,
            keep_nets=True)
    except Exception as exc:
        print(f"training failed: {exc}", file=sys.stderr)
        return 1

    for i, (nets, history) in enumerate(zip(nets_list, histories)):
        trial_dir = out / f"trial_{i}"
        trial_dir.mkdir(exist_ok=True)
        network.save_net_pair(trial_dir / "params.json", nets)
        (trial_dir / "loss_history.csv").write_text(
            optimizer.history_csv(history), encoding="utf-8", newline="\n")
    (out / "errors.csv").write_text(evaluation.errors_csv(result.reports),
                                    encoding="utf-8", newline="\n")
    summary = {
        "problem": cfg.problem,
        "mean_E_p_inf": result.mean_e_p,
        "mean_E_u_inf": result.mean_e_u,
        "mean_final_loss": result.mean_loss,
        "trials": cfg.trials,
        "n_params": network.count_params(
            *network.architecture_sizes(problem.dim, cfg.np_width,
                                        cfg.resolved_nu(), cfg.layers)),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n",
                                      encoding="utf-8")
    mean_ep = "n/a" if np.isnan(result.mean_e_p) else f"{result.mean_e_p:.3e}"
    mean_eu = "n/a" if np.isnan(result.mean_e_u) else f"{result.mean_e_u:.3e}"
    print(f"{cfg.problem}: mean E_p_inf={mean_ep} mean E_u_inf={mean_eu} "
          f"mean loss={result.mean_loss:.3e}")
    return 0


def cmd_dump(args) -> int:
    _apply_threads(args.threads)
    from . import evaluation, network, problems

    problem = problems.get_problem(args.problem)
    nets = network.load_net_pair(args.params)
    expected = problem.dim + 1
    if nets.pressure.n_in != expected or nets.velocity.n_in != expected:
        raise network.ArchitectureMismatchError(
            f"parameters expect input width {nets.pressure.n_in}, problem needs {expected}")
    if nets.velocity.n_out != problem.dim or nets.pressure.n_out != 1:
        raise network.ArchitectureMismatchError("output widths do not match the problem")
    csv = evaluation.dump_fields(nets, problem, grid_n=args.grid)
    Path(args.out).write_text(csv, encoding="utf-8", newline="\n")
    print(f"wrote {args.out}")
    return 0


def cmd_check(args) -> int:
    _apply_threads(args.threads)
    from .checks import run_all_checks

    results = run_all_checks(verbose=True)
    failed = [name for name, ok, _ in results if not ok]
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cusp-stokes",
        description="Mesh-free neural solver for Stokes interface problems")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="show the problem catalog")

    tr = sub.add_parser("train", help="train and evaluate over trials")
    tr.add_argument("--config", help="JSON config file (flags override)")
    tr.add_argument("--problem")
    tr.add_argument("--np", type=int, help="pressure hidden width")
    tr.add_argument("--nu", type=int, help="velocity hidden width (default 2*np)")
    tr.add_argument("--layers", type=int)
    tr.add_argument("--m0", type=int, help="2D grid parameter (m_i=m0^2 etc.)")
    tr.add_argument("--m-i", dest="m_i", type=int)
    tr.add_argument("--m-gamma", dest="m_gamma", type=int)
    tr.add_argument("--m-b", dest="m_b", type=int)
    tr.add_argument("--seed", type=int)
    tr.add_argument("--trials", type=int)
    tr.add_argument("--epochs", type=int)
    tr.add_argument("--tol", type=float)
    tr.add_argument("--out")
    tr.add_argument("--threads", type=int)

    dp = sub.add_parser("dump", help="evaluate saved parameters on a grid")
    dp.add_argument("--params", required=True)
    dp.add_argument("--problem", required=True)
    dp.add_argument("--grid", type=int, default=101)
    dp.add_argument("--out", default="fields.csv")
    dp.add_argument("--threads", type=int)

    ck = sub.add_parser("check", help="run the fast property suites")
    ck.add_argument("--threads", type=int)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"list": cmd_list, "train": cmd_train, "dump": cmd_dump,
                "check": cmd_check}
    try:
        return handlers[args.command](args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
