"""Experiment command line: solve, policy-map, sweep, simulate, compare.

Every command is deterministic given (config, seed) and writes CSV with a
fixed, documented header. Exit codes: 0 success, 1 configuration error,
2 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from .config import ConfigError, ExperimentConfig, apply_axis, parse_config
from .dual import BracketError, CmdpSolution, solve_cmdp
from .mdp import MdpState
from .sim import Clairvoyant, MixedTablePolicy, Periodic, SimMetrics, ZeroWait, run_episode, simulate
from .solver import SolverError

SOLVE_HEADER = ["matrix", "q", "nu", "tau1_max", "tau2_max", "cost_variant",
                "lambda_star", "mu", "J_exact", "f_exact",
                "J_minus", "f_minus", "J_plus", "f_plus", "constraint_active"]
POLICY_MAP_HEADER = ["tau1", "tau2", "action", "action_minus", "action_plus", "monotone"]
SIM_COLS = ["aod_mean", "aod_se", "freq_mean", "freq_se",
            "fresh_mean", "fresh_se", "map_mean", "map_se"]
SWEEP_HEADER = ["axis", "value"] + SOLVE_HEADER + SIM_COLS + ["error"]
SIMULATE_HEADER = SOLVE_HEADER + SIM_COLS
COMPARE_HEADER = ["p10", "policy", "nu", "lambda_star", "mu"] + SIM_COLS + ["error"]
TRACE_HEADER = ["t", "true_state", "i", "tau1", "tau2", "action", "success"]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _writer(path: str, header: list[str]):
    fh = open(path, "w", newline="", encoding="utf-8")
    w = csv.writer(fh)
    w.writerow(header)
    return fh, w


def _solution_row(cfg: ExperimentConfig, sol: CmdpSolution) -> list:
    return [cfg.matrix_text(), cfg.q, cfg.nu, cfg.tau1_max, cfg.tau2_max,
            cfg.cost_variant.value, sol.lambda_star, sol.mixed.mu,
            sol.J_mixed, sol.f_mixed, sol.J_minus, sol.f_minus,
            sol.J_plus, sol.f_plus, sol.constraint_active]


def _metric_cells(metrics: SimMetrics) -> list:
    return [metrics.avg_aod.mean, metrics.avg_aod.se, metrics.freq.mean, metrics.freq.se,
            metrics.fresh_error.mean, metrics.fresh_error.se,
            metrics.map_error.mean, metrics.map_error.se]


def cmd_solve(cfg: ExperimentConfig, out: str | None, seed: int) -> int:
    model = cfg.to_model()
    sol = solve_cmdp(model, cfg.nu, cfg.dual_config())
    note = "binding" if sol.constraint_active else "inactive (pure policy, no randomization)"
    print(f"lambda_star = {sol.lambda_star:.6g}")
    print(f"mu          = {sol.mixed.mu:.6g}")
    print(f"J_exact     = {sol.J_mixed:.8g}")
    print(f"f_exact     = {sol.f_mixed:.8g}")
    print(f"constraint  = {note}")
    print(f"probes      = {len(sol.trace)}")
    if out:
        fh, w = _writer(out, SOLVE_HEADER)
        with fh:
            w.writerow([_fmt(v) for v in _solution_row(cfg, sol)])
        print(f"wrote {out}")
    return 0


def cmd_policy_map(cfg: ExperimentConfig, out: str, seed: int, i: int, j: int) -> int:
    model = cfg.to_model()
    n = model.dtmc.n
    if not (0 <= i < n and 0 <= j < n):
        raise ConfigError(f"state pair ({i}, {j}) outside 0..{n - 1}")
    sol = solve_cmdp(model, cfg.nu, cfg.dual_config())
    dominant = sol.mixed.pi_minus if sol.mixed.mu >= 0.5 else sol.mixed.pi_plus

    def grid_of(policy):
        g = np.zeros((cfg.tau1_max + 1, cfg.tau2_max), dtype=int)
        for tau1 in range(cfg.tau1_max + 1):
            for tau2 in range(1, cfg.tau2_max + 1):
                jj = j if tau1 > 0 else i  # tau1 = 0 states exist only with matching pair
                g[tau1, tau2 - 1] = policy[model.index_of(MdpState(tau1, tau2, i, jj))]
        return g

    g_dom, g_minus, g_plus = grid_of(dominant), grid_of(sol.mixed.pi_minus), grid_of(sol.mixed.pi_plus)
    mono = monotone_grid(g_dom)
    fh, w = _writer(out, POLICY_MAP_HEADER)
    with fh:
        for tau1 in range(cfg.tau1_max + 1):
            for tau2 in range(1, cfg.tau2_max + 1):
                w.writerow([tau1, tau2, g_dom[tau1, tau2 - 1],
                            g_minus[tau1, tau2 - 1], g_plus[tau1, tau2 - 1], _fmt(mono)])
    print(f"wrote {out} (monotone={mono})")
    return 0


def monotone_grid(grid: np.ndarray) -> bool:
    """True if action 1 at (tau1, tau2) implies action 1 at every (tau1', tau2') >= componentwise."""
    g = np.asarray(grid, dtype=bool)
    for a in range(g.shape[0]):
        for b in range(g.shape[1]):
            if g[a, b] and not g[a:, b:].all():
                return False
    return True


def cmd_sweep(cfg: ExperimentConfig, out: str, seed: int) -> int:
    if cfg.sweep_axis is None or not cfg.sweep_values:
        raise ConfigError("sweep requires sweep_axis and sweep_values")
    fh, w = _writer(out, SWEEP_HEADER)
    with fh:
        for value in cfg.sweep_values:
            point = apply_axis(cfg, cfg.sweep_axis, value)
            row: list = [cfg.sweep_axis, value]
            try:
                model = point.to_model()
                sol = solve_cmdp(model, point.nu, point.dual_config())
                metrics = simulate(model, MixedTablePolicy(sol.mixed), point.sim_config(seed))
                row += _solution_row(point, sol) + _metric_cells(metrics) + [""]
            except (ConfigError, BracketError, SolverError) as exc:
                row += [point.matrix_text(), point.q, point.nu, point.tau1_max, point.tau2_max,
                        point.cost_variant.value] + [""] * 9 + [""] * len(SIM_COLS) + [str(exc)]
            w.writerow([_fmt(v) for v in row])
            fh.flush()
    print(f"wrote {out}")
    return 0


def cmd_simulate(cfg: ExperimentConfig, out: str, seed: int, trace: bool) -> int:
    model = cfg.to_model()
    sol = solve_cmdp(model, cfg.nu, cfg.dual_config())
    policy = MixedTablePolicy(sol.mixed)
    metrics = simulate(model, policy, cfg.sim_config(seed))
    fh, w = _writer(out, SIMULATE_HEADER)
    with fh:
        w.writerow([_fmt(v) for v in _solution_row(cfg, sol) + _metric_cells(metrics)])
    print(f"wrote {out}")
    if trace:
        trace_path = out + ".trace.csv"
        _, ep_trace = run_episode(model, policy, 0, cfg.sim_config(seed), collect_trace=True)
        fh, w = _writer(trace_path, TRACE_HEADER)
        with fh:
            for t in range(1, cfg.horizon + 1):
                w.writerow([t, ep_trace.true_state[t], ep_trace.i[t], ep_trace.tau1[t],
                            ep_trace.tau2[t], ep_trace.action[t], ep_trace.success[t]])
        print(f"wrote {trace_path}")
    return 0


def cmd_compare(cfg: ExperimentConfig, out: str, seed: int) -> int:
    if cfg.sweep_axis != "p10" or not cfg.sweep_values:
        raise ConfigError("compare requires sweep_axis = p10 with sweep_values")
    sim_cfg = cfg.sim_config(seed)
    fh, w = _writer(out, COMPARE_HEADER)
    with fh:
        for p10 in cfg.sweep_values:
            point = apply_axis(cfg, "p10", p10)
            try:
                model = point.to_model()
            except ConfigError as exc:
                w.writerow([_fmt(p10), "", "", "", ""] + [""] * len(SIM_COLS) + [str(exc)])
                fh.flush()
                continue
            runs = []
            for nu in cfg.compare_nu:
                runs.append((f"aod_nu={_fmt(nu)}", nu))
            runs.append(("zero_wait", None))
            runs.append(("clairvoyant", None))
            if cfg.periodic_k is not None:
                runs.append((f"periodic_k={cfg.periodic_k}", None))
            for label, nu in runs:
                row: list = [p10, label, "" if nu is None else nu]
                try:
                    if nu is not None:
                        sol = solve_cmdp(model, nu, point.dual_config())
                        policy = MixedTablePolicy(sol.mixed)
                        row += [sol.lambda_star, sol.mixed.mu]
                    else:
                        policy = {"zero_wait": ZeroWait(), "clairvoyant": Clairvoyant()}.get(
                            label, Periodic(cfg.periodic_k or 1))
                        row += ["", ""]
                    metrics = simulate(model, policy, sim_cfg)
                    row += _metric_cells(metrics) + [""]
                except (BracketError, SolverError) as exc:
                    row = [p10, label, "" if nu is None else nu, "", ""] + [""] * len(SIM_COLS) + [str(exc)]
                w.writerow([_fmt(v) for v in row])
                fh.flush()
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aodet",
        description="Solve and simulate frequency-constrained sampling policies "
                    "for a Markov source monitored over a lossy channel.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
            ("solve", "solve the constrained problem and report the randomized policy"),
            ("policy-map", "emit the optimal action over the (tau1, tau2) grid"),
            ("sweep", "re-solve and simulate along a parameter grid"),
            ("simulate", "simulate the solved policy"),
            ("compare", "compare the solved policy against baselines over a p10 grid")]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="experiment file (flat key = value)")
        p.add_argument("--out", default=None, help="output CSV path (overrides config 'out')")
        p.add_argument("--seed", type=int, default=None, help="simulation base seed override")
        if name == "simulate":
            p.add_argument("--trace", action="store_true",
                           help="also dump a per-slot trace CSV next to the output")
        if name == "policy-map":
            p.add_argument("--i", type=int, default=0, help="freshest received source state")
            p.add_argument("--j", type=int, default=0, help="latest sampled source state")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        seed = cfg.seed if args.seed is None else args.seed
        out = args.out or cfg.out
        if args.command != "solve" and not out:
            raise ConfigError("an output path is required (--out or config key 'out')")
        if args.command == "solve":
            return cmd_solve(cfg, out, seed)
        if args.command == "policy-map":
            return cmd_policy_map(cfg, out, seed, args.i, args.j)
        if args.command == "sweep":
            return cmd_sweep(cfg, out, seed)
        if args.command == "simulate":
            return cmd_simulate(cfg, out, seed, args.trace)
        if args.command == "compare":
            return cmd_compare(cfg, out, seed)
        raise AssertionError(args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (BracketError, SolverError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
