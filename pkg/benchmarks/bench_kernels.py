#!/usr/bin/env python3
"""Throughput comparison of the compiled episode kernel vs the pure-Python twin.

Runs the same seeded episodes through both backends, checks that the results
are bitwise identical, and reports slots per second.

Usage: python3 benchmarks/bench_kernels.py [--horizon N] [--reps R]
"""

import argparse
import time
import warnings

import numpy as np

import aodet.sim as simmod
from aodet import Dtmc, MdpModel, SimConfig, TablePolicy, TruncationConfig, ZeroWait, rvi_solve
from aodet import _kernels
from aodet._kernels import fallback


class PurePython:
    MODE_TABLE = _kernels.MODE_TABLE
    MODE_MIX = _kernels.MODE_MIX
    MODE_SCRIPT = _kernels.MODE_SCRIPT
    MODE_CLAIRVOYANT = _kernels.MODE_CLAIRVOYANT
    run_slots = staticmethod(fallback.run_slots)


def run(model, policy, cfg, kernels):
    real = simmod._kernels
    simmod._kernels = kernels
    try:
        start = time.perf_counter()
        episodes = [simmod.run_episode(model, policy, rep, cfg)
                    for rep in range(cfg.replications)]
        elapsed = time.perf_counter() - start
    finally:
        simmod._kernels = real
    return episodes, elapsed


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--horizon", type=int, default=10**6)
    parser.add_argument("--reps", type=int, default=3)
    args = parser.parse_args()

    if _kernels.BACKEND != "compiled":
        print("compiled kernel not available; nothing to compare against")
        return

    model = MdpModel(Dtmc([[0.98, 0.02], [0.01, 0.99]]), q=0.8, trunc=TruncationConfig(20, 20))
    cfg = SimConfig(horizon=args.horizon, replications=args.reps, warmup=10_000, seed=7)
    policies = {
        "zero_wait": ZeroWait(),
        "rvi_table": TablePolicy(rvi_solve(model, 0.3).policy),
    }

    total = args.horizon * args.reps
    print(f"{args.reps} episodes x {args.horizon} slots each\n")
    print(f"{'policy':<10} {'compiled':>14} {'pure python':>14} {'speedup':>9}  identical")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name, policy in policies.items():
            fast, t_fast = run(model, policy, cfg, _kernels)
            slow, t_slow = run(model, policy, cfg, PurePython)
            same = fast == slow
            print(f"{name:<10} {total / t_fast / 1e6:>11.1f} M/s {total / t_slow / 1e6:>11.2f} M/s "
                  f"{t_slow / t_fast:>8.1f}x  {same}")
            if not same:
                raise SystemExit("backend mismatch: results are not bitwise identical")


if __name__ == "__main__":
    main()
