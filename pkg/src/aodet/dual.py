"""Sampling-frequency constraint handling via Lagrangian bisection.

The request frequency of the lam-optimal policy is nonincreasing in lam, so
the tightest multiplier is found by bisecting on the constraint gap f(lam) -
nu. The constrained optimum randomizes between the pure policies solved just
below and just above the multiplier, mixed so the frequency constraint binds
with equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .mdp import MdpModel
from .solver import PolicyEvaluation, RviConfig, RviSolution, evaluate_policy, rvi_solve


class BracketError(RuntimeError):
    """The search bracket does not contain a feasible multiplier."""


@dataclass(frozen=True)
class DualConfig:
    lambda_lo: float = 0.0
    lambda_hi: float = 50.0
    lambda_tolerance: float = 1e-4
    epsilon: float = 1e-4          # perturbation for the two bracketing policies
    rvi: RviConfig = field(default_factory=RviConfig)
    # Reusing the previous probe's bias looks attractive but can drop the
    # iteration into a slow near-tie chattering regime (observed on fast-mixing
    # chains); cold starts converge in a few hundred to a few thousand sweeps.
    warm_start: bool = False

    def __post_init__(self):
        if not self.lambda_lo < self.lambda_hi:
            raise ValueError("lambda_lo must be below lambda_hi")
        if self.lambda_tolerance <= 0 or self.epsilon <= 0:
            raise ValueError("tolerances must be positive")


class DualProbe(NamedTuple):
    lam: float
    gain: float
    f: float


@dataclass
class MixedPolicy:
    pi_minus: np.ndarray    # solved just below the multiplier (samples more)
    pi_plus: np.ndarray     # solved just above (samples less)
    mu: float               # probability of using pi_minus

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError("mu must lie in [0, 1]")


@dataclass
class CmdpSolution:
    lambda_star: float
    mixed: MixedPolicy
    J_mixed: float
    f_mixed: float
    J_minus: float
    f_minus: float
    J_plus: float
    f_plus: float
    constraint_active: bool
    trace: list[DualProbe]


def mixing_probability(f_minus: float, f_plus: float, nu: float) -> float:
    """Weight on the more-frequent policy so the mixture frequency equals nu."""
    if f_minus <= f_plus:
        raise ValueError(f"need f_minus > f_plus, got {f_minus} <= {f_plus}")
    if not f_plus <= nu <= f_minus:
        raise ValueError(f"nu={nu} outside [{f_plus}, {f_minus}]")
    return (nu - f_plus) / (f_minus - f_plus)


def frequency_of_lambda(model: MdpModel, lam: float, config: DualConfig | None = None):
    """(f, J, policy) of the lam-optimal pure policy, evaluated exactly."""
    config = config or DualConfig()
    sol = rvi_solve(model, lam, config.rvi)
    ev = evaluate_policy(model, sol.policy)
    return ev.avg_frequency, ev.avg_cost, sol.policy


def solve_cmdp(model: MdpModel, nu: float, config: DualConfig | None = None) -> CmdpSolution:
    """Minimize the average per-slot cost subject to request frequency <= nu."""
    if not 0.0 < nu <= 1.0:
        raise ValueError("nu must lie in (0, 1]")
    config = config or DualConfig()
    trace: list[DualProbe] = []
    bias = None

    def probe(lam: float) -> tuple[RviSolution, PolicyEvaluation]:
        nonlocal bias
        sol = rvi_solve(model, lam, config.rvi, initial_bias=bias)
        if config.warm_start:
            bias = sol.bias
        ev = evaluate_policy(model, sol.policy)
        trace.append(DualProbe(lam, sol.gain, ev.avg_frequency))
        return sol, ev

    lo = config.lambda_lo
    sol_lo, ev_lo = probe(lo)
    if ev_lo.avg_frequency <= nu:
        mixed = MixedPolicy(sol_lo.policy, sol_lo.policy, 1.0)
        return CmdpSolution(
            lambda_star=lo, mixed=mixed,
            J_mixed=ev_lo.avg_cost, f_mixed=ev_lo.avg_frequency,
            J_minus=ev_lo.avg_cost, f_minus=ev_lo.avg_frequency,
            J_plus=ev_lo.avg_cost, f_plus=ev_lo.avg_frequency,
            constraint_active=False, trace=trace)

    hi = config.lambda_hi
    sol_hi, ev_hi = probe(hi)
    if ev_hi.avg_frequency > nu:
        raise BracketError(
            f"f({hi}) = {ev_hi.avg_frequency:.6g} still exceeds nu = {nu}; raise lambda_hi")
    # best feasible probe seen so far, kept as a fallback bracketing policy
    feasible = (hi, sol_hi, ev_hi)

    while hi - lo > config.lambda_tolerance:
        mid = 0.5 * (lo + hi)
        sol_mid, ev_mid = probe(mid)
        if ev_mid.avg_frequency > nu:
            lo = mid
        else:
            hi = mid
            feasible = (mid, sol_mid, ev_mid)
    lam_star = 0.5 * (lo + hi)

    sol_m, ev_m = probe(max(0.0, lam_star - config.epsilon))
    sol_p, ev_p = probe(lam_star + config.epsilon)
    f_m, J_m = ev_m.avg_frequency, ev_m.avg_cost
    f_p, J_p = ev_p.avg_frequency, ev_p.avg_cost

    if f_m <= nu:
        # the minus-side policy is already feasible: no randomization needed
        mixed = MixedPolicy(sol_m.policy, sol_m.policy, 1.0)
        return CmdpSolution(lam_star, mixed, J_m, f_m, J_m, f_m, J_m, f_m,
                            constraint_active=True, trace=trace)
    if f_p > nu:
        # epsilon did not clear the frequency step; fall back to the best
        # feasible probe from the bracketing phase
        _, sol_p, ev_p = feasible
        f_p, J_p = ev_p.avg_frequency, ev_p.avg_cost
    mu = mixing_probability(f_m, f_p, nu)
    mixed = MixedPolicy(sol_m.policy, sol_p.policy, mu)
    return CmdpSolution(
        lambda_star=lam_star, mixed=mixed,
        J_mixed=mu * J_m + (1.0 - mu) * J_p,
        f_mixed=mu * f_m + (1.0 - mu) * f_p,
        J_minus=J_m, f_minus=f_m, J_plus=J_p, f_plus=f_p,
        constraint_active=True, trace=trace)
