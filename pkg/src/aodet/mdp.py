"""Truncated decision process for pull-based sampling over a lossy channel.

State (tau1, tau2, i, j):
  tau1  slots from generation of the freshest received sample to the latest
        request (0 when the latest sample has been delivered),
  tau2  slots since the latest request (>= 1),
  i     source state at the generation time of the freshest received sample,
  j     source state at the latest request (the sample the sensor holds).

Action 1 requests a fresh sample of the current source state; action 0 lets
the sensor keep retransmitting the held sample (if any). The channel delivers
within the slot with probability q. Counters are truncated at configurable
caps; crossing the tau2 cap under action 0 folds the failure branch into the
success branch, i.e. the pending sample is treated as delivered.

The per-slot cost is the probability that the monitor's assumed state is
wrong, scaled by (1 - q*u). Two algebraic variants are provided: EXCLUSIVE
drops the term where the latest sample equals the freshest received state
(and is therefore identically zero whenever tau1 = 0), INCLUSIVE keeps it.
INCLUSIVE is the default: it penalizes leaving the last delivered state even
after delivery, which is what makes the lossless-channel renewal identity
(per-interval cost sum = tau - (1 - p_jj^tau)/(1 - p_jj)) hold exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .markov import Dtmc

MAX_STATES = 2_000_000


class MdpState(NamedTuple):
    tau1: int
    tau2: int
    i: int
    j: int


@dataclass(frozen=True)
class TruncationConfig:
    tau1_max: int = 20
    tau2_max: int = 20

    def __post_init__(self):
        if self.tau1_max < 1 or self.tau2_max < 1:
            raise ValueError("truncation bounds must be >= 1")


class CostVariant(Enum):
    EXCLUSIVE = "exclusive"
    INCLUSIVE = "inclusive"


class MdpModel:
    """Enumerated state space plus precomputed cost and kernel tables.

    Immutable after construction; cost and transitions are pure functions.
    """

    def __init__(self, dtmc: Dtmc, q: float, trunc: TruncationConfig | None = None,
                 variant: CostVariant = CostVariant.INCLUSIVE, max_states: int = MAX_STATES):
        if not 0.0 < q <= 1.0:
            raise ValueError("q must lie in (0, 1]")
        trunc = trunc or TruncationConfig()
        n = dtmc.n
        t1m, t2m = trunc.tau1_max, trunc.tau2_max
        count = t2m * n + t1m * t2m * n * n
        if count > max_states:
            raise ValueError(f"state space has {count} states, exceeding the ceiling {max_states}")

        dtmc.extend_powers(t1m + t2m)
        self.dtmc = dtmc
        self.q = float(q)
        self.trunc = trunc
        self.variant = variant

        states = []
        for tau1 in range(t1m + 1):
            for tau2 in range(1, t2m + 1):
                for i in range(n):
                    if tau1 == 0:
                        states.append(MdpState(tau1, tau2, i, i))
                    else:
                        for j in range(n):
                            states.append(MdpState(tau1, tau2, i, j))
        self.states = tuple(states)
        self._index = {s: k for k, s in enumerate(states)}
        assert len(self.states) == count

        self._cost_grid = _cost_grid(dtmc, trunc, variant)
        self._build_kernel_arrays()

    @property
    def num_states(self) -> int:
        return len(self.states)

    def index_of(self, s: MdpState) -> int:
        return self._index[MdpState(*s)]

    def state_of(self, k: int) -> MdpState:
        return self.states[k]

    def cost_base_grid(self) -> np.ndarray:
        """State-dependent cost factor, indexed [tau1, tau2 - 1, i]; cost = (1 - q*u) * base."""
        return self._cost_grid

    def cost(self, s: MdpState, u: int) -> float:
        if u not in (0, 1):
            raise ValueError("action must be 0 or 1")
        tau1, tau2, i, _ = s
        return float((1.0 - self.q * u) * self._cost_grid[tau1, tau2 - 1, i])

    def transitions(self, s: MdpState, u: int) -> list[tuple[MdpState, float]]:
        """Outgoing (state, probability) pairs; zero-probability branches dropped."""
        if u not in (0, 1):
            raise ValueError("action must be 0 or 1")
        s = MdpState(*s)
        if s not in self._index:
            raise KeyError(f"{s} is not in the enumerated state space")
        tau1, tau2, i, j = s
        q = self.q
        t1m, t2m = self.trunc.tau1_max, self.trunc.tau2_max
        out: dict[MdpState, float] = {}

        def add(state, p):
            if p > 0.0:
                out[state] = out.get(state, 0.0) + p

        if u == 0:
            if tau2 + 1 > t2m:
                # tau2 would cross its cap: treat the pending transmission as delivered
                add(MdpState(0, t2m, j, j), 1.0)
            else:
                add(MdpState(tau1, tau2 + 1, i, j), 1.0 - q)
                add(MdpState(0, tau2 + 1, j, j), q)
        else:
            k = tau1 + tau2
            row = self.dtmc.n_step(k)[i]
            t1_new = min(k, t1m)
            for jp in range(self.dtmc.n):
                w = float(row[jp])
                add(MdpState(t1_new, 1, i, jp), w * (1.0 - q))
                add(MdpState(0, 1, jp, jp), w * q)
        return list(out.items())

    def _build_kernel_arrays(self):
        """Flat index/weight tables used by the vectorized solver and simulator."""
        n = self.dtmc.n
        S = self.num_states
        t1m, t2m = self.trunc.tau1_max, self.trunc.tau2_max
        idx = self._index

        fail0 = np.empty(S, dtype=np.int64)
        succ0 = np.empty(S, dtype=np.int64)
        fail1 = np.empty((S, n), dtype=np.int64)
        succ1 = np.empty((S, n), dtype=np.int64)
        w1 = np.empty((S, n), dtype=float)
        base = np.empty(S, dtype=float)

        for k, (tau1, tau2, i, j) in enumerate(self.states):
            if tau2 + 1 > t2m:
                fail0[k] = succ0[k] = idx[MdpState(0, t2m, j, j)]
            else:
                fail0[k] = idx[MdpState(tau1, tau2 + 1, i, j)]
                succ0[k] = idx[MdpState(0, tau2 + 1, j, j)]
            expo = tau1 + tau2
            t1_new = min(expo, t1m)
            w1[k] = self.dtmc.n_step(expo)[i]
            for jp in range(n):
                fail1[k, jp] = idx[MdpState(t1_new, 1, i, jp)]
                succ1[k, jp] = idx[MdpState(0, 1, jp, jp)]
            base[k] = self._cost_grid[tau1, tau2 - 1, i]

        for a in (fail0, succ0, fail1, succ1, w1, base):
            a.setflags(write=False)
        self._fail0, self._succ0 = fail0, succ0
        self._fail1, self._succ1, self._w1 = fail1, succ1, w1
        self._cost0 = base
        self._cost1 = (1.0 - self.q) * base
        self._cost1.setflags(write=False)


def _cost_grid(dtmc: Dtmc, trunc: TruncationConfig, variant: CostVariant) -> np.ndarray:
    """Cost factor 1 - sum_j' P^(tau1)[i,j'] * (P[j',j'])^(tau2-1), indexed [tau1, tau2-1, i].

    EXCLUSIVE additionally removes the j' = i term from the sum, matching the
    simplified closed form 1 - P^(tau1)[i,i] - sum_{j' != i} (...).
    """
    t1m, t2m = trunc.tau1_max, trunc.tau2_max
    n = dtmc.n
    powers = np.stack([dtmc.n_step(k) for k in range(t1m + 1)])       # (t1m+1, n, n)
    p_self = np.diag(dtmc.P)                                          # (n,)
    selfpow = p_self[None, :] ** np.arange(t2m)[:, None]              # (t2m, n): p_jj^(tau2-1)
    inner = np.einsum("aij,bj->abi", powers, selfpow)                 # (t1m+1, t2m, n)
    grid = 1.0 - inner
    if variant is CostVariant.EXCLUSIVE:
        diag = powers[:, np.arange(n), np.arange(n)]                  # (t1m+1, n) = P^(tau1)[i,i]
        grid = grid - diag[:, None, :] * (1.0 - selfpow[None, :, :])
    grid = np.maximum(grid, 0.0)
    grid.setflags(write=False)
    return grid
