"""Monte Carlo of the physical system: source chain, pull requests, lossy channel.

Each slot: the source steps, the monitor decides whether to request based on
what it can observe, the sensor transmits (a fresh sample on request,
otherwise a retransmission of the held one), and the channel delivers with
probability q. Metrics accumulate after a warmup window; a received update
becomes usable from the next slot's metrics.

Counters saturate at the model's truncation caps so that table lookups and
per-slot costs are always defined. Random numbers come from independent
substreams per (replication, purpose), with the source stream shared across
policies for common-random-number comparisons.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dual import MixedPolicy
from .markov import Dtmc
from .mdp import MdpModel, MdpState

_STREAM_CHAIN = 0
_STREAM_CHANNEL = 1
_STREAM_MIX = 2


@dataclass(frozen=True)
class SimConfig:
    horizon: int = 10**6
    replications: int = 20
    warmup: int = 10**4
    seed: int = 0

    def __post_init__(self):
        if not self.horizon > self.warmup >= 0:
            raise ValueError("need horizon > warmup >= 0")
        if self.replications < 1:
            raise ValueError("need at least one replication")


@dataclass(frozen=True)
class ZeroWait:
    """Request a fresh sample whenever nothing is in flight (freshness-age optimal here)."""


@dataclass(frozen=True)
class Clairvoyant:
    """Non-causal baseline: request exactly when the source changes state."""


@dataclass(frozen=True)
class Periodic:
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("period must be >= 1")


@dataclass(frozen=True)
class TablePolicy:
    """Deterministic action table over the enumerated model states."""
    actions: np.ndarray


@dataclass(frozen=True)
class MixedTablePolicy:
    """Randomized mix of two tables.

    By default the table is drawn once per episode, so the long-run mixture
    average is the mu-weighted combination of the two exact evaluations. With
    per_step=True the draw instead happens independently at every slot where
    the two deployed tables disagree (sensitivity-check mode).
    """
    mixed: MixedPolicy
    per_step: bool = False


@dataclass
class EpisodeMetrics:
    avg_aod: float
    freq: float
    fresh_error: float
    map_error: float


@dataclass
class MetricStat:
    mean: float
    se: float


@dataclass
class SimMetrics:
    avg_aod: MetricStat
    freq: MetricStat
    fresh_error: MetricStat
    map_error: MetricStat
    replications: int


@dataclass
class EpisodeTrace:
    """Per-slot record; index 0 is the pre-episode sync slot and is unused."""
    t: np.ndarray
    true_state: np.ndarray
    i: np.ndarray
    tau1: np.ndarray
    tau2: np.ndarray
    action: np.ndarray
    success: np.ndarray


def map_estimate(dtmc: Dtmc, i: int, elapsed: int) -> int:
    """Most probable current state given state i observed `elapsed` slots ago.

    Ties break toward the smaller state index; beyond the power cache the row
    is replaced by the stationary distribution.
    """
    if elapsed < 0:
        raise ValueError("elapsed must be nonnegative")
    if elapsed <= dtmc.max_power:
        row = dtmc.n_step(elapsed)[i]
    else:
        row = dtmc.stationary()
    return int(np.argmax(row))


def clairvoyant_actions(trajectory) -> np.ndarray:
    """Request indicator per slot: 1 iff the state differs from the previous slot."""
    x = np.asarray(trajectory)
    a = np.zeros(x.shape[0], dtype=np.int8)
    a[1:] = x[1:] != x[:-1]
    return a


def deploy_table(model: MdpModel, actions: np.ndarray) -> tuple[np.ndarray, bool]:
    """Resolve a full-state action table into the monitor's observable coordinates.

    The monitor cannot see the held-sample state j while a transmission is in
    flight (tau1 > 0), so the lookup substitutes the most probable held sample
    argmax_j' P^(tau1)[i, j']. Returns the deployed grid [tau1, tau2-1, i] and
    whether the table actually depends on j anywhere the deployed policy can
    reach, in which case exact evaluation and simulation may diverge.
    """
    actions = np.asarray(actions)
    t1m, t2m = model.trunc.tau1_max, model.trunc.tau2_max
    n = model.dtmc.n
    grid = np.zeros((t1m + 1, t2m, n), dtype=np.int8)
    jhat = np.stack([np.argmax(model.dtmc.n_step(t1), axis=1) for t1 in range(t1m + 1)])
    for tau1 in range(t1m + 1):
        for tau2 in range(1, t2m + 1):
            for i in range(n):
                j = i if tau1 == 0 else int(jhat[tau1, i])
                grid[tau1, tau2 - 1, i] = actions[model.index_of(MdpState(tau1, tau2, i, j))]
    return grid, _j_dependent(model, actions, grid)


def _j_dependent(model: MdpModel, actions, grid) -> bool:
    """True if the table's action varies with j at some state the deployed policy reaches."""
    n = model.dtmc.n
    start = [model.index_of(MdpState(0, 1, x, x)) for x in range(n)]
    seen = np.zeros(model.num_states, dtype=bool)
    seen[start] = True
    stack = list(start)
    while stack:
        k = stack.pop()
        tau1, tau2, i, _ = model.states[k]
        u = int(grid[tau1, tau2 - 1, i])
        if u == 0:
            nxt = (model._fail0[k], model._succ0[k])
        else:
            nxt = tuple(model._fail1[k]) + tuple(model._succ1[k])
        for kk in nxt:
            if not seen[kk]:
                seen[kk] = True
                stack.append(int(kk))
    for k in np.nonzero(seen)[0]:
        tau1, tau2, i, j = model.states[k]
        if tau1 == 0:
            continue
        ref = actions[model.index_of(MdpState(tau1, tau2, i, 0))]
        for jj in range(1, n):
            if actions[model.index_of(MdpState(tau1, tau2, i, jj))] != ref:
                return True
    return False


def _map_grid(model: MdpModel) -> np.ndarray:
    cached = getattr(model, "_sim_map_grid", None)
    if cached is not None:
        return cached
    t1m, t2m = model.trunc.tau1_max, model.trunc.tau2_max
    n = model.dtmc.n
    g = np.zeros((t1m + 1, t2m, n), dtype=np.int64)
    for tau1 in range(t1m + 1):
        for tau2 in range(1, t2m + 1):
            g[tau1, tau2 - 1] = np.argmax(model.dtmc.n_step(tau1 + tau2), axis=1)
    model._sim_map_grid = g
    return g


def _zero_wait_grid(model: MdpModel) -> np.ndarray:
    t1m, t2m = model.trunc.tau1_max, model.trunc.tau2_max
    grid = np.zeros((t1m + 1, t2m, model.dtmc.n), dtype=np.int8)
    grid[0] = 1
    return grid


def _rng(seed: int, rep: int, purpose: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, rep, purpose]))


@dataclass
class _ResolvedPolicy:
    mode: int
    grid_a: np.ndarray | None = None
    grid_b: np.ndarray | None = None
    mu: float = 0.0
    period: int = 0
    episode_draw: bool = False   # pick grid_a vs grid_b once per episode


def _resolve_policy(model: MdpModel, policy) -> _ResolvedPolicy:
    if isinstance(policy, TablePolicy):
        grid, jdep = deploy_table(model, policy.actions)
        _warn_j_dependent(jdep)
        return _ResolvedPolicy(_kernels.MODE_TABLE, grid_a=grid)
    if isinstance(policy, MixedTablePolicy):
        ga, jdep_a = deploy_table(model, policy.mixed.pi_minus)
        gb, jdep_b = deploy_table(model, policy.mixed.pi_plus)
        _warn_j_dependent(jdep_a or jdep_b)
        if policy.per_step:
            return _ResolvedPolicy(_kernels.MODE_MIX, grid_a=ga, grid_b=gb, mu=policy.mixed.mu)
        return _ResolvedPolicy(_kernels.MODE_TABLE, grid_a=ga, grid_b=gb,
                               mu=policy.mixed.mu, episode_draw=True)
    if isinstance(policy, ZeroWait):
        return _ResolvedPolicy(_kernels.MODE_TABLE, grid_a=_zero_wait_grid(model))
    if isinstance(policy, Clairvoyant):
        return _ResolvedPolicy(_kernels.MODE_CLAIRVOYANT)
    if isinstance(policy, Periodic):
        return _ResolvedPolicy(_kernels.MODE_SCRIPT, period=policy.k)
    raise TypeError(f"unsupported policy {policy!r}")


def run_episode(model: MdpModel, policy, rep: int, config: SimConfig,
                collect_trace: bool = False, _resolved: _ResolvedPolicy | None = None):
    """One seeded replication. Returns EpisodeMetrics, plus the trace if requested."""
    horizon = config.horizon
    chain_rng = _rng(config.seed, rep, _STREAM_CHAIN)
    channel_rng = _rng(config.seed, rep, _STREAM_CHANNEL)
    mix_rng = _rng(config.seed, rep, _STREAM_MIX)

    pi_cum = np.cumsum(model.dtmc.stationary())
    pi_cum[-1] = 1.0
    x0 = int(np.searchsorted(pi_cum, chain_rng.random(), side="right"))
    u_src = chain_rng.random(horizon + 1)
    u_chan = channel_rng.random(horizon + 1)

    rp = _resolved if _resolved is not None else _resolve_policy(model, policy)
    grid_a, grid_b, u_mix, script = rp.grid_a, rp.grid_b, None, None
    if rp.episode_draw:
        grid_a = grid_a if mix_rng.random() < rp.mu else grid_b
        grid_b = None
    elif rp.mode == _kernels.MODE_MIX:
        u_mix = mix_rng.random(horizon + 1)
    if rp.mode == _kernels.MODE_SCRIPT:
        script = np.zeros(horizon + 1, dtype=np.int8)
        script[1::rp.period] = 1

    if collect_trace:
        tr = [np.zeros(horizon + 1, dtype=np.int64) for _ in range(6)]
    else:
        tr = [np.zeros(1, dtype=np.int64) for _ in range(6)]

    aod, req, fresh, mape = _kernels.run_slots(
        x0, u_src, u_chan, u_mix, model.dtmc.cumulative_rows(),
        rp.mode, grid_a, grid_b, rp.mu, script, model.cost_base_grid(), _map_grid(model),
        model.q, model.trunc.tau1_max, model.trunc.tau2_max, config.warmup,
        collect_trace, *tr)

    measured = horizon - config.warmup
    metrics = EpisodeMetrics(
        avg_aod=aod / measured, freq=req / measured,
        fresh_error=fresh / measured, map_error=mape / measured)
    if collect_trace:
        trace = EpisodeTrace(np.arange(horizon + 1), *tr)
        return metrics, trace
    return metrics


def _warn_j_dependent(flag: bool) -> None:
    if flag:
        warnings.warn(
            "policy table depends on the unobservable held-sample state; deployment "
            "substitutes its most probable value, so exact and simulated averages may differ",
            stacklevel=3)


def aggregate(episodes: list[EpisodeMetrics]) -> SimMetrics:
    """Means and standard errors across replications (zero-width for a single episode)."""
    if not episodes:
        raise ValueError("need at least one episode")

    def stat(values):
        v = np.asarray(values, dtype=float)
        if v.size == 1 or np.all(v == v[0]):
            return MetricStat(mean=float(v[0]), se=0.0)
        return MetricStat(mean=float(v.mean()), se=float(v.std(ddof=1) / np.sqrt(v.size)))

    return SimMetrics(
        avg_aod=stat([e.avg_aod for e in episodes]),
        freq=stat([e.freq for e in episodes]),
        fresh_error=stat([e.fresh_error for e in episodes]),
        map_error=stat([e.map_error for e in episodes]),
        replications=len(episodes))


def simulate(model: MdpModel, policy, config: SimConfig) -> SimMetrics:
    """Run all replications of a policy and aggregate."""
    resolved = _resolve_policy(model, policy)
    episodes = [run_episode(model, policy, rep, config, _resolved=resolved)
                for rep in range(config.replications)]
    return aggregate(episodes)
