"""Average-cost solution of the relaxed model.

rvi_solve runs synchronous relative value iteration on the per-slot cost plus
lam * action, stopping on the span seminorm (max - min) of successive value
differences; evaluate_policy computes the exact long-run average cost and
request frequency of a fixed action table via the stationary distribution of
the induced chain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mdp import MdpModel, MdpState


class SolverError(RuntimeError):
    """Iteration cap reached without meeting the convergence tolerance."""


@dataclass(frozen=True)
class RviConfig:
    span_tolerance: float = 1e-9
    max_iterations: int = 10**6
    reference_state: MdpState = MdpState(0, 1, 0, 0)

    def __post_init__(self):
        if self.span_tolerance <= 0:
            raise ValueError("span_tolerance must be positive")


@dataclass
class RviSolution:
    policy: np.ndarray          # int8 action per state index
    gain: float                 # optimal average relaxed cost per slot
    bias: np.ndarray            # value vector, zero at the reference state
    iterations: int
    span: float


@dataclass
class PolicyEvaluation:
    avg_cost: float             # long-run average per-slot cost J
    avg_frequency: float        # long-run fraction of slots with a request f
    occupation: np.ndarray      # stationary distribution over model states


EVAL_TOL = 1e-12
EVAL_MAX_ITER = 10**7


_DAMPING = 0.9            # weight on T(h) in the damped update
_DRIFT_WINDOW = 64        # sweeps between drift checks
_DRIFT_REL_TOL = 1e-2     # |d - d_prev| relative to span that counts as pure drift
_NO_FLIP_JUMP = 1e6       # push size when no action flip lies along the drift


def rvi_solve(model: MdpModel, lam: float, config: RviConfig | None = None,
              initial_bias: np.ndarray | None = None) -> RviSolution:
    """Optimal policy and gain for per-slot cost c(s, u) + lam * u.

    Ties between the two actions resolve to action 0, so exact indifference
    never inflates the request frequency.

    Two safeguards address known failure modes of plain synchronous value
    iteration on this state space, neither of which changes what is computed:

    * updates are damped, h <- (1 - kappa) h + kappa T(h), the standard
      aperiodicity transform; it removes policy-chattering limit cycles while
      keeping every fixed point, and the stopping test still certifies the
      undamped one-step span;
    * when the greedy policy is stable and the increment has settled into a
      constant drift (an almost-closed low-gain region whose escape must be
      priced in, at a rate of the gain gap per sweep), the iterate jumps along
      the drift toward the first action flip instead of crawling there.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    config = config or RviConfig()
    ref = model.index_of(config.reference_state)

    c0 = model._cost0
    c1 = model._cost1 + lam
    fail0, succ0 = model._fail0, model._succ0
    fail1, succ1 = model._fail1, model._succ1
    q = model.q
    wf = model._w1 * (1.0 - q)
    ws = model._w1 * q

    def sweep(h):
        t0 = c0 + (1.0 - q) * h[fail0] + q * h[succ0]
        t1 = c1 + (wf * h[fail1]).sum(axis=1) + (ws * h[succ1]).sum(axis=1)
        return t0, t1

    if initial_bias is None:
        h = np.zeros(model.num_states)
    else:
        h = np.asarray(initial_bias, dtype=float).copy()

    kappa = _DAMPING
    span = np.inf
    gain = np.nan
    d_prev = None
    pol_prev = None
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        t0, t1 = sweep(h)
        th = np.minimum(t0, t1)
        d = th - h                      # undamped one-step difference
        dmax, dmin = d.max(), d.min()
        span = dmax - dmin
        gain = 0.5 * (dmax + dmin)
        h = h + kappa * d
        h = h - h[ref]
        if span <= config.span_tolerance:
            break
        if iterations % _DRIFT_WINDOW == 0:
            pol = t1 < t0
            drifting = (
                pol_prev is not None
                and span > 10.0 * config.span_tolerance
                and (pol == pol_prev).all()
                and np.abs(d - d_prev).max() <= _DRIFT_REL_TOL * span)
            if drifting:
                dd = float(np.abs(d - d_prev).max()) / _DRIFT_WINDOW  # per-sweep change of d
                h = _drift_jump(h, kappa * d, kappa * dd, span, sweep,
                                fail0, succ0, fail1, succ1, q, wf, ws)
                h = h - h[ref]
            pol_prev, d_prev = pol, d
    else:
        raise SolverError(
            f"relative value iteration hit the cap of {config.max_iterations} iterations "
            f"(span reached {span:.3e}, tolerance {config.span_tolerance:.3e})")

    t0, t1 = sweep(h)
    policy = (t1 < t0).astype(np.int8)
    return RviSolution(policy=policy, gain=float(gain), bias=h, iterations=iterations, span=float(span))


def _drift_jump(h, d, dd, span, sweep, fail0, succ0, fail1, succ1, q, wf, ws):
    """Extrapolate h along the per-sweep increment d toward the next action flip.

    During a stable-policy phase each extra sweep adds approximately d, so the
    action-value gap at state s evolves affinely: gap(s) + t * slope(s). The
    iterate jumps toward the smallest positive flip time, but never so far
    that the residual non-invariance of d (its per-sweep change dd) would
    inject more than a fraction of the current span, which keeps repeated
    jumps stable.
    """
    t0, t1 = sweep(h)
    gap = t1 - t0
    slope = ((wf * d[fail1]).sum(axis=1) + (ws * d[succ1]).sum(axis=1)
             - ((1.0 - q) * d[fail0] + q * d[succ0]))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_flip = -gap / slope
    t_flip = t_flip[np.isfinite(t_flip) & (t_flip > 0.0)]
    jump = float(t_flip.min()) + 2.0 if t_flip.size else _NO_FLIP_JUMP
    if dd > 0.0:
        jump = min(jump, 0.25 * span / dd)
    return h + jump * d


def induced_kernel(model: MdpModel, policy: np.ndarray) -> sp.csr_matrix:
    """Sparse transition matrix of the chain obtained by following `policy`."""
    policy = np.asarray(policy)
    S = model.num_states
    n = model.dtmc.n
    q = model.q
    rows, cols, data = [], [], []
    a0 = np.nonzero(policy == 0)[0]
    a1 = np.nonzero(policy == 1)[0]

    rows.append(np.repeat(a0, 2))
    cols.append(np.stack([model._fail0[a0], model._succ0[a0]], axis=1).ravel())
    data.append(np.tile([1.0 - q, q], a0.size))

    rows.append(np.repeat(a1, 2 * n))
    cols.append(np.concatenate([model._fail1[a1], model._succ1[a1]], axis=1).ravel())
    w = model._w1[a1]
    data.append(np.concatenate([w * (1.0 - q), w * q], axis=1).ravel())

    P = sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(S, S))
    P.sum_duplicates()
    return P


def initial_distribution(model: MdpModel) -> np.ndarray:
    """Freshly synced start: mass pi_x on state (0, 1, x, x).

    Matches the simulator's initial condition, which pins down the evaluation
    of policies whose induced chain has several closed classes (e.g. the
    never-request policy, under which the held-sample coordinate is frozen).
    """
    v = np.zeros(model.num_states)
    pi = model.dtmc.stationary()
    for x in range(model.dtmc.n):
        v[model.index_of(MdpState(0, 1, x, x))] = pi[x]
    return v


def evaluate_policy(model: MdpModel, policy: np.ndarray) -> PolicyEvaluation:
    """Exact long-run (J, f) of a pure policy via its induced stationary distribution.

    Power iteration runs on the half-lazy kernel (I + P)/2, which has the same
    stationary distributions and absorption probabilities as P but converges
    for periodic induced chains as well.
    """
    policy = np.asarray(policy)
    if policy.shape != (model.num_states,):
        raise ValueError("policy must assign an action to every state")
    P = induced_kernel(model, policy)
    PT = P.T.tocsr()

    v = initial_distribution(model)
    for _ in range(EVAL_MAX_ITER):
        nxt = 0.5 * v + 0.5 * (PT @ v)
        if np.abs(nxt - v).sum() <= EVAL_TOL:
            v = nxt
            break
        v = nxt
    else:
        raise SolverError("policy evaluation power iteration did not converge")
    occ = v / v.sum()

    per_state_cost = (1.0 - model.q * policy) * model._cost0
    J = float(occ @ per_state_cost)
    f = float(occ @ policy)
    return PolicyEvaluation(avg_cost=J, avg_frequency=f, occupation=occ)
