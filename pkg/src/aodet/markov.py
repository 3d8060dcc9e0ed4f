"""Finite ergodic discrete-time Markov chains with cached matrix powers.

The rest of the package hits n-step transition probabilities constantly while
building cost tables and transition kernels, so powers of the transition
matrix are precomputed up to a caller-chosen bound and kept immutable.
"""

from __future__ import annotations

from math import gcd

import numpy as np

ROW_SUM_TOL = 1e-12
STATIONARY_TOL = 1e-12
STATIONARY_MAX_ITER = 10**6


class Dtmc:
    """Row-stochastic transition matrix over states 0..n-1.

    Construction validates stochasticity and ergodicity (a single
    communicating class that is aperiodic); non-ergodic inputs are rejected
    because every downstream solver assumes a unichain source model.
    """

    def __init__(self, rows, max_power: int = 0):
        P = np.array(rows, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError("transition matrix must be square")
        n = int(P.shape[0])
        if n < 2:
            raise ValueError("chain needs at least 2 states")
        if np.any(P < 0.0) or np.any(P > 1.0):
            raise ValueError("transition probabilities must lie in [0, 1]")
        row_sums = P.sum(axis=1)
        bad = np.nonzero(np.abs(row_sums - 1.0) > ROW_SUM_TOL)[0]
        if bad.size:
            r = int(bad[0])
            raise ValueError(f"row {r} sums to {row_sums[r]:.12g}, expected 1")
        _check_ergodic(P)

        self.n = n
        self.P = P
        self.P.setflags(write=False)
        self._cum = _cumulative_rows(P)
        self._powers = [np.eye(n)]
        self._powers[0].setflags(write=False)
        self._stationary = None
        self.extend_powers(max_power)

    @classmethod
    def _unchecked(cls, rows) -> "Dtmc":
        # Test fixture path: skips the ergodicity check (row-stochasticity is
        # still required for sampling to make sense).
        self = cls.__new__(cls)
        P = np.array(rows, dtype=float)
        self.n = int(P.shape[0])
        self.P = P
        self.P.setflags(write=False)
        self._cum = _cumulative_rows(P)
        self._powers = [np.eye(self.n)]
        self._stationary = None
        return self

    @property
    def max_power(self) -> int:
        return len(self._powers) - 1

    def extend_powers(self, k: int) -> None:
        """Grow the power cache so that n_step(k) is available."""
        while self.max_power < k:
            nxt = self._powers[-1] @ self.P
            nxt.setflags(write=False)
            self._powers.append(nxt)

    def n_step(self, k: int) -> np.ndarray:
        """P^k, the k-step transition matrix (cached, read-only)."""
        if not 0 <= k <= self.max_power:
            raise ValueError(f"power {k} outside cache bound {self.max_power}")
        return self._powers[k]

    def self_stay_power(self, j: int, k: int) -> float:
        """(P[j,j])^k: probability of k consecutive self-loops at j.

        This is the scalar one-step self-transition probability raised to the
        k-th power, not the (j, j) entry of P^k.
        """
        if not 0 <= j < self.n:
            raise ValueError(f"state {j} out of range")
        if k < 0:
            raise ValueError("exponent must be nonnegative")
        return float(self.P[j, j]) ** k

    def stationary(self) -> np.ndarray:
        """Fixed point of the transition matrix, by power iteration."""
        if self._stationary is None:
            pi = np.full(self.n, 1.0 / self.n)
            for _ in range(STATIONARY_MAX_ITER):
                nxt = pi @ self.P
                if np.abs(nxt - pi).sum() <= STATIONARY_TOL:
                    pi = nxt
                    break
                pi = nxt
            else:
                raise RuntimeError("stationary distribution did not converge; chain may not be ergodic")
            pi = pi / pi.sum()
            pi.setflags(write=False)
            self._stationary = pi
        return self._stationary

    def cumulative_rows(self) -> np.ndarray:
        """Per-row cumulative probabilities, last column pinned to 1.0 (for inverse-CDF sampling)."""
        return self._cum

    def step_sample(self, i: int, rng: np.random.Generator) -> int:
        """Draw the successor of state i from row i of P."""
        if not 0 <= i < self.n:
            raise ValueError(f"state {i} out of range")
        u = rng.random()
        return int(np.searchsorted(self._cum[i], u, side="right"))


def _cumulative_rows(P: np.ndarray) -> np.ndarray:
    cum = np.cumsum(P, axis=1)
    cum[:, -1] = 1.0
    cum.setflags(write=False)
    return cum


def _check_ergodic(P: np.ndarray) -> None:
    """Reject chains that are reducible or periodic.

    Strong connectivity is checked with forward and backward reachability on
    the support graph; the period is the gcd of (depth[u] + 1 - depth[v])
    over all support edges u -> v, using BFS depths from state 0.
    """
    n = P.shape[0]
    support = P > 0.0
    fwd = _reachable(support, 0)
    bwd = _reachable(support.T, 0)
    if not (fwd.all() and bwd.all()):
        raise ValueError("chain is not ergodic: support graph is not a single communicating class")

    depth = _bfs_depths(support, 0)
    period = 0
    for u in range(n):
        for v in np.nonzero(support[u])[0]:
            period = gcd(period, depth[u] + 1 - depth[int(v)])
    if period != 1:
        raise ValueError(f"chain is not ergodic: periodic with period {period}")


def _reachable(adj: np.ndarray, start: int) -> np.ndarray:
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[start] = True
    stack = [start]
    while stack:
        u = stack.pop()
        for v in np.nonzero(adj[u])[0]:
            if not seen[v]:
                seen[v] = True
                stack.append(int(v))
    return seen


def _bfs_depths(adj: np.ndarray, start: int) -> list:
    n = adj.shape[0]
    depth = [-1] * n
    depth[start] = 0
    queue = [start]
    while queue:
        nxt = []
        for u in queue:
            for v in np.nonzero(adj[u])[0]:
                v = int(v)
                if depth[v] < 0:
                    depth[v] = depth[u] + 1
                    nxt.append(v)
        queue = nxt
    return depth
