"""Sampling-policy toolkit for freshness-aware monitoring of a Markov source over a lossy channel.

Computes request policies that minimize the long-run probability of the
monitor assuming a wrong source state (the per-slot detection-age cost),
subject to a budget on the average request frequency, and simulates the
physical pull/retransmission system to validate them.
"""

from .markov import Dtmc
from .mdp import CostVariant, MdpModel, MdpState, TruncationConfig
from .solver import (PolicyEvaluation, RviConfig, RviSolution, SolverError,
                     evaluate_policy, rvi_solve)
from .dual import (BracketError, CmdpSolution, DualConfig, DualProbe, MixedPolicy,
                   frequency_of_lambda, mixing_probability, solve_cmdp)
from .sim import (Clairvoyant, EpisodeMetrics, MixedTablePolicy, Periodic, SimConfig,
                  SimMetrics, TablePolicy, ZeroWait, aggregate, clairvoyant_actions,
                  deploy_table, map_estimate, run_episode, simulate)

__version__ = "0.1.0"
