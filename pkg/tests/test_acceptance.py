"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

Scales and tolerances are pinned here and are not tuned at runtime. Three
checks encode externally reported values and trends that the model semantics
chosen for this package (inclusive per-slot cost, counters truncated with
forced delivery at the tau2 cap) provably do not reproduce; they are asserted
as stated and are expected to fail, with the analysis spelled out next to the
assertion:

* criterion 5: the reported multiplier/randomization pair (lambda* near 0.3,
  mu near 0.43) is not attained by any of the six parameter combinations; the
  solver itself is verified against an independent occupation-measure LP, so
  the gap is a modeling-semantics difference, not a solver defect;
* criterion 7c: the exact constrained optimum is not decreasing in p01;
* criterion 8: the low-frequency orderings hold, but the solved policy's
  fresh-state error does grow along the p10 sweep (a noisier source with a
  fixed request budget), and at nu = 0.6 it overtakes the zero-wait error on
  the upper half of the sweep.
"""

import time
import warnings

import numpy as np
import pytest

from aodet import (Clairvoyant, CostVariant, Dtmc, MdpModel, MdpState, MixedTablePolicy,
                   Periodic, SimConfig, TablePolicy, TruncationConfig, ZeroWait,
                   evaluate_policy, run_episode, rvi_solve, simulate, solve_cmdp)
from aodet.cli import monotone_grid
from aodet.sim import deploy_table
from conftest import PAPER_MATRIX, random_ergodic_matrix
from _oracles import exhaustive_policy_minimum


def report(num, ok, detail=""):
    print(f"\nACCEPTANCE {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def paper_model(p01=0.02, p10=0.01, q=0.8, variant=CostVariant.INCLUSIVE, caps=(20, 20)):
    return MdpModel(Dtmc([[1 - p01, p01], [p10, 1 - p10]]), q=q,
                    trunc=TruncationConfig(*caps), variant=variant)


def quiet_simulate(model, policy, cfg):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return simulate(model, policy, cfg)


def test_criterion_01_cost_algebra_oracle():
    """Closed-form exclusive cost equals the unsimplified sum, 1e-12, under 1 s."""
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 5))
        q = float(rng.uniform(0.05, 1.0))
        m = MdpModel(Dtmc(random_ergodic_matrix(rng, n)), q=q,
                     trunc=TruncationConfig(3, 3), variant=CostVariant.EXCLUSIVE)
        for _ in range(5):
            tau1 = int(rng.integers(0, 4))
            tau2 = int(rng.integers(1, 4))
            i = int(rng.integers(0, n))
            j = i if tau1 == 0 else int(rng.integers(0, n))
            u = int(rng.integers(0, 2))
            P_t1 = m.dtmc.n_step(tau1)
            oracle = (1.0 - q * u) * sum(
                P_t1[i, jp] * (1.0 - m.dtmc.self_stay_power(jp, tau2 - 1))
                for jp in range(n) if jp != i)
            worst = max(worst, abs(m.cost(MdpState(tau1, tau2, i, j), u) - oracle))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and elapsed < 1.0
    report(1, ok, f"max deviation {worst:.2e}, {elapsed:.2f} s")
    assert worst <= 1e-12
    assert elapsed < 1.0


def _renewal_check(model, policy, k, m_cycles, first_reception):
    horizon = first_reception + k * m_cycles
    cfg = SimConfig(horizon=horizon, replications=1, warmup=first_reception, seed=21)
    em, trace = run_episode(model, policy, 0, cfg, collect_trace=True)
    receptions = [t for t in range(1, horizon + 1) if trace.success[t]]
    assert receptions[0] == first_reception and receptions[-1] == horizon
    worst = 0.0
    penalty_total = 0.0
    for a, b in zip(receptions, receptions[1:]):
        tau = b - a - 1
        j = int(trace.i[a + 1])
        p = model.dtmc.P[j, j]
        closed_form = tau - (1 - p**tau) / (1 - p)
        cost_sum = sum(
            model.cost(MdpState(int(trace.tau1[t]), int(trace.tau2[t]), int(trace.i[t]),
                                int(trace.i[t])), int(trace.action[t]))
            for t in range(a + 1, b + 1))
        worst = max(worst, abs(cost_sum - closed_form))
        penalty_total += closed_form
    age_penalty_avg = penalty_total / (horizon - first_reception)
    return worst, em.avg_aod, age_penalty_avg


def test_criterion_02_lossless_channel_renewal_identity():
    """q=1, inclusive: per-interval sums and the episode average are exact;
    the exclusive variant breaks the identity (zero cost whenever tau1 = 0)."""
    m = paper_model(q=1.0)
    worst1, avg1, pen1 = _renewal_check(m, Periodic(7), 7, 350, 1)

    thresh = np.zeros(m.num_states, dtype=np.int8)
    for s in m.states:
        if s.tau2 >= 4:
            thresh[m.index_of(s)] = 1
    worst2, avg2, pen2 = _renewal_check(m, TablePolicy(thresh), 4, 500, 4)

    m_ex = paper_model(q=1.0, variant=CostVariant.EXCLUSIVE)
    _, avg_ex, pen_ex = _renewal_check(m_ex, Periodic(7), 7, 350, 1)
    exclusive_fails = avg_ex == 0.0 and pen_ex > 0.01 and abs(avg_ex - pen_ex) > 1e-9

    ok = (worst1 <= 1e-10 and worst2 <= 1e-10
          and abs(avg1 - pen1) <= 1e-9 and abs(avg2 - pen2) <= 1e-9
          and exclusive_fails)
    report(2, ok, f"interval dev {max(worst1, worst2):.2e}, "
                  f"avg dev {max(abs(avg1 - pen1), abs(avg2 - pen2)):.2e}, "
                  f"exclusive avg {avg_ex} vs penalty {pen_ex:.4f}")
    assert worst1 <= 1e-10 and worst2 <= 1e-10
    assert abs(avg1 - pen1) <= 1e-9
    assert abs(avg2 - pen2) <= 1e-9
    assert exclusive_fails


def test_criterion_03_rvi_vs_exhaustive_enumeration():
    """12-state instance: RVI gain equals the minimum over all 4096 pure policies."""
    start = time.perf_counter()
    lam = 0.3
    m = paper_model(caps=(1, 2))
    assert m.num_states == 12
    brute = exhaustive_policy_minimum(m, lam)
    sol = rvi_solve(m, lam)
    elapsed = time.perf_counter() - start
    ok = abs(brute - sol.gain) <= 1e-8 and elapsed < 30.0
    report(3, ok, f"brute {brute:.10f} vs rvi {sol.gain:.10f}, {elapsed:.1f} s")
    assert abs(brute - sol.gain) <= 1e-8
    assert elapsed < 30.0


def test_criterion_04_dual_frequency_monotone():
    """Paper defaults: f(lambda) nonincreasing over the probe grid {0, 0.05, ..., 1}."""
    m = paper_model()
    fs = []
    for lam in [round(0.05 * k, 2) for k in range(21)]:
        sol = rvi_solve(m, lam)
        fs.append(evaluate_policy(m, sol.policy).avg_frequency)
    ok = all(fs[k] >= fs[k + 1] - 1e-9 for k in range(len(fs) - 1))
    report(4, ok, "f: " + " ".join(f"{f:.3f}" for f in fs))
    assert ok


def test_criterion_05_reported_multiplier_reproduction():
    """Best-effort reproduction of lambda* ~ 0.3 and mu ~ 0.428 across the six
    combinations (three p01 values, both cost variants).

    EXPECTED TO FAIL under this package's semantics: with counters starting at
    tau1 = 0, the printed-form EXCLUSIVE cost collapses (never requesting is
    free, lambda* = 0), and the INCLUSIVE default puts the frequency crossing
    f(lambda) = 0.1 near lambda 0.58-0.60 with mu in 0.40-0.81. The dual
    solution is confirmed optimal against an occupation-measure LP to 1e-10,
    so the discrepancy is a semantics gap with the reported numbers, which
    were obtained from an implementation whose exact cost convention and
    counter floor are not stated.
    """
    results = []
    for p01 in (0.02, 0.03, 0.04):
        for variant in (CostVariant.INCLUSIVE, CostVariant.EXCLUSIVE):
            sol = solve_cmdp(paper_model(p01=p01, variant=variant), 0.1)
            results.append((p01, variant.value, sol.lambda_star, sol.mixed.mu))
    for p01, variant, lam, mu in results:
        print(f"  p01={p01} {variant:9s}: lambda*={lam:.4f} mu={mu:.4f}")
    hits = [r for r in results if 0.25 <= r[2] <= 0.35 and 0.38 <= r[3] <= 0.48]
    report(5, bool(hits), f"{len(hits)}/6 combinations inside the reported window")
    assert hits, "no combination reproduces lambda* in [0.25, 0.35] with mu in [0.38, 0.48]"


def _decision_grid(sol, model):
    dominant = sol.mixed.pi_minus if sol.mixed.mu >= 0.5 else sol.mixed.pi_plus
    t1m, t2m = model.trunc.tau1_max, model.trunc.tau2_max
    g = np.zeros((t1m + 1, t2m), dtype=int)
    for tau1 in range(t1m + 1):
        for tau2 in range(1, t2m + 1):
            g[tau1, tau2 - 1] = dominant[model.index_of(MdpState(tau1, tau2, 0, 0))]
    return g


def test_criterion_06_threshold_structure_and_nesting():
    """Decision grids at (i, j) = (0, 0) are componentwise monotone and nested in p01."""
    grids = {}
    for p01 in (0.02, 0.03, 0.04):
        model = paper_model(p01=p01)
        grids[p01] = _decision_grid(solve_cmdp(model, 0.1), model)
    monotone = {p01: monotone_grid(g) for p01, g in grids.items()}
    nested = bool((grids[0.03] >= grids[0.02]).all() and (grids[0.04] >= grids[0.03]).all())
    nonempty = all(g.sum() > 0 for g in grids.values())
    ok = all(monotone.values()) and nested and nonempty
    report(6, ok, f"monotone={monotone}, nested={nested}, "
                  f"region sizes={[int(g.sum()) for g in grids.values()]}")
    assert all(monotone.values())
    assert nested
    assert nonempty


def test_criterion_07_trend_suite():
    """Exact constrained optimum vs q (strictly decreasing), nu (nonincreasing),
    and p01 (claimed decreasing).

    The p01 leg is EXPECTED TO FAIL: the exact optimum (LP-confirmed) is
    0.046010, 0.048005, 0.048009 for p01 = 0.02, 0.03, 0.04. Raising p01 makes
    the state currently held decay faster, which outweighs the higher
    stationary weight of the sticky state under the inclusive cost.
    """
    js_q = [solve_cmdp(paper_model(q=q), 0.1).J_mixed for q in (0.5, 0.65, 0.8, 0.95)]
    q_ok = all(js_q[k] > js_q[k + 1] for k in range(3))

    m_nu = paper_model(p01=0.03)
    js_nu = [solve_cmdp(m_nu, nu).J_mixed for nu in (0.05, 0.1, 0.2, 0.4)]
    nu_ok = all(js_nu[k] >= js_nu[k + 1] - 1e-9 for k in range(3))

    js_p = [solve_cmdp(paper_model(p01=p01), 0.1).J_mixed for p01 in (0.02, 0.03, 0.04)]
    p_ok = all(js_p[k] > js_p[k + 1] for k in range(2))

    ok = q_ok and nu_ok and p_ok
    report(7, ok, f"J(q)={[f'{v:.5f}' for v in js_q]} dec={q_ok}; "
                  f"J(nu)={[f'{v:.5f}' for v in js_nu]} noninc={nu_ok}; "
                  f"J(p01)={[f'{v:.5f}' for v in js_p]} dec={p_ok}")
    assert q_ok, "average cost must fall as the channel improves"
    assert nu_ok, "average cost must not rise as the budget loosens"
    assert p_ok, "claimed decrease in p01 (does not hold for the inclusive cost)"


def test_criterion_08_estimation_error_comparison():
    """Fresh-state and MAP error orderings against the zero-wait baseline over
    the p10 sweep at q = 0.8, p01 = 0.1, full scale (20 x 1e6 slots).

    The nu = 0.2 and nu = 0.8 orderings and the zero-wait growth hold; the
    nu = 0.6 ordering on the upper half of the sweep and the no-increase claim
    for the solved policy are EXPECTED TO FAIL (see module docstring).
    """
    p10_grid = [round(0.01 * k, 2) for k in range(1, 11)]
    cfg = SimConfig(horizon=10**6, replications=20, warmup=10**4, seed=11)
    data = {}
    for p10 in p10_grid:
        model = paper_model(p01=0.1, p10=p10)
        entry = {}
        for nu in (0.2, 0.6, 0.8):
            sol = solve_cmdp(model, nu)
            entry[nu] = quiet_simulate(model, MixedTablePolicy(sol.mixed), cfg)
        entry["zw"] = quiet_simulate(model, ZeroWait(), cfg)
        data[p10] = entry
        e = entry
        print(f"  p10={p10:.2f}: fresh zw={e['zw'].fresh_error.mean:.4f} "
              f"nu02={e[0.2].fresh_error.mean:.4f} nu06={e[0.6].fresh_error.mean:.4f} "
              f"nu08={e[0.8].fresh_error.mean:.4f}")

    def fresh(p10, key):
        return data[p10][key].fresh_error

    checks = {
        "nu=0.6 fresh below zero-wait at every point": all(
            fresh(p, 0.6).mean < fresh(p, "zw").mean for p in p10_grid),
        "nu=0.8 fresh below zero-wait at every point": all(
            fresh(p, 0.8).mean < fresh(p, "zw").mean for p in p10_grid),
        "nu=0.2 fresh above zero-wait at every point": all(
            fresh(p, 0.2).mean > fresh(p, "zw").mean for p in p10_grid),
        "zero-wait fresh error grows along the sweep": all(
            fresh(p10_grid[k], "zw").mean < fresh(p10_grid[k + 1], "zw").mean
            for k in range(9)),
        "solved-policy fresh error does not increase (nu=0.6)": all(
            fresh(p10_grid[k + 1], 0.6).mean <= fresh(p10_grid[k], 0.6).mean
            + 2 * (fresh(p10_grid[k], 0.6).se + fresh(p10_grid[k + 1], 0.6).se)
            for k in range(9)),
        "solved-policy fresh error does not increase (nu=0.8)": all(
            fresh(p10_grid[k + 1], 0.8).mean <= fresh(p10_grid[k], 0.8).mean
            + 2 * (fresh(p10_grid[k], 0.8).se + fresh(p10_grid[k + 1], 0.8).se)
            for k in range(9)),
        "MAP error nu=0.6 <= zero-wait within 2 SE": all(
            data[p][0.6].map_error.mean <= data[p]["zw"].map_error.mean
            + 2 * (data[p][0.6].map_error.se + data[p]["zw"].map_error.se)
            for p in p10_grid),
        "MAP error nu=0.8 <= zero-wait within 2 SE": all(
            data[p][0.8].map_error.mean <= data[p]["zw"].map_error.mean
            + 2 * (data[p][0.8].map_error.se + data[p]["zw"].map_error.se)
            for p in p10_grid),
    }
    for name, passed in checks.items():
        print(f"    {'ok ' if passed else 'XX '} {name}")
    failures = [name for name, passed in checks.items() if not passed]
    report(8, not failures, f"{len(checks) - len(failures)}/{len(checks)} orderings hold")
    assert not failures, f"failed orderings: {failures}"


def test_criterion_09_exact_vs_simulated_consistency():
    """Simulated (J, f) of observable pure policies match exact evaluation within 2 SE."""
    model = paper_model()
    cfg = SimConfig(horizon=200_000, replications=20, warmup=10**4, seed=3)
    policies = {
        "never-sample": np.zeros(model.num_states, dtype=np.int8),
        "always-sample": np.ones(model.num_states, dtype=np.int8),
    }
    rvi_policy = rvi_solve(model, 0.3).policy
    _, jdep = deploy_table(model, rvi_policy)
    if not jdep:
        policies["rvi(0.3)"] = rvi_policy
    lines = []
    ok = True
    for name, table in policies.items():
        ev = evaluate_policy(model, table)
        sm = quiet_simulate(model, TablePolicy(table), cfg)
        dj = abs(sm.avg_aod.mean - ev.avg_cost)
        df = abs(sm.freq.mean - ev.avg_frequency)
        ok_here = dj <= 2 * max(sm.avg_aod.se, 1e-9) and df <= 2 * max(sm.freq.se, 1e-9)
        ok = ok and ok_here
        lines.append(f"{name}: dJ={dj:.2e} (se {sm.avg_aod.se:.2e}), "
                     f"df={df:.2e} (se {sm.freq.se:.2e})")
    if "rvi(0.3)" not in policies:
        lines.append("rvi(0.3) depends on the unobservable held state; consistency "
                     "check applies to observable policies only (downgraded per design)")
    report(9, ok, "; ".join(lines))
    assert ok


def test_criterion_10_baseline_frequencies():
    """Zero-wait frequency equals q; clairvoyant equals the stationary change rate."""
    model = paper_model()
    cfg = SimConfig(horizon=200_000, replications=20, warmup=10**4, seed=3)
    zw = simulate(model, ZeroWait(), cfg)
    cv = simulate(model, Clairvoyant(), cfg)
    pi = model.dtmc.stationary()
    change_rate = float(sum(pi[i] * (1 - model.dtmc.P[i, i]) for i in range(2)))
    zw_ok = abs(zw.freq.mean - 0.8) <= 3 * max(zw.freq.se, 1e-12)
    cv_ok = abs(cv.freq.mean - change_rate) <= 3 * max(cv.freq.se, 1e-12)
    report(10, zw_ok and cv_ok,
           f"zero-wait {zw.freq.mean:.5f} vs q=0.8 (se {zw.freq.se:.1e}); "
           f"clairvoyant {cv.freq.mean:.6f} vs {change_rate:.6f} (se {cv.freq.se:.1e})")
    assert zw_ok
    assert cv_ok
