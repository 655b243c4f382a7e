#!/usr/bin/env python3
"""Online tabular Q-learning against the exact oracle.

The learner sees only realized slot costs (never the transition matrices)
and still drives its running-average cost down toward the optimal policy's
level. The remaining gap is the price of the constant epsilon-greedy
exploration it keeps running.
"""

import numpy as np

import cache_rl as cr

g_chain, l_chain = cr.small_network_chains()
space = cr.StateSpace(g_chain, l_chain, cache_size=2)
name = "s3"
params = cr.PRESET_PARAMS[name]
oracle = cr.policy_iteration(space, 0.8, params)
oracle_avg = cr.long_run_average_cost(space, oracle.policy, params)
print(f"preset {name}, oracle long-run average cost: {oracle_avg:.2f}")

sc = cr.Scenario(
    name=name,
    g_chain=g_chain,
    l_chain=l_chain,
    cache_size=2,
    gamma=0.8,
    lambda_schedule=cr.PiecewiseCostSchedule.constant(params),
    learner="exact",
    learner_config=cr.QLearnerConfig(beta=0.8, epsilon=0.05, gamma=0.8),
    horizon=40_000,
    realizations=60,
    base_seed=11,
)
trace = cr.run_scenario(sc, oracle_compare=True)
print(f"simulating {sc.realizations} independent realizations of {sc.horizon} slots...")
print("\nslot    running-avg cost   cost/oracle   normalized Q error")
for t in (100, 1000, 5000, 20_000, 39_999):
    k = np.searchsorted(trace.error_slots, t)
    k = min(k, len(trace.error_slots) - 1)
    print(
        f"{t:>6}  {trace.run_avg_cost[t]:>16.1f}   {trace.run_avg_cost[t] / oracle_avg:>11.3f}"
        f"   {trace.norm_error[k]:>18.3f}"
    )

print("\nThe learner's cost approaches the oracle level; with epsilon = 0.05 it")
print("keeps paying a small exploration premium forever (5% of slots cache a")
print("uniformly random file set). Appending --oracle-compare metrics to CSV:")
cr.export_metrics(trace, "tabular_metrics.csv")
print("wrote tabular_metrics.csv")
