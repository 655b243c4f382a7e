"""Independent reference implementations used to cross-check the solvers.

Everything here is built from first principles (explicit loops over states,
definitional cost sums, itertools enumeration) so it shares no code path
with the vectorized solvers it validates.
"""

from __future__ import annotations

import itertools

import numpy as np

from cache_rl.caching_core import SystemState, aggregate_cost


def first_principles_tables(space, params):
    """Expected-cost matrix and transition structure via explicit sums.

    Returns (cbar (nS, nA), succ (nS, nA, nGL) state indices,
    prob (nS, nA, nGL)) where nGL enumerates joint next chain states.
    """
    n_s, n_a = space.n_states, space.n_actions
    g_ch, l_ch = space.g_chain, space.l_chain
    n_gl = g_ch.n_states * l_ch.n_states
    cbar = np.zeros((n_s, n_a))
    succ = np.zeros((n_s, n_a, n_gl), dtype=np.int64)
    prob = np.zeros((n_s, n_a, n_gl))
    for s in range(n_s):
        g, l, a_prev = space.state_components(s)
        prev = SystemState(g=g, l=l, action=space.actions.action(a_prev))
        for a in range(n_a):
            act = space.actions.action(a)
            k = 0
            for g2 in range(g_ch.n_states):
                for l2 in range(l_ch.n_states):
                    p = g_ch.transition[g, g2] * l_ch.transition[l, l2]
                    cbar[s, a] += p * aggregate_cost(
                        prev, act, g_ch.states[g2], l_ch.states[l2], params
                    )
                    succ[s, a, k] = space.state_index(g2, l2, a)
                    prob[s, a, k] = p
                    k += 1
    return cbar, succ, prob


def value_iteration_oracle(space, gamma, params, tol=1e-13):
    """Optimal policy/values/Q by plain value iteration to a tight tolerance."""
    cbar, succ, prob = first_principles_tables(space, params)
    v = np.zeros(space.n_states)
    while True:
        q = cbar + gamma * (prob * v[succ]).sum(axis=2)
        v_new = q.min(axis=1)
        if np.abs(v_new - v).max() <= tol * max(1.0, np.abs(v_new).max()):
            return q.argmin(axis=1), v_new, q
        v = v_new


def brute_force_optimal(space, gamma, params, chunk=16384):
    """Enumerate every deterministic policy and evaluate each exactly.

    Returns (per-state minimum value over all policies, one policy attaining
    the minimum everywhere). Feasible only when |A| ** |S| is small.
    """
    n_s, n_a = space.n_states, space.n_actions
    cbar, succ, prob = first_principles_tables(space, params)
    # dense per-action kernels for batched policy evaluation
    p_full = np.zeros((n_s, n_a, n_s))
    for s in range(n_s):
        for a in range(n_a):
            np.add.at(p_full[s, a], succ[s, a], prob[s, a])
    eye = np.eye(n_s)
    s_idx = np.arange(n_s)
    v_min = np.full(n_s, np.inf)
    best_policy = None
    best_sum = np.inf
    policies = itertools.product(range(n_a), repeat=n_s)
    while True:
        batch = np.array(list(itertools.islice(policies, chunk)), dtype=np.int64)
        if batch.size == 0:
            break
        p_pi = p_full[s_idx[None, :], batch]
        c_pi = cbar[s_idx[None, :], batch]
        values = np.linalg.solve(eye[None] - gamma * p_pi, c_pi[..., None])[..., 0]
        v_min = np.minimum(v_min, values.min(axis=0))
        sums = values.sum(axis=1)
        k = int(sums.argmin())
        if sums[k] < best_sum:
            best_sum = sums[k]
            best_policy = batch[k]
    return v_min, best_policy


def random_instance(rng, f=4, m=1, n_g=2, n_l=2, lam_high=800.0):
    """Random small instance (chains + cost params) for oracle tests."""
    import cache_rl as cr

    g_states = tuple(cr.PopularityProfile(rng.dirichlet(np.ones(f))) for _ in range(n_g))
    l_states = tuple(cr.PopularityProfile(rng.dirichlet(np.ones(f))) for _ in range(n_l))
    g_chain = cr.MarkovChain(states=g_states, transition=rng.dirichlet(np.ones(n_g), size=n_g))
    l_chain = cr.MarkovChain(states=l_states, transition=rng.dirichlet(np.ones(n_l), size=n_l))
    params = cr.CostParams(*rng.uniform(0.0, lam_high, size=3))
    space = cr.StateSpace(g_chain, l_chain, m)
    return space, params
