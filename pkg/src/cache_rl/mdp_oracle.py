"""Exact MDP solver: the ground-truth baseline for the learners.

With the popularity transition matrices known, the joint process over
(global state, local state, cache contents) is a finite MDP. The global and
local chains evolve independently of the caching decisions, and the action
component of the next state is deterministically the chosen action, so the
transition kernel factorizes as P^G[g, g'] * P^L[l, l'] * 1{a'' = a}.

States are indexed g-major, then local state, then action index, which makes
table layouts reproducible across runs. Ties in every argmin break toward
the lowest index. Policy evaluation solves the linear Bellman system with a
dense direct solve, so the oracle is intended for desk-scale instances only.
The oracle supports constant cost weights; time-varying weights are the
simulator's concern.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .caching_core import ActionSpace, CostParams, SystemState
from .popularity import MarkovChain


class StateSpace:
    """Joint state space over both chains and the feasible action set."""

    def __init__(self, g_chain: MarkovChain, l_chain: MarkovChain, cache_size: int):
        if g_chain.catalog_size != l_chain.catalog_size:
            raise ValueError("chains must share one catalog size")
        self.g_chain = g_chain
        self.l_chain = l_chain
        self.actions = ActionSpace(g_chain.catalog_size, cache_size)
        self.n_g = g_chain.n_states
        self.n_l = l_chain.n_states
        self.n_actions = len(self.actions)
        self.n_states = self.n_g * self.n_l * self.n_actions
        # Materialized action tables; this also rejects oversized spaces.
        self.action_files = self.actions.files_array()
        self.action_masks = self.actions.mask_matrix()
        m = self.actions.m
        # overlap[a, b] = |a & b|, refresh_counts[a, b] = |b \ a|
        overlap = self.action_masks @ self.action_masks.T
        self.refresh_counts = m - overlap

    @property
    def catalog_size(self) -> int:
        return self.g_chain.catalog_size

    @property
    def cache_size(self) -> int:
        return self.actions.m

    def state_index(self, g: int, l: int, a_idx: int) -> int:
        if not (0 <= g < self.n_g and 0 <= l < self.n_l and 0 <= a_idx < self.n_actions):
            raise ValueError("state components out of range")
        return (g * self.n_l + l) * self.n_actions + a_idx

    def state_components(self, index: int) -> tuple[int, int, int]:
        if not 0 <= index < self.n_states:
            raise ValueError(f"state index {index} out of range")
        gl, a_idx = divmod(index, self.n_actions)
        g, l = divmod(gl, self.n_l)
        return g, l, a_idx

    def system_state(self, index: int) -> SystemState:
        g, l, a_idx = self.state_components(index)
        return SystemState(g=g, l=l, action=self.actions.action(a_idx))

    def uncached_expected_masses(self) -> tuple[np.ndarray, np.ndarray]:
        """Expected next-slot uncached mass per (chain state, action).

        Returns (global (n_g, |A|), local (n_l, |A|)) arrays of
        1 - E[p']^T a, where E[p'] is the one-step conditional mean profile.
        """
        exp_g = self.g_chain.transition @ self.g_chain.profile_matrix()
        exp_l = self.l_chain.transition @ self.l_chain.profile_matrix()
        return 1.0 - exp_g @ self.action_masks.T, 1.0 - exp_l @ self.action_masks.T

    def expected_cost_matrix(self, params: CostParams) -> np.ndarray:
        """Mean slot cost for every (state, action) pair, shape (|S|, |A|)."""
        un_g, un_l = self.uncached_expected_masses()
        # shape (n_g, n_l, n_actions_prev, n_actions)
        cbar = (
            params.lambda1 * self.refresh_counts[None, None, :, :]
            + params.lambda2 * un_l[None, :, None, :]
            + params.lambda3 * un_g[:, None, None, :]
        )
        return cbar.reshape(self.n_states, self.n_actions)


def transition_prob(space: StateSpace, s: int, a_idx: int, s_next: int) -> float:
    """Probability of moving from state ``s`` to ``s_next`` under action ``a_idx``."""
    g, l, _ = space.state_components(s)
    g2, l2, a2 = space.state_components(s_next)
    if not 0 <= a_idx < space.n_actions:
        raise ValueError("action index out of range")
    if a2 != a_idx:
        return 0.0
    return float(space.g_chain.transition[g, g2] * space.l_chain.transition[l, l2])


def _policy_transition_matrix(space: StateSpace, policy: np.ndarray) -> np.ndarray:
    """Dense |S| x |S| transition matrix of the chain induced by ``policy``."""
    n_gl = space.n_g * space.n_l
    kron = np.kron(space.g_chain.transition, space.l_chain.transition)  # (n_gl, n_gl)
    p_pi = np.zeros((space.n_states, space.n_states))
    gl_of_state = np.arange(space.n_states) // space.n_actions
    cols = np.arange(n_gl)[None, :] * space.n_actions + np.asarray(policy)[:, None]
    p_pi[np.arange(space.n_states)[:, None], cols] = kron[gl_of_state]
    return p_pi


def policy_evaluation(
    space: StateSpace, policy: np.ndarray, gamma: float, params: CostParams
) -> np.ndarray:
    """Exact value of a deterministic policy via a dense linear solve."""
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    policy = np.asarray(policy, dtype=np.int64)
    if policy.shape != (space.n_states,):
        raise ValueError("policy must assign one action per state")
    cbar = space.expected_cost_matrix(params)
    c_pi = cbar[np.arange(space.n_states), policy]
    p_pi = _policy_transition_matrix(space, policy)
    a = np.eye(space.n_states) - gamma * p_pi
    return np.linalg.solve(a, c_pi)


def q_from_value(
    space: StateSpace, v: np.ndarray, gamma: float, params: CostParams
) -> np.ndarray:
    """State-action values implied by a state value function."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (space.n_states,):
        raise ValueError("value function has wrong length")
    v_t = v.reshape(space.n_g, space.n_l, space.n_actions)
    w = np.einsum("gh,lm,hma->gla", space.g_chain.transition, space.l_chain.transition, v_t)
    cbar = space.expected_cost_matrix(params).reshape(
        space.n_g, space.n_l, space.n_actions, space.n_actions
    )
    q = cbar + gamma * w[:, :, None, :]
    return q.reshape(space.n_states, space.n_actions)


def policy_improvement(space: StateSpace, q: np.ndarray) -> np.ndarray:
    """Greedy policy for a Q table; ties go to the lowest action index."""
    q = np.asarray(q)
    if q.shape != (space.n_states, space.n_actions):
        raise ValueError("Q table has wrong shape")
    return np.argmin(q, axis=1)


@dataclass(frozen=True)
class PolicyIterationResult:
    policy: np.ndarray
    values: np.ndarray
    q: np.ndarray
    iterations: int
    value_history: tuple[np.ndarray, ...]


def policy_iteration(
    space: StateSpace,
    gamma: float,
    params: CostParams,
    initial_policy: np.ndarray | None = None,
) -> PolicyIterationResult:
    """Alternate exact evaluation and greedy improvement to a fixed point.

    The default initial policy caches files {1..M} (action index 0) in every
    state, so runs are reproducible.
    """
    if initial_policy is None:
        policy = np.zeros(space.n_states, dtype=np.int64)
    else:
        policy = np.asarray(initial_policy, dtype=np.int64).copy()
        if policy.shape != (space.n_states,) or np.any(policy < 0) or np.any(
            policy >= space.n_actions
        ):
            raise ValueError("initial policy is invalid for this space")
    history = []
    iterations = 0
    while True:
        iterations += 1
        values = policy_evaluation(space, policy, gamma, params)
        history.append(values)
        q = q_from_value(space, values, gamma, params)
        new_policy = policy_improvement(space, q)
        if np.array_equal(new_policy, policy):
            return PolicyIterationResult(
                policy=policy,
                values=values,
                q=q,
                iterations=iterations,
                value_history=tuple(history),
            )
        policy = new_policy


def bellman_optimality_residual(
    space: StateSpace, q: np.ndarray, gamma: float, params: CostParams
) -> float:
    """Max absolute violation of the optimality recursion by a Q table."""
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (space.n_states, space.n_actions):
        raise ValueError("Q table has wrong shape")
    v = q.min(axis=1)
    target = q_from_value(space, v, gamma, params)
    return float(np.abs(q - target).max())


def long_run_average_cost(
    space: StateSpace,
    policy: np.ndarray,
    params: CostParams,
    initial_action_index: int = 0,
    tol: float = 1e-13,
    max_iter: int = 200_000,
) -> float:
    """Long-run per-slot mean cost of a deterministic policy.

    Starts from the simulator's initial distribution (uniform over chain
    states, cache = action ``initial_action_index``) and iterates the
    damped chain (I + P)/2 to its limiting distribution, so periodic
    chains converge too.
    """
    policy = np.asarray(policy, dtype=np.int64)
    p_pi = _policy_transition_matrix(space, policy)
    dist = np.zeros(space.n_states)
    for g in range(space.n_g):
        for l in range(space.n_l):
            dist[space.state_index(g, l, initial_action_index)] = 1.0 / (space.n_g * space.n_l)
    for _ in range(max_iter):
        nxt = 0.5 * (dist + dist @ p_pi)
        if np.abs(nxt - dist).sum() < tol:
            dist = nxt
            break
        dist = nxt
    cbar = space.expected_cost_matrix(params)
    c_pi = cbar[np.arange(space.n_states), policy]
    return float(dist @ c_pi)


def _files_label(space: StateSpace, a_idx: int) -> str:
    return ";".join(str(f + 1) for f in space.action_files[a_idx])


def export_policy_csv(space: StateSpace, policy: np.ndarray, values: np.ndarray, path) -> None:
    """Write per-state optimal actions and values (1-based file lists)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["state_index", "g_state", "l_state", "cached_files", "action_index", "action_files", "value"]
        )
        for s in range(space.n_states):
            g, l, a_prev = space.state_components(s)
            writer.writerow(
                [
                    s,
                    g,
                    l,
                    _files_label(space, a_prev),
                    int(policy[s]),
                    _files_label(space, int(policy[s])),
                    f"{values[s]:.17g}",
                ]
            )


def export_qtable_csv(space: StateSpace, q: np.ndarray, path) -> None:
    """Write the full Q table as (state index, action index, value) rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["state_index", "action_index", "action_files", "value"])
        for s in range(space.n_states):
            for a in range(space.n_actions):
                writer.writerow([s, a, _files_label(space, a), f"{q[s, a]:.17g}"])
