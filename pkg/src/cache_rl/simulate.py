"""Slot-structured simulation engine.

Each slot runs the same protocol: the agent picks the next cache contents
from the state it observed last slot, both popularity chains advance, the
new profiles are revealed, the slot cost (refresh + local mismatch + global
mismatch) is incurred, and the agent updates.

The engine runs any number of Monte Carlo realizations in lockstep,
vectorized over realizations, with one independent Generator per
realization. Randomness is pre-drawn in fixed-size chunks in a fixed order
(chain draws, then request samples, then agent draws), so a realization
re-run alone reproduces bit-identically the trace it had inside a batch.

Two revelation modes are supported. In "state" mode the true local chain
state is revealed each slot. In "empirical" mode the agent instead sees a
finite batch of sampled requests: the local profile is estimated from the
counts, quantized to the nearest chain state for learning, and the realized
count fractions drive the cost and the hit metric.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .popularity import MarkovChain
from .schedules import PiecewiseCostSchedule

CHUNK = 2048

REQUEST_MODES = ("state", "empirical")


class DivergenceError(RuntimeError):
    """A learner produced non-finite values; the run was aborted."""


@dataclass(frozen=True, eq=False)
class PopularityEnv:
    """Environment configuration: the two chains plus the revelation mode."""

    g_chain: MarkovChain
    l_chain: MarkovChain
    request_mode: str = "state"
    requests_per_slot: int = 100

    def __post_init__(self) -> None:
        if self.g_chain.catalog_size != self.l_chain.catalog_size:
            raise ValueError("global and local chains must share one catalog size")
        if self.request_mode not in REQUEST_MODES:
            raise ValueError(f"request_mode must be one of {REQUEST_MODES}")
        if self.requests_per_slot < 1:
            raise ValueError("requests_per_slot must be >= 1")

    @property
    def catalog_size(self) -> int:
        return self.g_chain.catalog_size


@dataclass
class RunTrace:
    """Per-slot record of a single realization."""

    g_states: np.ndarray
    l_states: np.ndarray
    actions: np.ndarray  # (horizon, M) 0-based file indices
    costs: np.ndarray
    hits: np.ndarray
    epsilons: np.ndarray
    betas: np.ndarray

    @property
    def horizon(self) -> int:
        return int(self.costs.size)

    def action_files(self, t: int) -> tuple[int, ...]:
        """Cached files during slot ``t`` as sorted 1-based indices."""
        return tuple(int(x) + 1 for x in self.actions[t])

    def to_csv(self, path) -> None:
        """Columns: slot,g_state,l_state,action,realized_cost,epsilon,beta.

        Actions render as sorted 1-based file lists joined with ';'.
        """
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["slot", "g_state", "l_state", "action", "realized_cost", "epsilon", "beta"]
            )
            for t in range(self.horizon):
                writer.writerow(
                    [
                        t,
                        int(self.g_states[t]),
                        int(self.l_states[t]),
                        ";".join(str(f) for f in self.action_files(t)),
                        f"{self.costs[t]:.17g}",
                        f"{self.epsilons[t]:.17g}",
                        f"{self.betas[t]:.17g}",
                    ]
                )


@dataclass
class EngineResult:
    """Aggregates across realizations (plus the trace when R == 1)."""

    avg_cost: np.ndarray
    cost_std: np.ndarray
    hit_fraction: np.ndarray
    window_cost: np.ndarray  # (R, n_windows) per-slot means within each window
    window_hit: np.ndarray
    error_slots: np.ndarray | None = None
    error_values: np.ndarray | None = None
    trace: RunTrace | None = None


def realization_rng(base_seed: int, realization: int) -> np.random.Generator:
    """Generator for one realization: seed mixed with the realization index.

    The mixing function is ``SeedSequence(base_seed, spawn_key=(realization,))``,
    so streams are independent and any realization can be re-run alone.
    """
    return np.random.default_rng(np.random.SeedSequence(base_seed, spawn_key=(realization,)))


def _step_states(cum_rows: np.ndarray, current: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Vectorized categorical step: one draw per realization."""
    rows = cum_rows[current]
    nxt = (rows <= u[:, None]).sum(axis=1)
    return np.minimum(nxt, cum_rows.shape[0] - 1)


def run_lockstep(
    env: PopularityEnv,
    agent,
    cost_schedule: PiecewiseCostSchedule,
    horizon: int,
    rngs: list[np.random.Generator],
    collect_trace: bool = False,
    windows: tuple[tuple[int, int], ...] = (),
    error_slots=None,
) -> EngineResult:
    """Run ``len(rngs)`` realizations of one agent in lockstep.

    ``windows`` is a sequence of (start, stop) slot intervals for which
    per-realization mean cost and hit fraction are returned. ``error_slots``
    lists slots after which ``agent.normalized_error()`` is sampled.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    n_real = len(rngs)
    if n_real < 1:
        raise ValueError("need at least one realization")
    n_g, n_l = env.g_chain.n_states, env.l_chain.n_states
    f = env.catalog_size
    m = agent.m
    g_profiles = env.g_chain.profile_matrix()
    l_profiles = env.l_chain.profile_matrix()
    cum_g = np.cumsum(env.g_chain.transition, axis=1)
    cum_l = np.cumsum(env.l_chain.transition, axis=1)
    empirical = env.request_mode == "empirical"
    n_req = env.requests_per_slot

    g = np.array([int(rng.integers(n_g)) for rng in rngs], dtype=np.int64)
    l = np.array([int(rng.integers(n_l)) for rng in rngs], dtype=np.int64)
    l_seen = l.copy()
    files_prev = np.tile(np.arange(m, dtype=np.int64), (n_real, 1))
    mask_prev = np.zeros((n_real, f))
    mask_prev[:, :m] = 1.0

    agent.begin(n_real)

    cost_mean = np.empty(horizon)
    cost_sqmean = np.empty(horizon)
    hit_mean = np.empty(horizon)
    windows = tuple((int(a), int(b)) for a, b in windows)
    for a, b in windows:
        if not 0 <= a < b <= horizon:
            raise ValueError(f"window ({a}, {b}) does not fit in [0, {horizon})")
    win_cost = np.zeros((n_real, len(windows)))
    win_hit = np.zeros((n_real, len(windows)))
    err_slots = None
    err_values: list[float] = []
    err_ptr = 0
    if error_slots is not None:
        err_slots = np.unique(np.asarray(list(error_slots), dtype=np.int64))
        if err_slots.size and (err_slots[0] < 0 or err_slots[-1] >= horizon):
            raise ValueError("error snapshot slots must lie in [0, horizon)")

    trace = None
    if collect_trace:
        if n_real != 1:
            raise ValueError("traces are collected for single realizations only")
        trace = RunTrace(
            g_states=np.empty(horizon, dtype=np.int64),
            l_states=np.empty(horizon, dtype=np.int64),
            actions=np.empty((horizon, m), dtype=np.int64),
            costs=np.empty(horizon),
            hits=np.empty(horizon),
            epsilons=np.empty(horizon),
            betas=np.empty(horizon),
        )

    for c0 in range(0, horizon, CHUNK):
        n = min(CHUNK, horizon - c0)
        ts = np.arange(c0, c0 + n, dtype=np.int64)
        lam = cost_schedule.lambda_arrays(c0, c0 + n)
        u_g = np.stack([rng.random(n) for rng in rngs])
        u_l = np.stack([rng.random(n) for rng in rngs])
        g_path = np.empty((n_real, n), dtype=np.int64)
        l_path = np.empty((n_real, n), dtype=np.int64)
        gg, ll = g, l
        for j in range(n):
            gg = _step_states(cum_g, gg, u_g[:, j])
            ll = _step_states(cum_l, ll, u_l[:, j])
            g_path[:, j] = gg
            l_path[:, j] = ll
        counts = None
        if empirical:
            counts = np.stack(
                [rngs[r].multinomial(n_req, l_profiles[l_path[r]]) for r in range(n_real)]
            )
        agent.predraw(rngs, ts)

        for j in range(n):
            t = c0 + j
            files, mask = agent.select(j, g, l_seen, files_prev, mask_prev)
            g_next = g_path[:, j]
            l_next = l_path[:, j]
            uncached_g = 1.0 - (mask * g_profiles[g_next]).sum(axis=1)
            if empirical:
                freq = counts[:, j, :] / n_req
                cached_l = (mask * freq).sum(axis=1)
                dists = np.abs(freq[:, None, :] - l_profiles[None, :, :]).sum(axis=2)
                l_next_seen = np.argmin(dists, axis=1)
            else:
                cached_l = (mask * l_profiles[l_next]).sum(axis=1)
                l_next_seen = l_next
            refresh = m - (mask * mask_prev).sum(axis=1)
            cost = lam[0, j] * refresh + lam[1, j] * (1.0 - cached_l) + lam[2, j] * uncached_g
            agent.learn(j, g_next, l_next_seen, cost, refresh)

            cost_mean[t] = cost.mean()
            cost_sqmean[t] = (cost * cost).mean()
            hit_mean[t] = cached_l.mean()
            for w, (a, b) in enumerate(windows):
                if a <= t < b:
                    win_cost[:, w] += cost
                    win_hit[:, w] += cached_l
            if err_slots is not None and err_ptr < err_slots.size and err_slots[err_ptr] == t:
                err_values.append(float(agent.normalized_error().mean()))
                err_ptr += 1
            if trace is not None:
                trace.g_states[t] = g_next[0]
                trace.l_states[t] = l_next_seen[0]
                trace.actions[t] = files[0]
                trace.costs[t] = cost[0]
                trace.hits[t] = cached_l[0]
                trace.epsilons[t] = agent.trace_epsilon(j)
                trace.betas[t] = agent.trace_beta(j)

            g = g_next
            l = l_next
            l_seen = l_next_seen
            mask_prev = mask
            files_prev = files

    for w, (a, b) in enumerate(windows):
        win_cost[:, w] /= b - a
        win_hit[:, w] /= b - a
    cost_var = np.maximum(cost_sqmean - cost_mean**2, 0.0)
    return EngineResult(
        avg_cost=cost_mean,
        cost_std=np.sqrt(cost_var),
        hit_fraction=hit_mean,
        window_cost=win_cost,
        window_hit=win_hit,
        error_slots=err_slots,
        error_values=np.asarray(err_values) if err_slots is not None else None,
        trace=trace,
    )


class UniformActionDraws:
    """Chunked sampling of uniform M-subsets, one per slot per realization.

    Subsets come from the top-M entries of i.i.d. uniforms over the catalog,
    which is uniform over all C(F, M) subsets without enumerating them.
    """

    def __init__(self, f: int, m: int):
        self.f = f
        self.m = m
        self.files: np.ndarray | None = None  # (R, n, M)

    def draw(self, rngs, n: int) -> None:
        picks = []
        for rng in rngs:
            u = rng.random((n, self.f))
            idx = np.argpartition(u, self.m - 1, axis=1)[:, : self.m]
            picks.append(np.sort(idx, axis=1))
        self.files = np.stack(picks).astype(np.int64)

    def masks_at(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        files = self.files[:, j, :]
        n_real = files.shape[0]
        mask = np.zeros((n_real, self.f))
        mask[np.arange(n_real)[:, None], files] = 1.0
        return files, mask


class RandomBaselineAgent:
    """Caches a fresh uniform random M-subset every slot; never learns."""

    def __init__(self, f: int, m: int):
        self.m = m
        self._draws = UniformActionDraws(f, m)

    def begin(self, n_realizations: int) -> None:
        pass

    def predraw(self, rngs, ts) -> None:
        self._draws.draw(rngs, ts.size)

    def select(self, j, g, l_seen, files_prev, mask_prev):
        return self._draws.masks_at(j)

    def learn(self, j, g_next, l_next_seen, cost, refresh) -> None:
        pass

    def trace_epsilon(self, j) -> float:
        return 1.0

    def trace_beta(self, j) -> float:
        return 0.0


class OraclePolicyAgent:
    """Follows a fixed per-state policy over an explicit state space."""

    def __init__(self, space, policy: np.ndarray):
        self.space = space
        self.policy = np.asarray(policy, dtype=np.int64)
        if self.policy.shape != (space.n_states,):
            raise ValueError("policy must assign one action per state")
        self.m = space.cache_size
        self._a_idx: np.ndarray | None = None

    def begin(self, n_realizations: int) -> None:
        self._a_idx = np.zeros(n_realizations, dtype=np.int64)

    def predraw(self, rngs, ts) -> None:
        pass

    def select(self, j, g, l_seen, files_prev, mask_prev):
        space = self.space
        s_prev = (g * space.n_l + l_seen) * space.n_actions + self._a_idx
        self._a_idx = self.policy[s_prev]
        files = space.action_files[self._a_idx]
        mask = space.action_masks[self._a_idx]
        return files, mask

    def learn(self, j, g_next, l_next_seen, cost, refresh) -> None:
        pass

    def trace_epsilon(self, j) -> float:
        return 0.0

    def trace_beta(self, j) -> float:
        return 0.0
