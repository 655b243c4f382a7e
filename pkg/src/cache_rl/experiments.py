"""Scenario presets, the Monte Carlo driver, metrics, and CSV export.

A Scenario bundles everything one experiment needs: the two popularity
chains, cache capacity, discount, a piecewise-constant cost-weight
schedule, the agent kind and its configuration, the horizon, the number of
Monte Carlo realizations, and the base seed. Realization ``r`` uses the
seed mix ``SeedSequence(base_seed, spawn_key=(r,))``, so realizations are
independent and each one can be re-run on its own.

The named presets s1..s9 are cost-weight settings on two reference
networks: a small one (catalog 10, capacity 2, two-state chains) where the
exact solver is tractable, and a large one (catalog 1000, capacity 10,
50/40-state chains) that only the linear learner can handle.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace

import numpy as np

from .caching_core import ActionSpace, CacheAction, CostParams
from .mdp_oracle import PolicyIterationResult, StateSpace, long_run_average_cost, policy_iteration
from .popularity import MarkovChain, PopularityProfile, random_chain, zipf_profile
from .q_exact import BatchExactAgent, QLearnerConfig
from .q_linear import BatchLinearAgent, LinearLearnerConfig, LinearParams
from .schedules import (
    ExploreThenInverseDecay,
    PiecewiseCostSchedule,
    as_cost_schedule,
    beta_from_json,
    beta_to_json,
    epsilon_schedule_from_json,
    epsilon_schedule_to_json,
)
from .simulate import (
    OraclePolicyAgent,
    PopularityEnv,
    RandomBaselineAgent,
    realization_rng,
    run_lockstep,
)

LEARNER_KINDS = ("exact", "linear", "oracle-policy", "random-baseline")

# Cost-weight presets (lambda1, lambda2, lambda3).
PRESET_PARAMS = {
    "s1": CostParams(10, 600, 1000),
    "s2": CostParams(600, 10, 1000),
    "s3": CostParams(10, 10, 1000),
    "s4": CostParams(0, 1000, 0),
    "s5": CostParams(0, 0, 1000),
    "s6": CostParams(60, 10, 10),
    "s7": CostParams(100, 20, 20),
    "s8": CostParams(0, 0, 1000),
    "s9": CostParams(0, 1000, 600),
}

SMALL_NET_PRESETS = ("s1", "s2", "s3", "s4", "s5", "s6")
LARGE_NET_PRESETS = ("s7", "s8", "s9")

DEFAULT_ORDERING_SEED = 12345
DEFAULT_LARGE_NET_SEED = 20240
# Semi-gradient SGD moves F - M entries of two score rows per slot, so the
# induced Q-value step is about (alpha_g + alpha_l) * (F - M) times the TD
# error; steps are stable only when that factor stays well below 1. The
# small-network default 0.005 would diverge at F = 1000.
LARGE_NET_ALPHA = 0.0005
GLOBAL_ZIPF_EXPONENTS = (1.0, 1.5)
LOCAL_ZIPF_EXPONENTS = (0.7, 2.5)
GLOBAL_TRANSITION = ((0.8, 0.2), (0.75, 0.25))
LOCAL_TRANSITION = ((0.6, 0.4), (0.2, 0.8))


def small_network_chains(
    catalog_size: int = 10, ordering_seed: int = DEFAULT_ORDERING_SEED
) -> tuple[MarkovChain, MarkovChain]:
    """Reference two-state chains for the small network.

    Global states are Zipf(1.0) and Zipf(1.5); local states Zipf(0.7) and
    Zipf(2.5). Each state assigns the files an independent random ordering
    drawn from ``ordering_seed``, so the chains are reproducible.
    """
    rng = np.random.default_rng(ordering_seed)
    g_states = tuple(
        zipf_profile(catalog_size, eta, rng.permutation(catalog_size) + 1)
        for eta in GLOBAL_ZIPF_EXPONENTS
    )
    l_states = tuple(
        zipf_profile(catalog_size, eta, rng.permutation(catalog_size) + 1)
        for eta in LOCAL_ZIPF_EXPONENTS
    )
    g_chain = MarkovChain(states=g_states, transition=np.array(GLOBAL_TRANSITION))
    l_chain = MarkovChain(states=l_states, transition=np.array(LOCAL_TRANSITION))
    return g_chain, l_chain


def large_network_chains(
    catalog_size: int = 1000,
    n_g: int = 50,
    n_l: int = 40,
    seed: int = DEFAULT_LARGE_NET_SEED,
) -> tuple[MarkovChain, MarkovChain]:
    """Random many-state chains for the large network test.

    Transition rows are flat-Dirichlet draws; Zipf exponents are uniform
    over (2, 4) with an independent random file ordering per state.
    """
    seq = np.random.SeedSequence(seed)
    g_rng, l_rng = (np.random.default_rng(s) for s in seq.spawn(2))
    return (
        random_chain(n_g, catalog_size, g_rng),
        random_chain(n_l, catalog_size, l_rng),
    )


@dataclass(frozen=True)
class Scenario:
    name: str
    g_chain: MarkovChain
    l_chain: MarkovChain
    cache_size: int
    gamma: float
    lambda_schedule: PiecewiseCostSchedule
    learner: str
    learner_config: QLearnerConfig | LinearLearnerConfig | None
    horizon: int
    realizations: int
    base_seed: int
    request_mode: str = "state"
    requests_per_slot: int = 100

    def __post_init__(self) -> None:
        if self.learner not in LEARNER_KINDS:
            raise ValueError(f"learner must be one of {LEARNER_KINDS}")
        if self.g_chain.catalog_size != self.l_chain.catalog_size:
            raise ValueError("chains must share one catalog size")
        if not 1 <= self.cache_size <= self.g_chain.catalog_size:
            raise ValueError("cache size must lie in 1..F")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        object.__setattr__(self, "lambda_schedule", as_cost_schedule(self.lambda_schedule))
        if self.learner == "exact" and not isinstance(self.learner_config, QLearnerConfig):
            raise ValueError("exact learner needs a QLearnerConfig")
        if self.learner == "linear" and not isinstance(self.learner_config, LinearLearnerConfig):
            raise ValueError("linear learner needs a LinearLearnerConfig")
        if self.learner_config is not None and self.learner_config.gamma != self.gamma:
            raise ValueError("learner_config.gamma must match the scenario gamma")

    @property
    def catalog_size(self) -> int:
        return self.g_chain.catalog_size

    def env(self) -> PopularityEnv:
        return PopularityEnv(
            g_chain=self.g_chain,
            l_chain=self.l_chain,
            request_mode=self.request_mode,
            requests_per_slot=self.requests_per_slot,
        )


def preset_scenario(
    name: str,
    horizon: int | None = None,
    realizations: int | None = None,
    base_seed: int = 7,
    learner: str | None = None,
) -> Scenario:
    """Build a ready-to-run Scenario for a named preset (s1..s9, dynamic)."""
    if name == "dynamic":
        g_chain, l_chain = small_network_chains()
        horizon = 40_000 if horizon is None else horizon
        schedule = PiecewiseCostSchedule(
            segments=((0, PRESET_PARAMS["s4"]), (horizon // 2, PRESET_PARAMS["s5"]))
        )
        return Scenario(
            name="dynamic",
            g_chain=g_chain,
            l_chain=l_chain,
            cache_size=2,
            gamma=0.8,
            lambda_schedule=schedule,
            learner="linear" if learner is None else learner,
            learner_config=LinearLearnerConfig(),
            horizon=horizon,
            realizations=100 if realizations is None else realizations,
            base_seed=base_seed,
        )
    if name not in PRESET_PARAMS:
        raise ValueError(f"unknown preset {name!r}")
    params = PRESET_PARAMS[name]
    if name in SMALL_NET_PRESETS:
        g_chain, l_chain = small_network_chains()
        cache_size = 2
        horizon = 100_000 if horizon is None else horizon
        realizations = 100 if realizations is None else realizations
        kind = learner if learner is not None else ("linear" if name in ("s4", "s5") else "exact")
    else:
        g_chain, l_chain = large_network_chains()
        cache_size = 10
        horizon = 100_000 if horizon is None else horizon
        realizations = 1 if realizations is None else realizations
        kind = learner if learner is not None else "linear"
    if kind == "exact":
        config = QLearnerConfig()
    elif kind == "linear":
        if name in LARGE_NET_PRESETS:
            config = LinearLearnerConfig(
                alpha_g=LARGE_NET_ALPHA,
                alpha_l=LARGE_NET_ALPHA,
                alpha_r=LARGE_NET_ALPHA,
                epsilon=ExploreThenInverseDecay(t_explore=max(1, horizon // 5)),
            )
        else:
            config = LinearLearnerConfig(epsilon=0.05)
    else:
        config = None
    return Scenario(
        name=name,
        g_chain=g_chain,
        l_chain=l_chain,
        cache_size=cache_size,
        gamma=0.8,
        lambda_schedule=PiecewiseCostSchedule.constant(params),
        learner=kind,
        learner_config=config,
        horizon=horizon,
        realizations=realizations,
        base_seed=base_seed,
    )


def list_presets() -> list[dict]:
    """Summaries of all named presets (for the CLI)."""
    rows = []
    for name in list(PRESET_PARAMS) + ["dynamic"]:
        sc = preset_scenario(name)
        seg0 = sc.lambda_schedule.segments[0][1]
        rows.append(
            {
                "name": name,
                "network": "small" if sc.catalog_size == 10 else "large",
                "catalog_size": sc.catalog_size,
                "cache_size": sc.cache_size,
                "lambda1": seg0.lambda1,
                "lambda2": seg0.lambda2,
                "lambda3": seg0.lambda3,
                "segments": len(sc.lambda_schedule.segments),
                "learner": sc.learner,
                "horizon": sc.horizon,
                "realizations": sc.realizations,
            }
        )
    return rows


@dataclass
class MetricsTrace:
    """Monte-Carlo-averaged per-slot metrics plus run metadata."""

    avg_cost: np.ndarray
    run_avg_cost: np.ndarray
    hit_fraction: np.ndarray
    cost_std: np.ndarray
    realizations: int
    base_seed: int
    gamma: float
    learner: str
    error_slots: np.ndarray | None = None
    norm_error: np.ndarray | None = None
    oracle_average_cost: float | None = None
    windows: tuple[tuple[int, int], ...] = ()
    window_cost: np.ndarray | None = None  # (R, n_windows)
    window_hit: np.ndarray | None = None
    metadata: dict | None = None

    @property
    def horizon(self) -> int:
        return int(self.avg_cost.size)


def _norm_error_full(horizon: int, slots: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Step-interpolate error snapshots over all slots (zero-init error is 1)."""
    full = np.empty(horizon)
    prev_val = 1.0
    prev_slot = 0
    for s, v in zip(slots, values):
        full[prev_slot : s + 1] = prev_val
        full[s] = v
        prev_val = v
        prev_slot = s + 1
    full[prev_slot:] = prev_val
    return full


def _build_agent(scenario: Scenario, oracle: PolicyIterationResult | None, space):
    if scenario.learner == "exact":
        return BatchExactAgent(space, scenario.learner_config)
    if scenario.learner == "linear":
        return BatchLinearAgent(
            scenario.g_chain.n_states,
            scenario.l_chain.n_states,
            scenario.catalog_size,
            scenario.cache_size,
            scenario.learner_config,
        )
    if scenario.learner == "oracle-policy":
        return OraclePolicyAgent(space, oracle.policy)
    return RandomBaselineAgent(scenario.catalog_size, scenario.cache_size)


def run_scenario(
    scenario: Scenario,
    oracle_compare: bool = False,
    error_slots=None,
    windows: tuple[tuple[int, int], ...] = (),
    _realization_seeds=None,
) -> MetricsTrace:
    """Simulate a scenario and average its metrics across realizations.

    With ``oracle_compare`` the optimal policy is solved first (constant
    cost weights only); the trace then carries the oracle's long-run
    average cost and, for the learners, normalized Q-error snapshots taken
    at ``error_slots`` (default: about 200 evenly spaced slots).
    """
    needs_oracle = oracle_compare or scenario.learner == "oracle-policy"
    oracle = None
    space = None
    if needs_oracle or scenario.learner == "exact":
        space = StateSpace(scenario.g_chain, scenario.l_chain, scenario.cache_size)
    if needs_oracle:
        if not scenario.lambda_schedule.is_constant:
            raise ValueError("oracle comparison requires a constant cost schedule")
        params = scenario.lambda_schedule.segments[0][1]
        oracle = policy_iteration(space, scenario.gamma, params)
    agent = _build_agent(scenario, oracle, space)

    track_error = oracle_compare and scenario.learner in ("exact", "linear")
    if track_error:
        if error_slots is None:
            stride = max(1, scenario.horizon // 200)
            error_slots = list(range(stride - 1, scenario.horizon, stride))
            if error_slots[-1] != scenario.horizon - 1:
                error_slots.append(scenario.horizon - 1)
        if scenario.learner == "exact":
            agent.set_error_reference(oracle.q)
        else:
            agent.set_error_reference(oracle.q, space)
    else:
        error_slots = None

    if _realization_seeds is not None:
        rngs = [np.random.default_rng(s) for s in _realization_seeds]
    else:
        rngs = [realization_rng(scenario.base_seed, r) for r in range(scenario.realizations)]
    result = run_lockstep(
        scenario.env(),
        agent,
        scenario.lambda_schedule,
        scenario.horizon,
        rngs,
        windows=windows,
        error_slots=error_slots,
    )
    oracle_cost = None
    if oracle is not None:
        params = scenario.lambda_schedule.segments[0][1]
        oracle_cost = long_run_average_cost(space, oracle.policy, params)
    run_avg = np.cumsum(result.avg_cost) / np.arange(1, scenario.horizon + 1)
    return MetricsTrace(
        avg_cost=result.avg_cost,
        run_avg_cost=run_avg,
        hit_fraction=result.hit_fraction,
        cost_std=result.cost_std,
        realizations=scenario.realizations,
        base_seed=scenario.base_seed,
        gamma=scenario.gamma,
        learner=scenario.learner,
        error_slots=result.error_slots,
        norm_error=result.error_values,
        oracle_average_cost=oracle_cost,
        windows=tuple(windows),
        window_cost=result.window_cost,
        window_hit=result.window_hit,
        metadata={
            "scenario": scenario.name,
            "norm_error_metric": "relative_frobenius",
            "hit_metric": "expected_mass" if scenario.request_mode == "state" else "count_ratio",
        },
    )


def cache_hit_fraction(action: CacheAction, p_l: PopularityProfile) -> float:
    """Share of the slot's local request mass served from cache."""
    if action.catalog_size != p_l.catalog_size:
        raise ValueError("action and profile catalog sizes differ")
    return float(p_l.probs[np.array(action.files) - 1].sum())


def linear_q_matrix(params: LinearParams, space: StateSpace) -> np.ndarray:
    """Materialize the linear learner's Q values over all (state, action)."""
    idx = np.arange(space.n_states)
    gl, a_prev = np.divmod(idx, space.n_actions)
    g, l = np.divmod(gl, space.n_l)
    scores = params.theta_g[g] + params.theta_l[l] + params.theta_r * space.action_masks[a_prev]
    return scores @ (1.0 - space.action_masks).T


def normalized_q_error(q_hat, q_star: np.ndarray, space: StateSpace | None = None) -> float:
    """Relative Frobenius error ||Q_hat - Q*||_F / ||Q*||_F."""
    if isinstance(q_hat, LinearParams):
        if space is None:
            raise ValueError("materializing linear parameters needs the state space")
        q_hat = linear_q_matrix(q_hat, space)
    q_hat = np.asarray(q_hat, dtype=np.float64)
    q_star = np.asarray(q_star, dtype=np.float64)
    if q_hat.shape != q_star.shape:
        raise ValueError("Q tables must have identical shapes")
    denom = float(np.linalg.norm(q_star))
    if denom == 0.0:
        raise ValueError("reference Q table has zero norm")
    return float(np.linalg.norm(q_hat - q_star) / denom)


def random_baseline_action(space: ActionSpace, rng: np.random.Generator) -> int:
    """Uniform action index, drawn by M-subset sampling (no enumeration)."""
    files = np.sort(rng.choice(space.f, size=space.m, replace=False)) + 1
    action = CacheAction(files=tuple(int(x) for x in files), catalog_size=space.f)
    return space.index_of(action)


def export_metrics(trace: MetricsTrace, path) -> None:
    """Write per-slot metrics as CSV with 17-significant-digit values.

    Leading '#' lines carry run metadata. The norm_error column appears only
    when the run was oracle-compared; between snapshots it holds the latest
    snapshot value (the error of zero-initialized tables is exactly 1).
    """
    has_error = trace.norm_error is not None
    try:
        fh = open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write metrics to {path!r}: {exc}") from exc
    with fh:
        fh.write(f"# learner={trace.learner}\n")
        fh.write(f"# gamma={trace.gamma:.17g}\n")
        fh.write(f"# realizations={trace.realizations}\n")
        fh.write(f"# base_seed={trace.base_seed}\n")
        for key, value in (trace.metadata or {}).items():
            fh.write(f"# {key}={value}\n")
        if trace.oracle_average_cost is not None:
            fh.write(f"# oracle_average_cost={trace.oracle_average_cost:.17g}\n")
        writer = csv.writer(fh)
        header = ["slot", "avg_cost", "run_avg_cost", "hit_fraction"]
        if has_error:
            header.append("norm_error")
            err_full = _norm_error_full(trace.horizon, trace.error_slots, trace.norm_error)
        writer.writerow(header)
        for t in range(trace.horizon):
            row = [
                t,
                f"{trace.avg_cost[t]:.17g}",
                f"{trace.run_avg_cost[t]:.17g}",
                f"{trace.hit_fraction[t]:.17g}",
            ]
            if has_error:
                row.append(f"{err_full[t]:.17g}")
            writer.writerow(row)


def read_metrics(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Read back a metrics CSV: (metadata dict, column arrays)."""
    metadata: dict[str, str] = {}
    rows = []
    header = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                metadata[key.strip()] = value
                continue
            if header is None:
                header = line.strip().split(",")
                continue
            if line.strip():
                rows.append(line.strip().split(","))
    if header is None:
        raise ValueError(f"no header found in {path!r}")
    data = np.asarray(rows, dtype=np.float64)
    return metadata, {name: data[:, i] for i, name in enumerate(header)}


def scenario_to_json(scenario: Scenario) -> str:
    doc = {
        "name": scenario.name,
        "cache_size": scenario.cache_size,
        "gamma": scenario.gamma,
        "g_chain": json.loads(scenario.g_chain.to_json()),
        "l_chain": json.loads(scenario.l_chain.to_json()),
        "lambda_schedule": scenario.lambda_schedule.to_json(),
        "learner": scenario.learner,
        "horizon": scenario.horizon,
        "realizations": scenario.realizations,
        "base_seed": scenario.base_seed,
        "request_mode": scenario.request_mode,
        "requests_per_slot": scenario.requests_per_slot,
    }
    config = scenario.learner_config
    if isinstance(config, QLearnerConfig):
        doc["learner_config"] = {
            "beta": beta_to_json(config.beta),
            "epsilon": epsilon_schedule_to_json(config.epsilon),
        }
    elif isinstance(config, LinearLearnerConfig):
        doc["learner_config"] = {
            "alpha_g": config.alpha_g,
            "alpha_l": config.alpha_l,
            "alpha_r": config.alpha_r,
            "epsilon": epsilon_schedule_to_json(config.epsilon),
        }
    return json.dumps(doc, indent=2)


def scenario_from_json(text: str) -> Scenario:
    doc = json.loads(text)
    gamma = float(doc["gamma"])
    learner = doc["learner"]
    config_doc = doc.get("learner_config", {}) or {}
    if learner == "exact":
        config = QLearnerConfig(
            beta=beta_from_json(config_doc.get("beta", 0.8)),
            epsilon=epsilon_schedule_from_json(config_doc.get("epsilon", 0.05)),
            gamma=gamma,
        )
    elif learner == "linear":
        config = LinearLearnerConfig(
            alpha_g=float(config_doc.get("alpha_g", 0.005)),
            alpha_l=float(config_doc.get("alpha_l", 0.005)),
            alpha_r=float(config_doc.get("alpha_r", 0.005)),
            epsilon=epsilon_schedule_from_json(config_doc.get("epsilon", 0.05)),
            gamma=gamma,
        )
    else:
        config = None
    return Scenario(
        name=doc.get("name", "custom"),
        g_chain=MarkovChain.from_json(json.dumps(doc["g_chain"])),
        l_chain=MarkovChain.from_json(json.dumps(doc["l_chain"])),
        cache_size=int(doc["cache_size"]),
        gamma=gamma,
        lambda_schedule=PiecewiseCostSchedule.from_json(doc["lambda_schedule"]),
        learner=learner,
        learner_config=config,
        horizon=int(doc["horizon"]),
        realizations=int(doc["realizations"]),
        base_seed=int(doc["base_seed"]),
        request_mode=doc.get("request_mode", "state"),
        requests_per_slot=int(doc.get("requests_per_slot", 100)),
    )


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return scenario_from_json(fh.read())


def save_scenario(scenario: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(scenario_to_json(scenario))


def scenario_with(scenario: Scenario, **overrides) -> Scenario:
    """Copy a scenario with field overrides (keeps config gamma in sync)."""
    if (
        "gamma" in overrides
        and scenario.learner_config is not None
        and "learner_config" not in overrides
    ):
        overrides["learner_config"] = replace(scenario.learner_config, gamma=overrides["gamma"])
    return replace(scenario, **overrides)
