"""Content popularity profiles and their Markov dynamics.

This module provides:
- PopularityProfile: a probability vector over a catalog of F files.
- MarkovChain: a finite set of profiles plus a row-stochastic transition
  matrix, modelling how the popularity state evolves from slot to slot.
- Zipf profile construction with an arbitrary per-file rank ordering.
- Seeded sampling of chain transitions and of per-slot request batches.
- Empirical profile estimation from request counts, and quantization of an
  arbitrary profile back onto the chain's state set (nearest state in total
  variation, ties to the lowest index).

All types are immutable after construction; every randomized operation takes
an explicit caller-owned numpy Generator so parallel simulations can use
independent streams.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

PROB_TOL = 1e-9


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PopularityProfile:
    """Probability mass per file over a catalog of ``len(probs)`` files."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=np.float64).copy()
        if probs.ndim != 1 or probs.size < 1:
            raise ValueError("profile must be a non-empty 1-D vector")
        if np.any(probs < 0.0):
            raise ValueError("profile entries must be non-negative")
        total = float(probs.sum())
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"profile entries must sum to 1 (got {total!r})")
        object.__setattr__(self, "probs", _readonly(probs))

    @property
    def catalog_size(self) -> int:
        return int(self.probs.size)


@dataclass(frozen=True, eq=False)
class MarkovChain:
    """Finite popularity-profile set with row-stochastic transitions."""

    states: tuple[PopularityProfile, ...]
    transition: np.ndarray

    def __post_init__(self) -> None:
        states = tuple(self.states)
        if not states:
            raise ValueError("chain needs at least one state")
        f = states[0].catalog_size
        if any(s.catalog_size != f for s in states):
            raise ValueError("all chain states must share one catalog size")
        trans = np.asarray(self.transition, dtype=np.float64).copy()
        n = len(states)
        if trans.shape != (n, n):
            raise ValueError(f"transition matrix must be {n}x{n}, got {trans.shape}")
        if np.any(trans < 0.0) or np.any(trans > 1.0):
            raise ValueError("transition entries must lie in [0, 1]")
        row_sums = trans.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > PROB_TOL):
            raise ValueError("every transition row must sum to 1")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "transition", _readonly(trans))

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def catalog_size(self) -> int:
        return self.states[0].catalog_size

    def profile_matrix(self) -> np.ndarray:
        """All state profiles stacked as an (n_states, F) array."""
        return np.stack([s.probs for s in self.states])

    def to_json(self) -> str:
        return json.dumps(
            {
                "states": [s.probs.tolist() for s in self.states],
                "transition": self.transition.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "MarkovChain":
        doc = json.loads(text)
        states = tuple(PopularityProfile(np.asarray(row)) for row in doc["states"])
        return cls(states=states, transition=np.asarray(doc["transition"]))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "MarkovChain":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


@dataclass(frozen=True, eq=False)
class RequestBatch:
    """Number of requests per file observed in one slot."""

    counts: np.ndarray

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts)
        if counts.ndim != 1 or counts.size < 1:
            raise ValueError("counts must be a non-empty 1-D vector")
        if not np.issubdtype(counts.dtype, np.integer):
            rounded = np.rint(counts)
            if np.any(rounded != counts):
                raise ValueError("counts must be integers")
            counts = rounded
        counts = counts.astype(np.int64)
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "counts", _readonly(counts))

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def zipf_profile(f: int, eta: float, ordering=None) -> PopularityProfile:
    """Zipf profile with skewness ``eta`` over ``f`` files.

    The file ranked r-th receives mass (1/r^eta) / sum_l (1/l^eta).
    ``ordering`` lists 1-based file ids from most to least popular; by
    default file 1 is rank 1, file 2 is rank 2, and so on. eta = 0 spreads
    mass uniformly; larger eta concentrates it on the top-ranked files.
    """
    if f < 1:
        raise ValueError("catalog size must be >= 1")
    if eta < 0:
        raise ValueError("zipf exponent must be >= 0")
    if ordering is None:
        ordering = np.arange(1, f + 1)
    ordering = np.asarray(ordering, dtype=np.int64)
    if ordering.shape != (f,) or np.any(np.sort(ordering) != np.arange(1, f + 1)):
        raise ValueError("ordering must be a permutation of 1..F")
    ranks = np.arange(1, f + 1, dtype=np.float64)
    weights = ranks ** (-float(eta))
    weights /= weights.sum()
    probs = np.empty(f, dtype=np.float64)
    probs[ordering - 1] = weights
    return PopularityProfile(probs)


def step_chain(chain: MarkovChain, current: int, rng: np.random.Generator) -> int:
    """Draw the next state index given the current one."""
    if not 0 <= current < chain.n_states:
        raise ValueError(f"state index {current} out of range")
    row = chain.transition[current]
    cum = np.cumsum(row)
    nxt = int(np.searchsorted(cum, rng.random(), side="right"))
    return min(nxt, chain.n_states - 1)


def sample_requests(profile: PopularityProfile, n: int, rng: np.random.Generator) -> RequestBatch:
    """Aggregate ``n`` i.i.d. categorical file requests into per-file counts."""
    if n < 1:
        raise ValueError("request count must be >= 1")
    counts = rng.multinomial(n, profile.probs)
    return RequestBatch(counts)


def estimate_empirical(batch: RequestBatch) -> PopularityProfile:
    """Empirical popularity profile: per-file share of all requests."""
    total = batch.total
    if total < 1:
        raise ValueError("cannot estimate a profile from an all-zero batch")
    return PopularityProfile(batch.counts / total)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    """Total-variation distance between two mass vectors."""
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def quantize_to_state(profile: PopularityProfile, chain: MarkovChain) -> int:
    """Index of the chain state closest to ``profile`` in total variation.

    Ties break toward the lowest state index.
    """
    if profile.catalog_size != chain.catalog_size:
        raise ValueError("profile and chain catalog sizes differ")
    dists = 0.5 * np.abs(chain.profile_matrix() - profile.probs).sum(axis=1)
    return int(np.argmin(dists))


def random_chain(
    n_states: int,
    f: int,
    rng: np.random.Generator,
    eta_range: tuple[float, float] = (2.0, 4.0),
) -> MarkovChain:
    """Random chain for large synthetic networks.

    Transition rows are drawn from a flat Dirichlet; each state is a Zipf
    profile with exponent uniform over ``eta_range`` and an independent
    random ordering of the files.
    """
    if n_states < 1:
        raise ValueError("need at least one state")
    transition = rng.dirichlet(np.ones(n_states), size=n_states)
    states = []
    for _ in range(n_states):
        eta = float(rng.uniform(*eta_range))
        ordering = rng.permutation(f) + 1
        states.append(zipf_profile(f, eta, ordering))
    return MarkovChain(states=tuple(states), transition=transition)
