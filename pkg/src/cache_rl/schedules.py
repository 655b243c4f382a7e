"""Exploration, step-size, and cost-weight schedules.

Slot indices passed to epsilon schedules are 1-based (the first decision is
slot 1); cost schedules are keyed on 0-based slot indices with left-closed
piecewise-constant segments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .caching_core import CostParams


@dataclass(frozen=True)
class ConstantEpsilon:
    value: float = 0.05

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")

    def epsilon_at(self, t: int) -> float:
        return self.value

    def epsilon_array(self, ts: np.ndarray) -> np.ndarray:
        return np.full(np.asarray(ts).shape, self.value, dtype=np.float64)


@dataclass(frozen=True)
class InverseTimeEpsilon:
    """GLIE schedule: epsilon_t = min(1, 1/t)."""

    def epsilon_at(self, t: int) -> float:
        return min(1.0, 1.0 / max(t, 1))

    def epsilon_array(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=np.float64)
        return np.minimum(1.0, 1.0 / np.maximum(ts, 1.0))


@dataclass(frozen=True)
class ExploreThenExploit:
    """Pure exploration for the first ``t_explore`` slots, then pure greed."""

    t_explore: int

    def epsilon_at(self, t: int) -> float:
        return 1.0 if t <= self.t_explore else 0.0

    def epsilon_array(self, ts: np.ndarray) -> np.ndarray:
        return (np.asarray(ts) <= self.t_explore).astype(np.float64)


@dataclass(frozen=True)
class ExploreThenInverseDecay:
    """Pure exploration for ``t_explore`` slots, then 1/(t - t_explore)."""

    t_explore: int

    def epsilon_at(self, t: int) -> float:
        if t <= self.t_explore:
            return 1.0
        return min(1.0, 1.0 / (t - self.t_explore))

    def epsilon_array(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=np.float64)
        out = np.ones(ts.shape, dtype=np.float64)
        late = ts > self.t_explore
        out[late] = np.minimum(1.0, 1.0 / (ts[late] - self.t_explore))
        return out


EpsilonSchedule = (
    ConstantEpsilon | InverseTimeEpsilon | ExploreThenExploit | ExploreThenInverseDecay
)


def as_epsilon_schedule(value) -> EpsilonSchedule:
    if isinstance(value, (int, float)):
        return ConstantEpsilon(float(value))
    if isinstance(
        value, (ConstantEpsilon, InverseTimeEpsilon, ExploreThenExploit, ExploreThenInverseDecay)
    ):
        return value
    raise TypeError(f"not an epsilon schedule: {value!r}")


def epsilon_schedule_to_json(schedule: EpsilonSchedule) -> dict | float:
    if isinstance(schedule, ConstantEpsilon):
        return schedule.value
    if isinstance(schedule, InverseTimeEpsilon):
        return {"kind": "inverse_time"}
    if isinstance(schedule, ExploreThenExploit):
        return {"kind": "explore_then_exploit", "t_explore": schedule.t_explore}
    if isinstance(schedule, ExploreThenInverseDecay):
        return {"kind": "explore_then_inverse", "t_explore": schedule.t_explore}
    raise TypeError(f"not an epsilon schedule: {schedule!r}")


def epsilon_schedule_from_json(doc) -> EpsilonSchedule:
    if isinstance(doc, (int, float)):
        return ConstantEpsilon(float(doc))
    kind = doc["kind"]
    if kind == "constant":
        return ConstantEpsilon(float(doc["value"]))
    if kind == "inverse_time":
        return InverseTimeEpsilon()
    if kind == "explore_then_exploit":
        return ExploreThenExploit(int(doc["t_explore"]))
    if kind == "explore_then_inverse":
        return ExploreThenInverseDecay(int(doc["t_explore"]))
    raise ValueError(f"unknown epsilon schedule kind {kind!r}")


@dataclass(frozen=True)
class VisitCountBeta:
    """Per-pair Robbins-Monro step size beta = 1/(1 + visits(s, a))."""


def validate_beta(beta) -> None:
    if isinstance(beta, VisitCountBeta):
        return
    if not 0.0 < float(beta) <= 1.0:
        raise ValueError("beta must lie in (0, 1]")


def beta_to_json(beta) -> dict | float:
    if isinstance(beta, VisitCountBeta):
        return {"kind": "visit_count"}
    return float(beta)


def beta_from_json(doc):
    if isinstance(doc, (int, float)):
        return float(doc)
    if doc["kind"] == "visit_count":
        return VisitCountBeta()
    raise ValueError(f"unknown beta schedule {doc!r}")


@dataclass(frozen=True)
class PiecewiseCostSchedule:
    """Piecewise-constant cost weights over left-closed slot intervals.

    ``segments`` is a tuple of (start_slot, CostParams) pairs with strictly
    increasing starts, the first at slot 0, so any horizon is covered.
    """

    segments: tuple[tuple[int, CostParams], ...]

    def __post_init__(self) -> None:
        segments = tuple((int(s), p) for s, p in self.segments)
        if not segments:
            raise ValueError("schedule needs at least one segment")
        if segments[0][0] != 0:
            raise ValueError("first segment must start at slot 0")
        starts = [s for s, _ in segments]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("segment starts must be strictly increasing")
        if not all(isinstance(p, CostParams) for _, p in segments):
            raise TypeError("segment payloads must be CostParams")
        object.__setattr__(self, "segments", segments)

    @classmethod
    def constant(cls, params: CostParams) -> "PiecewiseCostSchedule":
        return cls(segments=((0, params),))

    @property
    def is_constant(self) -> bool:
        return len(self.segments) == 1

    def params_at(self, slot: int) -> CostParams:
        if slot < 0:
            raise ValueError("slot must be >= 0")
        starts = np.array([s for s, _ in self.segments])
        seg = int(np.searchsorted(starts, slot, side="right")) - 1
        return self.segments[seg][1]

    def lambda_arrays(self, start: int, stop: int) -> np.ndarray:
        """(3, stop-start) array of lambda1/2/3 values per slot."""
        starts = np.array([s for s, _ in self.segments])
        slots = np.arange(start, stop)
        seg_idx = np.searchsorted(starts, slots, side="right") - 1
        table = np.array(
            [[p.lambda1, p.lambda2, p.lambda3] for _, p in self.segments], dtype=np.float64
        )
        return table[seg_idx].T

    def to_json(self) -> list:
        return [{"start": s, **p.to_json_dict()} for s, p in self.segments]

    @classmethod
    def from_json(cls, doc: list) -> "PiecewiseCostSchedule":
        segments = tuple(
            (int(item["start"]), CostParams(item["lambda1"], item["lambda2"], item["lambda3"]))
            for item in doc
        )
        return cls(segments=segments)


def as_cost_schedule(value) -> PiecewiseCostSchedule:
    if isinstance(value, PiecewiseCostSchedule):
        return value
    if isinstance(value, CostParams):
        return PiecewiseCostSchedule.constant(value)
    raise TypeError(f"not a cost schedule: {value!r}")
