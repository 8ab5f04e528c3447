"""Flow-impact metrics: a flow's contribution to a network-load metric.

Delta metrics subtract the background-only metric value from the combined
one; Shapley metrics compute the flow's two-player Shapley value and
normalize it to [0, 1], keeping only major (> 50%) contributions. A general
exact Shapley evaluator over all coalitions is included for multi-flow
attribution games.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from math import factorial
from typing import Callable, Sequence

import numpy as np

from .load import (
    Base,
    GFU_BASES,
    Method,
    SampleSet,
    base_samples,
    percentile,
    top_share,
    utilization_score,
)
from .model import (
    FlowRecord,
    ThroughputMatrix,
    Topology,
    UtilizationMatrix,
    ValidationError,
    utilization,
)

logger = logging.getLogger(__name__)

SHAPLEY_PLAYER_CAP = 12

DELTA = "delta"
SHAPLEY = "shapley"

# Canonical impact metric ids: (base, method, analysis), in output order.
IMPACT_METRICS: dict[str, tuple[Base, Method, str]] = {
    "LUPD": (Base.LINK_UTIL, Method.PERCENTILE, DELTA),
    "TLUSSD": (Base.LINK_UTIL, Method.TOP_SHARE, DELTA),
    "LUSD": (Base.LINK_UTIL, Method.UTIL_SCORE, DELTA),
    "LUPSV": (Base.LINK_UTIL, Method.PERCENTILE, SHAPLEY),
    "TLUSSSV": (Base.LINK_UTIL, Method.TOP_SHARE, SHAPLEY),
    "MLUPD": (Base.MEAN_LINK_UTIL, Method.PERCENTILE, DELTA),
    "TMLUSSD": (Base.MEAN_LINK_UTIL, Method.TOP_SHARE, DELTA),
    "GGPD": (Base.GROWTH_GFU, Method.PERCENTILE, DELTA),
    "TGGSSD": (Base.GROWTH_GFU, Method.TOP_SHARE, DELTA),
    "RGPD": (Base.RISK_GFU, Method.PERCENTILE, DELTA),
    "TRGSSD": (Base.RISK_GFU, Method.TOP_SHARE, DELTA),
}


def delta(v_xf: float, v_xi: float) -> float:
    """Value difference between the combined-traffic and background-only metric."""
    return v_xf - v_xi


def shapley_two_player(v_xi: float, v_xo: float, v_xf: float) -> float:
    """Closed-form Shapley value of the examined flow in the two-player game
    v({background}) = v_xi, v({flow}) = v_xo, v(both) = v_xf, v(empty) = 0."""
    return (v_xf - v_xi + v_xo) / 2.0


def normalize_shapley(phi: float, v_n: float) -> float:
    """Normalize a Shapley value by the total payoff and keep only major
    contributions: share <= 0.5 maps to 0, (0.5, 1] rescales to (0, 1]."""
    share = phi / v_n if v_n > 0.0 else 0.0
    heaviside = 1.0 if share - 0.5 >= 0.0 else 0.0
    value = 2.0 * (share - 0.5) * heaviside
    if value > 1.0 or value < 0.0:
        logger.warning("normalized Shapley share %.6f clamped into [0, 1]", value)
        value = min(max(value, 0.0), 1.0)
    return value


def shapley_general(
    n_players: int,
    coalition_value: Callable[[tuple[int, ...]], float],
    cap: int = SHAPLEY_PLAYER_CAP,
) -> list[float]:
    """Exact Shapley values by full coalition enumeration.

    coalition_value receives a sorted tuple of player indices and must be
    deterministic. Enumeration is O(2^n); n_players above the cap is refused.
    """
    if n_players > cap:
        raise ValidationError(
            f"{n_players} players exceeds the exact-enumeration cap of {cap}"
        )
    if n_players == 0:
        return []
    worth = [0.0] * (1 << n_players)
    for mask in range(1 << n_players):
        worth[mask] = float(
            coalition_value(tuple(i for i in range(n_players) if mask >> i & 1))
        )
    fact = [factorial(k) for k in range(n_players + 1)]
    n_fact = fact[n_players]
    values = [0.0] * n_players
    for i in range(n_players):
        bit = 1 << i
        for mask in range(1 << n_players):
            if mask & bit:
                continue
            s = bin(mask).count("1")
            weight = fact[s] * fact[n_players - s - 1] / n_fact
            values[i] += weight * (worth[mask | bit] - worth[mask])
    return values


@dataclass
class ImpactScenario:
    """Paired traffic states for impact evaluation.

    The overall traffic is background + flow_contribution elementwise; flow
    databases are only needed when GFU-based metrics are evaluated. Base
    datasets are cached per (base, side) so repeated metric evaluations on
    the same scenario stay cheap.
    """

    topo: Topology
    background: ThroughputMatrix
    flow_contribution: ThroughputMatrix
    flows_bg: Sequence[FlowRecord] | None = None
    flows_all: Sequence[FlowRecord] | None = None
    _samples: dict[tuple[Base, str], SampleSet] = field(
        default_factory=dict, repr=False, compare=False
    )
    _matrices: dict[str, UtilizationMatrix] = field(
        default_factory=dict, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        if self.background.link_ids != self.topo.link_ids:
            raise ValidationError("background matrix is not aligned to the topology")
        if self.flow_contribution.values.shape != self.background.values.shape:
            raise ValidationError("flow contribution shape differs from background")
        if not np.array_equal(self.flow_contribution.timestamps, self.background.timestamps):
            raise ValidationError("flow contribution timestamps differ from background")

    @cached_property
    def combined(self) -> ThroughputMatrix:
        return ThroughputMatrix(
            link_ids=self.background.link_ids,
            timestamps=self.background.timestamps,
            values=self.background.values + self.flow_contribution.values,
            interval=self.background.interval,
        )

    def _traffic(self, side: str) -> ThroughputMatrix:
        return {
            "background": self.background,
            "combined": self.combined,
            "flow": self.flow_contribution,
        }[side]

    def _flows(self, side: str) -> Sequence[FlowRecord] | None:
        if side == "background":
            return self.flows_bg
        if side == "combined":
            return self.flows_all
        return None

    def samples(self, base: Base, side: str) -> SampleSet:
        key = (base, side)
        if key not in self._samples:
            self._samples[key] = base_samples(
                base, self.topo, self._traffic(side), self._flows(side)
            )
        return self._samples[key]

    def util_matrix(self, side: str) -> UtilizationMatrix:
        if side not in self._matrices:
            self._matrices[side] = utilization(self._traffic(side), self.topo, clamp=True)
        return self._matrices[side]


@dataclass(frozen=True)
class ImpactResult:
    metric_id: str
    alpha: float
    v_xi: float
    v_xo: float | None
    v_xf: float
    value: float

    def to_json_dict(self) -> dict:
        obj = {
            "metric_id": self.metric_id,
            "alpha": self.alpha,
            "v_xi": self.v_xi,
            "v_xf": self.v_xf,
            "value": self.value,
        }
        if self.v_xo is not None:
            obj["v_xo"] = self.v_xo
        return obj


def _metric_value(scenario: ImpactScenario, base: Base, method: Method,
                  side: str, alpha: float) -> float:
    if method is Method.UTIL_SCORE:
        return utilization_score(scenario.util_matrix(side), alpha)
    samples = scenario.samples(base, side)
    if method is Method.PERCENTILE:
        return percentile(samples, alpha)
    return top_share(samples, alpha)


def evaluate_impact(metric_id: str, scenario: ImpactScenario, alpha: float) -> ImpactResult:
    """Evaluate one flow-impact metric on a scenario."""
    try:
        base, method, analysis = IMPACT_METRICS[metric_id]
    except KeyError:
        raise ValidationError(f"unknown impact metric id {metric_id!r}") from None
    if base in GFU_BASES and (scenario.flows_bg is None or scenario.flows_all is None):
        raise ValidationError(f"metric {metric_id} requires flow databases")
    v_xi = _metric_value(scenario, base, method, "background", alpha)
    v_xf = _metric_value(scenario, base, method, "combined", alpha)
    if analysis == DELTA:
        return ImpactResult(metric_id, alpha, v_xi, None, v_xf, delta(v_xf, v_xi))
    v_xo = _metric_value(scenario, base, method, "flow", alpha)
    phi = shapley_two_player(v_xi, v_xo, v_xf)
    return ImpactResult(metric_id, alpha, v_xi, v_xo, v_xf, normalize_shapley(phi, v_xf))


def classify_flows(
    results: Sequence[tuple[str, ImpactResult]], threshold: float
) -> list[tuple[str, str]]:
    """Label each flow "elephant" when its impact value strictly exceeds the
    threshold, "normal" otherwise; input order is preserved."""
    if not 0.0 < threshold <= 1.0:
        raise ValidationError(f"threshold must be in (0, 1], got {threshold}")
    return [
        (flow_id, "elephant" if result.value > threshold else "normal")
        for flow_id, result in results
    ]
