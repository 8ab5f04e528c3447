"""Flow-oriented derived metrics: growth and risk GFU time series.

Growth headroom is computed by progressive filling, which yields the unique
max-min fair per-flow growth vector without an external LP solver. Both GFU
variants aggregate per-flow utilization by rate-weighted mean and stay in
[0, 1]. The provider interface (GFU_PROVIDERS) allows alternative per-flow
utilization definitions to be swapped in.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .model import (
    FlowRecord,
    ThroughputMatrix,
    Topology,
    ValidationError,
    utilization,
    validate_route,
)

# Flows below this rate (bps) are excluded from growth computation and
# aggregation; their growth factor is reported as 0.
EPS_RATE = 1.0

_REL_TOL = 1e-12


class GfuKind(str, Enum):
    GROWTH = "growth"
    RISK = "risk"


@dataclass(frozen=True, eq=False)
class GrowthVector:
    """Max-min fair admissible growth factors, keyed by flow id."""

    alphas: dict[str, float]
    timestamp_index: int = 0


@dataclass(frozen=True, eq=False)
class GfuSeries:
    kind: GfuKind
    timestamps: np.ndarray
    values: np.ndarray  # shape (w,), each in [0, 1]


def _incidence(topo: Topology, routes: Sequence[tuple[str, ...]]) -> np.ndarray:
    """Boolean link-by-flow incidence matrix."""
    inc = np.zeros((len(topo.links), len(routes)), dtype=bool)
    for j, route in enumerate(routes):
        for link_id in route:
            inc[topo.link_index[link_id], j] = True
    return inc


def _maxmin_alphas(caps: np.ndarray, rates: np.ndarray, inc: np.ndarray) -> np.ndarray:
    """Progressive filling: raise all flows uniformly, freezing each flow at the
    level where its first link saturates.

    Links already loaded at or above capacity freeze their flows at 0. Flows
    with rate below EPS_RATE are left at 0 and contribute only their (static)
    base load.
    """
    n = rates.size
    alphas = np.zeros(n, dtype=float)
    nonzero = rates > 0.0
    if not nonzero.all():
        # Zero-rate flows carry no load; dropping them keeps results bitwise
        # identical whether or not such flows are present.
        if nonzero.any():
            alphas[nonzero] = _maxmin_alphas(caps, rates[nonzero], inc[:, nonzero])
        return alphas
    growing = rates >= EPS_RATE
    inc_f = inc.astype(float)
    level = 0.0
    while growing.any():
        static_load = inc_f @ (rates * (1.0 + alphas) * ~growing)
        growing_rate = inc_f @ (rates * growing)
        constrained = growing_rate > 0.0
        sat_level = np.full(caps.size, np.inf)
        sat_level[constrained] = (
            caps[constrained] - static_load[constrained]
        ) / growing_rate[constrained] - 1.0
        level = max(float(sat_level.min()), level)
        tol = _REL_TOL * max(level, 1.0)
        saturated = constrained & (sat_level <= level + tol)
        frozen = growing & inc[saturated].any(axis=0)
        alphas[frozen] = level
        growing &= ~frozen
    return alphas


def _weighted_mean(per_flow: np.ndarray, rates: np.ndarray) -> float:
    keep = rates >= EPS_RATE
    total = float(rates[keep].sum())
    if total <= 0.0:
        return 0.0
    return float((per_flow[keep] * rates[keep]).sum() / total)


def growth_vector(
    topo: Topology, flows: Sequence[tuple[str, tuple[str, ...], float]],
    timestamp_index: int = 0,
) -> GrowthVector:
    """Max-min fair growth factors for (flow_id, route, rate) triples at one timestamp."""
    for flow_id, route, rate in flows:
        validate_route(route, topo, flow_id)
        if rate < 0:
            raise ValidationError(f"flow {flow_id!r} has negative rate")
    rates = np.array([rate for _, _, rate in flows], dtype=float)
    inc = _incidence(topo, [route for _, route, _ in flows])
    alphas = _maxmin_alphas(topo.capacities, rates, inc)
    return GrowthVector(
        alphas={flow_id: float(a) for (flow_id, _, _), a in zip(flows, alphas)},
        timestamp_index=timestamp_index,
    )


def growth_gfu(topo: Topology, flows: Sequence[FlowRecord], w: int) -> float:
    """Rate-weighted mean of per-flow growth utilization 1/(1 + alpha) at timestamp w."""
    for f in flows:
        validate_route(f.route, topo, f.flow_id)
    rates = np.array([float(f.rates[w]) for f in flows], dtype=float)
    inc = _incidence(topo, [f.route for f in flows])
    alphas = _maxmin_alphas(topo.capacities, rates, inc)
    return _weighted_mean(1.0 / (1.0 + alphas), rates)


def risk_gfu(
    topo: Topology, flows: Sequence[FlowRecord], u_column: np.ndarray, w: int
) -> float:
    """Rate-weighted mean of per-flow bottleneck utilization at timestamp w.

    A flow's risk utilization is the maximum utilization among the links on
    its route, taken from the supplied per-link utilization column.
    """
    if u_column.size != len(topo.links):
        raise ValidationError("utilization column length does not match topology")
    for f in flows:
        validate_route(f.route, topo, f.flow_id)
    rates = np.array([float(f.rates[w]) for f in flows], dtype=float)
    per_flow = np.array(
        [max(u_column[topo.link_index[l]] for l in f.route) for f in flows],
        dtype=float,
    )
    return _weighted_mean(per_flow, rates)


def gfu_series(
    kind: GfuKind | str,
    topo: Topology,
    flows: Sequence[FlowRecord],
    B: ThroughputMatrix,
) -> GfuSeries:
    """Evaluate growth or risk GFU at every timestamp of B."""
    kind = GfuKind(kind)
    for f in flows:
        if f.rates.size != B.w:
            raise ValidationError(
                f"flow {f.flow_id!r} has {f.rates.size} samples, expected {B.w}"
            )
        validate_route(f.route, topo, f.flow_id)
    if not flows:
        return GfuSeries(kind=kind, timestamps=B.timestamps, values=np.zeros(B.w))
    rates = np.stack([f.rates for f in flows])  # (n, w)
    routes = [f.route for f in flows]
    inc = _incidence(topo, routes)
    values = np.empty(B.w, dtype=float)
    if kind is GfuKind.GROWTH:
        caps = topo.capacities
        for w in range(B.w):
            col = rates[:, w]
            alphas = _maxmin_alphas(caps, col, inc)
            values[w] = _weighted_mean(1.0 / (1.0 + alphas), col)
    else:
        U = utilization(B, topo, clamp=True)
        row_idx = [[topo.link_index[l] for l in route] for route in routes]
        per_flow = np.stack([U.values[idx].max(axis=0) for idx in row_idx])  # (n, w)
        for w in range(B.w):
            values[w] = _weighted_mean(per_flow[:, w], rates[:, w])
    return GfuSeries(kind=kind, timestamps=B.timestamps, values=values)


GfuProvider = Callable[[Topology, Sequence[FlowRecord], ThroughputMatrix], GfuSeries]

GFU_PROVIDERS: dict[str, GfuProvider] = {
    GfuKind.GROWTH.value: lambda topo, flows, B: gfu_series(GfuKind.GROWTH, topo, flows, B),
    GfuKind.RISK.value: lambda topo, flows, B: gfu_series(GfuKind.RISK, topo, flows, B),
}
