"""Synthetic evaluation harness: scale flow traces to target moments, inject
them over background traffic, and build the L/M/H x A/B/C batch grid.

Injection adds the same scaled pattern to every link by default ("all-links")
or only to the links of a given route. Batches that share a mean level inject
equal total volume before zero-clamping.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import ThroughputMatrix, Topology, ValidationError, validate_route

logger = logging.getLogger(__name__)

BANDWIDTH_LEVELS = ("L", "M", "H")
STDDEV_LEVELS = ("A", "B", "C")

# Target injected-flow moments per named topology, bps.
BATCH_TARGETS: dict[str, dict[str, dict[str, float]]] = {
    "polska": {
        "mean": {"L": 24e6, "M": 48e6, "H": 72e6},
        "std": {"A": 3e6, "B": 6e6, "C": 9e6},
    },
    "geant": {
        "mean": {"L": 7e9, "M": 14e9, "H": 21e9},
        "std": {"A": 1e9, "B": 2e9, "C": 3e9},
    },
    "abilene": {
        "mean": {"L": 2e9, "M": 4e9, "H": 6e9},
        "std": {"A": 300e6, "B": 600e6, "C": 900e6},
    },
}

MEAN_DRIFT_WARN = 0.01


@dataclass(frozen=True)
class BatchConfig:
    topology: str
    bandwidth_level: str  # "L", "M", "H", or "I"
    stddev_level: str  # "A", "B", "C", or "I"
    target_mean: float
    target_std: float
    injection_mode: str  # "all-links" or "route"

    @property
    def batch_id(self) -> str:
        if self.bandwidth_level == "I":
            return f"{self.topology}-I"
        return f"{self.topology}-{self.bandwidth_level}-{self.stddev_level}"


@dataclass(frozen=True, eq=False)
class ScaledTrace:
    values: np.ndarray
    target_mean: float
    target_std: float
    achieved_mean: float
    achieved_std: float
    clamped_count: int


@dataclass(frozen=True, eq=False)
class BatchScenario:
    config: BatchConfig
    combined: ThroughputMatrix
    contribution: ThroughputMatrix
    achieved_mean: float
    achieved_std: float

    @property
    def batch_id(self) -> str:
        return self.config.batch_id


def scale_trace(x: np.ndarray, mu: float, sigma: float) -> ScaledTrace:
    """Affinely rescale a nonnegative series to target mean and standard
    deviation (population std), clamping negatives to zero afterwards.

    A warning is logged when clamping drags the achieved mean more than 1%
    away from the target.
    """
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValidationError("empty source trace")
    if mu <= 0:
        raise ValidationError(f"target mean must be > 0, got {mu}")
    if sigma < 0:
        raise ValidationError(f"target std must be >= 0, got {sigma}")
    if sigma == 0.0:
        values = np.full(x.size, mu)
    else:
        std = float(x.std())
        if std == 0.0:
            raise ValidationError("constant source trace cannot be scaled to sigma > 0")
        values = mu + (x - x.mean()) / std * sigma
    clamped_count = int((values < 0).sum())
    if clamped_count:
        values = np.maximum(values, 0.0)
    achieved_mean = float(values.mean())
    achieved_std = float(values.std())
    if abs(achieved_mean - mu) > MEAN_DRIFT_WARN * mu:
        logger.warning(
            "scaled trace mean %.4g deviates more than 1%% from target %.4g",
            achieved_mean, mu,
        )
    return ScaledTrace(
        values=values,
        target_mean=mu,
        target_std=sigma,
        achieved_mean=achieved_mean,
        achieved_std=achieved_std,
        clamped_count=clamped_count,
    )


def inject(
    background: ThroughputMatrix,
    pattern: np.ndarray,
    mode: str = "all-links",
    route: Sequence[str] | None = None,
    topo: Topology | None = None,
) -> tuple[ThroughputMatrix, ThroughputMatrix]:
    """Add a flow pattern to the background traffic.

    Returns (combined, contribution) matrices with combined equal to
    background + contribution exactly. In "all-links" mode every link receives
    the pattern; in "route" mode only the links of the given route do.
    """
    pattern = np.asarray(pattern, dtype=float)
    if pattern.size != background.w:
        raise ValidationError(
            f"pattern length {pattern.size} does not match window {background.w}"
        )
    if (pattern < 0).any():
        raise ValidationError("injection pattern must be nonnegative")
    n_links = len(background.link_ids)
    if mode == "all-links":
        contribution_values = np.tile(pattern, (n_links, 1))
    elif mode == "route":
        if route is None or topo is None:
            raise ValidationError("route mode requires a route and a topology")
        validate_route(tuple(route), topo, "injected")
        contribution_values = np.zeros((n_links, background.w))
        for link_id in route:
            contribution_values[topo.link_index[link_id]] = pattern
    else:
        raise ValidationError(f"unknown injection mode {mode!r}")
    contribution = ThroughputMatrix(
        link_ids=background.link_ids,
        timestamps=background.timestamps,
        values=contribution_values,
        interval=background.interval,
    )
    combined = ThroughputMatrix(
        link_ids=background.link_ids,
        timestamps=background.timestamps,
        values=background.values + contribution_values,
        interval=background.interval,
    )
    return combined, contribution


def build_batches(
    topo: Topology,
    background: ThroughputMatrix,
    source_trace: np.ndarray,
    topology_name: str,
    targets: dict[str, dict[str, float]] | None = None,
    mode: str = "all-links",
    route: Sequence[str] | None = None,
) -> list[BatchScenario]:
    """Build the initial scenario plus the nine L/M/H x A/B/C batches.

    Targets come from the known-topology table unless given explicitly as
    {"mean": {"L": ..., "M": ..., "H": ...}, "std": {"A": ..., ...}}.
    """
    if background.link_ids != topo.link_ids:
        raise ValidationError("background matrix is not aligned to the topology")
    if targets is None:
        targets = BATCH_TARGETS.get(topology_name)
        if targets is None:
            raise ValidationError(
                f"no batch targets for topology {topology_name!r}; "
                "supply explicit mean/std targets"
            )
    zero = ThroughputMatrix(
        link_ids=background.link_ids,
        timestamps=background.timestamps,
        values=np.zeros_like(background.values),
        interval=background.interval,
    )
    initial = BatchScenario(
        config=BatchConfig(topology_name, "I", "I", 0.0, 0.0, mode),
        combined=background,
        contribution=zero,
        achieved_mean=0.0,
        achieved_std=0.0,
    )
    batches = [initial]
    for bw in BANDWIDTH_LEVELS:
        for sd in STDDEV_LEVELS:
            mu = float(targets["mean"][bw])
            sigma = float(targets["std"][sd])
            scaled = scale_trace(source_trace, mu, sigma)
            combined, contribution = inject(background, scaled.values, mode, route, topo)
            batches.append(
                BatchScenario(
                    config=BatchConfig(topology_name, bw, sd, mu, sigma, mode),
                    combined=combined,
                    contribution=contribution,
                    achieved_mean=scaled.achieved_mean,
                    achieved_std=scaled.achieved_std,
                )
            )
    return batches


def make_bursty_trace(
    w: int,
    mean: float,
    std: float,
    autocorr: float = 0.7,
    seed: int = 0,
) -> np.ndarray:
    """Generate a synthetic bursty rate series with lognormal marginals and
    AR(1) autocorrelation, then rescale it to the requested moments.

    Stands in for recorded flow traces in desk-scale runs.
    """
    if w < 1:
        raise ValidationError("trace length must be >= 1")
    if not 0.0 <= autocorr < 1.0:
        raise ValidationError(f"autocorr must be in [0, 1), got {autocorr}")
    rng = np.random.default_rng(seed)
    z = np.empty(w)
    z[0] = rng.standard_normal()
    noise = rng.standard_normal(w) * np.sqrt(1.0 - autocorr**2)
    for t in range(1, w):
        z[t] = autocorr * z[t - 1] + noise[t]
    x = np.exp(0.5 * z)  # lognormal marginals, moderate burstiness
    return scale_trace(x, mean, std).values if std > 0 else np.full(w, float(mean))


def make_background(
    topo: Topology,
    w: int,
    mean_bps: float,
    std_bps: float,
    autocorr: float = 0.5,
    seed: int = 0,
    interval: int = 300,
) -> ThroughputMatrix:
    """Generate independent bursty background traffic on every link."""
    values = np.stack(
        [
            make_bursty_trace(w, mean_bps, std_bps, autocorr, seed=seed + i)
            for i in range(len(topo.links))
        ]
    )
    timestamps = np.arange(w, dtype=np.int64) * interval
    return ThroughputMatrix(
        link_ids=topo.link_ids, timestamps=timestamps, values=values, interval=interval
    )
