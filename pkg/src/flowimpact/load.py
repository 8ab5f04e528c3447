"""Network-load metrics: reduce a derived-metric dataset to a single value.

Three analysis methods are provided. The percentile is nearest-rank with
1-based indexing and no interpolation; the top and bottom sample shares use
strict ">" and inclusive "<=" respectively; the utilization score combines
the over- and underutilized shares with a 10:1 weighting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .gfu import GfuKind, gfu_series
from .model import (
    FlowRecord,
    ThroughputMatrix,
    Topology,
    UtilizationMatrix,
    ValidationError,
    mean_utilization,
    utilization,
)


class Base(str, Enum):
    LINK_UTIL = "link-util"
    MEAN_LINK_UTIL = "mean-link-util"
    GROWTH_GFU = "growth-gfu"
    RISK_GFU = "risk-gfu"


class Method(str, Enum):
    PERCENTILE = "percentile"
    TOP_SHARE = "top-share"
    UTIL_SCORE = "util-score"


GFU_BASES = (Base.GROWTH_GFU, Base.RISK_GFU)


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 0.5:
        raise ValidationError(f"alpha must be in (0, 0.5), got {alpha}")


@dataclass(frozen=True)
class LoadMetricSpec:
    base: Base
    method: Method
    alpha: float

    def __post_init__(self) -> None:
        _check_alpha(self.alpha)
        if self.method is Method.UTIL_SCORE and self.base is not Base.LINK_UTIL:
            raise ValidationError("util-score is only defined for the link-util base")


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Flat list of derived-metric samples in [0, 1] plus their provenance."""

    values: np.ndarray
    provenance: str  # "flattened-matrix" or "series"


# Canonical load metric ids, in the order used for CSV output.
LOAD_METRICS: dict[str, tuple[Base, Method]] = {
    "LUP": (Base.LINK_UTIL, Method.PERCENTILE),
    "MLUP": (Base.MEAN_LINK_UTIL, Method.PERCENTILE),
    "GGP": (Base.GROWTH_GFU, Method.PERCENTILE),
    "RGP": (Base.RISK_GFU, Method.PERCENTILE),
    "TLUSS": (Base.LINK_UTIL, Method.TOP_SHARE),
    "TMLUSS": (Base.MEAN_LINK_UTIL, Method.TOP_SHARE),
    "TGGSS": (Base.GROWTH_GFU, Method.TOP_SHARE),
    "TRGSS": (Base.RISK_GFU, Method.TOP_SHARE),
    "LUS": (Base.LINK_UTIL, Method.UTIL_SCORE),
}


def percentile(samples: SampleSet, alpha: float) -> float:
    """Nearest-rank (1 - alpha) percentile: the value at 1-based rank
    ceil((1 - alpha) * n) of the ascending-sorted samples."""
    _check_alpha(alpha)
    n = samples.values.size
    if n == 0:
        raise ValidationError("empty sample set")
    rank = math.ceil((1.0 - alpha) * n)
    rank = min(max(rank, 1), n)
    return float(np.sort(samples.values, kind="stable")[rank - 1])


def top_share(samples: SampleSet, alpha: float) -> float:
    """Share of samples strictly greater than the threshold 1 - alpha."""
    _check_alpha(alpha)
    if samples.values.size == 0:
        raise ValidationError("empty sample set")
    return float((samples.values > 1.0 - alpha).mean())


def bottom_share(samples: SampleSet, alpha: float) -> float:
    """Share of samples less than or equal to the threshold alpha."""
    _check_alpha(alpha)
    if samples.values.size == 0:
        raise ValidationError("empty sample set")
    return float((samples.values <= alpha).mean())


def utilization_score(U: UtilizationMatrix, alpha: float) -> float:
    """Weighted mix of overutilized (> 1 - alpha) and underutilized (<= alpha)
    sample shares, (1000 * s_o + 100 * s_u) / 1000, over all |E| * w samples."""
    _check_alpha(alpha)
    flat = U.values.ravel()
    if flat.size == 0:
        raise ValidationError("empty utilization matrix")
    s_over = float((flat > 1.0 - alpha).mean())
    s_under = float((flat <= alpha).mean())
    return (1000.0 * s_over + 100.0 * s_under) / 1000.0


def link_util_samples(topo: Topology, B: ThroughputMatrix) -> SampleSet:
    U = utilization(B, topo, clamp=True)
    return SampleSet(values=U.values.ravel(), provenance="flattened-matrix")


def mean_util_samples(topo: Topology, B: ThroughputMatrix) -> SampleSet:
    U = utilization(B, topo, clamp=True)
    return SampleSet(values=mean_utilization(U).values, provenance="series")


def gfu_samples(
    base: Base, topo: Topology, flows: Sequence[FlowRecord], B: ThroughputMatrix
) -> SampleSet:
    kind = GfuKind.GROWTH if base is Base.GROWTH_GFU else GfuKind.RISK
    return SampleSet(values=gfu_series(kind, topo, flows, B).values, provenance="series")


def base_samples(
    base: Base,
    topo: Topology,
    B: ThroughputMatrix,
    flows: Sequence[FlowRecord] | None = None,
) -> SampleSet:
    """Build the flat dataset a load metric reduces, for the given base."""
    if base is Base.LINK_UTIL:
        return link_util_samples(topo, B)
    if base is Base.MEAN_LINK_UTIL:
        return mean_util_samples(topo, B)
    if flows is None:
        raise ValidationError(f"base {base.value!r} requires a flow database")
    return gfu_samples(base, topo, flows, B)


def evaluate_load_metric(
    spec: LoadMetricSpec,
    topo: Topology,
    B: ThroughputMatrix,
    flows: Sequence[FlowRecord] | None = None,
) -> float:
    """Evaluate one network-load metric over the whole window of B."""
    if spec.method is Method.UTIL_SCORE:
        return utilization_score(utilization(B, topo, clamp=True), spec.alpha)
    samples = base_samples(spec.base, topo, B, flows)
    if spec.method is Method.PERCENTILE:
        return percentile(samples, spec.alpha)
    return top_share(samples, spec.alpha)
