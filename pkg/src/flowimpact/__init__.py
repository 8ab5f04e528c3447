"""Network-load and flow-impact metrics from link-throughput traces."""

from .gfu import GfuKind, GfuSeries, GrowthVector, gfu_series, growth_gfu, growth_vector, risk_gfu
from .impact import (
    IMPACT_METRICS,
    ImpactResult,
    ImpactScenario,
    classify_flows,
    delta,
    evaluate_impact,
    normalize_shapley,
    shapley_general,
    shapley_two_player,
)
from .load import (
    LOAD_METRICS,
    Base,
    LoadMetricSpec,
    Method,
    SampleSet,
    bottom_share,
    evaluate_load_metric,
    percentile,
    top_share,
    utilization_score,
)
from .model import (
    FlowRecord,
    Link,
    MeanUtilizationSeries,
    ParseError,
    ThroughputMatrix,
    Topology,
    UtilizationMatrix,
    ValidationError,
    decompose_flows,
    load_flows,
    load_demands,
    load_throughput,
    load_topology,
    mean_utilization,
    route_demands,
    shortest_path,
    utilization,
    write_flows,
    write_throughput,
)
from .scenario import (
    BATCH_TARGETS,
    BatchConfig,
    BatchScenario,
    ScaledTrace,
    build_batches,
    inject,
    make_background,
    make_bursty_trace,
    scale_trace,
)

__all__ = [name for name in dir() if not name.startswith("_")]
