"""Command-line front end.

Subcommands: compute (network-load metrics), impact (flow-impact metrics for
one injected flow), batch (the synthetic L/M/H x A/B/C grid), report (SVG
grouped bar charts from an impact CSV). Every command is a pure function of
its input files and flags; re-runs produce byte-identical outputs.

Exit codes: 0 success, 1 data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import charts
from .impact import DELTA, IMPACT_METRICS, ImpactResult, ImpactScenario, evaluate_impact
from .load import (
    GFU_BASES,
    LOAD_METRICS,
    Base,
    LoadMetricSpec,
    Method,
    base_samples,
    percentile,
    top_share,
    utilization_score,
)
from .model import (
    FlowRecord,
    ParseError,
    ThroughputMatrix,
    Topology,
    ValidationError,
    decompose_flows,
    load_flows,
    load_throughput,
    load_topology,
    utilization,
    write_throughput,
)
from .scenario import build_batches, inject

DEFAULT_ALPHAS = (0.10, 0.15, 0.20, 0.25)

IMPACT_CSV_HEADER = ["batch_id", "metric_id", "alpha", "v_xi", "v_xo", "v_xf", "value"]


class UsageError(ValueError):
    """Bad flag combination or value; maps to exit code 2."""


@dataclass
class RunConfig:
    command: str
    topology: Path | None = None
    throughput: Path | None = None
    flows: Path | None = None
    trace: Path | None = None
    metrics: list[str] = field(default_factory=list)
    alphas: list[float] = field(default_factory=lambda: list(DEFAULT_ALPHAS))
    out: Path = Path(".")
    charts: bool = False
    mode: str = "all-links"
    route: list[str] | None = None
    name: str | None = None
    means: list[float] | None = None
    stds: list[float] | None = None
    decompose: bool = False
    input: Path | None = None


def _parse_list(text: str) -> list[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(item) for item in _parse_list(text)]
    except ValueError as exc:
        raise UsageError(f"bad numeric list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowimpact",
        description="Network-load and flow-impact metrics from throughput traces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, with_trace: bool) -> None:
        p.add_argument("--topology", required=True, help="topology JSON file")
        p.add_argument("--throughput", required=True, help="throughput CSV file")
        p.add_argument("--flows", help="flow database (JSON Lines)")
        p.add_argument("--decompose", action="store_true",
                       help="derive per-link pseudo-flows when no --flows is given")
        if with_trace:
            p.add_argument("--trace", required=True,
                           help="flow pattern CSV (timestamp + one value column)")
            p.add_argument("--mode", choices=["all-links", "route"],
                           default="all-links", help="injection mode")
            p.add_argument("--route", help="comma-separated link ids for route mode")
        p.add_argument("--metrics", help="comma-separated metric ids")
        p.add_argument("--alpha", help="comma-separated alpha values")
        p.add_argument("--out", default=".", help="output directory")

    p_compute = sub.add_parser("compute", help="network-load metrics")
    add_common(p_compute, with_trace=False)

    p_impact = sub.add_parser("impact", help="impact metrics for one injected flow")
    add_common(p_impact, with_trace=True)

    p_batch = sub.add_parser("batch", help="synthetic batch grid evaluation")
    add_common(p_batch, with_trace=True)
    p_batch.add_argument("--name", help="topology name for batch targets "
                         "(default: topology file stem)")
    p_batch.add_argument("--means", help="explicit L,M,H mean targets in bps")
    p_batch.add_argument("--stds", help="explicit A,B,C std targets in bps")
    p_batch.add_argument("--charts", action="store_true", help="also render SVG charts")

    p_report = sub.add_parser("report", help="render charts from an impact CSV")
    p_report.add_argument("--out", default=".", help="directory holding impact.csv; "
                          "charts go to <out>/charts")
    p_report.add_argument("--input", help="impact CSV path (default <out>/impact.csv)")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command, out=Path(args.out))
    for attr in ("topology", "throughput", "flows", "trace", "input"):
        if getattr(args, attr, None):
            setattr(cfg, attr, Path(getattr(args, attr)))
    cfg.decompose = getattr(args, "decompose", False)
    cfg.charts = getattr(args, "charts", False)
    cfg.mode = getattr(args, "mode", "all-links")
    cfg.name = getattr(args, "name", None)
    if getattr(args, "route", None):
        cfg.route = _parse_list(args.route)
    if getattr(args, "means", None):
        cfg.means = _parse_floats(args.means)
    if getattr(args, "stds", None):
        cfg.stds = _parse_floats(args.stds)
    if getattr(args, "alpha", None):
        cfg.alphas = _parse_floats(args.alpha)
    for alpha in cfg.alphas:
        if not 0.0 < alpha < 0.5:
            raise UsageError(f"alpha must be in (0, 0.5), got {alpha}")
    registry = LOAD_METRICS if cfg.command == "compute" else IMPACT_METRICS
    if getattr(args, "metrics", None):
        cfg.metrics = _parse_list(args.metrics)
        for mid in cfg.metrics:
            if mid not in registry:
                raise UsageError(f"unknown metric id {mid!r}")
    elif cfg.command in ("compute", "impact", "batch"):
        cfg.metrics = list(registry)
    if cfg.command in ("impact", "batch") and cfg.mode == "route" and not cfg.route:
        raise UsageError("route mode requires --route")
    if (cfg.means is None) != (cfg.stds is None):
        raise UsageError("--means and --stds must be given together")
    if cfg.means is not None and (len(cfg.means) != 3 or len(cfg.stds) != 3):
        raise UsageError("--means and --stds each take exactly three values")
    return cfg


def load_trace(path: Path) -> np.ndarray:
    """Load a single-column rate series CSV (timestamp plus one value column)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if len(header) != 2 or header[0] != "timestamp":
            raise ParseError(f"{path}: expected columns timestamp, <value>")
        try:
            values = np.array([float(row[1]) for row in reader], dtype=float)
        except (IndexError, ValueError) as exc:
            raise ParseError(f"{path}: bad trace row: {exc}") from exc
    if values.size == 0:
        raise ParseError(f"{path}: no samples")
    if (values < 0).any():
        raise ParseError(f"{path}: negative trace value")
    return values


def _resolve_flows(
    cfg: RunConfig, topo: Topology, B: ThroughputMatrix, default_decompose: bool
) -> list[FlowRecord] | None:
    if cfg.flows is not None:
        return load_flows(cfg.flows, topo)
    if cfg.decompose or default_decompose:
        return decompose_flows(B, topo)
    return None


def _contribution_flows(
    contribution: ThroughputMatrix, topo: Topology, mode: str,
    route: Sequence[str] | None,
) -> list[FlowRecord]:
    if mode == "route":
        rates = contribution.values[topo.link_index[route[0]]].copy()
        return [FlowRecord(flow_id="injected", route=tuple(route), rates=rates)]
    return [
        FlowRecord(flow_id=f"injected:{f.route[0]}", route=f.route, rates=f.rates)
        for f in decompose_flows(contribution, topo)
    ]


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _impact_row(batch_id: str, result: ImpactResult) -> list:
    return [
        batch_id,
        result.metric_id,
        repr(float(result.alpha)),
        repr(float(result.v_xi)),
        "" if result.v_xo is None else repr(float(result.v_xo)),
        repr(float(result.v_xf)),
        repr(float(result.value)),
    ]


def cmd_compute(cfg: RunConfig) -> int:
    topo = load_topology(cfg.topology)
    B = load_throughput(cfg.throughput, topo)
    flows = _resolve_flows(cfg, topo, B, default_decompose=False)
    for mid in cfg.metrics:
        if LOAD_METRICS[mid][0] in GFU_BASES and flows is None:
            raise ValidationError(
                f"metric {mid} requires a flow database (--flows or --decompose)"
            )
    samples_cache: dict[Base, object] = {}
    util_matrix = None
    rows = []
    for mid in (m for m in LOAD_METRICS if m in cfg.metrics):
        base, method = LOAD_METRICS[mid]
        for alpha in cfg.alphas:
            spec = LoadMetricSpec(base, method, alpha)
            if method is Method.UTIL_SCORE:
                if util_matrix is None:
                    util_matrix = utilization(B, topo, clamp=True)
                value = utilization_score(util_matrix, spec.alpha)
            else:
                if base not in samples_cache:
                    samples_cache[base] = base_samples(base, topo, B, flows)
                samples = samples_cache[base]
                value = (
                    percentile(samples, spec.alpha)
                    if method is Method.PERCENTILE
                    else top_share(samples, spec.alpha)
                )
            rows.append([mid, repr(float(alpha)), repr(float(value))])
    cfg.out.mkdir(parents=True, exist_ok=True)
    _write_csv(cfg.out / "load-metrics.csv", ["metric_id", "alpha", "value"], rows)
    return 0


def _evaluate_scenario(
    cfg: RunConfig,
    batch_id: str,
    scenario: ImpactScenario,
    rows: list,
) -> None:
    for mid in (m for m in IMPACT_METRICS if m in cfg.metrics):
        for alpha in cfg.alphas:
            rows.append(_impact_row(batch_id, evaluate_impact(mid, scenario, alpha)))


def cmd_impact(cfg: RunConfig) -> int:
    topo = load_topology(cfg.topology)
    B = load_throughput(cfg.throughput, topo)
    pattern = load_trace(cfg.trace)
    needs_flows = any(IMPACT_METRICS[m][0] in GFU_BASES for m in cfg.metrics)
    flows_bg = _resolve_flows(cfg, topo, B, default_decompose=needs_flows)
    combined, contribution = inject(B, pattern, cfg.mode, cfg.route, topo)
    flows_all = None
    if flows_bg is not None:
        flows_all = list(flows_bg) + _contribution_flows(
            contribution, topo, cfg.mode, cfg.route
        )
    scenario = ImpactScenario(
        topo=topo, background=B, flow_contribution=contribution,
        flows_bg=flows_bg, flows_all=flows_all,
    )
    rows: list = []
    _evaluate_scenario(cfg, "flow", scenario, rows)
    cfg.out.mkdir(parents=True, exist_ok=True)
    _write_csv(cfg.out / "impact.csv", IMPACT_CSV_HEADER, rows)
    return 0


def cmd_batch(cfg: RunConfig) -> int:
    topo = load_topology(cfg.topology)
    B = load_throughput(cfg.throughput, topo)
    source_trace = load_trace(cfg.trace)
    name = cfg.name or cfg.topology.stem
    targets = None
    if cfg.means is not None:
        targets = {
            "mean": dict(zip(("L", "M", "H"), cfg.means)),
            "std": dict(zip(("A", "B", "C"), cfg.stds)),
        }
    batches = build_batches(
        topo, B, source_trace, name, targets=targets, mode=cfg.mode, route=cfg.route
    )
    needs_flows = any(IMPACT_METRICS[m][0] in GFU_BASES for m in cfg.metrics)
    flows_bg = _resolve_flows(cfg, topo, B, default_decompose=needs_flows)

    # Background-side datasets are identical across batches; compute them once
    # and seed every scenario's cache.
    bg_samples: dict = {}
    bg_util = None
    rows: list = []
    cfg.out.mkdir(parents=True, exist_ok=True)
    for batch in batches:
        flows_all = None
        if flows_bg is not None:
            flows_all = list(flows_bg) + _contribution_flows(
                batch.contribution, topo, cfg.mode, cfg.route
            )
        scenario = ImpactScenario(
            topo=topo, background=B, flow_contribution=batch.contribution,
            flows_bg=flows_bg, flows_all=flows_all,
        )
        for key, value in bg_samples.items():
            scenario._samples[key] = value
        if bg_util is not None:
            scenario._matrices["background"] = bg_util
        _evaluate_scenario(cfg, batch.batch_id, scenario, rows)
        bg_samples = {
            k: v for k, v in scenario._samples.items() if k[1] == "background"
        }
        bg_util = scenario._matrices.get("background")
        batch_dir = cfg.out / batch.batch_id
        batch_dir.mkdir(parents=True, exist_ok=True)
        write_throughput(batch.combined, batch_dir / "combined.csv")
        write_throughput(batch.contribution, batch_dir / "contribution.csv")
    _write_csv(cfg.out / "impact.csv", IMPACT_CSV_HEADER, rows)
    manifest = {
        "topology": name,
        "batches": [
            {
                "id": b.batch_id,
                "mean_bps": b.config.target_mean,
                "std_bps": b.config.target_std,
                "achieved_mean": b.achieved_mean,
                "achieved_std": b.achieved_std,
                "mode": b.config.injection_mode,
            }
            for b in batches
        ],
    }
    (cfg.out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )
    if cfg.charts:
        _render_charts(cfg.out / "impact.csv", cfg.out)
    return 0


def _batch_sort_key(batch_id: str) -> tuple:
    group, series = _batch_group(batch_id)
    group_order = {"I": 0, "L": 1, "M": 2, "H": 3}
    return (group_order.get(group, 4), group, series)


def _batch_group(batch_id: str) -> tuple[str, str]:
    parts = batch_id.split("-")
    if parts[-1] == "I":
        return "I", "I"
    if len(parts) >= 2 and parts[-2] in ("L", "M", "H") and parts[-1] in ("A", "B", "C"):
        return parts[-2], parts[-1]
    return "all", batch_id


def _render_charts(input_csv: Path, out_dir: Path) -> int:
    with open(input_csv, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != IMPACT_CSV_HEADER:
            raise ParseError(f"{input_csv}: unexpected columns {header}")
        rows = [row for row in reader if row]
    charts_dir = out_dir / "charts"
    charts_dir.mkdir(parents=True, exist_ok=True)
    if not rows:
        svg = charts.grouped_bar_chart("no data", [], -1.0, 1.0)
        (charts_dir / "no-data.svg").write_text(svg)
        return 0
    cells: dict[tuple[str, float], list[tuple[str, float]]] = {}
    for row in rows:
        try:
            batch_id, mid, alpha, value = row[0], row[1], float(row[2]), float(row[6])
        except (IndexError, ValueError) as exc:
            raise ParseError(f"{input_csv}: bad row {row!r}: {exc}") from exc
        cells.setdefault((mid, alpha), []).append((batch_id, value))
    metric_order = {m: i for i, m in enumerate(IMPACT_METRICS)}
    for (mid, alpha) in sorted(
        cells, key=lambda k: (metric_order.get(k[0], len(metric_order)), k[0], k[1])
    ):
        entries = sorted(cells[(mid, alpha)], key=lambda e: _batch_sort_key(e[0]))
        grouped: dict[str, list[tuple[str, float]]] = {}
        for batch_id, value in entries:
            group, series = _batch_group(batch_id)
            grouped.setdefault(group, []).append((series, value))
        analysis = IMPACT_METRICS.get(mid, (None, None, DELTA))[2]
        y_min, y_max = (0.0, 1.0) if analysis == "shapley" else (-1.0, 1.0)
        svg = charts.grouped_bar_chart(
            f"{mid} (alpha={alpha:g})", list(grouped.items()), y_min, y_max
        )
        (charts_dir / f"{mid}-a{alpha:g}.svg").write_text(svg)
    return 0


def cmd_report(cfg: RunConfig) -> int:
    input_csv = cfg.input or (cfg.out / "impact.csv")
    if not Path(input_csv).exists():
        raise ValidationError(f"impact CSV not found: {input_csv}")
    return _render_charts(Path(input_csv), cfg.out)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = config_from_args(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    handler = {
        "compute": cmd_compute,
        "impact": cmd_impact,
        "batch": cmd_batch,
        "report": cmd_report,
    }[cfg.command]
    try:
        return handler(cfg)
    except (ParseError, ValidationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
