"""Topology and trace data model: file ingestion, utilization, routing, decomposition.

All types are immutable after construction and every operation is a pure
function of its inputs, so everything here is safe to evaluate concurrently.
"""

from __future__ import annotations

import csv
import json
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class ParseError(ValueError):
    """Input file is malformed (bad JSON/CSV, wrong columns, bad cell values)."""


class ValidationError(ValueError):
    """Parsed data violates a model invariant."""


@dataclass(frozen=True)
class Link:
    id: str
    src: str
    dst: str
    capacity_bps: float


@dataclass(frozen=True)
class Topology:
    """Directed-link network graph with per-link capacities in bps."""

    nodes: tuple[str, ...]
    links: tuple[Link, ...]

    def __post_init__(self) -> None:
        node_set = set(self.nodes)
        if len(node_set) != len(self.nodes):
            raise ValidationError("duplicate node ids")
        seen: set[str] = set()
        for link in self.links:
            if link.id in seen:
                raise ValidationError(f"duplicate link id {link.id!r}")
            seen.add(link.id)
            if link.src == link.dst:
                raise ValidationError(f"link {link.id!r} is a self-loop")
            if link.src not in node_set or link.dst not in node_set:
                raise ValidationError(f"link {link.id!r} references unknown node")
            if not link.capacity_bps > 0:
                raise ValidationError(
                    f"link {link.id!r} capacity must be > 0, got {link.capacity_bps}"
                )

    @cached_property
    def link_ids(self) -> tuple[str, ...]:
        return tuple(link.id for link in self.links)

    @cached_property
    def link_index(self) -> dict[str, int]:
        return {link.id: i for i, link in enumerate(self.links)}

    @cached_property
    def capacities(self) -> np.ndarray:
        return np.array([link.capacity_bps for link in self.links], dtype=float)

    def link(self, link_id: str) -> Link:
        return self.links[self.link_index[link_id]]


def _check_timestamps(timestamps: np.ndarray, interval: int) -> None:
    if timestamps.size == 0:
        raise ValidationError("empty timestamp list")
    if timestamps.size > 1:
        deltas = np.diff(timestamps)
        if not (deltas > 0).all():
            raise ValidationError("timestamps must be strictly increasing")
        if not (deltas == interval).all():
            raise ValidationError("timestamps must be uniformly spaced")


@dataclass(frozen=True, eq=False)
class ThroughputMatrix:
    """Per-link throughput samples in bps, one row per link, one column per timestamp."""

    link_ids: tuple[str, ...]
    timestamps: np.ndarray  # int seconds, shape (w,)
    values: np.ndarray  # shape (|E|, w)
    interval: int

    def __post_init__(self) -> None:
        if self.values.shape != (len(self.link_ids), self.timestamps.size):
            raise ValidationError(
                f"matrix shape {self.values.shape} does not match "
                f"{len(self.link_ids)} links x {self.timestamps.size} timestamps"
            )
        if self.values.size and not (self.values >= 0).all():
            raise ValidationError("throughput values must be >= 0")
        _check_timestamps(self.timestamps, self.interval)

    @property
    def w(self) -> int:
        return self.timestamps.size


@dataclass(frozen=True, eq=False)
class UtilizationMatrix:
    """Dimensionless link utilization, same shape as the source throughput matrix."""

    link_ids: tuple[str, ...]
    timestamps: np.ndarray
    values: np.ndarray
    interval: int
    clamped: bool

    def __post_init__(self) -> None:
        if self.values.shape != (len(self.link_ids), self.timestamps.size):
            raise ValidationError("utilization shape mismatch")
        if self.values.size and not (self.values >= 0).all():
            raise ValidationError("utilization values must be >= 0")

    @property
    def w(self) -> int:
        return self.timestamps.size


@dataclass(frozen=True, eq=False)
class MeanUtilizationSeries:
    """Per-timestamp arithmetic mean of utilization across all links."""

    timestamps: np.ndarray
    values: np.ndarray  # shape (w,)

    def __post_init__(self) -> None:
        if self.values.shape != self.timestamps.shape:
            raise ValidationError("series length mismatch")


@dataclass(frozen=True, eq=False)
class FlowRecord:
    """A flow's route (ordered directed link ids) and its rate series in bps."""

    flow_id: str
    route: tuple[str, ...]
    rates: np.ndarray  # shape (w,)

    def __post_init__(self) -> None:
        if not self.route:
            raise ValidationError(f"flow {self.flow_id!r} has an empty route")
        if self.rates.size and not (self.rates >= 0).all():
            raise ValidationError(f"flow {self.flow_id!r} has negative rates")


def validate_route(route: Sequence[str], topo: Topology, flow_id: str = "?") -> None:
    """Check that a route's links exist and form a connected directed path."""
    for link_id in route:
        if link_id not in topo.link_index:
            raise ValidationError(f"flow {flow_id!r} route uses unknown link {link_id!r}")
    for a, b in zip(route, route[1:]):
        if topo.link(a).dst != topo.link(b).src:
            raise ValidationError(
                f"flow {flow_id!r} route breaks between {a!r} and {b!r}"
            )


def load_topology(path: str | Path) -> Topology:
    """Load a topology JSON file.

    A link with ``"bidirectional": true`` expands into two directed links with
    id suffixes "+" (src to dst) and "-" (dst to src), preserving file order.
    """
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(obj, dict) or "nodes" not in obj or "links" not in obj:
        raise ParseError(f"{path}: expected an object with 'nodes' and 'links'")
    links: list[Link] = []
    for raw in obj["links"]:
        try:
            link_id = str(raw["id"])
            src = str(raw["src"])
            dst = str(raw["dst"])
            capacity = float(raw["capacity_bps"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path}: malformed link entry {raw!r}") from exc
        if raw.get("bidirectional"):
            links.append(Link(link_id + "+", src, dst, capacity))
            links.append(Link(link_id + "-", dst, src, capacity))
        else:
            links.append(Link(link_id, src, dst, capacity))
    return Topology(nodes=tuple(str(n) for n in obj["nodes"]), links=tuple(links))


def load_throughput(path: str | Path, topo: Topology) -> ThroughputMatrix:
    """Load a throughput CSV aligned to the topology's link order.

    The file's first column must be "timestamp"; the remaining column names
    must be exactly the topology's link ids (in any order).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if not header or header[0] != "timestamp":
            raise ParseError(f"{path}: first column must be 'timestamp'")
        cols = header[1:]
        col_set = set(cols)
        if len(col_set) != len(cols):
            raise ParseError(f"{path}: duplicate link columns")
        unknown = col_set - set(topo.link_ids)
        if unknown:
            raise ParseError(f"{path}: unknown link column {sorted(unknown)[0]!r}")
        missing = set(topo.link_ids) - col_set
        if missing:
            raise ParseError(f"{path}: missing link column {sorted(missing)[0]!r}")
        timestamps: list[int] = []
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ParseError(f"{path}:{lineno}: expected {len(header)} cells")
            try:
                timestamps.append(int(row[0]))
                rows.append([float(cell) for cell in row[1:]])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: bad cell value: {exc}") from exc
    if not rows:
        raise ParseError(f"{path}: no samples")
    ts = np.array(timestamps, dtype=np.int64)
    data = np.array(rows, dtype=float).T  # file rows are timestamps
    if (data < 0).any():
        raise ParseError(f"{path}: negative throughput value")
    interval = int(ts[1] - ts[0]) if ts.size > 1 else 1
    order = [cols.index(link_id) for link_id in topo.link_ids]
    return ThroughputMatrix(
        link_ids=topo.link_ids,
        timestamps=ts,
        values=np.ascontiguousarray(data[order]),
        interval=interval,
    )


def write_throughput(matrix: ThroughputMatrix, path: str | Path) -> None:
    """Write a throughput matrix in the CSV format accepted by load_throughput."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", *matrix.link_ids])
        for j, ts in enumerate(matrix.timestamps):
            writer.writerow([int(ts), *(repr(float(v)) for v in matrix.values[:, j])])


def load_flows(path: str | Path, topo: Topology) -> list[FlowRecord]:
    """Load a JSON Lines flow database and validate routes against the topology."""
    flows: list[FlowRecord] = []
    seen: set[str] = set()
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            flow_id = str(obj["flow_id"])
            route = tuple(str(l) for l in obj["route"])
            rates = np.array([float(r) for r in obj["rates_bps"]], dtype=float)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path}:{lineno}: malformed flow record: {exc}") from exc
        if flow_id in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate flow id {flow_id!r}")
        seen.add(flow_id)
        validate_route(route, topo, flow_id)
        flows.append(FlowRecord(flow_id=flow_id, route=route, rates=rates))
    return flows


def write_flows(flows: Iterable[FlowRecord], path: str | Path) -> None:
    """Write flows in the JSON Lines format accepted by load_flows."""
    with open(path, "w") as fh:
        for flow in flows:
            fh.write(
                json.dumps(
                    {
                        "flow_id": flow.flow_id,
                        "route": list(flow.route),
                        "rates_bps": [float(r) for r in flow.rates],
                    }
                )
                + "\n"
            )


def load_demands(path: str | Path) -> tuple[list[tuple[str, str, np.ndarray]], np.ndarray]:
    """Load a demand CSV (columns: src, dst, then one column per timestamp)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if len(header) < 3 or header[0] != "src" or header[1] != "dst":
            raise ParseError(f"{path}: expected columns src, dst, <timestamps...>")
        try:
            timestamps = np.array([int(h) for h in header[2:]], dtype=np.int64)
        except ValueError as exc:
            raise ParseError(f"{path}: timestamp columns must be integers") from exc
        demands: list[tuple[str, str, np.ndarray]] = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ParseError(f"{path}:{lineno}: expected {len(header)} cells")
            try:
                rates = np.array([float(c) for c in row[2:]], dtype=float)
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: bad rate value: {exc}") from exc
            demands.append((row[0], row[1], rates))
    return demands, timestamps


def utilization(
    B: ThroughputMatrix, topo: Topology, clamp: bool = True
) -> UtilizationMatrix:
    """Divide throughput by link capacity; by default clamp values into [0, 1]."""
    if B.link_ids != topo.link_ids:
        raise ValidationError("throughput matrix is not aligned to the topology")
    values = B.values / topo.capacities[:, None]
    clamped = False
    if clamp:
        over = values > 1.0
        if over.any():
            clamped = True
            values = np.minimum(values, 1.0)
    return UtilizationMatrix(
        link_ids=B.link_ids,
        timestamps=B.timestamps,
        values=values,
        interval=B.interval,
        clamped=clamped,
    )


def mean_utilization(U: UtilizationMatrix) -> MeanUtilizationSeries:
    """Average utilization across all links at each timestamp."""
    if U.values.size == 0:
        raise ValidationError("empty utilization matrix")
    return MeanUtilizationSeries(
        timestamps=U.timestamps, values=U.values.mean(axis=0)
    )


def _adjacency(topo: Topology) -> tuple[dict[str, list[str]], dict[tuple[str, str], str]]:
    """Forward adjacency plus the lowest-id link for each (src, dst) node pair."""
    neighbors: dict[str, set[str]] = {n: set() for n in topo.nodes}
    best_link: dict[tuple[str, str], str] = {}
    for link in topo.links:
        neighbors[link.src].add(link.dst)
        key = (link.src, link.dst)
        if key not in best_link or link.id < best_link[key]:
            best_link[key] = link.id
    return {n: sorted(vs) for n, vs in neighbors.items()}, best_link


def _bfs_distances(adj: dict[str, list[str]], start: str) -> dict[str, int]:
    dist = {start: 0}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def shortest_path(topo: Topology, src: str, dst: str) -> tuple[str, ...]:
    """Minimum-hop route from src to dst as a tuple of link ids.

    Among all minimum-hop paths the one with the lexicographically smallest
    node-id sequence is returned; parallel links are broken by lowest link id.
    """
    if src not in set(topo.nodes) or dst not in set(topo.nodes):
        raise ValidationError(f"unknown node in demand {src!r} -> {dst!r}")
    if src == dst:
        raise ValidationError(f"demand source equals destination: {src!r}")
    adj, best_link = _adjacency(topo)
    reverse: dict[str, set[str]] = {n: set() for n in topo.nodes}
    for link in topo.links:
        reverse[link.dst].add(link.src)
    dist_to_dst = _bfs_distances({n: sorted(vs) for n, vs in reverse.items()}, dst)
    if src not in dist_to_dst:
        raise ValidationError(f"destination {dst!r} unreachable from {src!r}")
    route: list[str] = []
    u = src
    while u != dst:
        step = min(
            v for v in adj[u] if dist_to_dst.get(v, -1) == dist_to_dst[u] - 1
        )
        route.append(best_link[(u, step)])
        u = step
    return tuple(route)


def route_demands(
    topo: Topology,
    demands: Sequence[tuple[str, str, np.ndarray]],
    timestamps: np.ndarray | None = None,
) -> tuple[list[FlowRecord], ThroughputMatrix]:
    """Route demands along hop-count shortest paths and superpose link loads.

    Each demand (src, dst, rate series) becomes one FlowRecord; the returned
    matrix holds, per link and timestamp, the sum of rates of flows crossing it.
    """
    if not demands:
        raise ValidationError("no demands given")
    w = len(demands[0][2])
    if timestamps is None:
        timestamps = np.arange(w, dtype=np.int64)
    if timestamps.size != w:
        raise ValidationError("timestamps length does not match demand series")
    interval = int(timestamps[1] - timestamps[0]) if w > 1 else 1
    flows: list[FlowRecord] = []
    values = np.zeros((len(topo.links), w), dtype=float)
    counts: dict[str, int] = {}
    for src, dst, rates in demands:
        rates = np.asarray(rates, dtype=float)
        if rates.size != w:
            raise ValidationError("demand rate series have inconsistent lengths")
        if rates.size and not (rates >= 0).all():
            raise ValidationError(f"demand {src!r} -> {dst!r} has negative rates")
        route = shortest_path(topo, src, dst)
        base = f"{src}->{dst}"
        counts[base] = counts.get(base, 0) + 1
        flow_id = base if counts[base] == 1 else f"{base}#{counts[base]}"
        flows.append(FlowRecord(flow_id=flow_id, route=route, rates=rates))
        for link_id in route:
            values[topo.link_index[link_id]] += rates
    matrix = ThroughputMatrix(
        link_ids=topo.link_ids, timestamps=timestamps, values=values, interval=interval
    )
    return flows, matrix


def decompose_flows(B: ThroughputMatrix, topo: Topology) -> list[FlowRecord]:
    """Derive one single-link pseudo-flow per link carrying that link's row."""
    if B.link_ids != topo.link_ids:
        raise ValidationError("throughput matrix is not aligned to the topology")
    return [
        FlowRecord(flow_id=f"link:{link_id}", route=(link_id,), rates=B.values[i].copy())
        for i, link_id in enumerate(B.link_ids)
    ]
