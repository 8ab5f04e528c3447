#!/usr/bin/env python3
"""Generate a desk-scale demo dataset: a 12-node / 36-link uniform 100 Mbps
topology, synthetic bursty background traffic, a source flow trace, and a
routed flow database. Output files use the formats the CLI consumes."""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np

from flowimpact import (
    make_background,
    make_bursty_trace,
    route_demands,
    write_flows,
    write_throughput,
)
from flowimpact.model import Link, Topology


def build_topology(capacity: float = 1e8) -> Topology:
    nodes = tuple(f"n{i:02d}" for i in range(12))
    pairs = [(i, (i + 1) % 12) for i in range(12)] + [(i, i + 6) for i in range(6)]
    links = []
    for i, j in pairs:
        links.append(Link(f"{nodes[i]}-{nodes[j]}+", nodes[i], nodes[j], capacity))
        links.append(Link(f"{nodes[i]}-{nodes[j]}-", nodes[j], nodes[i], capacity))
    return Topology(nodes=nodes, links=tuple(links))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo-data", help="output directory")
    parser.add_argument("--timestamps", type=int, default=240)
    parser.add_argument("--interval", type=int, default=300, help="seconds")
    parser.add_argument("--mean-bps", type=float, default=1e7)
    parser.add_argument("--std-bps", type=float, default=2e6)
    parser.add_argument("--demands", type=int, default=100)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    topo = build_topology()
    (out / "polska.json").write_text(json.dumps({
        "nodes": list(topo.nodes),
        "links": [
            {"id": l.id, "src": l.src, "dst": l.dst, "capacity_bps": l.capacity_bps}
            for l in topo.links
        ],
    }, indent=2) + "\n")

    background = make_background(
        topo, args.timestamps, args.mean_bps, args.std_bps,
        seed=args.seed, interval=args.interval,
    )
    write_throughput(background, out / "background.csv")

    trace = make_bursty_trace(args.timestamps, 1e6, 2e5, seed=args.seed + 1)
    with open(out / "trace.csv", "w") as fh:
        fh.write("timestamp,rate_bps\n")
        for i, v in enumerate(trace):
            fh.write(f"{i * args.interval},{float(v)!r}\n")

    pairs = [(u, v) for u in topo.nodes for v in topo.nodes if u != v]
    rng.shuffle(pairs)
    demands = [
        (u, v, make_bursty_trace(args.timestamps, 2e6, 5e5,
                                 seed=int(rng.integers(1e9))))
        for u, v in pairs[: args.demands]
    ]
    flows, routed = route_demands(topo, demands, background.timestamps)
    write_flows(flows, out / "flows.jsonl")
    write_throughput(routed, out / "routed-throughput.csv")

    print(f"wrote topology, background, trace and {len(flows)} flows to {out}/")


if __name__ == "__main__":
    main()
