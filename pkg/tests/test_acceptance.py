"""Acceptance suite: one test per release criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines; the pytest verdict per test doubles as the pass/fail record.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

import numpy as np
import pytest

from flowimpact import (
    FlowRecord,
    ImpactScenario,
    IMPACT_METRICS,
    LOAD_METRICS,
    LoadMetricSpec,
    SampleSet,
    classify_flows,
    decompose_flows,
    evaluate_impact,
    evaluate_load_metric,
    growth_gfu,
    growth_vector,
    make_background,
    make_bursty_trace,
    normalize_shapley,
    percentile,
    route_demands,
    shapley_general,
    shapley_two_player,
    build_batches,
    utilization,
    utilization_score,
    write_flows,
    write_throughput,
)
from flowimpact.cli import main
from flowimpact.impact import DELTA
from test_gfu import assert_feasible_and_maxmin, random_instance
from testutil import (
    matrix,
    oracle_maxmin_uniform_raise,
    oracle_percentile,
    oracle_utilization_score,
    ring_topo,
    star_topo,
)

ALPHAS = (0.10, 0.15, 0.20, 0.25)


def test_c1_formula_fidelity():
    rng = np.random.default_rng(101)
    for _ in range(1000):
        n_links = int(rng.integers(1, 9))
        w = int(rng.integers(1, 30))
        alpha = float(rng.uniform(0.01, 0.49))
        topo = star_topo(n_links)
        U = utilization(matrix(topo, rng.uniform(0, 1.3e8, size=(n_links, w))), topo)
        expected = oracle_utilization_score(U.values.ravel(), alpha)
        assert abs(utilization_score(U, alpha) - expected) <= 1e-12
    for _ in range(1000):
        n = int(10 ** rng.uniform(0, 4))
        n = min(max(n, 1), 10_000)
        values = rng.uniform(0, 1, size=n)
        alpha = float(rng.uniform(0.01, 0.49))
        got = percentile(SampleSet(values=values, provenance="series"), alpha)
        assert got == oracle_percentile(values, alpha)
    print("ACCEPTANCE 1 PASS: utilization score and percentile match oracles")


def test_c2_shapley_correctness():
    rng = np.random.default_rng(202)
    for _ in range(1000):
        v_xi, v_xo, v_xf = rng.uniform(0, 1, size=3)
        worth = {(): 0.0, (0,): v_xi, (1,): v_xo, (0, 1): v_xf}
        general = shapley_general(2, lambda c: worth[c])
        assert abs(shapley_two_player(v_xi, v_xo, v_xf) - general[1]) <= 1e-12
    for n in range(1, 9):
        worth = {(): 0.0}

        def value(coalition):
            if coalition not in worth:
                worth[coalition] = float(rng.uniform(0, 1))
            return worth[coalition]

        values = shapley_general(n, value)
        total = value(tuple(range(n)))
        assert abs(sum(values) - total) <= 1e-9
    assert normalize_shapley(0.45, 0.8) == 0.125
    assert normalize_shapley(0.2, 0.8) == 0.0  # share 0.25 <= 0.5
    assert normalize_shapley(0.4, 0.8) == 0.0  # share exactly 0.5
    assert normalize_shapley(0.3, 0.0) == 0.0
    print("ACCEPTANCE 2 PASS: Shapley closed form, efficiency, normalization")


def test_c3_range_and_sign_contracts():
    rng = np.random.default_rng(303)
    topo = star_topo(6)
    for _ in range(25):
        bg_values = rng.uniform(0, 1.4e8, size=(6, 12))
        contrib_values = rng.uniform(0, 0.8e8, size=(6, 12))
        background = matrix(topo, bg_values)
        combined = matrix(topo, bg_values + contrib_values)
        flows_bg = decompose_flows(background, topo)
        flows_all = decompose_flows(combined, topo)
        for mid, (base, method) in LOAD_METRICS.items():
            for alpha in ALPHAS:
                value = evaluate_load_metric(
                    LoadMetricSpec(base, method, alpha), topo, background, flows_bg
                )
                assert 0.0 <= value <= 1.0, mid
        scenario = ImpactScenario(
            topo=topo,
            background=background,
            flow_contribution=matrix(topo, contrib_values),
            flows_bg=flows_bg,
            flows_all=flows_all,
        )
        for mid, (_, _, analysis) in IMPACT_METRICS.items():
            for alpha in ALPHAS:
                result = evaluate_impact(mid, scenario, alpha)
                if analysis == DELTA:
                    assert -1.0 <= result.value <= 1.0, mid
                else:
                    assert 0.0 <= result.value <= 1.0, mid
                if mid in ("LUPD", "TLUSSD"):
                    assert result.value >= 0.0, mid
    # An underutilized background that an added flow lifts into the nominal
    # band must yield a negative score delta (down to -0.10).
    bg = matrix(topo, np.full((6, 10), 0.05e8))
    contrib = matrix(topo, np.full((6, 10), 0.35e8))
    scenario = ImpactScenario(topo=topo, background=bg, flow_contribution=contrib)
    result = evaluate_impact("LUSD", scenario, 0.15)
    assert -0.10 <= result.value < 0.0
    print("ACCEPTANCE 3 PASS: range and sign contracts hold")


def test_c4_maxmin_engine():
    rng = np.random.default_rng(404)
    oracle_checked = 0
    for i in range(500):
        if i % 2 == 0:
            topo, flows = random_instance(rng, max_links=3, max_flows=3)
        else:
            topo, flows = random_instance(rng, max_links=6, max_flows=8)
        gv = growth_vector(topo, flows)
        assert_feasible_and_maxmin(topo, flows, gv.alphas, tol=1e-9)
        if len(flows) <= 3 and len(topo.links) <= 3:
            indexed = [
                (tuple(topo.link_index[l] for l in r), rate) for _, r, rate in flows
            ]
            expected = oracle_maxmin_uniform_raise(topo.capacities, indexed)
            for (fid, _, _), exp in zip(flows, expected):
                assert abs(gv.alphas[fid] - exp) <= 1e-9 * max(1.0, exp)
            oracle_checked += 1
    assert oracle_checked >= 200
    single = star_topo(1, capacity=1e8)
    for rate in rng.uniform(1.0, 1e8, size=50):
        flows = [FlowRecord("f", ("l0",), np.array([rate]))]
        U = utilization(matrix(single, [[rate]]), single)
        assert abs(growth_gfu(single, flows, 0) - U.values[0, 0]) <= 1e-12
    print(
        f"ACCEPTANCE 4 PASS: max-min engine on 500 instances "
        f"({oracle_checked} oracle-checked)"
    )


def test_c5_null_flow_zero():
    rng = np.random.default_rng(505)
    topo = star_topo(5)
    background = matrix(topo, rng.uniform(0, 1.1e8, size=(5, 8)))
    zero = matrix(topo, np.zeros((5, 8)))
    flows_bg = decompose_flows(background, topo)
    flows_all = list(flows_bg) + [
        FlowRecord(f"injected:{f.route[0]}", f.route, np.zeros(8))
        for f in decompose_flows(zero, topo)
    ]
    scenario = ImpactScenario(
        topo=topo, background=background, flow_contribution=zero,
        flows_bg=flows_bg, flows_all=flows_all,
    )
    for mid in IMPACT_METRICS:
        for alpha in ALPHAS:
            assert evaluate_impact(mid, scenario, alpha).value == 0.0, (mid, alpha)
    print("ACCEPTANCE 5 PASS: zero contribution yields exactly 0 for all 11 metrics")


def test_c6_bandwidth_monotonicity_pattern():
    topo = ring_topo()  # 36 links, uniform 100 Mbps
    assert len(topo.links) == 36
    background = make_background(topo, w=240, mean_bps=1e7, std_bps=2e6, seed=606)
    source = make_bursty_trace(240, 1e6, 2e5, seed=607)
    batches = build_batches(topo, background, source, "polska")
    values: dict[tuple[str, str, float], float] = {}
    for batch in batches[1:]:
        scenario = ImpactScenario(
            topo=topo, background=background, flow_contribution=batch.contribution
        )
        for alpha in ALPHAS:
            result = evaluate_impact("LUPD", scenario, alpha)
            values[(batch.config.bandwidth_level, batch.config.stddev_level, alpha)] = (
                result.value
            )
    for sd in "ABC":
        for alpha in ALPHAS:
            low = values[("L", sd, alpha)]
            mid = values[("M", sd, alpha)]
            high = values[("H", sd, alpha)]
            assert low < mid < high, (sd, alpha, low, mid, high)
    print("ACCEPTANCE 6 PASS: flow impact strictly increases with bandwidth level")


@pytest.fixture
def vscale_workspace(tmp_path):
    """36-link, 516-timestamp dataset with ~100 routed flows per timestamp."""
    rng = np.random.default_rng(707)
    topo = ring_topo()
    nodes = list(topo.nodes)
    pairs = [(u, v) for u in nodes for v in nodes if u != v]
    rng.shuffle(pairs)
    w = 516
    demands = [
        (u, v, make_bursty_trace(w, 2e6, 5e5, seed=int(rng.integers(1e9))))
        for u, v in pairs[:100]
    ]
    flows, B = route_demands(topo, demands)
    topo_path = tmp_path / "topology.json"
    topo_path.write_text(json.dumps({
        "nodes": nodes,
        "links": [
            {"id": l.id, "src": l.src, "dst": l.dst, "capacity_bps": l.capacity_bps}
            for l in topo.links
        ],
    }))
    throughput_path = tmp_path / "throughput.csv"
    write_throughput(B, throughput_path)
    flows_path = tmp_path / "flows.jsonl"
    write_flows(flows, flows_path)
    trace_path = tmp_path / "trace.csv"
    trace = make_bursty_trace(w, 1e6, 2e5, seed=708)
    trace_path.write_text(
        "timestamp,rate_bps\n"
        + "\n".join(f"{i},{float(v)!r}" for i, v in enumerate(trace))
        + "\n"
    )
    return tmp_path, topo_path, throughput_path, flows_path, trace_path


def test_c7_performance_budget(vscale_workspace):
    tmp, topo_path, throughput_path, flows_path, trace_path = vscale_workspace
    out = tmp / "grid"
    start = time.perf_counter()
    code = main([
        "batch",
        "--topology", str(topo_path),
        "--throughput", str(throughput_path),
        "--flows", str(flows_path),
        "--trace", str(trace_path),
        "--name", "polska",
        "--out", str(out),
    ])
    elapsed = time.perf_counter() - start
    assert code == 0
    with open(out / "impact.csv") as fh:
        rows = fh.read().strip().splitlines()
    assert len(rows) - 1 == 10 * 11 * 4
    assert elapsed < 60.0, f"batch grid took {elapsed:.1f}s"
    print(f"ACCEPTANCE 7 PASS: full grid in {elapsed:.1f}s (< 60s)")


def _tree_digest(root: Path) -> dict[str, str]:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_c8_determinism(tmp_path):
    topo = star_topo(4)
    topo_path = tmp_path / "topology.json"
    topo_path.write_text(json.dumps({
        "nodes": list(topo.nodes),
        "links": [
            {"id": l.id, "src": l.src, "dst": l.dst, "capacity_bps": l.capacity_bps}
            for l in topo.links
        ],
    }))
    B = make_background(topo, 40, 2e7, 4e6, seed=808)
    throughput_path = tmp_path / "throughput.csv"
    write_throughput(B, throughput_path)
    trace = make_bursty_trace(40, 1e7, 2e6, seed=809)
    trace_path = tmp_path / "trace.csv"
    trace_path.write_text(
        "timestamp,rate_bps\n"
        + "\n".join(f"{i},{float(v)!r}" for i, v in enumerate(trace))
        + "\n"
    )
    digests = []
    for run in ("run1", "run2"):
        out = tmp_path / run
        args = [
            "batch", "--topology", str(topo_path),
            "--throughput", str(throughput_path), "--trace", str(trace_path),
            "--name", "custom", "--means", "1e7,2e7,3e7", "--stds", "1e6,2e6,3e6",
            "--out", str(out),
        ]
        assert main(args) == 0
        assert main(["report", "--out", str(out)]) == 0
        digests.append(_tree_digest(out))
    assert digests[0] == digests[1]
    print("ACCEPTANCE 8 PASS: batch + report outputs are byte-identical across runs")


def test_c9_elephant_classification():
    topo = star_topo(4)
    background = matrix(topo, np.full((4, 20), 0.10e8))
    heavy = matrix(topo, np.full((4, 20), 0.75e8))
    light = matrix(topo, np.full((4, 20), 0.05e8))
    results = []
    for flow_id, contribution in (("heavy", heavy), ("light", light)):
        scenario = ImpactScenario(
            topo=topo, background=background, flow_contribution=contribution
        )
        results.append((flow_id, evaluate_impact("LUPD", scenario, 0.10)))
    assert results[0][1].value > 0.70
    assert results[1][1].value < 0.3
    labeled = classify_flows(results, threshold=0.70)
    assert labeled == [("heavy", "elephant"), ("light", "normal")]
    print("ACCEPTANCE 9 PASS: threshold rule flags only the heavy flow")
