from __future__ import annotations

import numpy as np
import pytest

from flowimpact import (
    BATCH_TARGETS,
    ValidationError,
    build_batches,
    inject,
    make_background,
    make_bursty_trace,
    scale_trace,
)
from testutil import matrix, ring_topo, star_topo, triangle_topo


def py_mean(xs):
    return sum(xs) / len(xs)


def py_std(xs):
    m = py_mean(xs)
    return (sum((x - m) ** 2 for x in xs) / len(xs)) ** 0.5


class TestScaleTrace:
    def test_zero_sigma_gives_constant(self):
        out = scale_trace(np.array([1.0, 5.0, 2.0]), 48e6, 0.0)
        assert (out.values == 48e6).all()

    def test_moments_match_targets(self, rng):
        x = rng.uniform(10, 20, size=400)
        out = scale_trace(x, 48e6, 6e6)
        assert out.clamped_count == 0
        assert py_mean(out.values.tolist()) == pytest.approx(48e6, abs=1e-9 * 48e6)
        assert py_std(out.values.tolist()) == pytest.approx(6e6, abs=1e-9 * 6e6)
        assert out.achieved_mean == pytest.approx(48e6)
        assert out.achieved_std == pytest.approx(6e6)

    def test_constant_input_with_positive_sigma_rejected(self):
        with pytest.raises(ValidationError):
            scale_trace(np.full(10, 3.0), 1e6, 1e5)

    def test_affine_equivariance(self, rng):
        x = rng.uniform(5, 9, size=100)
        a = scale_trace(x, 1e6, 2e5)
        b = scale_trace(x * 7.0 + 3.0, 1e6, 2e5)
        assert np.allclose(a.values, b.values, rtol=1e-9)

    def test_clamping_recorded_and_warned(self, caplog):
        # Target std far above the mean forces negative samples.
        x = np.array([0.0, 1.0, 2.0, 50.0])
        with caplog.at_level("WARNING"):
            out = scale_trace(x, 1e6, 5e6)
        assert out.clamped_count > 0
        assert (out.values >= 0).all()
        assert any("deviates" in r.message for r in caplog.records)

    def test_empty_or_bad_targets_rejected(self):
        with pytest.raises(ValidationError):
            scale_trace(np.array([]), 1e6, 0.0)
        with pytest.raises(ValidationError):
            scale_trace(np.array([1.0]), 0.0, 0.0)
        with pytest.raises(ValidationError):
            scale_trace(np.array([1.0]), 1e6, -1.0)


class TestInject:
    def test_zero_pattern_identity(self, rng):
        topo = star_topo(3)
        bg = matrix(topo, rng.uniform(0, 1e8, size=(3, 5)))
        combined, contribution = inject(bg, np.zeros(5))
        assert np.array_equal(combined.values, bg.values)
        assert (contribution.values == 0).all()

    def test_all_links_broadcasts_identical_rows(self, rng):
        topo = ring_topo()
        bg = matrix(topo, rng.uniform(0, 1e8, size=(36, 4)))
        pattern = rng.uniform(0, 1e6, size=4)
        _, contribution = inject(bg, pattern)
        assert contribution.values.shape == (36, 4)
        for row in contribution.values:
            assert np.array_equal(row, pattern)

    def test_combined_is_exact_sum_of_parts(self, rng):
        topo = star_topo(4)
        bg = matrix(topo, rng.uniform(0, 1e8, size=(4, 6)))
        pattern = rng.uniform(0, 1e7, size=6)
        combined, contribution = inject(bg, pattern)
        assert np.array_equal(combined.values, bg.values + contribution.values)
        assert np.allclose(
            combined.values - bg.values, contribution.values, rtol=1e-9
        )

    def test_route_mode_touches_only_route_links(self, rng):
        topo = triangle_topo()
        bg = matrix(topo, np.zeros((6, 3)))
        pattern = rng.uniform(1, 2, size=3)
        combined, contribution = inject(bg, pattern, mode="route",
                                        route=["ab"], topo=topo)
        idx = topo.link_index["ab"]
        assert np.array_equal(contribution.values[idx], pattern)
        assert (np.delete(contribution.values, idx, axis=0) == 0).all()
        assert np.array_equal(combined.values, contribution.values)

    def test_route_mode_requires_route(self, rng):
        topo = star_topo(1)
        bg = matrix(topo, np.zeros((1, 2)))
        with pytest.raises(ValidationError):
            inject(bg, np.zeros(2), mode="route")

    def test_length_mismatch_rejected(self):
        topo = star_topo(1)
        bg = matrix(topo, np.zeros((1, 3)))
        with pytest.raises(ValidationError):
            inject(bg, np.zeros(2))

    def test_injection_is_linear(self, rng):
        topo = star_topo(2)
        bg = matrix(topo, rng.uniform(0, 1e8, size=(2, 5)))
        p1 = rng.uniform(0, 1e6, size=5)
        p2 = rng.uniform(0, 1e6, size=5)
        step1, _ = inject(bg, p1)
        step2, _ = inject(step1, p2)
        direct, _ = inject(bg, p1 + p2)
        assert np.allclose(step2.values, direct.values, rtol=0, atol=1e-6)


class TestBuildBatches:
    def background(self, topo, w=50, seed=7):
        return make_background(topo, w, mean_bps=1e7, std_bps=2e6, seed=seed)

    def test_grid_targets_for_known_topologies(self, rng):
        topo = ring_topo()
        bg = self.background(topo)
        trace = rng.uniform(10, 20, size=50)
        batches = build_batches(topo, bg, trace, "polska")
        by_id = {b.batch_id: b for b in batches}
        assert len(batches) == 10
        assert by_id["polska-M-B"].config.target_mean == 48e6
        assert by_id["polska-M-B"].config.target_std == 6e6
        assert {by_id[f"polska-{bw}-A"].config.target_mean for bw in "LMH"} == {
            24e6, 48e6, 72e6,
        }
        assert {by_id[f"polska-L-{sd}"].config.target_std for sd in "ABC"} == {
            3e6, 6e6, 9e6,
        }

    def test_geant_targets(self):
        assert BATCH_TARGETS["geant"]["mean"] == {"L": 7e9, "M": 14e9, "H": 21e9}
        assert BATCH_TARGETS["geant"]["std"] == {"A": 1e9, "B": 2e9, "C": 3e9}

    def test_abilene_targets(self):
        assert BATCH_TARGETS["abilene"]["mean"] == {"L": 2e9, "M": 4e9, "H": 6e9}
        assert BATCH_TARGETS["abilene"]["std"] == {"A": 300e6, "B": 600e6, "C": 900e6}

    def test_equal_mean_batches_inject_equal_volume(self, rng):
        topo = star_topo(4)
        bg = self.background(topo)
        trace = rng.uniform(10, 20, size=50)
        batches = build_batches(topo, bg, trace, "polska")
        by_id = {b.batch_id: b for b in batches}
        volumes = [
            float(by_id[f"polska-L-{sd}"].contribution.values.sum()) for sd in "ABC"
        ]
        assert volumes[0] == pytest.approx(volumes[1], rel=1e-9)
        assert volumes[1] == pytest.approx(volumes[2], rel=1e-9)

    def test_initial_batch_has_zero_contribution(self, rng):
        topo = star_topo(2)
        bg = self.background(topo)
        batches = build_batches(topo, bg, rng.uniform(1, 2, size=50), "polska")
        initial = batches[0]
        assert initial.batch_id == "polska-I"
        assert (initial.contribution.values == 0).all()
        assert np.array_equal(initial.combined.values, bg.values)

    def test_unknown_topology_without_targets_rejected(self, rng):
        topo = star_topo(2)
        bg = self.background(topo)
        with pytest.raises(ValidationError):
            build_batches(topo, bg, rng.uniform(1, 2, size=50), "mystery")

    def test_explicit_targets_accepted(self, rng):
        topo = star_topo(2)
        bg = self.background(topo)
        targets = {
            "mean": {"L": 1e6, "M": 2e6, "H": 3e6},
            "std": {"A": 1e5, "B": 2e5, "C": 3e5},
        }
        batches = build_batches(
            topo, bg, rng.uniform(1, 2, size=50), "custom", targets=targets
        )
        assert {b.batch_id for b in batches} == {"custom-I"} | {
            f"custom-{bw}-{sd}" for bw in "LMH" for sd in "ABC"
        }


class TestGenerators:
    def test_bursty_trace_deterministic_and_nonnegative(self):
        a = make_bursty_trace(100, 1e6, 2e5, seed=5)
        b = make_bursty_trace(100, 1e6, 2e5, seed=5)
        assert np.array_equal(a, b)
        assert (a >= 0).all()
        assert a.shape == (100,)

    def test_bursty_trace_hits_requested_moments(self):
        trace = make_bursty_trace(500, 1e6, 2e5, seed=11)
        assert trace.mean() == pytest.approx(1e6, rel=1e-6)
        assert trace.std() == pytest.approx(2e5, rel=1e-6)

    def test_background_shape_and_determinism(self):
        topo = star_topo(3)
        a = make_background(topo, 40, 1e7, 1e6, seed=3)
        b = make_background(topo, 40, 1e7, 1e6, seed=3)
        assert a.values.shape == (3, 40)
        assert np.array_equal(a.values, b.values)
        assert (a.values >= 0).all()

    def test_bad_parameters_rejected(self):
        with pytest.raises(ValidationError):
            make_bursty_trace(0, 1e6, 1e5)
        with pytest.raises(ValidationError):
            make_bursty_trace(10, 1e6, 1e5, autocorr=1.0)
