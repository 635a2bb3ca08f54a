import math

import numpy as np
import pytest

from slfv_growth.ancestral import (
    AncestralState,
    apply_event,
    DualRun,
    estimate_speed,
    hit_halfplane,
)
from slfv_growth.errors import BudgetExceeded, InvariantViolation
from slfv_growth.events import Event, ShapeLaw, unit_ball_law
from slfv_growth.geometry import Ellipse, intersects_positively


LAW = unit_ball_law()


class TestApplyEvent:
    def test_point_covered_becomes_region(self):
        st = AncestralState(1.0)
        assert st.apply_event(Event(0.2, 0.5, 0.0, 1, 1, 0))
        assert st.phase == "region"
        assert st.jump_count == 1
        assert st.reach == pytest.approx(1.5)

    def test_point_not_covered_unchanged(self):
        st = AncestralState(1.0)
        assert not st.apply_event(Event(0.2, 5.0, 0.0, 1, 1, 0))
        assert st.phase == "point"
        assert st.time == 0.2

    def test_region_append_on_overlap(self):
        st = AncestralState(1.0)
        st.apply_event(Event(0.1, 0.0, 0.0, 1, 1, 0))
        assert st.apply_event(Event(0.2, 1.9, 0.0, 1, 1, 0))
        assert st.jump_count == 2
        assert st.reach == pytest.approx(2.9)
        assert not st.apply_event(Event(0.3, 9.0, 0.0, 1, 1, 0))
        assert st.jump_count == 2

    def test_out_of_order_event_rejected(self):
        st = AncestralState(1.0)
        st.apply_event(Event(1.0, 0.0, 0.0, 1, 1, 0))
        with pytest.raises(InvariantViolation):
            apply_event(st, Event(0.5, 0.0, 0.0, 1, 1, 0))


class TestHitHalfplane:
    def test_small_threshold_mean(self):
        taus = [hit_halfplane(LAW, 0.5, s)[0] for s in range(300)]
        assert 0.5 <= np.mean(taus) <= 3.0

    def test_tiny_threshold_is_first_covering_time(self):
        # As x -> 0+ the hit is the first covering event, Exp(1) distributed.
        taus = np.array([hit_halfplane(LAW, 1e-6, 1000 + s)[0] for s in range(2000)])
        assert abs(taus.mean() - 1.0) <= 3 * taus.std() / math.sqrt(len(taus))

    def test_monotone_in_threshold_on_one_trajectory(self):
        for s in range(100):
            run = DualRun(LAW, np.random.default_rng(s))
            t5, t10 = run.hit_times([5.0, 10.0])
            assert t5 <= t10

    def test_budget_error(self):
        with pytest.raises(BudgetExceeded):
            hit_halfplane(LAW, 50.0, 0, budget=10)


class TestTrajectoryInvariants:
    def test_replay_audit(self):
        """Reach and jump count only grow, and every appended ellipse
        positively intersects the union of its predecessors."""
        rng = np.random.default_rng(123)
        run = DualRun(LAW, rng)
        reaches = []
        while run.state.reach < 10.0:
            before = run.state.jump_count
            run.step()
            assert run.state.jump_count >= before
            reaches.append(run.state.reach)
        assert reaches == sorted(reaches)
        ells = [Ellipse(*e) for e in run.state.ellipses]
        for k in range(1, len(ells)):
            assert any(
                intersects_positively(ells[k], ells[j]) for j in range(k)
            ), f"ellipse {k} does not touch its predecessors"

    def test_window_exactness_invariant(self):
        """The window always contains the r_max-dilation of the union of
        ellipse bounding balls."""
        rng = np.random.default_rng(7)
        run = DualRun(LAW, rng)
        while run.state.reach < 12.0:
            run.step()
            if run.state.bbox is None:
                continue
            bx0, bx1, by0, by1 = run.state.bbox
            wx0, wx1, wy0, wy1 = run.stream.window
            r = run.state.r_max
            assert wx0 <= bx0 - r and wx1 >= bx1 + r
            assert wy0 <= by0 - r and wy1 >= by1 + r

    def test_determinism(self):
        runs = []
        for _ in range(2):
            run = DualRun(LAW, np.random.default_rng(99))
            run.run_until_reach(8.0)
            runs.append((tuple(run.state.times), tuple(run.state.ellipses)))
        assert runs[0] == runs[1]


class TestEstimateSpeed:
    def test_rejects_degenerate_thresholds(self):
        with pytest.raises(ValueError):
            estimate_speed(LAW, [10, 10, 10], 5, 0)

    def test_unit_ball_speed_smoke(self):
        est = estimate_speed(LAW, [8, 16, 24], 8, 5)
        assert 2.0 <= est.speed <= 3.2
        assert est.r2 > 0.97
        assert est.nu == pytest.approx(1.0 / est.speed)
        assert len(est.ci) == 3 and all(c > 0 for c in est.ci)

    def test_speed_exceeds_chain_lower_bound(self):
        from slfv_growth.express import lower_bound_speed

        law = ShapeLaw(atoms=((1 / math.pi, 1.5, 1 / 1.5, 0.0),))
        est = estimate_speed(law, [8, 16, 24], 8, 21)
        assert est.speed >= lower_bound_speed(law)
