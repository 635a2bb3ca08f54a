import math

import numpy as np
import pytest

from slfv_growth.ancestral import DualRun, estimate_speed
from slfv_growth.events import ShapeLaw, unit_ball_law
from slfv_growth.percolation import (
    _strip_graph,
    ball_cell,
    discretize_trace,
    domination_suite,
    dual_discretized_hits,
    EDGE_RATE,
    fpp_hit,
    fpp_profile,
)


class TestFppHit:
    def test_bounded_by_direct_edges(self):
        # E[min of the 3 direct edges to column 1] = (pi/16)/3 = pi/48;
        # the shortest path can only be faster.
        taus = np.array([fpp_hit(1, 6, s) for s in range(800)])
        se = taus.std() / math.sqrt(len(taus))
        assert taus.mean() <= math.pi / 48 + 3 * se

    def test_profile_monotone(self):
        rng = np.random.default_rng(0)
        prof = fpp_profile(12, 20, rng)
        assert np.all(np.diff(prof) >= 0)  # must cross column n before n+1

    def test_half_height_saturation(self):
        # Doubling H beyond the default changes the mean by under 1% + noise.
        n, reps = 6, 3000
        m = []
        for H in (2 * n + 8, 2 * (2 * n + 8)):
            vals = np.array(
                [
                    fpp_profile(n, H, np.random.default_rng((H, s)))[n - 1]
                    for s in range(reps)
                ]
            )
            m.append((vals.mean(), 1.96 * vals.std() / math.sqrt(reps)))
        (m1, c1), (m2, c2) = m
        assert abs(m1 - m2) <= 0.01 * m1 + c1 + c2

    def test_dijkstra_invariant_under_algorithm(self):
        from scipy.sparse.csgraph import bellman_ford, dijkstra

        graph, vid = _strip_graph(5, 8, np.random.default_rng(42))
        d1 = dijkstra(graph, directed=False, indices=vid(0, 0))
        d2 = bellman_ford(graph, directed=False, indices=vid(0, 0))
        assert np.allclose(d1, d2, atol=1e-12)

    def test_edge_rate_constant(self):
        assert EDGE_RATE == pytest.approx(16.0 / math.pi)


class TestBallCell:
    def test_origin(self):
        assert ball_cell(0.0, 0.0) == (0, 0)

    def test_exact_boundary_excluded(self):
        # (2,0) is at distance exactly 1 from both neighboring squares
        # [-1,1]^2 and [3,5]x[-1,1]; tangency is not an intersection.
        assert ball_cell(2.0, 0.0) is None

    def test_white_area_point(self):
        # between cell rows: distance to every square exceeds 1
        assert ball_cell(2.0, 2.0) is None

    def test_point_past_midline_touches_next_cell(self):
        # (2.05, 0) is 0.95 from the square centered at (4,0), so the unit
        # ball around it does intersect cell (1,0).
        assert ball_cell(2.05, 0.0) == (1, 0)

    def test_cell_near_center(self):
        assert ball_cell(4.3, -3.8) == (1, -1)

    def test_at_most_one_cell_randomized_audit(self):
        rng = np.random.default_rng(1)
        trace = [
            (float(i), rng.uniform(-30, 30), rng.uniform(-30, 30))
            for i in range(20_000)
        ]
        discretize_trace(trace, audit=True)  # raises if any ball hits 2 cells

    def test_activation_geometrically_valid_by_sampling_oracle(self):
        # Monte Carlo oracle: a ball meets the cell iff sampled ball points
        # land in the square. Skip knife-edge centers.
        rng = np.random.default_rng(2)
        for _ in range(300):
            cx, cy = rng.uniform(-10, 10, size=2)
            cell = ball_cell(cx, cy)
            i, j = round(cx / 4), round(cy / 4)
            dx = max(abs(cx - 4 * i) - 1, 0.0)
            dy = max(abs(cy - 4 * j) - 1, 0.0)
            if abs(math.hypot(dx, dy) - 1.0) < 0.03:
                continue
            thetas = rng.uniform(0, 2 * math.pi, 20_000)
            rs = np.sqrt(rng.uniform(0, 1, 20_000))
            px = cx + rs * np.cos(thetas)
            py = cy + rs * np.sin(thetas)
            hit = np.any(
                (np.abs(px - 4 * i) <= 1) & (np.abs(py - 4 * j) <= 1)
            )
            assert bool(hit) == (cell is not None)


class TestDiscretizedDual:
    def test_trace_activation_example(self):
        cells = discretize_trace([(0.7, 0.0, 0.0)])
        assert cells.activation == {(0, 0): 0.7}
        assert cells.column_hit(0) == 0.7
        assert cells.column_hit(3) == math.inf

    def test_pointwise_sandwich_small(self):
        for s in range(15):
            discr, tau = dual_discretized_hits([2, 4], s)
            assert discr[0] <= tau[0] and discr[1] <= tau[1]


class TestDominationSuite:
    def test_ordering_small(self):
        rep = domination_suite([3, 6], 40, 77)
        assert rep.pointwise_ok
        assert rep.ordering_ok
        # strict mean separation at these scales
        for k in range(2):
            assert rep.mean_fpp[k] < rep.mean_discr[k] < rep.mean_tau4n[k] * 1.001

    def test_ellipse_law_slower_than_ball_law(self):
        # Replacing each event by its circumscribed ball can only speed the
        # dual up, so the ellipse-law hitting time dominates in mean.
        ellipse_law = ShapeLaw(atoms=((1 / math.pi, 1.0, 0.5, 0.3),))
        ball_law = unit_ball_law()
        x = 20.0
        t_e = np.array(
            [DualRun(ellipse_law, np.random.default_rng((0, s))).run_until_reach(x)
             for s in range(40)]
        )
        t_b = np.array(
            [DualRun(ball_law, np.random.default_rng((1, s))).run_until_reach(x)
             for s in range(40)]
        )
        se = math.sqrt(t_e.var() / 40 + t_b.var() / 40)
        assert t_e.mean() >= t_b.mean() - 2 * se
