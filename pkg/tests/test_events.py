import math

import numpy as np
import pytest

from slfv_growth.events import (
    jump_mass,
    mean_extreme_offset,
    mirror,
    poisson_window,
    ShapeLaw,
    unit_ball_law,
)


@pytest.fixture
def two_atom_law():
    return ShapeLaw(atoms=((1 / math.pi, 1, 1, 0.3), (0.5 / math.pi, 2, 0.5, -0.2)))


class TestShapeLaw:
    def test_total_mass_and_rmax(self, two_atom_law):
        assert two_atom_law.total_mass == pytest.approx(1.5 / math.pi)
        assert two_atom_law.r_max == 2

    @pytest.mark.parametrize(
        "atoms",
        [
            (),
            ((0.0, 1, 1, 0),),
            ((1.0, -1, 1, 0),),
            ((1.0, 1, 1, 2.0),),
        ],
    )
    def test_validation(self, atoms):
        with pytest.raises(ValueError):
            ShapeLaw(atoms=atoms)


class TestMirror:
    def test_symmetric_atom_unchanged(self):
        law = unit_ball_law()
        assert mirror(law).atoms == law.atoms

    def test_negates_gamma(self):
        law = ShapeLaw(atoms=((1.0, 1, 1, 0.3),))
        assert mirror(law).atoms[0][3] == -0.3

    def test_involution(self, two_atom_law):
        assert mirror(mirror(two_atom_law)).atoms == two_atom_law.atoms


class TestJumpMass:
    def test_unit_ball_rate_one(self):
        assert jump_mass(unit_ball_law()) == pytest.approx(1.0)

    def test_equal_area_ellipse(self):
        assert jump_mass(ShapeLaw(atoms=((1 / math.pi, 2, 0.5, 0),))) == pytest.approx(1.0)

    def test_additivity(self):
        law = ShapeLaw(atoms=((1 / math.pi, 1, 1, 0), (1 / math.pi, 1, 1, 0)))
        assert jump_mass(law) == pytest.approx(2.0)


class TestMeanExtremeOffset:
    def test_unit_ball(self):
        assert mean_extreme_offset(unit_ball_law()) == pytest.approx(1.0)

    @pytest.mark.parametrize("a", [0.5, 2.0, 3.0])
    def test_axis_aligned_area_pi(self, a):
        law = ShapeLaw(atoms=((1 / math.pi, a, 1 / a, 0),))
        assert mean_extreme_offset(law) == pytest.approx(a)

    def test_equal_area_mix(self):
        # Both atoms have area pi, offsets 1 and 2; equal weights average to 1.5.
        law = ShapeLaw(atoms=((1 / math.pi, 1, 1, 0), (1 / math.pi, 2, 0.5, 0)))
        assert mean_extreme_offset(law) == pytest.approx(1.5)


class TestPoissonWindow:
    def test_zero_duration(self):
        rng = np.random.default_rng(0)
        assert poisson_window(0, 1, 0, 1, 2.0, 2.0, unit_ball_law(), rng) == []

    def test_reversed_times_rejected(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            poisson_window(0, 1, 0, 1, 2.0, 1.0, unit_ball_law(), rng)

    def test_mean_count(self):
        # mass 1/pi over an area-pi rectangle for unit time: mean count 1.
        rng = np.random.default_rng(1)
        counts = [
            len(poisson_window(0, math.pi, 0, 1, 0, 1, unit_ball_law(), rng))
            for _ in range(10_000)
        ]
        m = np.mean(counts)
        assert abs(m - 1.0) <= 3 / math.sqrt(10_000)

    def test_duration_doubles_mean(self):
        rng = np.random.default_rng(2)
        law = unit_ball_law()
        c1 = np.array(
            [len(poisson_window(0, 2, 0, 2, 0, 1, law, rng)) for _ in range(5000)]
        )
        c2 = np.array(
            [len(poisson_window(0, 2, 0, 2, 0, 2, law, rng)) for _ in range(5000)]
        )
        se = math.sqrt(4 * c1.var() / 5000 + c2.var() / 5000)
        assert abs(2 * c1.mean() - c2.mean()) <= 3 * se

    def test_sorted_times_and_bounds(self, two_atom_law):
        rng = np.random.default_rng(3)
        evs = poisson_window(-5, 5, -5, 5, 1.0, 3.0, two_atom_law, rng)
        times = [e.time for e in evs]
        assert times == sorted(times)
        assert all(1.0 <= t < 3.0 for t in times)
        assert all(-5 <= e.cx <= 5 and -5 <= e.cy <= 5 for e in evs)
        shapes = {(e.a, e.b, e.gamma) for e in evs}
        allowed = {(a, b, g) for _, a, b, g in two_atom_law.atoms}
        assert shapes <= allowed

    def test_disjoint_window_counts_independent(self):
        rng = np.random.default_rng(4)
        law = unit_ball_law()
        n1, n2 = [], []
        for _ in range(10_000):
            n1.append(len(poisson_window(0, 2, 0, 2, 0, 1, law, rng)))
            n2.append(len(poisson_window(5, 7, 0, 2, 0, 1, law, rng)))
        r = np.corrcoef(n1, n2)[0, 1]
        assert abs(r) < 0.05

    def test_shape_frequencies_match_weights(self, two_atom_law):
        from scipy.stats import chisquare

        rng = np.random.default_rng(5)
        evs = poisson_window(-10, 10, -10, 10, 0, 30, two_atom_law, rng)
        n_first = sum(1 for e in evs if (e.a, e.b, e.gamma) == (1, 1, 0.3))
        total = len(evs)
        w = two_atom_law.weights
        p = w / w.sum()
        stat = chisquare(
            [n_first, total - n_first], [total * p[0], total * p[1]]
        )
        assert stat.pvalue > 0.01
