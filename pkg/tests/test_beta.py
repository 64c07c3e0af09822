"""Best-line coefficients: closed-form oracle agreement, brute-force
dominance, normalization identities, scaling and construction estimates."""

import math
import random
from fractions import Fraction as F

import numpy as np
import pytest

import betacantor as bc
from betacantor import (AtomicMeasure, Ball, CantorMeasure, EmptyBallError,
                        RationalPoint, ScaleGrid, SegmentMeasure,
                        WeightedSegment, beta, beta_both, best_line_p2,
                        best_line_search, point_of, sample_address,
                        schedule_tame, schedule_thm11, square_function)
from betacantor.beta import (SquareFunctionDetails, best_line_p2_window,
                             best_line_search_window, build_window)

FOUR_ATOMS = AtomicMeasure([(-1, 0, 1), (1, 0, 1), (-1, F(1, 5), 1),
                            (1, F(1, 5), 1)])


def random_atoms(rng, n, mass_lo=0.1, mass_hi=2.0):
    return AtomicMeasure([(rng.uniform(-1, 1), rng.uniform(-1, 1),
                           rng.uniform(mass_lo, mass_hi)) for _ in range(n)])


def random_segments(rng, n):
    segs = []
    for _ in range(n):
        x0 = rng.uniform(-1, 0.5)
        y = F(rng.uniform(-1, 1))
        segs.append(WeightedSegment(
            RationalPoint(F(x0), y),
            RationalPoint(F(x0 + rng.uniform(0.05, 1.0)), y),
            F(rng.uniform(0.2, 3))))
    return SegmentMeasure(segs)


class TestFourAtomExample:
    def test_radius_normalized(self):
        res = beta(FOUR_ATOMS, (0, F(1, 10)), 2, p=2)
        # best line y = 1/10 by symmetry; sum dist^2 = 4/100
        assert res.value == pytest.approx(math.sqrt(0.04 / (2 * 4)), abs=1e-12)
        assert res.line.phi == pytest.approx(math.pi / 2, abs=1e-9)
        assert res.line.c == pytest.approx(0.1, abs=1e-12)
        assert res.ball_mass == pytest.approx(4.0)

    def test_mass_normalized(self):
        res = beta(FOUR_ATOMS, (0, F(1, 10)), 2, p=2, variant="betaTilde")
        assert res.value == pytest.approx(0.05, abs=1e-12)

    def test_gridsearch_confirms_minimizer(self):
        # independent oracle: exhaustive grid over line parameters
        pts = np.array([[-1, 0], [1, 0], [-1, 0.2], [1, 0.2]])
        best = math.inf
        for phi in np.linspace(0, math.pi, 1201)[:-1]:
            u = pts @ np.array([math.cos(phi), math.sin(phi)])
            for c in np.linspace(u.min(), u.max(), 601):
                best = min(best, float(np.sum(np.abs(u - c) ** 2)))
        engine = beta(FOUR_ATOMS, (0, F(1, 10)), 2, p=2)
        assert engine.value ** 2 * (2 * 2 ** 2) == pytest.approx(best,
                                                                 rel=1e-4)


class TestNormalizations:
    def test_tilde_identity(self):
        # value_tilde^p * mu(B) / r = value^p at the shared minimizing line
        rng = random.Random(17)
        for _ in range(25):
            mu = random_atoms(rng, rng.randrange(3, 15))
            x = (rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5))
            r = rng.uniform(0.5, 2.0)
            p = rng.choice([1.0, 1.5, 2.0, 3.0])
            try:
                b = beta(mu, x, r, p)
                t = beta(mu, x, r, p, variant="betaTilde")
            except EmptyBallError:
                continue
            lhs = t.value ** p * b.ball_mass / r
            assert lhs == pytest.approx(b.value ** p, rel=1e-9, abs=1e-300)

    def test_both_variant_helper(self):
        b, t = beta_both(FOUR_ATOMS, (0, F(1, 10)), 2, p=2)
        assert b == pytest.approx(math.sqrt(0.005), abs=1e-12)
        assert t == pytest.approx(0.05, abs=1e-12)

    def test_empty_ball(self):
        mu = AtomicMeasure([(10, 10, 1)])
        assert beta(mu, (0, 0), 1, p=2).value == 0.0
        with pytest.raises(EmptyBallError):
            beta(mu, (0, 0), 1, p=2, variant="betaTilde")

    def test_zero_measure_changes_nothing(self):
        base = list(FOUR_ATOMS.atoms)
        padded = AtomicMeasure(base + [(F(1, 3), F(1, 7), 0)])
        for p in (1.5, 2.0):
            assert beta(padded, (0, F(1, 10)), 2, p).value == \
                beta(FOUR_ATOMS, (0, F(1, 10)), 2, p).value

    def test_rejects_bad_p(self):
        with pytest.raises(ValueError):
            beta(FOUR_ATOMS, (0, 0), 1, p=0.7)


class TestCollinear:
    def test_horizontal_segments(self):
        mu = SegmentMeasure([
            WeightedSegment(RationalPoint(0, F(1, 3)),
                            RationalPoint(F(1, 4), F(1, 3)), 2),
            WeightedSegment(RationalPoint(F(1, 2), F(1, 3)),
                            RationalPoint(1, F(1, 3)), 1),
        ])
        for p in (1.0, 1.5, 2.0, 3.0):
            for variant in ("beta", "betaTilde"):
                assert beta(mu, (F(1, 2), F(1, 3)), 1, p,
                            variant).value <= 1e-12

    def test_slanted_atom_line(self):
        # exact rational points on y = (3/7)x - 2/5
        m, b0 = F(3, 7), F(-2, 5)
        mu = AtomicMeasure([(x, m * x + b0, 1)
                            for x in (F(-1, 2), F(1, 3), F(2, 3), F(9, 10))])
        res = beta(mu, (0, b0), 2, p=1.5)
        assert res.value <= 1e-12

    def test_vertical_atom_stack(self):
        mu = AtomicMeasure([(F(1, 3), F(i, 5), 1) for i in range(-2, 3)])
        assert beta(mu, (F(1, 3), 0), 1, p=2).value <= 1e-12


class TestBestLineP2:
    def test_symmetric_two_line_measure(self):
        h = F(1, 7)
        mu = SegmentMeasure([
            WeightedSegment(RationalPoint(-1, 0), RationalPoint(1, 0), 1),
            WeightedSegment(RationalPoint(-1, h), RationalPoint(1, h), 1),
        ])
        line = best_line_p2(mu, Ball((0, h / 2), 3))
        assert line.phi == pytest.approx(math.pi / 2, abs=1e-9)
        assert line.c == pytest.approx(float(h) / 2, abs=1e-12)

    def test_single_segment_returns_its_line(self):
        mu = SegmentMeasure([WeightedSegment(RationalPoint(0, F(2, 9)),
                                             RationalPoint(1, F(2, 9)), 1)])
        line = best_line_p2(mu, Ball((F(1, 2), F(2, 9)), F(1, 4)))
        assert line.phi == pytest.approx(math.pi / 2, abs=1e-9)
        assert line.c == pytest.approx(2 / 9, abs=1e-12)

    def test_dominates_random_lines(self):
        rng = random.Random(23)
        for _ in range(10):
            mu = random_atoms(rng, 10)
            win = build_window(mu, (0, 0), 2.0)
            phi, c, obj = best_line_p2_window(win)
            xs, ys, ms = (win.atom_x, win.atom_y, win.atom_m)
            for _ in range(10_000):
                lphi = rng.uniform(0, math.pi)
                lc = rng.uniform(-1.5, 1.5)
                cand = float(np.sum(
                    ms * np.abs(xs * math.cos(lphi) + ys * math.sin(lphi)
                                - lc) ** 2))
                assert obj <= cand + 1e-12


class TestBestLineSearch:
    def test_matches_p2_oracle(self):
        rng = random.Random(29)
        for _ in range(30):
            if rng.random() < 0.5:
                mu = random_atoms(rng, rng.randrange(3, 20))
            else:
                mu = random_segments(rng, rng.randrange(2, 10))
            win = build_window(mu, (0, 0), 2.0)
            if win.mass <= 0:
                continue
            _, _, oracle = best_line_p2_window(win)
            _, _, got, _ = best_line_search_window(win, 2.0)
            assert got == pytest.approx(oracle, rel=1e-6, abs=1e-12)

    def test_one_line_measure_gives_zero_for_every_p(self):
        mu = SegmentMeasure([WeightedSegment(RationalPoint(0, F(1, 5)),
                                             RationalPoint(1, F(1, 5)), 1)])
        for p in (1.0, 1.5, 2.0, 3.0):
            line = best_line_search(mu, Ball((F(1, 2), F(1, 5)), 1), p)
            assert line.distance(0.3, 0.2) <= 1e-12

    def test_heavy_light_two_lines_p3(self):
        # mass ratio 100:1 at p = 3: the best line hugs the heavy one;
        # oracle: brute-force grid over line parameters
        h = 0.05
        mu = SegmentMeasure([
            WeightedSegment(RationalPoint(-1, 0), RationalPoint(1, 0), 100),
            WeightedSegment(RationalPoint(-1, F(h)), RationalPoint(1, F(h)),
                            1),
        ])
        win = build_window(mu, (0, 0), 4.0)
        phi, c, obj, _ = best_line_search_window(win, 3.0)

        # brute force over (phi, c), 2000 x 2000
        phis = np.linspace(math.pi / 2 - 0.05, math.pi / 2 + 0.05, 2000)
        proj_best = math.inf
        from betacantor.beta import _Projection
        for chunk in np.array_split(phis, 40):
            prj = _Projection(win, chunk)
            cs = np.linspace(-0.01, float(h) / 4 + 0.01, 2000)
            for cc in np.array_split(cs, 50):
                vals = np.stack([prj.moment(np.full(len(chunk), c0), 3.0)
                                 for c0 in cc])
                proj_best = min(proj_best, float(vals.min()))
        assert obj <= proj_best + 1e-12
        # the engine's line sits within h/1000 of the heavy line (rescaled
        # offset times the window radius gives the geometric height)
        assert abs(c * 4.0) <= h / 3

    def test_weighted_median_tie_rule(self):
        from betacantor.beta import _weighted_median_smallest
        # tied half-mass: the smallest median is chosen
        assert _weighted_median_smallest(np.array([0.0, 1.0]),
                                         np.array([1.0, 1.0])) == 0.0
        assert _weighted_median_smallest(np.array([3.0, 1.0, 2.0]),
                                         np.array([1.0, 1.0, 1.0])) == 2.0
        assert _weighted_median_smallest(np.array([5.0, 1.0]),
                                         np.array([1.0, 3.0])) == 1.0

    def test_p1_atoms_match_bruteforce(self):
        rng = random.Random(37)
        mu = random_atoms(rng, 7)
        win = build_window(mu, (0, 0), 2.0)
        _, _, got, _ = best_line_search_window(win, 1.0)
        best = math.inf
        xs, ys, ms = win.atom_x, win.atom_y, win.atom_m
        for phi in np.linspace(0, math.pi, 1500)[:-1]:
            u = xs * math.cos(phi) + ys * math.sin(phi)
            for c in np.unique(u):  # the p=1 optimum sits at an atom
                best = min(best, float(np.sum(ms * np.abs(u - c))))
        assert got <= best + 1e-9


class TestScaleInvariance:
    def test_similarity_rescale(self):
        rng = random.Random(41)
        for _ in range(10):
            mu = random_atoms(rng, 8)
            s = 10.0 ** rng.uniform(-3, 3)
            dx, dy = rng.uniform(-5, 5), rng.uniform(-5, 5)
            scaled = AtomicMeasure([(float(x) * s + dx, float(y) * s + dy,
                                     float(m) * s)
                                    for x, y, m in mu.atoms])
            x0 = (0.1, -0.2)
            r = 1.5
            p = rng.choice([1.5, 2.0, 3.0])
            v1 = beta(mu, x0, r, p).value
            v2 = beta(scaled, (x0[0] * s + dx, x0[1] * s + dy), r * s,
                      p).value
            assert v2 == pytest.approx(v1, rel=1e-9, abs=1e-12)


class TestHolderComparison:
    def test_p_monotonicity(self):
        rng = random.Random(43)
        pairs = [(1.0, 1.5), (1.5, 2.0), (2.0, 3.0), (1.0, 3.0)]
        for _ in range(15):
            mu = random_atoms(rng, 10)
            x = (rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3))
            r = rng.uniform(0.8, 1.5)
            for p, q in pairs:
                bp = beta(mu, x, r, p)
                bq = beta(mu, x, r, q)
                bound = (bp.ball_mass / r) ** (1 / p - 1 / q) * bq.value
                assert bp.value <= bound * (1 + 1e-6) + 1e-12


class TestConstructionScales:
    def test_zero_below_finest_step(self):
        sched = schedule_tame(2)
        mu = CantorMeasure(sched, 2)
        rng = random.Random(3)
        for _ in range(10):
            pa = sample_address(sched, 2, rng)
            pt = point_of(pa, sched)
            r = sched.h_of(2) * F(rng.randrange(1, 9), 8)
            for variant in ("beta", "betaTilde"):
                assert beta(mu, (pt.x, pt.y), r, 1.5,
                            variant).value <= 1e-12

    def test_two_line_window_estimate(self):
        # between consecutive steps the coefficient is controlled by
        # a^(1/p) h / r
        sched = schedule_thm11(2)
        mu = CantorMeasure(sched, 2)
        rng = random.Random(5)
        p = 1.5
        a2 = float(sched.a_of(2))
        h2 = float(sched.h_of(2))
        worst = 0.0
        for _ in range(6):
            pa = sample_address(sched, 2, rng)
            pt = point_of(pa, sched)
            for mult in (2.0, 8.0, 64.0):
                r = h2 * mult
                v = beta(mu, (pt.x, pt.y), F(r), p).value
                worst = max(worst, v / (a2 ** (1 / p) * h2 / r))
        assert 0 < worst <= 10.0

    def test_stability_under_refinement(self):
        # value at generation k+1 vs generation k at a slightly larger ball:
        # value_{k+1}^p <= value_k^p + C h_{k+1}/r with the nearest-point
        # recentering (c1 = 2 pinned after calibration)
        sched = schedule_thm11(2)
        mu2 = CantorMeasure(sched, 2)
        mu1 = CantorMeasure(sched, 1)
        rng = random.Random(19)
        p = 1.5
        h2 = sched.h_of(2)
        worst = 0.0
        for _ in range(8):
            pa = sample_address(sched, 2, rng)
            pt = point_of(pa, sched)
            # nearest generation-1 point: drop the last vertical step if the
            # address went up at level 2
            y1 = pt.y - (h2 if pa.path[1][1] == bc.UP else 0)
            for mult in (0.6, 1.5, 4.0):
                r = float(sched.h_of(1)) * mult
                v2 = beta(mu2, (pt.x, pt.y), F(r), p).value
                v1 = beta(mu1, (pt.x, y1), F(r) + 2 * h2, p).value
                excess = (v2 ** p - v1 ** p) * r / float(h2)
                worst = max(worst, excess)
        assert worst <= 200.0


class TestSquareFunction:
    def test_zero_on_a_line(self):
        mu = SegmentMeasure([WeightedSegment(RationalPoint(-2, 0),
                                             RationalPoint(2, 0), 1)])
        grid = ScaleGrid(0.01, 1.0)
        assert square_function(mu, (0, 0), 2.0, grid) == 0.0
        assert square_function(mu, (0, 0), 2.0, grid,
                               variant="betaTilde") == 0.0

    def test_monotone_under_grid_extension(self):
        mu = FOUR_ATOMS
        v_coarse = square_function(mu, (0, F(1, 10)), 2.0,
                                   ScaleGrid(0.5, 4.0))
        v_fine = square_function(mu, (0, F(1, 10)), 2.0,
                                 ScaleGrid(0.05, 4.0))
        assert v_fine >= v_coarse - 1e-15

    def test_empty_ball_scales_counted(self):
        mu = AtomicMeasure([(0, 0, 1)])
        det = SquareFunctionDetails()
        square_function(mu, (5, 0), 2.0, ScaleGrid(0.5, 8.0),
                        variant="betaTilde", details=det)
        assert det.empty_balls > 0

    def test_tame_increment_tracks_a(self):
        sched = schedule_tame(2)
        mu = CantorMeasure(sched, 2)
        rng = random.Random(45)
        p = 1.5
        for _ in range(3):
            pa = sample_address(sched, 2, rng)
            pt = point_of(pa, sched)
            b, t = bc.increment_pair(mu, (pt.x, pt.y), p, sched.h_of(2),
                                     float(sched.h_of(1)) / 2)
            ref = float(sched.a_of(2)) ** (2 / p)
            assert 0 < b <= 10 * ref
            assert 0 < t <= 10 * (float(sched.h_of(2)) + ref)


class TestLowerBoundProbe:
    def test_single_line_probe_vanishes(self):
        mu = SegmentMeasure([WeightedSegment(RationalPoint(-4, 0),
                                             RationalPoint(4, 0), 1)])
        sched = schedule_tame(1)
        h1 = float(sched.h_of(1))
        for i in range(7):
            r = 2 * h1 * 2 ** (i / 6)
            assert beta(mu, (0, 0), F(r), 3.0).value <= 1e-12

    def test_generation_must_cover_level(self):
        sched = schedule_tame(2)
        mu = CantorMeasure(sched, 1)
        with pytest.raises(ValueError):
            bc.beta_lower_bound_probe(mu, (F(1, 2), 0), 2, 3.0, sched)
