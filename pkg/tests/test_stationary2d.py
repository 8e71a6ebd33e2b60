import numpy as np
import pytest
from scipy.optimize import brentq

from horizonlab import (
    PolarMetric2D,
    acoustic_to_polar2d,
    extremal_horizons,
    find_closed_orbits,
    locate_ergosphere,
    origin_capture_census,
)
from horizonlab.stationary2d import BLACK_HORIZON, WHITE_HORIZON, PartialErgosphereError


def swirl_metric(a, b, b1, b2=0.0):
    """Planar flow ``v = (a(r)/r) r_hat + (b(r)/r) theta_hat`` with radially varying strengths."""
    frame = {
        "g00": lambda r, th: 1.0 + 0.0 * r,
        "gr0": lambda r, th: a(r) / r,
        "gt0": lambda r, th: b(r) / r,
        "grr": lambda r, th: -1.0 + a(r) ** 2 / r**2,
        "grt": lambda r, th: a(r) * b(r) / r**2,
        "gtt": lambda r, th: -1.0 + b(r) ** 2 / r**2,
    }
    return PolarMetric2D(frame=frame, b1=lambda th: b1 + 0.0 * np.asarray(th, dtype=float),
                         b2=lambda th: b2 + 0.0 * np.asarray(th, dtype=float))


def a_two(r):
    return (-1.0 + 0.2 * r * r) * np.exp(-((r / 15.0) ** 4))


def b_two(r):
    return 3.0 * r / (1.0 + (r / 8.0) ** 4)


@pytest.fixture(scope="module")
def two_orbit():
    """Sink near the origin, source further out: one black and two white circles."""
    m = swirl_metric(a_two, b_two, -1.0)
    plus = find_closed_orbits(m, "plus", n_seeds=8, seed=1, max_time=400, threads=4)
    minus = find_closed_orbits(m, "minus", n_seeds=8, seed=1, max_time=400, threads=4)
    return m, plus, minus


def circle_radii():
    """Oracle: circular orbits sit where |a(r)| = r."""
    g = lambda r: abs(a_two(r)) - r
    grid = np.linspace(0.05, 20.0, 4000)
    vals = [g(r) for r in grid]
    return [brentq(g, grid[k], grid[k + 1], xtol=1e-14) for k in range(len(grid) - 1)
            if np.sign(vals[k]) != np.sign(vals[k + 1])]


class TestErgosphere:
    def test_sqrt_two(self):
        e = locate_ergosphere(acoustic_to_polar2d(-1.0, 1.0))
        assert np.max(np.abs(e.r - np.sqrt(2.0))) <= 1e-9
        assert e.residual <= 1e-9 and e.closure == 0.0
        assert not e.noncharacteristic_violations

    def test_three_four_five(self):
        e = locate_ergosphere(acoustic_to_polar2d(3.0, 4.0))
        assert np.max(np.abs(e.r - 5.0)) <= 1e-9

    def test_subsonic_everywhere(self):
        m = swirl_metric(lambda r: 0.0 * r, lambda r: 0.0 * r, -1.0)
        with pytest.raises(PartialErgosphereError):
            locate_ergosphere(m)

    def test_radial_flow_boundary_is_characteristic(self):
        e = locate_ergosphere(acoustic_to_polar2d(-1.0, 0.0))
        assert np.allclose(e.r, 1.0)
        assert len(e.noncharacteristic_violations) == len(e.theta)

    def test_interpolation_is_periodic(self):
        e = locate_ergosphere(acoustic_to_polar2d(-1.0, 1.0))
        assert e(2 * np.pi + 0.1) == pytest.approx(e(0.1))


class TestClosedOrbits:
    def test_sink_with_swirl(self):
        res = find_closed_orbits(acoustic_to_polar2d(-1.0, 1.0), "plus", n_seeds=8, seed=0)
        assert len(res) == 1
        orbit = res[0]
        assert orbit.kind == BLACK_HORIZON
        assert abs(orbit.radius - 1.0) <= 1e-6
        assert orbit.closure_defect <= 1e-7
        assert abs(orbit.return_derivative) < 1.0
        assert orbit.period == pytest.approx(2 * np.pi, rel=1e-6)

    def test_source_with_swirl(self):
        res = find_closed_orbits(acoustic_to_polar2d(1.0, 1.0), "minus", n_seeds=8, seed=0)
        assert [o.kind for o in res] == [WHITE_HORIZON]
        assert abs(res[0].radius - 1.0) <= 1e-6

    def test_other_family_has_none(self):
        res = find_closed_orbits(acoustic_to_polar2d(-1.0, 1.0), "minus", n_seeds=8, seed=0)
        assert len(res) == 0
        assert "does not show" in res.diagnostics["note"]

    def test_radial_flow_degenerates_to_circle(self):
        res = find_closed_orbits(acoustic_to_polar2d(-1.0, 0.0), "plus", n_seeds=4, seed=0)
        assert len(res) == 1
        assert res[0].method == "radial-limit"
        assert abs(res[0].radius - 1.0) <= 1e-8

    def test_same_seed_same_result(self):
        m = acoustic_to_polar2d(-2.0, 1.0)
        a = find_closed_orbits(m, "plus", n_seeds=4, seed=5)
        b = find_closed_orbits(m, "plus", n_seeds=4, seed=5, threads=3)
        assert [o.radius for o in a] == [o.radius for o in b]
        assert a[0].radius == pytest.approx(2.0, abs=1e-6)


class TestTwoOrbitFixture:
    def test_orbits_match_oracle(self, two_orbit):
        _, plus, minus = two_orbit
        roots = circle_radii()
        assert len(roots) == 3
        found = sorted(o.radius for o in list(plus) + list(minus))
        np.testing.assert_allclose(found, roots, atol=1e-6)

    def test_kinds(self, two_orbit):
        _, plus, minus = two_orbit
        assert [o.kind for o in plus] == [BLACK_HORIZON]
        assert {o.kind for o in minus} == {WHITE_HORIZON}

    def test_white_pair_nested(self, two_orbit):
        m, plus, minus = two_orbit
        pair = extremal_horizons([plus, minus], WHITE_HORIZON)
        assert pair.nested and not pair.same
        assert pair.outer.r_min >= pair.inner.r_max

    def test_single_black_orbit_is_both_extremes(self, two_orbit):
        m, plus, minus = two_orbit
        pair = extremal_horizons([plus, minus], metric=m)
        assert pair.kind == BLACK_HORIZON and pair.same


class TestOriginCapture:
    def test_sink_forward(self):
        rep = origin_capture_census(acoustic_to_polar2d(-1.0, 0.5), eps=0.05, n_samples=50, seed=0, threads=4)
        assert rep.direction == "forward"
        assert rep.n_hit == rep.n_runs == 100
        assert rep.passed and not rep.out_of_hypothesis

    def test_source_backward(self):
        rep = origin_capture_census(acoustic_to_polar2d(1.0, 0.5), eps=0.05, n_samples=50, seed=0, threads=4)
        assert rep.direction == "backward" and rep.passed

    def test_large_eps_flagged(self):
        m = acoustic_to_polar2d(-1.0, 0.5)
        r_e = float(locate_ergosphere(m).r.min())
        rep = origin_capture_census(m, eps=0.9 * r_e, n_samples=10, seed=0)
        assert rep.out_of_hypothesis

    def test_default_eps_meets_dominance(self):
        rep = origin_capture_census(acoustic_to_polar2d(-1.0, 0.5), n_samples=5, seed=2)
        assert rep.dominance >= 10.0 and rep.passed
