import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from horizonlab import (
    MetricError,
    PolarMetric2D,
    TimeProfile,
    acoustic_to_polar2d,
    acoustic_to_radial,
    fate_census,
    integrate_polar2d,
    integrate_radial,
    null_initial_state,
)
from horizonlab.geodesics import (
    ALIVE,
    ESCAPED,
    HIT_ORIGIN,
    R_FLOOR,
    acoustic_polar_rate,
    covector_family,
    hamiltonian,
    hamiltonian_scale,
    polar_vector_field,
)


def implicit_plus(r, a0):
    """``r + |A0| ln|r - |A0||``; equals ``x0 + C`` along a plus curve of the constant sink."""
    return r + a0 * np.log(np.abs(r - a0))


def implicit_minus(r, a0):
    """``r - |A0| ln(r + |A0|)``; equals ``-x0 + C`` along a minus curve of the constant sink."""
    return r - a0 * np.log(r + a0)


class TestRadialFamilies:
    def test_plus_inside_hits_origin(self, sink):
        t = integrate_radial(sink, "plus", 0.5, 0.0, "forward", (-10, 10))
        assert t.fate == HIT_ORIGIN
        assert t.fate_r <= R_FLOOR and t.fate_x0 < 10

    def test_plus_outside_escapes(self, sink):
        t = integrate_radial(sink, "plus", 2.0, 0.0, "forward", (-10, 30))
        assert t.fate == ESCAPED

    @pytest.mark.parametrize("r0", [0.3, 1.0, 4.0, 20.0])
    def test_minus_always_hits_origin(self, sink, r0):
        assert integrate_radial(sink, "minus", r0, 0.0, "forward", (-10, 40)).fate == HIT_ORIGIN

    def test_white_horizon_is_stationary(self, source):
        t = integrate_radial(source, "minus", 1.0, 0.0, "forward", (-10, 10))
        assert t.fate == ALIVE
        assert np.max(np.abs(t.r - 1.0)) == 0.0

    @pytest.mark.parametrize("r0", [0.2, 0.9, 1.1, 3.0])
    def test_plus_matches_implicit_solution(self, r0):
        a0 = 1.7
        m = acoustic_to_radial(TimeProfile.constant(-a0))
        t = integrate_radial(m, "plus", r0 * a0, -2.0, "forward", (-2, 2), rtol=1e-11, atol=1e-13)
        keep = t.r > 1e-2
        c = implicit_plus(t.r[keep], a0) - t.x0[keep]
        assert np.max(np.abs(c - c[0])) < 1e-7

    def test_minus_matches_implicit_solution(self, sink):
        t = integrate_radial(sink, "minus", 3.0, 0.0, "forward", (0, 5), rtol=1e-11, atol=1e-13)
        keep = t.r > 1e-2
        c = implicit_minus(t.r[keep], 1.0) + t.x0[keep]
        assert np.max(np.abs(c - c[0])) < 1e-7

    @pytest.mark.parametrize("family,sign", [("plus", 1.0), ("minus", -1.0)])
    @pytest.mark.parametrize("direction", ["forward", "backward"])
    def test_flat_space_is_exact(self, minkowski, family, sign, direction):
        t = integrate_radial(minkowski, family, 5.0, 0.0, direction, (-2, 2))
        np.testing.assert_allclose(t.r, 5.0 + sign * t.x0, atol=1e-10)

    def test_samples_monotone_in_time(self, tanh_sink):
        for direction in ("forward", "backward"):
            t = integrate_radial(tanh_sink, "plus", 1.8, 0.0, direction, (-10, 10))
            d = np.diff(t.x0)
            assert np.all(d > 0) if direction == "forward" else np.all(d < 0)

    @given(r0=st.floats(0.1, 6.0))
    def test_step_residual(self, tanh_sink, r0):
        t = integrate_radial(tanh_sink, "plus", r0, -3.0, "forward", (-3, 3), rtol=1e-10, atol=1e-12)
        keep = t.r > 0.05
        x, r = t.x0[keep], t.r[keep]
        mid_x, mid_r = 0.5 * (x[1:] + x[:-1]), 0.5 * (r[1:] + r[:-1])
        slope = tanh_sink.b1(mid_x) / mid_r + 1.0
        # midpoint rule on each accepted step: residual bounded by step-scale curvature
        resid = np.abs(np.diff(r) - slope * np.diff(x))
        assert np.all(resid <= 0.05 * np.diff(x) + 1e-12)

    @given(r_a=st.floats(0.1, 5.0), gap=st.floats(1e-3, 2.0), family=st.sampled_from(["plus", "minus"]))
    def test_same_family_curves_never_cross(self, tanh_sink, r_a, gap, family):
        r_b = r_a + gap
        ta = integrate_radial(tanh_sink, family, r_a, -2.0, "forward", (-2, 6), rtol=1e-11, atol=1e-13)
        tb = integrate_radial(tanh_sink, family, r_b, -2.0, "forward", (-2, 6), rtol=1e-11, atol=1e-13)
        hi = min(ta.x0[-1], tb.x0[-1])
        xs = np.linspace(-2.0, hi, 400)
        ra = np.interp(xs, ta.x0, ta.r)
        rb = np.interp(xs, tb.x0, tb.r)
        # linear interpolation error of the sampled curves is the only slack
        assert np.all(ra < rb + 1e-6)

    def test_invalid_start(self, sink):
        with pytest.raises(ValueError):
            integrate_radial(sink, "plus", 0.0, 0.0)
        with pytest.raises(ValueError):
            integrate_radial(sink, "plus", 1.0, 0.0, "sideways")


class TestCensus:
    def test_sink_grid(self, sink):
        c = fate_census(sink, "plus", [0.2, 0.6, 1.4, 3.0], 0.0, (0, 20))
        assert c.fates == (HIT_ORIGIN, HIT_ORIGIN, ESCAPED, ESCAPED)
        assert c.monotone

    def test_bracket_narrows_to_grid_step(self, sink):
        grid = np.arange(0.9, 1.1001, 0.01)
        lo, hi = fate_census(sink, "plus", grid, 0.0, (0, 10)).bracket()
        # the grid contains r0 = 1 itself, which stays on the horizon
        assert lo < 1.0 <= hi + 1e-12 and hi - lo <= 0.01 + 1e-12

    def test_white_hole_mirror(self, source):
        c = fate_census(source, "minus", [0.2, 0.6, 1.4, 3.0], 0.0, (-20, 0), direction="backward")
        assert c.fates[:2] == (HIT_ORIGIN, HIT_ORIGIN)
        assert ESCAPED in c.fates[2:] or set(c.fates[2:]) == {ALIVE}
        assert c.bracket() == (0.6, 1.4)

    def test_threads_do_not_change_result(self, tanh_sink):
        grid = np.linspace(0.5, 4, 12)
        a = fate_census(tanh_sink, "plus", grid, 0.0, (-5, 5))
        b = fate_census(tanh_sink, "plus", grid, 0.0, (-5, 5), threads=4)
        assert a.fates == b.fates and np.array_equal(a.end_x0, b.end_x0)


class TestPolar:
    @pytest.mark.parametrize("family", ["plus", "minus"])
    def test_sink_captures_forward(self, family):
        m = acoustic_to_polar2d(-1.0, 1.0)
        st0 = null_initial_state(m, 0.05, 0.3, family)
        t = integrate_polar2d(m, st0, "forward", family=family)
        assert t.fate == HIT_ORIGIN

    @pytest.mark.parametrize("family", ["plus", "minus"])
    def test_source_captures_backward_only(self, family):
        m = acoustic_to_polar2d(1.0, 1.0)
        st0 = null_initial_state(m, 0.05, 0.3, family)
        fwd = integrate_polar2d(m, st0, "forward", max_arc=5.0, family=family)
        assert fwd.fate != HIT_ORIGIN and fwd.r.max() > 0.05
        assert integrate_polar2d(m, st0, "backward", family=family).fate == HIT_ORIGIN

    def test_pure_rotation_rejected(self):
        with pytest.raises(MetricError):
            acoustic_to_polar2d(0.0, 1.0)
        base = acoustic_to_polar2d(-1.0, 1.0)
        m = PolarMetric2D(frame=base.frame, b1=lambda th: 0.0 * np.asarray(th), b2=base.b2)
        with pytest.raises(MetricError):
            integrate_polar2d(m, null_initial_state(base, 0.5, 0.0, "plus"))

    @given(r=st.floats(0.1, 1.3), theta=st.floats(0, 2 * math.pi), family=st.sampled_from(["plus", "minus"]))
    def test_null_state_and_drift(self, r, theta, family):
        # on r = 1 the plus covector is purely radial, so no state with xi_theta != 0 exists
        assume(abs(r - 1.0) > 1e-6)
        m = acoustic_to_polar2d(-1.0, 1.0)
        s = null_initial_state(m, r, theta, family)
        h0 = hamiltonian(m, s.r, s.theta, s.xi_r, s.xi_theta)
        assert abs(h0) <= 1e-12 * hamiltonian_scale(m, s.r, s.theta, s.xi_r, s.xi_theta)
        t = integrate_polar2d(m, s, "forward", max_arc=20.0, family=family)
        assert t.diagnostics["max_rel_drift"] <= 1e-7

    def test_family_label_off_the_degenerate_circle(self):
        m = acoustic_to_polar2d(-1.0, 1.0)
        for fam in ("plus", "minus"):
            assert covector_family(m, null_initial_state(m, 0.6, 0.0, fam)) == fam

    def test_radial_rate_matches_closed_form(self):
        A, B = -1.0, 0.5
        m = acoustic_to_polar2d(A, B)
        t = integrate_polar2d(m, null_initial_state(m, 0.8, 0.0, "minus"), "forward", family="minus")
        rhs = polar_vector_field(m)
        for k in range(0, len(t.r) - 1, max(1, len(t.r) // 7)):
            y = np.array([t.r[k], t.theta[k], t.x0[k], t.xi_r[k], t.xi_theta[k]])
            dy = rhs(0.0, y)
            expected = float(acoustic_polar_rate(A, B, t.r[k], "minus"))
            assert dy[0] / dy[2] == pytest.approx(expected, rel=1e-8)

    def test_degenerate_family_raises(self):
        m = acoustic_to_polar2d(-1.0, 1.0)
        with pytest.raises(MetricError):
            null_initial_state(m, 1.0, 0.0, "plus")
