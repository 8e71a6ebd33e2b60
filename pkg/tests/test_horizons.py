import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from horizonlab import (
    TimeProfile,
    acoustic_to_radial,
    appearance_time,
    banded_radial_metric,
    containment,
    disappearance_time,
    dynamic_horizon,
    fate_census,
    inner_separatrix,
    integrate_radial,
    picard_bounded_solution,
    separatrix_shoot,
)
from horizonlab.geodesics import ESCAPED, HIT_ORIGIN
from horizonlab.horizons import (
    ContractionError,
    NoHorizonError,
    PreconditionError,
    ode_defect,
)

# regression constant: birth time of the black hole of A = -tanh(x0); the
# oracle is the same computation at ten times tighter tolerances (agreement 3e-13)
APPEARANCE_MINUS_TANH = -0.24880951187774


@pytest.fixture(scope="module")
def banded():
    m = banded_radial_metric(-1.0)
    outer = separatrix_shoot(m, "outer-black", window=(-5, 5), samples=21, threads=4)
    inner = inner_separatrix(m, window=(-5, 5), samples=21, threads=4)
    return m, outer, inner


class TestShooting:
    def test_constant_sink(self, sink):
        c = separatrix_shoot(sink, tol=1e-10)
        assert np.max(np.abs(c.r - 1.0)) <= 1e-9
        assert c.limit_minus_inf == c.limit_plus_inf == 1.0

    def test_white_mirror(self, source):
        c = separatrix_shoot(source, "outer-white")
        assert np.max(np.abs(c.r - 1.0)) <= 1e-6

    @pytest.mark.parametrize("a0", [0.5, 1.0, 3.0])
    def test_constant_profiles_give_constant_curves(self, a0):
        c = separatrix_shoot(acoustic_to_radial(TimeProfile.constant(-a0)), tol=1e-10, samples=41)
        assert np.ptp(c.r) <= 1e-9
        assert c.r[0] == pytest.approx(a0, abs=1e-9)

    def test_separating_property(self, tanh_sink):
        tol = 1e-10
        c = separatrix_shoot(tanh_sink, tol=tol, samples=81)
        for x0 in (-8.0, 0.0, 5.0):
            r = float(c(x0))
            # the probes must integrate more accurately than the offset they test
            kw = dict(record=False, rtol=1e-12, atol=1e-13)
            above = integrate_radial(tanh_sink, "plus", r + 10 * tol, x0, "forward", (x0, x0 + 80), **kw)
            below = integrate_radial(tanh_sink, "plus", r - 10 * tol, x0, "forward", (x0, x0 + 80), **kw)
            assert above.fate == ESCAPED
            assert below.fate == HIT_ORIGIN

    def test_ode_residual(self, tanh_sink):
        c = separatrix_shoot(tanh_sink, samples=81)
        assert ode_defect(tanh_sink, c) <= 1e-9

    def test_user_anchor_defect(self, tanh_sink):
        c = separatrix_shoot(tanh_sink, x0_anchor=0.0, samples=81)
        assert c.diagnostics["anchor_defect"] <= 1e-8

    def test_no_horizon_for_flat_space(self, minkowski):
        with pytest.raises(NoHorizonError):
            separatrix_shoot(minkowski)


class TestPicard:
    def test_constant_needs_no_correction(self, sink):
        state, curve = picard_bounded_solution(sink, window=(0, 10), samples=11)
        assert state.iteration == 1
        assert np.max(np.abs(state.v)) == 0.0
        assert np.max(np.abs(curve.r - 1.0)) <= 1e-12

    def test_divergent_moment_fails(self):
        class Wobble:
            # |A'| does not decay fast enough for the tail integral to converge
            def __call__(self, x):
                return -2.0 + np.sin(x) / np.log(2.0 + np.asarray(x) ** 2)

            def derivative(self, x):
                x = np.asarray(x, dtype=float)
                L = np.log(2.0 + x * x)
                return np.cos(x) / L - np.sin(x) * 2 * x / ((2 + x * x) * L * L)

        with pytest.raises(ContractionError):
            picard_bounded_solution(Wobble(), search_span=1e5, max_enlarge=2)

    def test_rejects_source(self, source):
        with pytest.raises(Exception):
            picard_bounded_solution(source)


class TestInnerOuter:
    def test_unique_for_constant_sink(self, sink):
        inner = inner_separatrix(sink, samples=41)
        outer = separatrix_shoot(sink, samples=41)
        assert np.max(np.abs(inner.r - outer.r)) <= 1e-8

    def test_banded_metric_separates_horizons(self, banded):
        m, outer, inner = banded
        assert np.all(inner.r <= outer.r)
        assert outer.r.min() - inner.r.max() > 1.0
        # oracle: a fate census between the curves sees neither fate
        mid = 0.5 * (inner.r[10] + outer.r[10])
        c = fate_census(m, "plus", [inner.r[10] - 0.05, mid, outer.r[10] + 0.05], float(inner.x0[10]), (0, 40))
        assert c.fates == (HIT_ORIGIN, "alive_at_window_end", ESCAPED)

    @given(base=st.floats(-3, -0.5), amp=st.floats(-0.4, 0.4))
    def test_inner_never_outside_outer(self, base, amp):
        m = acoustic_to_radial(TimeProfile.tanh_ramp(base, amp * abs(base)))
        kw = dict(window=(-4, 4), samples=9, tol=1e-8)
        inner = inner_separatrix(m, **kw)
        outer = separatrix_shoot(m, **kw)
        assert np.all(inner.r <= outer.r + 1e-7)


class TestOriginTimes:
    def test_appearance(self):
        m = acoustic_to_radial(TimeProfile.tanh_ramp(0.0, -1.0))
        ot = appearance_time(m)
        assert ot.x0 < 0
        assert ot.x0 == pytest.approx(APPEARANCE_MINUS_TANH, abs=1e-9)
        assert not ot.multiple_crossings

    def test_appearance_stable_under_tightening(self):
        m = acoustic_to_radial(TimeProfile.tanh_ramp(0.0, -1.0))
        a = appearance_time(m, tol=1e-10)
        b = appearance_time(m, tol=1e-11, trace_rtol=1e-13, trace_atol=1e-14)
        assert abs(a.x0 - b.x0) <= 1e-6

    def test_disappearance_mirror(self):
        m = acoustic_to_radial(TimeProfile.tanh_ramp(0.0, -1.0))
        ot = disappearance_time(m)
        # time reversal maps the white branch of -tanh onto the black branch of -tanh
        assert ot.x0 == pytest.approx(-APPEARANCE_MINUS_TANH, abs=1e-9)

    def test_precondition(self, sink):
        with pytest.raises(PreconditionError):
            appearance_time(sink)


class TestDynamic:
    def test_constant(self, sink):
        d = dynamic_horizon(sink)
        assert np.all(d.r == 1.0)

    @pytest.mark.parametrize("amp,expected", [(0.5, "event-inside"), (-0.5, "dynamic-inside")])
    def test_containment_orientation(self, amp, expected):
        m = acoustic_to_radial(TimeProfile.tanh_ramp(-2.0, amp))
        event = separatrix_shoot(m, window=(-10, 10), samples=201)
        dyn = dynamic_horizon(m, window=(-10, 10), samples=200)
        c = containment(event, dyn, tol=1e-8)
        assert c.verdict == expected == c.expected

    def test_needs_sink(self, source):
        with pytest.raises(PreconditionError):
            dynamic_horizon(source)
