import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from horizonlab import (
    AcousticFlow,
    MetricError,
    RadialMetric,
    TimeProfile,
    Window,
    acoustic_to_polar2d,
    acoustic_to_radial,
    radial_char_roots,
    validate,
)

nonzero_a = st.floats(-4, 4).filter(lambda a: abs(a) > 0.05)
radius = st.floats(0.05, 50)
time = st.floats(-20, 20)


class TestAcousticToRadial:
    def test_constant_sink_components(self, sink):
        g00, gr0, grr = sink.components(0.0, 2.0)
        assert (g00, gr0, grr) == (1.0, -0.5, -0.75)

    def test_zero_flow_is_minkowski(self, minkowski):
        x0 = np.linspace(-3, 3, 5)
        r = np.linspace(0.5, 4, 5)
        g00, gr0, grr = minkowski.components(x0, r)
        np.testing.assert_array_equal(g00, 1.0)
        np.testing.assert_array_equal(gr0, 0.0)
        np.testing.assert_array_equal(grr, -1.0)

    def test_tanh_late_time_limit(self, tanh_sink):
        assert tanh_sink.gr0(40.0, 3.0) == pytest.approx(-0.5, abs=1e-12)

    @given(a=nonzero_a, x0=time, r=radius)
    def test_unit_discriminant(self, a, x0, r):
        m = acoustic_to_radial(TimeProfile.tanh_ramp(a, 0.3 * a))
        assert m.discriminant(x0, r) == pytest.approx(1.0, abs=1e-12 * (1 + (a / r) ** 2))

    @given(x0=time)
    def test_b1_round_trip(self, tanh_sink, x0):
        p = TimeProfile.tanh_ramp(-2.0, 0.5)
        assert abs(tanh_sink.b1(x0) - p(x0)) <= 1e-12

    @given(b1=st.floats(-3, 3), b2=st.floats(-3, 3), x0=time, r=radius)
    def test_swirl_does_not_change_radial_roots(self, b1, b2, x0, r):
        prof = TimeProfile.constant(-1.3)
        r1 = radial_char_roots(acoustic_to_radial(AcousticFlow(prof, b1)), x0, r)
        r2 = radial_char_roots(acoustic_to_radial(AcousticFlow(prof, b2)), x0, r)
        assert (r1.s_minus, r1.s_plus) == (r2.s_minus, r2.s_plus)

    def test_flow_inverse_metric_matches_radial_triple(self):
        flow = AcousticFlow(TimeProfile.constant(-1.0), 0.5)
        G = flow.inverse_metric(0.0, [2.0, 0.0])
        assert G[0, 1] == pytest.approx(-0.5) and G[1, 1] == pytest.approx(-0.75)


class TestValidate:
    def test_acoustic_sink_passes(self, sink):
        rep = validate(sink, Window(-5, 5, 0.1, 10))
        assert rep.passed
        assert rep.c0 > 0

    def test_positive_grr_flagged(self):
        m = RadialMetric.from_expressions("1 + 0*r", "0*r", "where(abs(r - 2) < 0.05, 1.0, -1.0)", "0*x0")
        rep = validate(m, Window(-1, 1, 0.5, 4), n=200)
        assert rep.by_invariant("hyperbolicity")

    def test_unbounded_g00_flagged(self):
        m = RadialMetric.from_expressions("1 + r", "-1/r", "1/r**2 - 1", "-1 + 0*x0")
        rep = validate(m, Window(-1, 1, 0.5, 4))
        assert rep.by_invariant("far-field-g00")

    def test_refinement_never_repairs_a_failure(self):
        m = RadialMetric.from_expressions("1 + 0*r", "0*r", "where(abs(r - 2) < 0.05, 1.0, -1.0)", "0*x0")
        w = Window(-1, 1, 0.5, 4)
        assert not validate(m, w, n=200).passed
        assert not validate(m, w, n=400).passed

    def test_window_touching_origin_rejected(self, sink):
        with pytest.raises(MetricError):
            validate(sink, Window(-1, 1, 0.0, 2))


class TestPolar:
    def test_radial_flow_components(self):
        m = acoustic_to_polar2d(-1.0, 0.0)
        r = 1.7
        _, _, _, grr, grt, gtt = m.frame_components(r, 0.3)
        assert grr == pytest.approx(-1 + 1 / r**2)
        assert grt == 0.0
        assert gtt == pytest.approx(-1.0)

    @pytest.mark.parametrize("A,B,r_e", [(-1.0, 1.0, np.sqrt(2.0)), (3.0, 4.0, 5.0)])
    def test_delta_vanishes_on_ergosphere(self, A, B, r_e):
        m = acoustic_to_polar2d(A, B)
        assert m.delta(r_e, 0.4) == pytest.approx(0.0, abs=1e-15)
        # oracle: Delta = 1 - (A^2 + B^2)/r^2 for the acoustic flow
        for r in (0.5, 2.0, 7.0):
            assert m.delta(r, 1.0) == pytest.approx(1 - (A * A + B * B) / r**2, rel=1e-13)

    def test_zero_radial_strength_rejected(self):
        with pytest.raises(MetricError):
            acoustic_to_polar2d(0.0, 1.0)

    def test_hypotheses_hold_for_acoustic(self):
        assert acoustic_to_polar2d(-1.0, 0.5).check_hypotheses() == []
