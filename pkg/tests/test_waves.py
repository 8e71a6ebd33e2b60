import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from horizonlab import (
    Pulse,
    TimeProfile,
    acoustic_to_radial,
    build_char_coords,
    dalembert_solve,
    dn_characteristic,
    dn_direct,
    gaussian_probe,
    isometry_map,
    pullback_metric,
    refinement_study,
)
from horizonlab.waves import (
    CHARACTERISTIC,
    DIRECT,
    ConfigurationError,
    OutsideMeshError,
    PulseSum,
    SetupError,
)

A_CYL = 2.0


@pytest.fixture(scope="module")
def probe():
    return Pulse(1.0, 0.2)


def squeeze(a, kappa=0.1):
    """``r = psi(r')`` fixing ``r' = a`` with unit slope there; increasing on ``[0, a]`` for ``kappa < 0.5``."""
    def psi(rp):
        return rp + kappa * (a - rp) ** 2 / a

    def dpsi(rp):
        return 1.0 - 2.0 * kappa * (a - rp) / a

    return psi, dpsi


class TestPulse:
    def test_compact_support(self):
        f = Pulse(0.5, 0.1)
        lo, hi = f.support
        assert f(lo - 1e-9) == 0.0 and f(hi + 1e-9) == 0.0
        assert f(0.5) == pytest.approx(1.0 - f.floor)

    def test_derivative_matches_finite_difference(self):
        f = Pulse(0.0, 0.3)
        x = np.linspace(-0.8, 0.8, 17)
        h = 1e-6
        fd = (f(x + h) - f(x - h)) / (2 * h)
        assert np.allclose(f.derivative(x), fd, atol=1e-8)

    def test_default_probe_width(self):
        assert gaussian_probe(5.0).sigma == pytest.approx(0.5)

    def test_sum_is_linear(self):
        f, g = Pulse(0.0, 0.2), Pulse(0.4, 0.3)
        s = PulseSum([(2.0, f), (-1.0, g)])
        x = np.linspace(-1, 2, 31)
        assert np.allclose(s(x), 2 * f(x) - g(x))
        assert s.support == (min(f.support[0], g.support[0]), max(f.support[1], g.support[1]))


class TestCharCoords:
    def test_minkowski_closed_form(self, minkowski):
        a = 5.0
        c = build_char_coords(minkowski, a, (-3.0, 3.0), n_x0=21, n_r=11)
        X, R = np.meshgrid(c.x0, c.r, indexing="ij")
        # b_+- = +-1: phi1 = x0 + r, phi2 = -x0 + r, hence y0 = x0 and y1 = r
        assert np.max(np.abs(c.phi1 - (X + R))) < 1e-13
        assert np.max(np.abs(c.phi2 - (R - X))) < 1e-13
        assert np.max(np.abs(c.y0 - X)) < 1e-13
        assert c.boundary_defect() <= 1e-15
        assert c.nullity <= 1e-7

    def test_sink_nullity(self, sink):
        c = build_char_coords(sink, 5.0, (-3.0, 3.0))
        assert c.nullity <= 1e-7
        assert c.jacobian_min > 0.0
        assert c.r[0] > 1.0

    @settings(max_examples=6)
    @given(A0=st.floats(-2.0, -0.5), dA=st.floats(-0.4, 0.4), w=st.floats(0.5, 3.0))
    def test_boundary_identity(self, A0, dA, w):
        m = acoustic_to_radial(TimeProfile.tanh_ramp(A0, dA, 0.0, w))
        c = build_char_coords(m, 4.0, (-2.0, 2.0), n_x0=11, n_r=7)
        # imposed data, so only the rounding of (phi1 -+ phi2)/2 remains
        assert c.boundary_defect() <= 4 * np.finfo(float).eps * 4.0

    def test_clipped_below_horizon(self, sink):
        with pytest.warns(UserWarning, match="clipped"):
            c = build_char_coords(sink, 3.0, (-1.0, 1.0), n_x0=11, n_r=7, r_lo=0.5)
        assert c.clipped and c.r[0] > 1.0

    def test_inverse_roundtrip(self, sink):
        c = build_char_coords(sink, 4.0, (-2.0, 2.0), n_x0=31, n_r=15)
        x = np.array([-0.5, 0.0, 0.7])
        r = np.array([2.0, 3.0, 3.9])
        xb, rb = c.inverse(*c.forward(x, r))
        assert np.allclose(xb, x, atol=1e-10) and np.allclose(rb, r, atol=1e-10)

    def test_inverse_outside_hull(self, minkowski):
        c = build_char_coords(minkowski, 4.0, (-1.0, 1.0), n_x0=11, n_r=7)
        with pytest.raises(OutsideMeshError):
            c.inverse(np.array([30.0]), np.array([3.0]))


class TestDAlembert:
    def test_constant_along_ingoing_lines(self, probe):
        sol = dalembert_solve(A_CYL, probe)
        y0 = np.linspace(-1, 2, 13)
        for c in (0.5, 1.0, 2.5):
            vals = sol(y0, c + A_CYL - y0)
            assert np.ptp(vals) == 0.0

    def test_zero_data(self):
        sol = dalembert_solve(A_CYL, Pulse(0.0, 0.2, amplitude=0.0))
        y0, y1 = np.meshgrid(np.linspace(-2, 2, 9), np.linspace(0.1, A_CYL, 9))
        assert np.all(sol(y0, y1) == 0.0)

    def test_boundary_normal_derivative(self, probe):
        sol = dalembert_solve(A_CYL, probe)
        y0 = np.linspace(0.2, 1.8, 33)
        h = 1e-5
        fd = (sol(y0, A_CYL + h) - sol(y0, A_CYL - h)) / (2 * h)
        assert np.allclose(sol.boundary_dn(y0), fd, atol=1e-7)
        assert np.allclose(sol.boundary_dn(y0), probe.derivative(y0))


class TestDNCharacteristic:
    def test_minkowski_is_derivative(self, minkowski, probe):
        x = np.linspace(-1, 3, 401)
        d = dn_characteristic(minkowski, probe, A_CYL, x)
        assert d.method == CHARACTERISTIC
        assert np.max(np.abs(d.lambda_f - probe.derivative(x))) <= 1e-14 * np.max(np.abs(probe.derivative(x)))

    def test_causality_exact(self, sink, probe):
        x = np.linspace(-2, 3, 501)
        d = dn_characteristic(sink, probe, A_CYL, x)
        assert np.all(d.lambda_f[x < probe.support[0]] == 0.0)

    def test_time_shift(self, sink, probe):
        x = np.linspace(-1, 4, 501)
        d = dn_characteristic(sink, probe, A_CYL, x)
        ds = dn_characteristic(sink, probe.shifted(0.7), A_CYL, x + 0.7)
        assert np.max(np.abs(d.lambda_f - ds.lambda_f)) <= 1e-13

    def test_mesh_crosscheck(self, sink, probe):
        c = build_char_coords(sink, A_CYL, (-1.0, 3.0))
        d = dn_characteristic(sink, probe, A_CYL, np.linspace(0, 2, 21), coords=c)
        assert d.diagnostics["mesh_phi1_r_defect"] < 1e-6


class TestDNDirect:
    def test_minkowski_second_order(self, minkowski, probe):
        errs = []
        for n in (80, 160):
            d = dn_direct(minkowski, probe, A_CYL, n_cells=n, x0_range=(-1.0, 4.0))
            assert d.method == DIRECT
            errs.append(np.max(np.abs(d.lambda_f - probe.derivative(d.x0))))
        assert np.log2(errs[0] / errs[1]) >= 1.5

    def test_spherical_weight_minkowski(self, minkowski):
        # exact 3D ingoing wave a f(t + r - a) / r gives du/dr = f' - f/a on r = a;
        # compare only until the truncation boundary can send anything back
        f = Pulse(1.0, 0.3)
        r_abs = 0.2
        t_back = f.support[0] + 2 * (A_CYL - r_abs)
        errs = []
        for n in (80, 160):
            d = dn_direct(minkowski, f, A_CYL, n_cells=n, dim=3, r_abs=r_abs, x0_range=(f.support[0], t_back))
            errs.append(np.max(np.abs(d.lambda_f - (f.derivative(d.x0) - f(d.x0) / A_CYL))))
        assert errs[1] < 2e-2 * np.max(np.abs(f.derivative(d.x0)))
        assert np.log2(errs[0] / errs[1]) >= 1.5

    def test_causality(self, sink, probe):
        d = dn_direct(sink, probe, A_CYL, n_cells=80, x0_range=(-1.0, 3.0))
        assert np.all(d.lambda_f[d.x0 < probe.support[0]] == 0.0)

    def test_linearity(self, sink):
        f, g = Pulse(1.0, 0.2), Pulse(1.5, 0.25)
        kw = dict(n_cells=80, x0_range=(0.0, 4.0))
        d1 = dn_direct(sink, f, A_CYL, **kw)
        d2 = dn_direct(sink, g, A_CYL, **kw)
        ds = dn_direct(sink, PulseSum([(2.0, f), (-0.5, g)]), A_CYL, **kw)
        assert np.max(np.abs(ds.lambda_f - 2 * d1.lambda_f + 0.5 * d2.lambda_f)) <= 1e-10

    def test_matches_characteristic(self, sink, probe):
        d = dn_direct(sink, probe, A_CYL, n_cells=160, x0_range=(-1.0, 4.0))
        ref = dn_characteristic(sink, probe, A_CYL, d.x0)
        scale = np.max(np.abs(ref.lambda_f))
        assert np.max(np.abs(d.lambda_f - ref.lambda_f)) <= 2e-3 * scale

    def test_white_hole_interior_stays_zero(self, source, probe):
        d, state = dn_direct(source, probe, A_CYL, n_cells=160, return_state=True)
        assert d.diagnostics["horizon_kind"] == "outer-white"
        assert state.max_abs_inside <= 1e-10
        assert np.max(np.abs(d.lambda_f)) > 0.1

    def test_cfl_rejected(self, minkowski, probe):
        with pytest.raises(ConfigurationError, match="CFL"):
            dn_direct(minkowski, probe, A_CYL, cfl=0.9)

    def test_under_resolved_pulse(self, minkowski):
        with pytest.raises(ConfigurationError, match="FWHM"):
            dn_direct(minkowski, Pulse(1.0, 0.01), A_CYL, n_cells=40)

    def test_r_abs_outside_black_horizon(self, sink, probe):
        with pytest.raises(SetupError):
            dn_direct(sink, probe, A_CYL, n_cells=80, r_abs=1.2)

    def test_cylinder_inside_horizon(self, sink):
        with pytest.raises(SetupError):
            dn_direct(sink, Pulse(1.0, 0.05), 0.5, n_cells=80)

    def test_refinement_self_reference(self, minkowski, probe):
        study = refinement_study(minkowski, A_CYL, Pulse(1.0, 0.4), (40, 80, 160), reference="self",
                                 x0_range=(-1.0, 4.0), threads=3)
        assert len(study.errors) == 2 and study.monotone
        assert study.orders[0] >= 1.5


class TestIsometry:
    def test_same_metric_is_identity(self, sink):
        rep = isometry_map(sink, sink, 5.0, horizons=(1.0, 1.0))
        assert rep.boundary_defect <= 1e-10
        assert rep.pullback_defect <= 1e-10
        assert rep.horizon_defect <= 1e-8
        assert rep.dn_match and rep.dn_defect == 0.0
        x = np.array([0.0, 0.5])
        r = np.array([2.0, 4.0])
        sx, sr = rep.sigma(x, r)
        assert np.allclose(sx, x, atol=1e-9) and np.allclose(sr, r, atol=1e-9)

    def test_minkowski_pullback(self, minkowski):
        a = 5.0
        psi, dpsi = squeeze(a)
        rep = isometry_map(minkowski, pullback_metric(minkowski, psi, dpsi), a)
        assert rep.sigma_error is None
        assert rep.boundary_defect <= 1e-10
        assert rep.pullback_defect <= 1e-10
        assert rep.horizon_defect is None
        assert rep.dn_match

    def test_sink_pullback_maps_horizon(self, sink):
        a = 5.0
        psi, dpsi = squeeze(a)
        r_h1 = brentq(lambda rp: psi(rp) - 1.0, 0.0, a)
        rep = isometry_map(sink, pullback_metric(sink, psi, dpsi), a, horizons=(1.0, r_h1))
        assert rep.boundary_defect <= 1e-10
        assert rep.pullback_defect <= 1e-10
        assert rep.horizon_defect <= 1e-5
        assert rep.dn_match

    def test_distinguishable_metrics(self, sink):
        other = acoustic_to_radial(TimeProfile.constant(-1.5))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = isometry_map(sink, other, 5.0, n_x0=41, n_r=21, horizons=(1.0, 1.5))
        assert not rep.dn_match
        assert rep.dn_defect > 1e-2
