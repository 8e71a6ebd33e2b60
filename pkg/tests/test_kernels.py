import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from horizonlab import TimeProfile, acoustic_to_radial, integrate_radial, kernels

needs_compiled = pytest.mark.skipif(kernels.compiled_integrate_acoustic is None,
                                    reason="compiled kernel not built")


@needs_compiled
class TestBackendEquivalence:
    @given(base=st.floats(-3, 3), amp=st.floats(-1, 1), r0=st.floats(0.05, 8),
           family=st.sampled_from(["plus", "minus"]), direction=st.sampled_from(["forward", "backward"]))
    def test_same_fate_and_endpoint(self, base, amp, r0, family, direction):
        m = acoustic_to_radial(TimeProfile.tanh_ramp(base, amp))
        kw = dict(window=(-6.0, 6.0), rtol=1e-10, atol=1e-12)
        a = integrate_radial(m, family, r0, 0.0, direction, backend="compiled", **kw)
        b = integrate_radial(m, family, r0, 0.0, direction, backend="python", **kw)
        assert a.fate == b.fate
        assert a.fate_x0 == pytest.approx(b.fate_x0, abs=1e-12)
        assert a.fate_r == pytest.approx(b.fate_r, abs=1e-12)
        assert a.nsteps == b.nsteps

    def test_recorded_samples_identical(self):
        m = acoustic_to_radial(TimeProfile.rational_bump(-1.0, -0.5, 0.0, 2.0))
        a = integrate_radial(m, "plus", 1.3, -5.0, "forward", (-5, 5), backend="compiled")
        b = integrate_radial(m, "plus", 1.3, -5.0, "forward", (-5, 5), backend="python")
        np.testing.assert_allclose(a.x0, b.x0, rtol=0, atol=1e-13)
        np.testing.assert_allclose(a.r, b.r, rtol=0, atol=1e-13)


class TestSelection:
    def test_default_backend_name(self):
        assert kernels.BACKEND in ("compiled", "python")

    def test_env_forces_fallback(self):
        env = dict(os.environ, HORIZONLAB_PURE_PYTHON="1")
        out = subprocess.run([sys.executable, "-c", "from horizonlab import kernels; print(kernels.BACKEND)"],
                             env=env, capture_output=True, text=True, check=True)
        assert out.stdout.strip() == "python"

    def test_fallback_runs_tabulated_profiles(self):
        # tabulated profiles have no compiled specialisation and always use the generic integrator
        p = TimeProfile.tabulated([-5, 0, 5, 10], [-1.0, -1.0, -1.0, -1.0])
        t = integrate_radial(acoustic_to_radial(p), "plus", 0.5, 0.0, "forward", (-5, 5))
        assert t.fate == "hit_origin"
