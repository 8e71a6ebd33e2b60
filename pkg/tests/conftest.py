import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from horizonlab import TimeProfile, acoustic_to_radial

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def sink():
    return acoustic_to_radial(TimeProfile.constant(-1.0))


@pytest.fixture(scope="session")
def source():
    return acoustic_to_radial(TimeProfile.constant(1.0))


@pytest.fixture(scope="session")
def minkowski():
    return acoustic_to_radial(TimeProfile.constant(0.0))


@pytest.fixture(scope="session")
def tanh_sink():
    """|A| decreasing from 2.5 to 1.5."""
    return acoustic_to_radial(TimeProfile.tanh_ramp(-2.0, 0.5))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance reporting: one PASS/FAIL line per criterion in the terminal summary
_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    n, text = mark.args
    entry = _CRITERIA.setdefault(n, {"text": text, "ok": True, "seconds": 0.0, "tests": 0, "details": []})
    entry["ok"] &= rep.passed
    entry["seconds"] += rep.duration
    entry["tests"] += 1
    entry["details"] += [v for k, v in rep.user_properties if k == "measured"]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        verdict = "PASS" if e["ok"] else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {verdict}  ({e['tests']} tests, {e['seconds']:.1f} s)  {e['text']}")
        for d in e["details"]:
            terminalreporter.write_line(f"    measured: {d}")
