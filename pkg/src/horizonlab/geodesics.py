"""Null bicharacteristics: radial characteristic families and the planar Hamiltonian flow."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import kernels
from .metric import MetricError, PolarMetric2D, RadialMetric

HIT_ORIGIN = "hit_origin"
ESCAPED = "escaped"
ALIVE = "alive_at_window_end"
CLOSED_ORBIT = "closed_orbit"

FATE_RANK = {HIT_ORIGIN: 0, ALIVE: 1, ESCAPED: 2}

R_FLOOR = 1e-6
RTOL = 1e-9
ATOL = 1e-10
ESCAPE_SLOPE = 0.25
R_SWITCH = 1e-3


class IntegrationError(RuntimeError):
    """Numerical failure of an integration, carrying the location where it happened."""

    def __init__(self, message, x0=None, r=None, trajectory=None):
        super().__init__(message)
        self.x0 = x0
        self.r = r
        self.trajectory = trajectory


class StepCollapseError(IntegrationError):
    pass


class ReparameterizationError(IntegrationError):
    """``dx0/ds`` changed sign, so the curve is not a graph over ``x0``."""


class HamiltonianDriftError(IntegrationError):
    pass


def family_sign(family) -> float:
    if family in ("plus", "+", 1, 1.0):
        return 1.0
    if family in ("minus", "-", -1, -1.0):
        return -1.0
    raise ValueError(f"family must be 'plus' or 'minus', got {family!r}")


def family_name(sign) -> str:
    return "plus" if sign > 0 else "minus"


@dataclass(frozen=True)
class Trajectory:
    """Sampled characteristic curve with its terminal fate.

    ``fate_x0`` and ``fate_r`` record where the run ended (origin hit time,
    exit point, or window end).  Planar runs also carry ``theta`` and the
    covector components.
    """

    family: str
    x0: np.ndarray
    r: np.ndarray
    fate: str
    fate_x0: float
    fate_r: float
    direction: str = "forward"
    nsteps: int = 0
    theta: np.ndarray | None = None
    xi_r: np.ndarray | None = None
    xi_theta: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def is_planar(self):
        return self.theta is not None

    def rows(self):
        """CSV rows ``x0, r[, theta, xi_r, xi_theta], family, fate``."""
        if self.is_planar:
            for k in range(len(self.x0)):
                yield (self.x0[k], self.r[k], self.theta[k], self.xi_r[k], self.xi_theta[k],
                       self.family, self.fate)
        else:
            for k in range(len(self.x0)):
                yield (self.x0[k], self.r[k], self.family, self.fate)


# ---------------------------------------------------------------------------
# radial families
# ---------------------------------------------------------------------------

def default_r_escape(metric: RadialMetric, window) -> float:
    return 10.0 * max(1.0, metric.sup_abs_b1(window[0], window[1]))


def _speed_functions(metric: RadialMetric, sign: float):
    g00, gr0, grr = metric.g00, metric.gr0, metric.grr

    def speed(x, r):
        a = float(g00(x, r))
        b = float(gr0(x, r))
        q = b * b - a * float(grr(x, r))
        if q <= 0.0:
            raise MetricError(f"hyperbolicity lost at x0={x}, r={r}")
        return (b + sign * math.sqrt(q)) / a

    def wspeed(x, r):
        # r * c stays finite at the origin because r * g^{r0} -> b1
        if r == 0.0:
            return float(metric.b1(x)) / float(g00(x, 1e-300))
        return r * speed(x, r)

    return speed, wspeed


def _run_kernel(metric, sign, r0, x_start, x_end, r_floor, r_escape, escape_slope,
                rtol, atol, max_steps, record, backend):
    # w = r^2/2 is well conditioned all the way to the floor, so switch early enough that
    # the origin time scale r^2/|b1| stays far above the step-size floor at large |x0|
    r_switch = max(10.0 * r_floor, R_SWITCH)
    code = metric.profile.kernel_code() if (metric.provenance == "acoustic" and metric.profile) else None
    if code is not None:
        fn = {None: kernels.integrate_acoustic,
              "compiled": kernels.compiled_integrate_acoustic,
              "python": kernels.python_integrate_acoustic}[backend]
        if fn is None:
            raise RuntimeError("compiled kernel requested but not built")
        return fn(code[0], code[1], sign, r0, x_start, x_end, r_floor, r_escape, escape_slope,
                  rtol, atol, r_switch, max_steps, record)
    speed, wspeed = _speed_functions(metric, sign)
    return kernels.integrate_speed(speed, wspeed, r0, x_start, x_end, r_floor, r_escape,
                                   escape_slope, rtol, atol, r_switch, max_steps, record)


def integrate_radial(metric: RadialMetric, family, r0: float, x0_start: float,
                     direction: str = "forward", window=(-10.0, 10.0), *, r_floor: float = R_FLOOR,
                     r_escape: float | None = None, rtol: float = RTOL, atol: float = ATOL,
                     escape_slope: float = ESCAPE_SLOPE, max_steps: int = 2_000_000,
                     record: bool = True, backend: str | None = None) -> Trajectory:
    """Integrate ``dr/dx0 = c_family(x0, r)`` from ``(x0_start, r0)`` to an event or the window end.

    Events are ``r <= r_floor`` (origin) and ``r >= r_escape`` while still
    moving outward at slope at least ``escape_slope`` in the integration
    direction.  Acoustic metrics with a parametric profile use the compiled
    kernel; everything else runs through the Python integrator.

    Raises
    ------
    StepCollapseError
        If the adaptive step underflows before an event.
    """
    sign = family_sign(family)
    if not r0 > r_floor:
        raise ValueError(f"r0={r0} must exceed r_floor={r_floor}")
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    x_end = window[1] if direction == "forward" else window[0]
    if r_escape is None:
        r_escape = default_r_escape(metric, window)
    status, xe, re, xs, rs, nsteps = _run_kernel(
        metric, sign, float(r0), float(x0_start), float(x_end), r_floor, r_escape,
        escape_slope, rtol, atol, max_steps, record, backend)
    if status == kernels.STEP_COLLAPSE:
        raise StepCollapseError(f"step size collapsed at x0={xe:.17g}, r={re:.17g}", x0=xe, r=re)
    if status == kernels.MAX_STEPS:
        raise StepCollapseError(f"step budget exhausted at x0={xe:.17g}, r={re:.17g}", x0=xe, r=re)
    fate = {kernels.HIT_ORIGIN: HIT_ORIGIN, kernels.ESCAPED: ESCAPED,
            kernels.WINDOW_END: ALIVE}[status]
    return Trajectory(family=family_name(sign), x0=xs, r=rs, fate=fate, fate_x0=xe, fate_r=re,
                      direction=direction, nsteps=nsteps)


@dataclass(frozen=True)
class Census:
    """Fates of one family launched from a grid of radii at a fixed time."""

    family: str
    direction: str
    x0_start: float
    r0: np.ndarray
    fates: tuple
    end_x0: np.ndarray
    monotone: bool

    def bracket(self, lower_fate=HIT_ORIGIN):
        """Grid cell ``(r_lo, r_hi)`` where the fate stops being ``lower_fate``; ``None`` if absent."""
        for k in range(len(self.r0) - 1):
            if self.fates[k] == lower_fate and self.fates[k + 1] != lower_fate:
                return float(self.r0[k]), float(self.r0[k + 1])
        return None

    def escape_bracket(self):
        for k in range(len(self.r0) - 1):
            if self.fates[k] != ESCAPED and self.fates[k + 1] == ESCAPED:
                return float(self.r0[k]), float(self.r0[k + 1])
        return None


def fate_census(metric: RadialMetric, family, r0_grid, x0_start: float, window,
                direction: str = "forward", threads: int | None = None, **kw) -> Census:
    """Fate of each start radius; fates must be ordered hit < alive < escaped along the grid.

    Same-family curves never cross, so a non-monotone census means the
    integration tolerance is too loose for the grid; ``monotone`` reports it.
    """
    grid = np.sort(np.asarray(r0_grid, dtype=float))

    def one(r0):
        return integrate_radial(metric, family, r0, x0_start, direction, window, record=False, **kw)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(one, grid))
    else:
        runs = [one(r) for r in grid]
    fates = tuple(t.fate for t in runs)
    ranks = [FATE_RANK[f] for f in fates]
    monotone = all(a <= b for a, b in zip(ranks, ranks[1:]))
    return Census(family=family_name(family_sign(family)), direction=direction, x0_start=x0_start,
                  r0=grid, fates=fates, end_x0=np.array([t.fate_x0 for t in runs]), monotone=monotone)


# ---------------------------------------------------------------------------
# planar Hamiltonian flow
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolarState:
    """Point of the planar bicharacteristic flow with ``xi_0 = 0``.

    ``xi_theta`` is the coordinate covector component, so the frame
    component is ``xi_theta / r``.
    """

    r: float
    theta: float
    xi_r: float
    xi_theta: float
    x0: float = 0.0


def hamiltonian(metric: PolarMetric2D, r, theta, xi_r, xi_theta):
    """``H`` at ``xi_0 = 0`` in coordinate components."""
    _, _, _, grr, grt, gtt = metric.coordinate_components(r, theta)
    return grr * xi_r**2 + 2 * grt * xi_r * xi_theta + gtt * xi_theta**2


def hamiltonian_scale(metric: PolarMetric2D, r, theta, xi_r, xi_theta):
    """Frobenius norm of the spatial block times ``|xi|^2``; the reference size for ``|H|``."""
    _, _, _, grr, grt, gtt = metric.coordinate_components(r, theta)
    return np.sqrt(grr**2 + 2 * grt**2 + gtt**2) * (xi_r**2 + xi_theta**2)


def covector_family(metric: PolarMetric2D, state: PolarState) -> str:
    """Family label of a null covector: sign of ``(g^{rr} xi_r + g^{r theta} eta) eta`` with ``eta = xi_theta/r``."""
    _, _, _, grr, grt, _ = metric.frame_components(state.r, state.theta)
    eta = state.xi_theta / state.r
    val = (grr * state.xi_r + grt * eta) * eta
    if val == 0.0:
        raise MetricError("covector family is undefined for a purely radial covector")
    return family_name(val)


def null_initial_state(metric: PolarMetric2D, r: float, theta: float, family,
                       xi_theta: float = 1.0, x0: float = 0.0) -> PolarState:
    """Complete ``(r, theta, xi_theta)`` to a null covector of the given family.

    Uses ``xi_r = (-g^{r theta} +- sqrt(-Delta)) / g^{rr} * eta`` or its
    rationalised form ``g^{theta theta} eta / (-g^{r theta} -+ sqrt(-Delta))``,
    whichever has the larger denominator, so ``g^{rr} = 0`` is not a breakdown.
    """
    s = family_sign(family)
    if xi_theta == 0.0:
        raise ValueError("xi_theta must be nonzero to select a family")
    _, _, _, grr, grt, gtt = (float(c) for c in metric.frame_components(r, theta))
    delta = grr * gtt - grt * grt
    if delta >= 0.0:
        raise MetricError(f"no real null covector with xi_0 = 0 at r={r}: Delta={delta} >= 0")
    sq = math.sqrt(-delta)
    eta = xi_theta / r
    den_a = grr
    den_b = -grt - s * sq
    if den_a == 0.0 and den_b == 0.0:
        raise MetricError(f"the {family_name(s)} null covector is purely radial at r={r}")
    if abs(den_a) >= abs(den_b):
        xi_r = (-grt + s * sq) / den_a * eta
    else:
        xi_r = gtt * eta / den_b
    return PolarState(r=r, theta=theta, xi_r=xi_r, xi_theta=xi_theta, x0=x0)


def polar_vector_field(metric: PolarMetric2D):
    """Arc-length normalised Hamiltonian field on ``y = (r, theta, x0, xi_r, xi_theta)``.

    The covector is kept at unit Euclidean norm by removing its radial
    growth; since ``H`` is quadratic in ``xi`` this only rescales ``xi`` and
    leaves the curve unchanged.  ``xi_0 = 0`` is held fixed and never evolved.
    """

    def rhs(_s, y):
        r, th, _x0, pr, pt = y
        _, gr0, gt0, grr, grt, gtt = metric.coordinate_components(r, th)
        (_, dgr0, dgt0, dgrr, dgrt, dgtt), (_, tgr0, tgt0, tgrr, tgrt, tgtt) = \
            metric.coordinate_gradients(r, th)
        dr = 2.0 * (grr * pr + grt * pt)
        dth = 2.0 * (grt * pr + gtt * pt)
        dx0 = 2.0 * (gr0 * pr + gt0 * pt)
        dpr = -(dgrr * pr * pr + 2.0 * dgrt * pr * pt + dgtt * pt * pt)
        dpt = -(tgrr * pr * pr + 2.0 * tgrt * pr * pt + tgtt * pt * pt)
        n = math.sqrt(dr * dr + (r * dth) ** 2 + dx0 * dx0)
        if n == 0.0:
            return np.zeros(5)
        dpr /= n
        dpt /= n
        lam = (pr * dpr + pt * dpt) / (pr * pr + pt * pt)
        return np.array([dr / n, dth / n, dx0 / n, dpr - lam * pr, dpt - lam * pt])

    return rhs


def _x0_rate(metric, y):
    r, th, _x0, pr, pt = y
    _, gr0, gt0, *_ = metric.coordinate_components(r, th)
    return 2.0 * (gr0 * pr + gt0 * pt)


def _event(fn, terminal, direction=0):
    fn.terminal = terminal
    fn.direction = direction
    return fn


def integrate_polar2d(metric: PolarMetric2D, init: PolarState, direction: str = "forward",
                      max_arc: float = 200.0, *, r_floor: float = R_FLOOR, r_escape: float | None = None,
                      rtol: float = 1e-10, atol: float = 1e-12, drift_tol: float = 1e-6,
                      x0_limit: float | None = None, extra_events=(), family=None,
                      max_step: float = np.inf) -> Trajectory:
    """Integrate the planar null bicharacteristic through ``init`` in the chosen time direction.

    The flow runs in a normalised curve parameter; the covector is flipped
    at the start so that ``x0`` moves in ``direction``.  A sign change of
    ``dx0/ds`` ends the run with :class:`ReparameterizationError`; relative
    ``|H|`` above ``drift_tol`` ends it with :class:`HamiltonianDriftError`.
    """
    if metric.b1 is not None and np.any(np.asarray(metric.b1(init.theta)) == 0.0):
        raise MetricError("b1 must be nonzero")
    if init.r <= r_floor:
        raise ValueError("start radius must exceed r_floor")
    want = 1.0 if direction == "forward" else -1.0
    norm = math.hypot(init.xi_r, init.xi_theta)
    y0 = np.array([init.r, init.theta, init.x0, init.xi_r / norm, init.xi_theta / norm])
    rate0 = _x0_rate(metric, y0)
    if rate0 == 0.0:
        raise ReparameterizationError("dx0/ds vanishes at the start", x0=init.x0, r=init.r)
    if np.sign(rate0) != want:
        y0[3:] *= -1.0
    if family is None:
        try:
            family = covector_family(metric, init)
        except MetricError:
            family = "plus"
    h0 = abs(float(hamiltonian(metric, *y0[[0, 1, 3, 4]])))
    sc0 = float(hamiltonian_scale(metric, *y0[[0, 1, 3, 4]]))
    if sc0 > 0 and h0 / sc0 > drift_tol:
        raise HamiltonianDriftError(f"initial state is not null: |H|/scale={h0 / sc0:.3g}", x0=init.x0, r=init.r)
    if r_escape is None:
        b = float(np.max(np.abs(np.asarray(metric.b1(np.linspace(0, 2 * np.pi, 64))))))
        r_escape = 10.0 * max(1.0, b)

    rhs = polar_vector_field(metric)
    events = [
        _event(lambda s, y: y[0] - r_floor, True, -1),
        _event(lambda s, y: y[0] - r_escape, True, 1),
        _event(lambda s, y: _x0_rate(metric, y) * want, True, -1),
    ]
    if x0_limit is not None:
        events.append(_event(lambda s, y: (x0_limit - y[2]) * want, True, -1))
    n_builtin = len(events)
    events.extend(extra_events)
    sol = solve_ivp(rhs, (0.0, max_arc), y0, method="DOP853", rtol=rtol, atol=atol,
                    events=events, dense_output=False, max_step=max_step)
    if sol.status == -1:
        raise IntegrationError(f"planar integration failed: {sol.message}",
                               x0=float(sol.y[2, -1]), r=float(sol.y[0, -1]))
    Y = sol.y
    h = np.abs(hamiltonian(metric, Y[0], Y[1], Y[3], Y[4]))
    sc = hamiltonian_scale(metric, Y[0], Y[1], Y[3], Y[4])
    drift = float(np.max(h / np.where(sc > 0, sc, 1.0)))
    fate = ALIVE
    if len(sol.t_events[0]):
        fate = HIT_ORIGIN
    elif len(sol.t_events[1]):
        fate = ESCAPED
    traj = Trajectory(family=family_name(family_sign(family)), x0=Y[2].copy(), r=Y[0].copy(),
                      fate=fate, fate_x0=float(Y[2, -1]), fate_r=float(Y[0, -1]),
                      direction=direction, nsteps=int(sol.nfev), theta=Y[1].copy(),
                      xi_r=Y[3].copy(), xi_theta=Y[4].copy(),
                      diagnostics={"max_rel_drift": drift, "arc": float(sol.t[-1]),
                                   "events": [e.tolist() for e in sol.t_events[n_builtin:]],
                                   "event_states": [e.tolist() for e in sol.y_events[n_builtin:]],
                                   "x0_limit_reached": x0_limit is not None and len(sol.t_events[3]) > 0})
    if len(sol.t_events[2]):
        raise ReparameterizationError("dx0/ds changed sign", x0=traj.fate_x0, r=traj.fate_r, trajectory=traj)
    if drift > drift_tol:
        raise HamiltonianDriftError(f"relative |H| drift {drift:.3g} exceeds {drift_tol:g}",
                                    x0=traj.fate_x0, r=traj.fate_r, trajectory=traj)
    return traj


def acoustic_polar_rate(A: float, B: float, r, family):
    """Closed-form ``dr/dx0`` of a family for the rotationally symmetric acoustic flow.

    ``D r (A D + s B) / (A^2 + B^2)`` with ``D = sqrt((A^2 + B^2)/r^2 - 1)``;
    valid inside the ergosphere.
    """
    s = family_sign(family)
    r = np.asarray(r, dtype=float)
    D = np.sqrt((A * A + B * B) / (r * r) - 1.0)
    return D * r * (A * D + s * B) / (A * A + B * B)
