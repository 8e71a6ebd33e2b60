"""Ergosphere, closed characteristic orbits and origin capture for planar stationary metrics."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .geodesics import (HIT_ORIGIN, R_FLOOR, IntegrationError, PolarState, Trajectory,
                        family_name, family_sign, integrate_polar2d, null_initial_state)
from .metric import MetricError, PolarMetric2D

log = logging.getLogger(__name__)

BLACK_HORIZON = "black-horizon"
WHITE_HORIZON = "white-horizon"


class PartialErgosphereError(MetricError):
    """Raised when ``Delta`` keeps one sign along some ray."""

    def __init__(self, message, thetas=()):
        super().__init__(message)
        self.thetas = tuple(thetas)


class OrbitClassificationError(RuntimeError):
    """Raised when the transverse family disagrees about the side it points to."""


# ergosphere ---------------------------------------------------------------

@dataclass
class Ergosphere:
    """Sampled curve ``r = r_e(theta)`` on which ``Delta`` vanishes.

    Attributes
    ----------
    theta, r : ndarray
        Grid angles and root radii.
    residual : float
        ``max |Delta(r_e(theta), theta)|`` over the grid.
    closure : float
        ``|r_e(0) - r_e(2 pi)|``.
    noncharacteristic_violations : list of (theta, r, value)
        Points where the normal covector of the curve is (numerically) null.
    """

    theta: np.ndarray
    r: np.ndarray
    residual: float
    closure: float
    noncharacteristic_violations: list
    metric: PolarMetric2D = field(repr=False, default=None)

    def delta(self, r, theta):
        return self.metric.delta(r, theta)

    def __call__(self, theta):
        """Periodic linear interpolation of the sampled curve."""
        return np.interp(np.mod(theta, 2 * np.pi), np.append(self.theta, 2 * np.pi),
                         np.append(self.r, self.r[0]))

    def rows(self):
        return [(float(t), float(r)) for t, r in zip(self.theta, self.r)]


def _ray_root(metric, theta, radii, xtol):
    d = np.array([float(metric.delta(r, theta)) for r in radii])
    idx = np.nonzero((d[:-1] < 0.0) & (d[1:] >= 0.0))[0]
    if not len(idx):
        return None
    i = idx[0]
    if d[i + 1] == 0.0:
        return float(radii[i + 1])
    return brentq(lambda r: metric.delta(r, theta), radii[i], radii[i + 1], xtol=xtol, rtol=1e-15)


def locate_ergosphere(metric: PolarMetric2D, theta_grid=None, r_min: float = 1e-3,
                      r_max: float = 1e3, n_scan: int = 400, xtol: float = 1e-13,
                      char_tol: float = 1e-8) -> Ergosphere:
    """Find the first outward sign change of ``Delta`` along each ray.

    The scan is geometric on ``[r_min, r_max]``; each bracket is refined by
    Brent's method.  The curve normal ``(1, -r_e'(theta))`` is then tested
    against the spatial block: a relative value below ``char_tol`` marks a
    characteristic point.

    Raises
    ------
    PartialErgosphereError
        If some ray has no sign change in the search range.
    """
    if theta_grid is None:
        theta_grid = np.linspace(0.0, 2 * np.pi, 64, endpoint=False)
    theta_grid = np.asarray(theta_grid, dtype=float)
    radii = np.geomspace(r_min, r_max, n_scan)
    roots = []
    missing = []
    for th in theta_grid:
        root = _ray_root(metric, th, radii, xtol)
        if root is None:
            missing.append(float(th))
        roots.append(root)
    if missing:
        raise PartialErgosphereError(
            f"Delta has no negative-to-positive sign change on {len(missing)} of {len(theta_grid)} rays "
            f"in [{r_min:g}, {r_max:g}]", missing)
    r = np.array(roots, dtype=float)
    residual = float(np.max(np.abs([metric.delta(a, b) for a, b in zip(r, theta_grid)])))
    end = _ray_root(metric, 2 * np.pi, radii, xtol)
    start = _ray_root(metric, 0.0, radii, xtol)
    closure = abs(end - start)

    # derivative of the sampled curve by periodic central differences
    violations = []
    uniform = len(theta_grid) > 2 and np.allclose(np.diff(theta_grid), 2 * np.pi / len(theta_grid))
    if uniform:
        dth = 2 * np.pi / len(theta_grid)
        drdth = (np.roll(r, -1) - np.roll(r, 1)) / (2 * dth)
    else:
        drdth = np.gradient(r, theta_grid)
    for th, re, dre in zip(theta_grid, r, drdth):
        _, _, _, grr, grt, gtt = (float(c) for c in metric.coordinate_components(re, th))
        xr, xt = 1.0, -float(dre)
        value = grr * xr * xr + 2 * grt * xr * xt + gtt * xt * xt
        scale = (abs(grr) + 2 * abs(grt) + abs(gtt)) * (xr * xr + xt * xt)
        if abs(value) <= char_tol * scale:
            violations.append((float(th), float(re), value))
    return Ergosphere(theta=theta_grid, r=r, residual=residual, closure=closure,
                      noncharacteristic_violations=violations, metric=metric)


# closed orbits ------------------------------------------------------------

@dataclass
class ClosedOrbit:
    """A closed characteristic curve of one family.

    ``x0`` is measured from the section crossing and lies in ``[0, period]``.
    ``period`` is ``nan`` for an orbit found by radial convergence (no winding).
    """

    family: str
    x0: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    period: float
    kind: str
    radius: float
    closure_defect: float
    return_derivative: float
    votes: tuple
    method: str
    diagnostics: dict = field(default_factory=dict)

    @property
    def r_min(self):
        return float(np.min(self.r))

    @property
    def r_max(self):
        return float(np.max(self.r))

    def rows(self):
        return [(float(t), float(r)) for t, r in zip(self.theta, self.r)]


@dataclass
class OrbitSearch:
    """Result of :func:`find_closed_orbits`; an empty list is not proof of absence."""

    orbits: list
    family: str
    dedup_tol: float
    seeds: list
    diagnostics: dict

    def __iter__(self):
        return iter(self.orbits)

    def __len__(self):
        return len(self.orbits)

    def __getitem__(self, i):
        return self.orbits[i]


def _section_event(theta_s):
    def ev(_s, y):
        return math.sin(y[1] - theta_s)
    ev.terminal = False
    ev.direction = 0
    return ev


def _returns(traj: Trajectory, theta_s, orientation=None):
    """Section crossings of the ray ``theta = theta_s`` (not the opposite ray)."""
    states = np.asarray(traj.diagnostics["event_states"][0]) if traj.diagnostics["events"] else np.empty((0, 5))
    if not len(states):
        return states, 0
    keep = np.cos(states[:, 1] - theta_s) > 0.0
    states = states[keep]
    if len(states) < 2:
        return states, 0
    winding = np.sign(states[-1, 1] - states[0, 1])
    if orientation is not None:
        steps = np.sign(np.diff(states[:, 1]))
        states = states[np.concatenate([[True], steps == orientation])]
    return states, int(winding)


def _state_on_section(metric, r, theta_s, family, xi_sign, x0=0.0):
    return null_initial_state(metric, r, theta_s, family, xi_theta=xi_sign, x0=x0)


def _one_return(metric, r, theta_s, family, xi_sign, winding, direction, max_arc, rtol, atol,
                max_step=np.inf):
    """Integrate from the section at radius ``r`` to the next crossing in the winding sense."""
    init = _state_on_section(metric, r, theta_s, family, xi_sign)
    target = theta_s + 2 * np.pi * winding

    def ev(_s, y):
        return (y[1] - target) * winding
    ev.terminal = True
    ev.direction = 1
    traj = integrate_polar2d(metric, init, direction, max_arc=max_arc, rtol=rtol, atol=atol,
                             extra_events=[ev], family=family, max_step=max_step)
    states = traj.diagnostics["event_states"][0]
    if not states:
        raise IntegrationError("no section return", x0=traj.fate_x0, r=traj.fate_r, trajectory=traj)
    end = states[0]
    return end[0], abs(end[2] - init.x0), traj


def _nearest_family(metric, y):
    """Family whose null covector at ``(r, theta)`` is projectively closest to ``y[3:5]``.

    The sign label degenerates where ``g^{rr}`` vanishes, so compare directions instead.
    """
    r, th, _, pr, pt = (float(v) for v in y[:5])
    best, dist = None, np.inf
    for fam in ("plus", "minus"):
        try:
            st = null_initial_state(metric, r, th, fam, xi_theta=1.0 if pt == 0.0 else math.copysign(1.0, pt))
        except (MetricError, ZeroDivisionError):
            continue
        a = np.array([st.xi_r, st.xi_theta])
        if not np.all(np.isfinite(a)):
            continue
        d = abs(a[0] * pt - a[1] * pr) / (np.linalg.norm(a) * math.hypot(pr, pt))
        if d < dist:
            best, dist = fam, d
    return best


def _on_ergosphere(metric, y, rel_tol):
    """True when ``Delta`` at the state's position is negligible against the spatial block."""
    r, th = float(y[0]), float(y[1])
    _, _, _, grr, grt, gtt = (float(c) for c in metric.frame_components(r, th))
    scale = abs(grr * gtt) + grt * grt
    return scale == 0.0 or abs(grr * gtt - grt * grt) <= rel_tol * max(scale, 1.0)


def _other_rate(metric, family, r, theta, drho):
    """``(dr - rho' dtheta)/dx0`` of the other family at a point; sign < 0 means inward."""
    other = -family_sign(family)
    for rr in (r, r * (1.0 - 1e-4)):
        try:
            st = null_initial_state(metric, rr, theta, other, xi_theta=1.0)
        except MetricError:
            continue
        _, gr0, gt0, grr, grt, gtt = (float(c) for c in metric.coordinate_components(rr, theta))
        dr = 2 * (grr * st.xi_r + grt * st.xi_theta)
        dth = 2 * (grt * st.xi_r + gtt * st.xi_theta)
        dx0 = 2 * (gr0 * st.xi_r + gt0 * st.xi_theta)
        if dx0 == 0.0:
            continue
        val = (dr - drho * dth) / dx0
        if abs(val) > 1e-12:
            return val
    return 0.0


def _classify(metric, family, r, theta, n_votes=8):
    """Majority vote of the other family's transverse direction at ``n_votes`` orbit points."""
    order = np.argsort(np.mod(theta, 2 * np.pi))
    th = np.mod(theta, 2 * np.pi)[order]
    rr = r[order]
    keep = np.concatenate([[True], np.diff(th) > 1e-9])
    th, rr = th[keep], rr[keep]
    if len(th) > 1 and th[-1] - th[0] > 2 * np.pi - 1e-9:
        th, rr = th[:-1], rr[:-1]
    if len(th) >= 4:
        ext_th = np.concatenate([th[-2:] - 2 * np.pi, th, th[:2] + 2 * np.pi])
        ext_r = np.concatenate([rr[-2:], rr, rr[:2]])
        drho_all = np.gradient(ext_r, ext_th)[2:-2]
    else:
        drho_all = np.zeros_like(rr)
    picks = np.linspace(0, len(th), n_votes, endpoint=False).astype(int)
    votes = []
    for i in picks:
        v = _other_rate(metric, family, float(rr[i]), float(th[i]), float(drho_all[i]))
        votes.append(BLACK_HORIZON if v < 0 else WHITE_HORIZON if v > 0 else "degenerate")
    n_black = votes.count(BLACK_HORIZON)
    n_white = votes.count(WHITE_HORIZON)
    if n_black and n_white:
        raise OrbitClassificationError(f"transverse family disagrees along the orbit: {votes}")
    if not (n_black or n_white):
        raise OrbitClassificationError("transverse family is tangent at every sampled point")
    return (BLACK_HORIZON if n_black > n_white else WHITE_HORIZON), tuple(votes)


def _refine_section(metric, r_a, r_b, theta_s, family, xi_sign, winding, direction, max_arc,
                    rtol, atol, tol, max_iter=30):
    """Secant iteration on ``P(r) - r`` for the return map ``P``."""
    fa = _one_return(metric, r_a, theta_s, family, xi_sign, winding, direction, max_arc, rtol, atol)[0] - r_a
    fb = _one_return(metric, r_b, theta_s, family, xi_sign, winding, direction, max_arc, rtol, atol)[0] - r_b
    for _ in range(max_iter):
        if fb == fa or abs(fb) < tol:
            break
        r_new = r_b - fb * (r_b - r_a) / (fb - fa)
        r_a, fa = r_b, fb
        r_b = r_new
        fb = _one_return(metric, r_b, theta_s, family, xi_sign, winding, direction, max_arc, rtol, atol)[0] - r_b
    return r_b, abs(fb)


def _seed_run(metric, family, r0, th0, xi_sign, direction, max_time, section, rtol, atol):
    init = null_initial_state(metric, r0, th0, family, xi_theta=xi_sign)
    x_lim = max_time if direction == "forward" else -max_time
    try:
        traj = integrate_polar2d(metric, init, direction, max_arc=50.0 * max_time, rtol=rtol, atol=atol,
                                 x0_limit=x_lim, extra_events=[_section_event(section)], family=family)
    except IntegrationError as exc:
        return {"r0": r0, "theta0": th0, "direction": direction, "error": str(exc)}, None
    return {"r0": r0, "theta0": th0, "direction": direction, "fate": traj.fate}, traj


def find_closed_orbits(metric: PolarMetric2D, family="plus", n_seeds: int = 8, seed: int = 0,
                       max_time: float = 200.0, *, section: float = 0.0, r_inner: float | None = None,
                       detect_tol: float = 1e-7, tol: float = 1e-12, dedup_tol: float = 1e-6,
                       rtol: float = 1e-11, atol: float = 1e-13, n_samples: int = 256,
                       threads: int | None = None) -> OrbitSearch:
    """Search the ergoregion annulus for closed curves of one characteristic family.

    Seeds are drawn uniformly in the annulus ``r_inner < r < r_e(theta)`` and
    run both forward and backward in ``x0`` up to ``max_time``; an orbit that
    repels in one direction attracts in the other.  Successive returns to the
    ray ``theta = section`` that settle below ``detect_tol`` start a secant
    refinement of the return map.  Orbits whose mean radii differ by less
    than ``dedup_tol`` are merged.  A run that never winds but whose radius
    converges is reported as a circle (``method="radial-limit"``).  Each
    orbit is resampled with about ``n_samples`` points per period.
    """
    s = family_sign(family)
    fam = family_name(s)
    erg = locate_ergosphere(metric)
    if r_inner is None:
        r_inner = 0.05 * float(np.min(erg.r))
    rng = np.random.default_rng(seed)
    seeds = []
    for _ in range(n_seeds):
        th = float(rng.uniform(0, 2 * np.pi))
        u = float(rng.uniform(0.05, 0.95))
        seeds.append((r_inner + u * (float(erg(th)) - r_inner), th, float(rng.choice([-1.0, 1.0]))))
    jobs = [(r0, th, xs, d) for (r0, th, xs) in seeds for d in ("forward", "backward")]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        runs = list(pool.map(lambda j: _seed_run(metric, fam, j[0], j[1], j[2], j[3], max_time,
                                                 section, rtol, atol), jobs))

    candidates = []
    reports = []
    for (r0, th, xs, d), (info, traj) in zip(jobs, runs):
        reports.append(info)
        if traj is None or traj.fate == HIT_ORIGIN or traj.fate == "escaped":
            continue
        states, winding = _returns(traj, section)
        if winding and len(states) >= 4:
            states, _ = _returns(traj, section, orientation=winding)
            rk = states[:, 0]
            diffs = np.abs(np.diff(rk))
            if len(diffs) >= 3 and diffs[-1] < detect_tol and diffs[-1] <= diffs[-2] <= diffs[-3] + detect_tol:
                if _nearest_family(metric, states[-1]) != fam:
                    # the curve touched the ergosphere and continued in the other family
                    info["switched_family"] = True
                    continue
                xi_sign = float(np.sign(states[-1, 4])) or 1.0
                candidates.append(("return-map", d, winding, float(rk[-2]), float(rk[-1]), xi_sign))
                info["returns"] = len(rk)
            continue
        # non-winding run: look for a radial limit
        tail = traj.r[traj.x0 * (1 if d == "forward" else -1) >= 0.9 * max_time]
        if traj.diagnostics.get("x0_limit_reached") and len(tail) >= 2 and np.ptp(tail) < detect_tol:
            # a family switch needs a reflection off the ergosphere, i.e. a turning point in r;
            # the end-point label is useless when the limit circle lies on the ergosphere
            steps = np.diff(traj.r)
            scale = detect_tol * max(1.0, abs(float(tail[-1])))
            turned = steps.max(initial=0.0) > scale and steps.min(initial=0.0) < -scale
            y_end = (traj.r[-1], traj.theta[-1], traj.x0[-1], traj.xi_r[-1], traj.xi_theta[-1])
            if turned or (_nearest_family(metric, y_end) != fam and not _on_ergosphere(metric, y_end, detect_tol)):
                info["switched_family"] = True
                continue
            candidates.append(("radial-limit", d, 0, float(tail[-1]), float(traj.theta[-1]), 0.0))

    orbits = []
    for method, d, winding, ra, rb, xi_sign in candidates:
        guess = rb if method == "return-map" else ra
        if any(abs(o.radius - guess) < dedup_tol for o in orbits):
            continue
        if method == "return-map":
            r_star, defect = _refine_section(metric, ra, rb, section, fam, xi_sign, winding, d,
                                             50.0 * max_time, rtol, atol, tol)
            if any(abs(o.radius - r_star) < dedup_tol for o in orbits):
                continue
            r_end, period, traj = _one_return(metric, r_star, section, fam, xi_sign, winding, d,
                                              50.0 * max_time, rtol, atol)
            traj = _one_return(metric, r_star, section, fam, xi_sign, winding, d, 50.0 * max_time,
                               rtol, atol, max_step=traj.diagnostics["arc"] / n_samples)[2]
            mid = len(traj.r) // 2
            y_mid = (traj.r[mid], traj.theta[mid], traj.x0[mid], traj.xi_r[mid], traj.xi_theta[mid])
            if _nearest_family(metric, y_mid) != fam:
                log.info("discarding refined %s candidate at r~%.6g: curve left the family", fam, r_star)
                continue
            h = max(1e-6, 1e-4 * r_star)
            rp = _one_return(metric, r_star + h, section, fam, xi_sign, winding, d, 50.0 * max_time, rtol, atol)[0]
            rm = _one_return(metric, r_star - h, section, fam, xi_sign, winding, d, 50.0 * max_time, rtol, atol)[0]
            slope = (rp - rm) / (2 * h)
            x0 = np.abs(traj.x0 - traj.x0[0])
            r_s, th_s = traj.r, traj.theta
            radius = float(np.mean(r_s))
            closure = abs(r_end - r_star)
        else:
            r_star = ra
            th0 = rb
            th_s = np.linspace(0.0, 2 * np.pi, n_samples, endpoint=False) + th0
            r_s = np.full_like(th_s, r_star)
            x0 = np.zeros_like(th_s)
            period = float("nan")
            slope = float("nan")
            radius = r_star
            closure = 0.0
        kind, votes = _classify(metric, fam, np.asarray(r_s), np.asarray(th_s))
        orbits.append(ClosedOrbit(family=fam, x0=np.asarray(x0), r=np.asarray(r_s), theta=np.asarray(th_s),
                                  period=float(period), kind=kind, radius=radius, closure_defect=float(closure),
                                  return_derivative=float(slope), votes=votes, method=method,
                                  diagnostics={"detection_direction": d, "winding": winding,
                                               "section_radius": float(r_star)}))
        log.info("closed %s orbit at r~%.12g (%s, %s)", fam, radius, kind, method)
    diag = {"ergosphere_min": float(np.min(erg.r)), "r_inner": r_inner, "max_time": max_time,
            "n_candidates": len(candidates)}
    if not orbits:
        diag["note"] = "no orbit detected within max_time; this does not show that none exists"
    return OrbitSearch(orbits=orbits, family=fam, dedup_tol=dedup_tol, seeds=reports, diagnostics=diag)


@dataclass
class HorizonPair:
    """Innermost and outermost closed orbits of one kind.

    ``nested`` is true when the outer curve lies on or outside the inner one
    at every sampled angle.  ``same`` means the two coincide within ``tol``.
    """

    kind: str
    inner: ClosedOrbit | None
    outer: ClosedOrbit | None
    nested: bool
    same: bool
    tol: float


def _radius_on(orbit, theta):
    th = np.mod(orbit.theta, 2 * np.pi)
    order = np.argsort(th)
    return np.interp(np.mod(theta, 2 * np.pi), th[order], orbit.r[order], period=2 * np.pi)


def extremal_horizons(searches, kind=None, metric: PolarMetric2D | None = None, tol: float = 1e-6) -> HorizonPair:
    """Pick the innermost and outermost orbits of ``kind`` over several searches.

    ``kind`` defaults to black when ``b1 < 0`` and white otherwise (``metric``
    is then required).  Every candidate curve is compared on a common angle grid.
    """
    if kind is None:
        if metric is None:
            raise ValueError("pass kind or metric")
        kind = BLACK_HORIZON if float(np.asarray(metric.b1(0.0))) < 0 else WHITE_HORIZON
    orbits = [o for srch in searches for o in srch if o.kind == kind]
    if not orbits:
        return HorizonPair(kind=kind, inner=None, outer=None, nested=True, same=True, tol=tol)
    grid = np.linspace(0.0, 2 * np.pi, 128, endpoint=False)
    curves = [_radius_on(o, grid) for o in orbits]
    inner = int(np.argmin([c.mean() for c in curves]))
    outer = int(np.argmax([c.mean() for c in curves]))
    gap = curves[outer] - curves[inner]
    return HorizonPair(kind=kind, inner=orbits[inner], outer=orbits[outer],
                       nested=bool(np.all(gap >= -tol)), same=bool(np.all(np.abs(gap) < tol)), tol=tol)


# origin capture -----------------------------------------------------------

@dataclass
class CaptureReport:
    """Outcome of :func:`origin_capture_census`.

    ``violators`` holds ``(family, theta0, trajectory_or_error)`` for every
    start that did not reach ``r_floor`` in the expected direction.
    """

    eps: float
    direction: str
    n_runs: int
    n_hit: int
    violators: list
    dominance: float
    out_of_hypothesis: bool
    elapsed_max_x0: float

    @property
    def passed(self):
        return not self.violators


def _remainder_bound(metric, eps, thetas):
    a, b, c = (np.abs(np.asarray(v, dtype=float)) * np.ones_like(thetas)
               for v in metric.regular_part(eps, thetas))
    return float(np.max(a + 2 * b + c))


def origin_capture_census(metric: PolarMetric2D, eps: float | None = None, n_samples: int = 50,
                          seed: int = 0, *, r_floor: float = R_FLOOR, dominance_min: float = 10.0,
                          max_arc: float = 200.0, threads: int | None = None) -> CaptureReport:
    """Check that characteristics started on ``r = eps`` fall into the origin.

    Each of ``n_samples`` seeded angles is launched in both families, forward
    in ``x0`` when ``b1 < 0`` and backward when ``b1 > 0``.  ``dominance`` is
    ``min |b1| / eps`` divided by the size of the regular part at ``eps``;
    below ``dominance_min`` the report is flagged as out of hypothesis.  The
    default ``eps`` starts at half the ergosphere radius and shrinks by 0.8
    until the dominance reaches ``dominance_min``.
    """
    thetas = np.linspace(0.0, 2 * np.pi, 64, endpoint=False)
    problems = metric.check_hypotheses(thetas)
    b1 = np.asarray(metric.b1(thetas), dtype=float) * np.ones_like(thetas)
    if np.any(b1 == 0.0) or (np.any(b1 > 0) and np.any(b1 < 0)):
        raise MetricError("b1 must keep one sign")
    b1_min = float(np.min(np.abs(b1)))
    erg = locate_ergosphere(metric, thetas)
    r_e = float(np.min(erg.r))
    if eps is None:
        eps = 0.5 * r_e
        for _ in range(60):
            if b1_min / eps >= dominance_min * max(_remainder_bound(metric, eps, thetas), 1e-300):
                break
            eps *= 0.8
    dominance = b1_min / eps / max(_remainder_bound(metric, eps, thetas), 1e-300)
    flagged = bool(dominance < dominance_min or eps >= r_e or problems)
    direction = "forward" if b1[0] < 0 else "backward"
    rng = np.random.default_rng(seed)
    starts = rng.uniform(0.0, 2 * np.pi, n_samples)
    jobs = [(fam, float(th)) for th in starts for fam in ("plus", "minus")]

    def one(job):
        fam, th = job
        try:
            st = null_initial_state(metric, eps, th, fam, xi_theta=1.0)
            return integrate_polar2d(metric, st, direction, max_arc=max_arc, r_floor=r_floor, family=fam)
        except (IntegrationError, MetricError) as exc:
            return exc

    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(one, jobs))
    violators = []
    reach = 0.0
    n_hit = 0
    for (fam, th), res in zip(jobs, results):
        if isinstance(res, Trajectory) and res.fate == HIT_ORIGIN:
            n_hit += 1
            reach = max(reach, abs(res.fate_x0 - res.x0[0]))
        else:
            violators.append((fam, th, res))
    return CaptureReport(eps=float(eps), direction=direction, n_runs=len(jobs), n_hit=n_hit,
                         violators=violators, dominance=float(dominance), out_of_hypothesis=flagged,
                         elapsed_max_x0=reach)


__all__ = ["Ergosphere", "ClosedOrbit", "OrbitSearch", "HorizonPair", "extremal_horizons", "CaptureReport", "PartialErgosphereError",
           "OrbitClassificationError", "BLACK_HORIZON", "WHITE_HORIZON", "PolarState",
           "locate_ergosphere", "find_closed_orbits", "origin_capture_census"]
