"""Event horizons of radial metrics as separatrices of the characteristic families.

Black horizons separate plus-family curves by their fate as ``x0 -> +inf``;
white horizons separate minus-family curves by their fate as ``x0 -> -inf``.
A separatrix repels in the fate direction and attracts in the other one, so
it is located by bisection at the far end of the window (in the fate
direction) and then traced back across the window, where errors decay.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .geodesics import (ALIVE, ESCAPED, HIT_ORIGIN, R_FLOOR, StepCollapseError, _run_kernel,
                        default_r_escape, fate_census)
from . import kernels
from .metric import MetricError, RadialMetric, acoustic_to_radial
from .profiles import TimeProfile

OUTER_BLACK = "outer-black"
INNER_BLACK = "inner-black"
OUTER_WHITE = "outer-white"
INNER_WHITE = "inner-white"
DYNAMIC = "dynamic"

# kind -> (family sign, fate direction, predicate fate, boundary side)
_KINDS = {
    OUTER_BLACK: (1.0, "forward", ESCAPED),
    INNER_BLACK: (1.0, "forward", HIT_ORIGIN),
    OUTER_WHITE: (-1.0, "backward", ESCAPED),
    INNER_WHITE: (-1.0, "backward", HIT_ORIGIN),
}


class HorizonError(RuntimeError):
    pass


class NoHorizonError(HorizonError):
    """The fate census on the anchor time is not bimodal."""


class WindowTooShortError(HorizonError):
    pass


class ContractionError(HorizonError):
    """The integral map for the bounded branch could not be shown to contract."""

    def __init__(self, message, constants=None):
        super().__init__(message)
        self.constants = constants or {}


class PreconditionError(HorizonError):
    pass


@dataclass(frozen=True)
class HorizonCurve:
    """Sampled horizon ``r = R(x0)``, ascending in ``x0``.

    ``limit_minus_inf`` and ``limit_plus_inf`` are the asymptotic radii when
    they follow from the profile limits; ``None`` otherwise.
    """

    kind: str
    x0: np.ndarray
    r: np.ndarray
    limit_minus_inf: float | None = None
    limit_plus_inf: float | None = None
    method: str = "shooting"
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __call__(self, x0):
        if len(self.x0) < 4:
            return np.interp(x0, self.x0, self.r)
        return CubicSpline(self.x0, self.r)(x0)

    def rows(self):
        for x, r in zip(self.x0, self.r):
            yield (x, r, self.kind, self.method)

    def sup_distance(self, other: "HorizonCurve", lo=-np.inf, hi=np.inf):
        """Max ``|R - R_other|`` over this curve's samples in ``[lo, hi]`` that the other covers."""
        m = (self.x0 >= max(lo, other.x0[0])) & (self.x0 <= min(hi, other.x0[-1]))
        if not np.any(m):
            raise HorizonError("curves share no samples")
        return float(np.max(np.abs(self.r[m] - other(self.x0[m]))))


def _as_metric(obj) -> RadialMetric:
    if isinstance(obj, RadialMetric):
        return obj
    if isinstance(obj, TimeProfile):
        return acoustic_to_radial(obj)
    raise TypeError("expected a RadialMetric or a TimeProfile")


def _profile_limits(metric: RadialMetric, sign: float):
    """Asymptotic horizon radii ``|A(+-inf)|`` for acoustic sinks (black) or sources (white)."""
    if metric.provenance != "acoustic" or metric.profile is None:
        return None, None
    out = []
    for side in (-1, 1):
        a = metric.profile.limit(side)
        ok = a < 0 if sign > 0 else a > 0
        out.append(abs(a) if ok else None)
    return tuple(out)


@dataclass
class _Prober:
    metric: RadialMetric
    sign: float
    direction: str
    anchor: float
    r_floor: float
    r_escape: float
    fate_span: float
    rtol: float
    atol: float
    backend: str | None
    calls: int = 0

    def fate(self, r0):
        span = self.fate_span
        step = 1.0 if self.direction == "forward" else -1.0
        for _ in range(3):
            self.calls += 1
            status, xe, re, *_ = _run_kernel(self.metric, self.sign, r0, self.anchor, self.anchor + step * span,
                                             self.r_floor, self.r_escape, 0.25, self.rtol, self.atol,
                                             4_000_000, False, self.backend)
            if status in (kernels.STEP_COLLAPSE, kernels.MAX_STEPS):
                raise StepCollapseError(f"probe failed at x0={xe:.17g}, r={re:.17g}", x0=xe, r=re)
            if status == kernels.HIT_ORIGIN:
                return HIT_ORIGIN
            if status == kernels.ESCAPED:
                return ESCAPED
            span *= 4.0
        return ALIVE


def _bisect(prober: _Prober, target: str, lo: float, hi: float, tol: float):
    """Shrink ``[lo, hi]`` around the boundary of ``{r : fate(r) == target}``.

    For ``ESCAPED`` the set lies above the boundary, for ``HIT_ORIGIN`` below.
    """
    above = target == ESCAPED

    def inside(r):
        return prober.fate(r) == target

    if inside(lo) == above or inside(hi) != above:
        raise NoHorizonError(f"fates at r={lo:g} and r={hi:g} do not bracket a {target} boundary")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if inside(mid) == above:
            hi = mid
        else:
            lo = mid
    return lo, hi


def _trace(metric, sign, r_start, x_start, xs, r_floor, rtol, atol, backend):
    """Follow one characteristic from ``(x_start, r_start)`` through the ordered times ``xs``.

    Returns radii (NaN after an origin hit) and the hit time if any.
    """
    out = np.full(len(xs), np.nan)
    x, r = x_start, r_start
    for k, xt in enumerate(xs):
        if xt != x:
            status, xe, re, *_ = _run_kernel(metric, sign, r, x, xt, r_floor, math.inf, 0.25,
                                             rtol, atol, 4_000_000, False, backend)
            if status == kernels.HIT_ORIGIN:
                return out, xe
            if status != kernels.WINDOW_END:
                raise StepCollapseError(f"tracing failed at x0={xe:.17g}, r={re:.17g}", x0=xe, r=re)
            x, r = xt, re
        out[k] = r
    return out, None


def _shoot(metric, kind, x0_anchor, window, tol, samples, r_floor, r_escape, fate_span,
           probe_rtol, probe_atol, trace_rtol, trace_atol, threads, backend):
    if kind not in _KINDS:
        raise ValueError(f"unknown horizon kind {kind!r}")
    sign, direction, target = _KINDS[kind]
    x_lo, x_hi = float(window[0]), float(window[1])
    if r_escape is None:
        r_escape = default_r_escape(metric, window)
    if fate_span is None:
        fate_span = max(100.0, 20.0 * r_escape)
    end_anchor = x_hi if direction == "forward" else x_lo
    xs = np.linspace(x_lo, x_hi, samples) if np.isscalar(samples) else np.sort(np.asarray(samples, float))

    def locate(anchor):
        prober = _Prober(metric, sign, direction, anchor, r_floor, r_escape, fate_span,
                         probe_rtol, probe_atol, backend)
        grid = np.geomspace(10.0 * r_floor, 0.99 * r_escape, 48)
        census = fate_census(metric, "plus" if sign > 0 else "minus", grid, anchor,
                             (anchor - fate_span, anchor + fate_span), direction,
                             threads=threads, r_floor=r_floor, r_escape=r_escape,
                             rtol=probe_rtol, atol=probe_atol, backend=backend)
        if not census.monotone:
            raise HorizonError(f"non-monotone fate census at x0={anchor}: tighten the probe tolerance")
        br = census.escape_bracket() if target == ESCAPED else census.bracket(HIT_ORIGIN)
        if br is None:
            raise NoHorizonError(f"no {kind} horizon: the census at x0={anchor} has no {target} boundary")
        lo, hi = _bisect(prober, target, br[0], br[1], tol)
        return lo, hi, prober.calls + len(grid)

    lo, hi, calls = locate(end_anchor)
    r_anchor = 0.5 * (lo + hi)
    # separatrix check just outside the final bracket
    eps = 10.0 * max(tol, hi - lo)
    prober = _Prober(metric, sign, direction, end_anchor, r_floor, r_escape, fate_span,
                     probe_rtol, probe_atol, backend)
    f_up, f_dn = prober.fate(r_anchor + eps), prober.fate(max(r_anchor - eps, 2 * r_floor))
    ok = (f_up == ESCAPED and f_dn != ESCAPED) if target == ESCAPED else (f_dn == HIT_ORIGIN and f_up != HIT_ORIGIN)
    if not ok:
        raise WindowTooShortError(f"fates around the bracket did not resolve ({f_dn}, {f_up}); "
                                  "lengthen fate_span")

    order = xs[::-1] if direction == "forward" else xs
    vals, hit = _trace(metric, sign, r_anchor, end_anchor, order, r_floor, trace_rtol, trace_atol, backend)
    if direction == "forward":
        vals = vals[::-1]
    keep = np.isfinite(vals)
    lim = _profile_limits(metric, sign)
    diag = {"anchor": end_anchor, "bracket": [lo, hi], "bracket_width": hi - lo, "probes": calls,
            "fate_span": fate_span, "r_escape": r_escape, "tol": tol,
            "separatrix_fates": [f_dn, f_up], "origin_time": hit}
    return HorizonCurve(kind=kind, x0=xs[keep], r=vals[keep], limit_minus_inf=lim[0],
                        limit_plus_inf=lim[1], method="shooting", diagnostics=diag), (lo, hi), locate


def separatrix_shoot(metric, kind: str = OUTER_BLACK, x0_anchor: float | None = None,
                     window=(-10.0, 10.0), tol: float = 1e-10, *, samples=401,
                     r_floor: float = R_FLOOR, r_escape: float | None = None,
                     fate_span: float | None = None, probe_rtol: float = 1e-11,
                     probe_atol: float = 1e-12, trace_rtol: float = 1e-12, trace_atol: float = 1e-13,
                     threads: int | None = None, backend: str | None = None) -> HorizonCurve:
    """Horizon of the given kind by bisection on characteristic fates.

    The bracket is found at the window end in the fate direction (right end
    for black kinds, left end for white kinds) and its midpoint is traced
    across the window.  If ``x0_anchor`` is given inside the window, the
    bisection is repeated there as well and the distance to the traced curve
    is reported as ``diagnostics["anchor_defect"]``.

    Raises
    ------
    NoHorizonError
        If no start radius at the anchor has the separating fate pattern.
    WindowTooShortError
        If trajectories just above and below the bracket do not separate.
    """
    metric = _as_metric(metric)
    curve, _, locate = _shoot(metric, kind, x0_anchor, window, tol, samples, r_floor, r_escape,
                              fate_span, probe_rtol, probe_atol, trace_rtol, trace_atol, threads, backend)
    if x0_anchor is not None and x0_anchor != curve.diagnostics["anchor"]:
        lo, hi, _ = locate(float(x0_anchor))
        r_a = 0.5 * (lo + hi)
        curve.diagnostics["user_anchor"] = float(x0_anchor)
        curve.diagnostics["user_anchor_radius"] = r_a
        curve.diagnostics["anchor_defect"] = float(abs(r_a - curve(x0_anchor)))
    return curve


def inner_separatrix(metric, kind: str = INNER_BLACK, x0_anchor=None, window=(-10.0, 10.0),
                     tol: float = 1e-10, **kw) -> HorizonCurve:
    """Boundary of the set of curves that reach the origin (inner horizon)."""
    if kind not in (INNER_BLACK, INNER_WHITE):
        raise ValueError("inner_separatrix computes inner-black or inner-white horizons")
    return separatrix_shoot(metric, kind, x0_anchor, window, tol, **kw)


def ode_defect(metric: RadialMetric, curve: HorizonCurve, rtol=1e-12, atol=1e-13, backend=None):
    """Max mismatch between consecutive samples and one integration step of the family ODE."""
    sign = 1.0 if curve.kind in (OUTER_BLACK, INNER_BLACK) else -1.0
    worst = 0.0
    for k in range(len(curve.x0) - 1):
        status, _, re, *_ = _run_kernel(metric, sign, float(curve.r[k]), float(curve.x0[k]),
                                        float(curve.x0[k + 1]), R_FLOOR * 1e-3, math.inf, 0.25,
                                        rtol, atol, 4_000_000, False, backend)
        worst = max(worst, abs(re - curve.r[k + 1]))
    return worst


# ---------------------------------------------------------------------------
# bounded branch by fixed-point iteration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PicardState:
    """Converged correction ``v`` on ``[T, x_trunc]`` with the bounded branch ``|A| + v``."""

    x: np.ndarray
    v: np.ndarray
    T: float
    iteration: int
    residual: float
    lipschitz: float
    constants: dict


def _graded_grid(T, uniform_span, h0, growth, total_span):
    """Nodes in equal-width pairs: uniform up to ``T + uniform_span``, then geometric."""
    n_pairs = int(math.ceil(uniform_span / (2 * h0)))
    nodes = [T + h0 * np.arange(2 * n_pairs + 1)]
    x = nodes[0][-1]
    h = h0
    tail = []
    while x - T < total_span:
        h *= growth
        tail.extend((x + h, x + 2 * h))
        x += 2 * h
    return np.concatenate(nodes + [np.array(tail)])


def _simpson3(x0, x1, x2, f0, f1, f2):
    """Integral over ``[x0, x2]`` of the quadratic through three (possibly uneven) nodes."""
    h0 = x1 - x0
    h1 = x2 - x1
    s = h0 + h1
    return s / 6.0 * ((2.0 - h1 / h0) * f0 + s * s / (h0 * h1) * f1 + (2.0 - h0 / h1) * f2)


def _quad_first_half(x0, x1, x2, f0, f1, f2):
    """Integral over ``[x0, x1]`` of the quadratic through three nodes."""
    h0 = x1 - x0
    h1 = x2 - x1
    H = h0 + h1
    w0 = h0 / 2.0 - h0 * h0 / (6.0 * H)
    w1 = (H * h0 / 2.0 - h0 * h0 / 3.0) / h1
    w2 = -h0**3 / (6.0 * H * h1)
    return w0 * f0 + w1 * f1 + w2 * f2


def _cumulative(x, f):
    """Cumulative integral from ``x[0]`` at every node (pairs share a parabola)."""
    a, b, c = slice(0, -2, 2), slice(1, -1, 2), slice(2, None, 2)
    whole = _simpson3(x[a], x[b], x[c], f[a], f[b], f[c])
    half = _quad_first_half(x[a], x[b], x[c], f[a], f[b], f[c])
    out = np.zeros(len(x))
    out[2::2] = np.cumsum(whole)
    out[1::2] = out[0:-2:2] + half
    return out


def _apply_map(x, absA, dA, v):
    """``F(v)(x) = -int_x^X A'(t) exp(-int_x^t dy / (|A| + v)) dt`` on every node.

    The outer integral is accumulated backwards two nodes at a time,
    ``G_i = int_{x_i}^{x_{i+2}} ... + exp(-(B_{i+2} - B_i)) G_{i+2}``, so only
    differences of the inner integral ``B`` are ever exponentiated.
    """
    denom = absA + v
    if np.any(denom <= 0.0):
        raise ContractionError("|A| + v lost positivity during the iteration")
    B = _cumulative(x, 1.0 / denom)
    n = len(x)
    # three-node segments [x_i, x_{i+2}] for every i, weighted relative to B_i
    i0, i1, i2 = np.arange(n - 2), np.arange(1, n - 1), np.arange(2, n)
    e1 = np.exp(-(B[i1] - B[i0]))
    e2 = np.exp(-(B[i2] - B[i0]))
    seg = _simpson3(x[i0], x[i1], x[i2], dA[i0], dA[i1] * e1, dA[i2] * e2)
    G = np.zeros(n)
    # the node before last closes its chain with the partial integral of the final cell
    j = n - 2
    fa = dA[j - 1] * math.exp(-(B[j - 1] - B[j]))
    fc = dA[j + 1] * math.exp(-(B[j + 1] - B[j]))
    G[j] = (_simpson3(x[j - 1], x[j], x[j + 1], fa, dA[j], fc)
            - _quad_first_half(x[j - 1], x[j], x[j + 1], fa, dA[j], fc))
    segl = seg.tolist()
    e2l = e2.tolist()
    Gl = G.tolist()
    for i in range(n - 3, -1, -1):
        Gl[i] = segl[i] + e2l[i] * Gl[i + 2]
    G = np.array(Gl)
    return -G


def _tail_constants(x, dA):
    a = np.abs(dA)
    return {"int_abs_dA": float(_cumulative(x, a)[-1]),
            "int_t_abs_dA": float(_cumulative(x, a * np.abs(x))[-1])}


def picard_bounded_solution(profile, T_init: float = 0.0, max_iter: int = 200, tol: float = 1e-13, *,
                            window=None, samples=401, h0: float = 0.005, uniform_span: float = 60.0,
                            search_span: float = 1e9, cutoff: float = 1e-14, T_step: float = 5.0,
                            max_enlarge: int = 12, lipschitz_max: float = 0.9,
                            trace_rtol: float = 1e-12, trace_atol: float = 1e-13, backend=None):
    """Bounded plus-family branch ``|A| + v`` of an acoustic sink by fixed-point iteration.

    ``v`` solves ``v = F(v)`` on ``[T, x_trunc]`` where the tail is cut at the
    first node beyond which ``|A'(t)| * max(1, |t|) < cutoff``.  The
    iteration starts from ``v = 0``; ``T`` is moved right by ``T_step`` until
    the measured Lipschitz ratio of ``F`` on probe perturbations is below
    ``lipschitz_max``.  Left of ``T`` the branch is continued by backward
    integration of the characteristic ODE, which is stable in that direction.

    Parameters
    ----------
    profile : TimeProfile, RadialMetric or object with ``__call__`` and ``derivative``
        ``A(x0)`` with ``A <= A0 < 0``.

    Returns
    -------
    state : PicardState
    curve : HorizonCurve
        Samples on ``window`` (defaults to ``[T - 50, T + 50]``).

    Raises
    ------
    ContractionError
        No cutoff point within ``search_span``, no contraction after
        ``max_enlarge`` shifts of ``T``, or the iterate leaving the ball
        ``||v|| < |A0| / 2``.
    """
    metric = None
    if isinstance(profile, RadialMetric):
        metric = profile
        if metric.profile is None:
            raise PreconditionError("fixed-point construction needs an acoustic metric")
        profile = metric.profile
    T = float(T_init)
    constants = {}
    for attempt in range(max_enlarge + 1):
        x = _graded_grid(T, uniform_span, h0, 1.01, search_span)
        A = np.asarray(profile(x), dtype=float)
        dA = np.asarray(profile.derivative(x), dtype=float)
        if np.any(A >= 0.0):
            raise PreconditionError("A must stay negative on the iteration interval")
        big = np.nonzero(np.abs(dA) * np.maximum(1.0, np.abs(x)) >= cutoff)[0]
        constants = _tail_constants(x, dA)
        constants["T"] = T
        if len(big) and big[-1] >= len(x) - 3:
            raise ContractionError(
                f"|A'(t)| t stays above {cutoff:g} up to t={x[-1]:.3g}; the tail integrals "
                f"measured so far are {constants['int_abs_dA']:.4g} and {constants['int_t_abs_dA']:.4g}",
                constants)
        stop = (big[-1] + 2) if len(big) else 2
        stop += stop % 2
        x, A, dA = x[:stop + 1], A[:stop + 1], dA[:stop + 1]
        absA = -A
        A0 = float(absA.min())
        ball = 0.5 * A0
        v = np.zeros_like(x)
        res = math.inf
        it = 0
        ratios = []
        prev_step = None
        for it in range(1, max_iter + 1):
            v_new = _apply_map(x, absA, dA, v)
            step = float(np.max(np.abs(v_new - v)))
            if prev_step and prev_step > 0 and step > 0:
                ratios.append(step / prev_step)
            prev_step = step
            v = v_new
            if float(np.max(np.abs(v))) >= ball:
                raise ContractionError(f"iterate left the ball ||v|| < {ball:g} at T={T:g}", constants)
            res = step
            if step <= tol:
                break
        # Lipschitz estimate on probe perturbations around the fixed point
        delta = 1e-3 * ball
        span = max(x[-1] - T, 1.0)
        probes = (np.ones_like(x), np.cos((x - T) / 3.0), np.exp(-(x - T) / span))
        base = _apply_map(x, absA, dA, v)
        lip = max(float(np.max(np.abs(_apply_map(x, absA, dA, v + delta * p) - base))) / delta
                  for p in probes)
        constants["lipschitz_probe"] = lip
        constants["lipschitz_iter"] = max(ratios) if ratios else 0.0
        if lip < lipschitz_max and res <= max(tol, 1e3 * np.finfo(float).eps * ball):
            break
        T += T_step
    else:
        raise ContractionError(f"no contraction after moving T to {T:g}", constants)

    state = PicardState(x=x, v=v, T=T, iteration=it, residual=res, lipschitz=lip, constants=constants)
    if metric is None:
        metric = acoustic_to_radial(profile) if isinstance(profile, TimeProfile) else None
    if window is None:
        window = (T - 50.0, T + 50.0)
    xs = np.linspace(window[0], window[1], samples) if np.isscalar(samples) else np.sort(np.asarray(samples, float))
    rs = np.full(len(xs), np.nan)
    right = xs >= T
    inside = right & (xs <= x[-1])
    if np.any(inside):
        rs[inside] = CubicSpline(x, absA + v)(xs[inside])
    beyond = xs > x[-1]
    rs[beyond] = -np.asarray(profile(xs[beyond]), dtype=float)
    hit = None
    left = ~right
    if np.any(left):
        if metric is None:
            raise PreconditionError("backward continuation needs a TimeProfile or acoustic metric")
        order = xs[left][::-1]
        vals, hit = _trace(metric, 1.0, float(absA[0] + v[0]), T, order, R_FLOOR, trace_rtol, trace_atol, backend)
        rs[np.nonzero(left)[0][::-1]] = vals
    keep = np.isfinite(rs)
    lim = (abs(profile.limit(-1)), abs(profile.limit(1))) if isinstance(profile, TimeProfile) else (None, None)
    curve = HorizonCurve(kind=OUTER_BLACK, x0=xs[keep], r=rs[keep], limit_minus_inf=lim[0],
                         limit_plus_inf=lim[1], method="picard",
                         diagnostics={"T": T, "iterations": it, "residual": res, "lipschitz": lip,
                                      "x_trunc": float(x[-1]), "origin_time": hit, **constants})
    return state, curve


# ---------------------------------------------------------------------------
# appearance, disappearance, dynamic horizon
# ---------------------------------------------------------------------------

def _sign_changes(profile, window, n=4001):
    xs = np.linspace(window[0], window[1], n)
    a = np.asarray(profile(xs))
    s = np.sign(a)
    s[s == 0] = 1
    return int(np.count_nonzero(s[1:] != s[:-1]))


@dataclass(frozen=True)
class OriginTime:
    """Time where a horizon branch meets the origin, with the branch itself."""

    x0: float
    curve: HorizonCurve
    multiple_crossings: bool
    crossings: int


def _polished_origin_time(metric, sign, x_hit, r_floor):
    # near the origin w = r^2/2 moves at rate r*c ~ b1, so extrapolate w to zero
    rate = float(metric.b1(x_hit)) + sign * r_floor
    if rate == 0.0:
        return x_hit
    return x_hit - 0.5 * r_floor * r_floor / rate


def appearance_time(metric, window=(-40.0, 40.0), tol: float = 1e-10, *, samples=801,
                    r_floor: float = R_FLOOR, trace_rtol=1e-12, trace_atol=1e-13, **kw) -> OriginTime:
    """Birth time of a black hole whose sink switches on: ``A >= 0`` before, ``A < 0`` after.

    The bounded plus branch is shot at the right end of the window and traced
    backwards until it reaches the origin; that time is returned.

    Raises
    ------
    PreconditionError
        If ``A`` is not non-negative at the left end and negative at the right end.
    WindowTooShortError
        If the traced branch never reaches the origin inside the window.
    """
    metric = _as_metric(metric)
    a_lo, a_hi = float(metric.b1(window[0])), float(metric.b1(window[1]))
    if not (a_lo >= 0.0 and a_hi < 0.0):
        raise PreconditionError("appearance needs A >= 0 at the window start and A < 0 at its end")
    crossings = _sign_changes(metric.b1, window)
    curve = separatrix_shoot(metric, OUTER_BLACK, None, window, tol, samples=samples, r_floor=r_floor,
                             trace_rtol=trace_rtol, trace_atol=trace_atol, **kw)
    hit = curve.diagnostics["origin_time"]
    if hit is None:
        raise WindowTooShortError("the bounded branch does not reach the origin inside the window")
    return OriginTime(x0=_polished_origin_time(metric, 1.0, hit, r_floor), curve=curve,
                      multiple_crossings=crossings > 1, crossings=crossings)


def disappearance_time(metric, window=(-40.0, 40.0), tol: float = 1e-10, *, samples=801,
                       r_floor: float = R_FLOOR, trace_rtol=1e-12, trace_atol=1e-13, **kw) -> OriginTime:
    """End time of a white hole whose source switches off: ``A > 0`` before, ``A <= 0`` after."""
    metric = _as_metric(metric)
    a_lo, a_hi = float(metric.b1(window[0])), float(metric.b1(window[1]))
    if not (a_lo > 0.0 and a_hi <= 0.0):
        raise PreconditionError("disappearance needs A > 0 at the window start and A <= 0 at its end")
    crossings = _sign_changes(metric.b1, window)
    curve = separatrix_shoot(metric, OUTER_WHITE, None, window, tol, samples=samples, r_floor=r_floor,
                             trace_rtol=trace_rtol, trace_atol=trace_atol, **kw)
    hit = curve.diagnostics["origin_time"]
    if hit is None:
        raise WindowTooShortError("the white branch does not reach the origin inside the window")
    return OriginTime(x0=_polished_origin_time(metric, -1.0, hit, r_floor), curve=curve,
                      multiple_crossings=crossings > 1, crossings=crossings)


def dynamic_horizon(metric, window=(-10.0, 10.0), samples=401) -> HorizonCurve:
    """Union of the frozen-time apparent horizons, ``r = |A(x0)|``."""
    metric = _as_metric(metric)
    if metric.provenance != "acoustic":
        raise PreconditionError("the dynamic horizon formula is specific to acoustic flows")
    xs = np.linspace(window[0], window[1], samples) if np.isscalar(samples) else np.sort(np.asarray(samples, float))
    a = np.asarray(metric.profile(xs), dtype=float)
    if np.any(a >= 0.0):
        raise PreconditionError("the dynamic horizon needs A < 0 throughout the window")
    return HorizonCurve(kind=DYNAMIC, x0=xs, r=np.abs(a), limit_minus_inf=abs(metric.profile.limit(-1)),
                        limit_plus_inf=abs(metric.profile.limit(1)), method="formula")


@dataclass(frozen=True)
class Containment:
    """Which of the event and dynamic horizons encloses the other."""

    verdict: str
    expected: str
    max_excess: float
    min_excess: float
    n_samples: int

    @property
    def consistent(self):
        return self.verdict == self.expected or self.verdict == "coincident"


def containment(event: HorizonCurve, dynamic: HorizonCurve, metric=None, tol: float = 1e-8) -> Containment:
    """Compare ``R(x0) - |A(x0)|`` on the dynamic curve's samples.

    ``verdict`` is ``"event-inside"`` when ``R <= |A| + tol`` everywhere,
    ``"dynamic-inside"`` when ``R >= |A| - tol`` everywhere, ``"coincident"``
    when both hold and ``"crossing"`` otherwise.  ``expected`` follows from
    the monotonicity of ``|A|``: decreasing means the event horizon lies
    inside, increasing means the dynamic horizon does.
    """
    xs = dynamic.x0[(dynamic.x0 >= event.x0[0]) & (dynamic.x0 <= event.x0[-1])]
    d = event(xs) - dynamic(xs)
    inside = bool(np.all(d <= tol))
    outside = bool(np.all(d >= -tol))
    verdict = "coincident" if inside and outside else "event-inside" if inside else \
        "dynamic-inside" if outside else "crossing"
    slope = np.diff(dynamic(xs))
    if np.all(slope <= 0):
        expected = "event-inside"
    elif np.all(slope >= 0):
        expected = "dynamic-inside"
    else:
        expected = "unknown"
    if np.all(slope == 0):
        expected = "coincident"
    return Containment(verdict=verdict, expected=expected, max_excess=float(d.max()),
                       min_excess=float(d.min()), n_samples=len(xs))
