"""Metric families: acoustic flows, radial inverse metrics and 2D polar forms.

Every field is a vectorised callable.  Radial components take ``(x0, r)``;
stationary polar components take ``(r, theta)``.  All objects are immutable
after construction and safe to evaluate from several threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .profiles import TimeProfile


class MetricError(ValueError):
    """Raised when a metric or a query violates a structural precondition."""


class HyperbolicityError(MetricError):
    """Raised when the radial discriminant ``(g^{r0})^2 - g^{00} g^{rr}`` is not positive."""


# numpy names allowed inside user-supplied component expressions
_EXPR_NAMESPACE = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "tanh", "cosh", "sinh",
                 "arctan", "arctan2", "abs", "pi", "where", "minimum", "maximum")
}


def _compile(expr: str, args: tuple) -> Callable:
    # Scenario files are trusted input; builtins are removed only to keep
    # typos from resolving to something surprising.
    code = compile(expr, f"<expr {expr!r}>", "eval")
    ns = {"__builtins__": {}, **_EXPR_NAMESPACE}

    def fn(*vals):
        local = dict(zip(args, vals))
        out = eval(code, ns, local)
        shape = np.broadcast(*vals).shape
        if np.ndim(out) == 0 and shape:
            return np.full(shape, float(out))
        return out if shape else float(out)

    fn.expression = expr
    return fn


@dataclass(frozen=True)
class Window:
    """Rectangle ``[x0_min, x0_max] x [r_min, r_max]`` in the ``(x0, r)`` half-plane."""

    x0_min: float
    x0_max: float
    r_min: float
    r_max: float

    def __post_init__(self):
        if not (self.x0_max > self.x0_min and self.r_max > self.r_min):
            raise MetricError("window must have positive extent in both directions")


# ---------------------------------------------------------------------------
# acoustic flow
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AcousticFlow:
    """Radially symmetric flow ``v = (A/r) r_hat + (B/r) theta_hat``.

    Parameters
    ----------
    radial : TimeProfile
        ``A(x0)``; negative values are sinks.
    angular : float or callable, optional
        ``B`` as a constant or a function ``B(x0, r, theta)``.
    """

    radial: TimeProfile
    angular: float | Callable | None = None

    def angular_value(self, x0, r, theta):
        if self.angular is None:
            return 0.0
        if callable(self.angular):
            return self.angular(x0, r, theta)
        return float(self.angular)

    def velocity(self, x0, point):
        """Cartesian velocity at ``point`` (length 2 or 3; 3D only without swirl)."""
        p = np.asarray(point, dtype=float)
        r = float(np.linalg.norm(p))
        if r == 0.0:
            raise MetricError("the flow is singular at the origin")
        a = self.radial(x0)
        v = a / r * (p / r)
        if p.size == 2:
            theta = math.atan2(p[1], p[0])
            b = self.angular_value(x0, r, theta)
            v = v + b / r * np.array([-p[1], p[0]]) / r
        elif self.angular is not None:
            raise MetricError("swirl is only defined for planar flows")
        return v

    def inverse_metric(self, x0, point):
        """Full inverse metric ``g^{jk}`` in ``(x0, x1, ..., xn)`` coordinates."""
        v = self.velocity(x0, point)
        n = v.size
        g = np.empty((n + 1, n + 1))
        g[0, 0] = 1.0
        g[0, 1:] = v
        g[1:, 0] = v
        g[1:, 1:] = -np.eye(n) + np.outer(v, v)
        return g


# ---------------------------------------------------------------------------
# radial metric
# ---------------------------------------------------------------------------

def _fd_partials(fn, x0, r, h0=1e-4, hr=1e-4):
    """Fourth-order central differences in ``x0`` and ``r``."""
    x0 = np.asarray(x0, dtype=float)
    r = np.asarray(r, dtype=float)
    hr = hr * np.maximum(r, 1e-3)
    hr = np.minimum(hr, 0.25 * r)
    d0 = (-fn(x0 + 2 * h0, r) + 8 * fn(x0 + h0, r) - 8 * fn(x0 - h0, r) + fn(x0 - 2 * h0, r)) / (12 * h0)
    dr = (-fn(x0, r + 2 * hr) + 8 * fn(x0, r + hr) - 8 * fn(x0, r - hr) + fn(x0, r - 2 * hr)) / (12 * hr)
    return d0, dr


@dataclass(frozen=True)
class RadialMetric:
    """Radial inverse-metric triple ``(g^{00}, g^{r0}, g^{rr})`` of ``(x0, r)``.

    Near the origin the metric is expected to behave like
    ``g^{r0} = b1(x0)/r + O(r^2)`` and ``g^{rr} = b1^2/r^2 + g2rr`` with
    ``g2rr`` bounded away from zero from below.

    Attributes
    ----------
    g00, gr0, grr : callable
        Vectorised component functions of ``(x0, r)``.
    b1 : TimeProfile or callable
        Coefficient of the ``1/r`` singularity of ``g^{r0}``.
    provenance : {"acoustic", "custom"}
    profile : TimeProfile, optional
        ``A(x0)`` for acoustic metrics; enables closed forms and the compiled kernel.
    """

    g00: Callable
    gr0: Callable
    grr: Callable
    b1: Callable
    provenance: str = "custom"
    profile: TimeProfile | None = None
    label: str = field(default="", compare=False)

    def components(self, x0, r):
        return self.g00(x0, r), self.gr0(x0, r), self.grr(x0, r)

    def discriminant(self, x0, r):
        g00, gr0, grr = self.components(x0, r)
        return gr0 * gr0 - g00 * grr

    def b1_value(self, x0):
        return self.b1(x0)

    def g2rr(self, x0, r):
        """Regular part ``g^{rr} - b1^2/r^2`` of the radial component."""
        b = self.b1(x0)
        return self.grr(x0, r) - b * b / (np.asarray(r, dtype=float) ** 2)

    def partials(self, x0, r):
        """``(d/dx0, d/dr)`` of each component, as two tuples of three arrays."""
        if self.provenance == "acoustic" and self.profile is not None:
            a = self.profile(x0)
            da = self.profile.derivative(x0)
            r = np.asarray(r, dtype=float)
            zero = np.zeros(np.broadcast(np.asarray(x0), r).shape)
            d0 = (zero, da / r + zero, 2 * a * da / r**2 + zero)
            dr = (zero, -a / r**2 + zero, -2 * a * a / r**3 + zero)
            return d0, dr
        p00 = _fd_partials(self.g00, x0, r)
        pr0 = _fd_partials(self.gr0, x0, r)
        prr = _fd_partials(self.grr, x0, r)
        return (p00[0], pr0[0], prr[0]), (p00[1], pr0[1], prr[1])

    def sup_abs_b1(self, x0_min, x0_max):
        if isinstance(self.b1, TimeProfile):
            lo, hi = self.b1.bounds(x0_min, x0_max)
        else:
            vals = np.atleast_1d(self.b1(np.linspace(x0_min, x0_max, 2001)))
            lo, hi = float(vals.min()), float(vals.max())
        return max(abs(lo), abs(hi))

    @classmethod
    def from_expressions(cls, g00: str, gr0: str, grr: str, b1: str, label=""):
        """Build a custom metric from numpy expressions in ``x0`` and ``r``.

        ``b1`` is an expression in ``x0`` only.
        """
        return cls(
            g00=_compile(g00, ("x0", "r")),
            gr0=_compile(gr0, ("x0", "r")),
            grr=_compile(grr, ("x0", "r")),
            b1=_compile(b1, ("x0",)),
            provenance="custom",
            label=label,
        )


def acoustic_to_radial(flow: AcousticFlow | TimeProfile) -> RadialMetric:
    """Radial triple of an acoustic flow: ``(1, A/r, A^2/r^2 - 1)`` with ``b1 = A``.

    The swirl ``B`` does not enter the radial characteristic data.
    """
    profile = flow.radial if isinstance(flow, AcousticFlow) else flow

    def g00(x0, r):
        return np.ones(np.broadcast(np.asarray(x0), np.asarray(r)).shape) if np.ndim(r) or np.ndim(x0) else 1.0

    def gr0(x0, r):
        return profile(x0) / r

    def grr(x0, r):
        a = profile(x0)
        return a * a / (r * r) - 1.0

    return RadialMetric(g00=g00, gr0=gr0, grr=grr, b1=profile, provenance="acoustic",
                        profile=profile, label="acoustic")


def banded_radial_metric(b1: TimeProfile | float = -1.0, depth=0.15, center=3.0, width=0.7):
    """Non-acoustic radial metric whose plus family has three rest points.

    ``g^{00} = 1``, unit discriminant, and ``g^{r0} = b1/r + p(r)`` with the
    slow band ``p(r) = -depth * r^2 * exp(-((r - center)/width)^2)``.  For a
    sink ``b1 < 0`` the stationary plus family ``r c_+ = b1 + r + r p`` has an
    unstable root near ``|b1|``, an attracting one inside the band and an
    unstable one beyond it, so the hit set and the escape set of the plus
    family have different boundaries.
    """
    prof = b1 if isinstance(b1, TimeProfile) else TimeProfile.constant(float(b1))

    def band(r):
        return -depth * r * r * np.exp(-((r - center) / width) ** 2)

    def g00(x0, r):
        return np.ones(np.broadcast(np.asarray(x0), np.asarray(r)).shape) if np.ndim(r) or np.ndim(x0) else 1.0

    def gr0(x0, r):
        return prof(x0) / r + band(r)

    def grr(x0, r):
        g = gr0(x0, r)
        return g * g - 1.0

    return RadialMetric(g00=g00, gr0=gr0, grr=grr, b1=prof, provenance="custom",
                        label=f"banded(depth={depth}, center={center}, width={width})")


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    invariant: str
    x0: float
    r: float
    value: float
    margin: float

    def to_dict(self):
        return {"invariant": self.invariant, "x0": self.x0, "r": self.r,
                "value": self.value, "margin": self.margin}


@dataclass(frozen=True)
class ValidationReport:
    """Sampled invariant violations; an empty list means pass at this resolution.

    ``c0`` is the observed infimum of ``g^{00}``, the discriminant and
    ``-g2rr`` over the sampled points.
    """

    violations: tuple
    c0: float
    n_grid: int

    @property
    def passed(self):
        return not self.violations

    def by_invariant(self, name):
        return [v for v in self.violations if v.invariant == name]


def _growth_check(values_in, values_out, name, x0s, rs_out, out, slack=2.0):
    k_in = float(np.nanmax(values_in))
    idx = int(np.nanargmax(values_out))
    k_out = float(values_out.flat[idx])
    if not np.isfinite(k_out) or k_out > slack * k_in + 1e-12:
        i, j = np.unravel_index(idx, values_out.shape)
        out.append(Violation(name, float(x0s[i]), float(rs_out[j]), k_out, k_out - slack * k_in))


def validate(metric: RadialMetric, window: Window, n=200, r_far=50.0, r_near=1e-2) -> ValidationReport:
    """Check the radial-metric invariants on a sampled window.

    The ``n x n`` grid checks positivity of ``g^{00}`` and of the
    discriminant.  The decay of the far field (``O(1/r)`` deviation from
    ``(1, 0, -1)``) is tested as a ratio bound of ``r * |deviation|`` between
    ``[r_far, 2 r_far]`` and ``[5 r_far, 10 r_far]``; the near-origin
    structure is tested the same way on ``[r_near/10, r_near]``.  These two
    use fixed sampling, so refining ``n`` only adds grid points.

    Raises
    ------
    MetricError
        If the window touches ``r = 0``.
    """
    if window.r_min <= 0.0:
        raise MetricError("validation windows must stay away from r = 0; "
                          "the origin is covered by the near-origin checks")
    x0s = np.linspace(window.x0_min, window.x0_max, n)
    rs = np.linspace(window.r_min, window.r_max, n)
    X, R = np.meshgrid(x0s, rs, indexing="ij")
    g00, gr0, grr = (np.broadcast_to(c, X.shape) for c in metric.components(X, R))
    q = gr0 * gr0 - g00 * grr
    found = []
    for name, vals in (("g00-positive", g00), ("hyperbolicity", q)):
        bad = ~(vals > 0.0)
        for i, j in zip(*np.nonzero(bad)):
            found.append(Violation(name, float(X[i, j]), float(R[i, j]), float(vals[i, j]), float(vals[i, j])))
    c0 = min(float(np.nanmin(g00)), float(np.nanmin(q)))

    # far field
    xs_f = np.linspace(window.x0_min, window.x0_max, 9)
    r_in = np.geomspace(r_far, 2 * r_far, 12)
    r_out = np.geomspace(5 * r_far, 10 * r_far, 12)
    Xi, Ri = np.meshgrid(xs_f, r_in, indexing="ij")
    Xo, Ro = np.meshgrid(xs_f, r_out, indexing="ij")
    ci = metric.components(Xi, Ri)
    co = metric.components(Xo, Ro)
    for k, (name, ref) in enumerate((("far-field-g00", 1.0), ("far-field-gr0", 0.0), ("far-field-grr", -1.0))):
        _growth_check(Ri * np.abs(np.broadcast_to(ci[k], Ri.shape) - ref),
                      Ro * np.abs(np.broadcast_to(co[k], Ro.shape) - ref), name, xs_f, r_out, found)

    # near origin
    r_a = np.geomspace(r_near / 3.0, r_near, 8)
    r_b = np.geomspace(r_near / 10.0, r_near / 3.0, 8)
    Xa, Ra = np.meshgrid(xs_f, r_a, indexing="ij")
    Xb, Rb = np.meshgrid(xs_f, r_b, indexing="ij")
    ba = np.broadcast_to(metric.b1(Xa), Xa.shape)
    bb = np.broadcast_to(metric.b1(Xb), Xb.shape)
    ca = [np.broadcast_to(c, Xa.shape) for c in metric.components(Xa, Ra)]
    cb = [np.broadcast_to(c, Xb.shape) for c in metric.components(Xb, Rb)]
    _growth_check(np.abs(ca[1] - ba / Ra) / Ra**2, np.abs(cb[1] - bb / Rb) / Rb**2,
                  "near-origin-gr0", xs_f, r_b, found)
    _growth_check(np.abs(ca[0] - 1.0) / Ra**3, np.abs(cb[0] - 1.0) / Rb**3,
                  "near-origin-g00", xs_f, r_b, found)
    g2 = np.concatenate([(ca[2] - ba**2 / Ra**2).ravel(), (cb[2] - bb**2 / Rb**2).ravel()])
    rr = np.concatenate([Ra.ravel(), Rb.ravel()])
    xx = np.concatenate([Xa.ravel(), Xb.ravel()])
    for k in np.nonzero(~(g2 < 0.0))[0]:
        found.append(Violation("near-origin-g2rr", float(xx[k]), float(rr[k]), float(g2[k]), float(g2[k])))
    c0 = min(c0, float(np.nanmin(-g2)))
    return ValidationReport(violations=tuple(found), c0=c0, n_grid=n)


# ---------------------------------------------------------------------------
# stationary 2D polar metric
# ---------------------------------------------------------------------------

_FRAME_KEYS = ("g00", "gr0", "gt0", "grr", "grt", "gtt")


@dataclass(frozen=True)
class PolarMetric2D:
    """Stationary planar inverse metric in polar form.

    Components are given in the orthonormal frame ``(x0, r_hat, theta_hat)``,
    in which the singular part reads ``g^{rr} = b1^2/r^2 + ...``,
    ``g^{r theta} = b1 b2/r^2 + ...``, ``g^{theta theta} = b2^2/r^2 + ...``.
    :meth:`coordinate_components` converts to the ``(x0, r, theta)`` basis
    used by the Hamiltonian, where ``g^{theta theta}`` carries an extra ``1/r^2``.

    Parameters
    ----------
    frame : dict of callable
        Keys ``g00, gr0, gt0, grr, grt, gtt``; each a function of ``(r, theta)``.
    b1, b2 : callable
        Functions of ``theta``.
    """

    frame: dict
    b1: Callable
    b2: Callable
    provenance: str = "custom"
    A: float | None = None
    B: float | None = None

    def __post_init__(self):
        missing = set(_FRAME_KEYS) - set(self.frame)
        if missing:
            raise MetricError(f"polar metric missing components {sorted(missing)}")

    @property
    def is_acoustic(self):
        return self.provenance == "acoustic"

    @property
    def rotationally_symmetric(self):
        return self.is_acoustic

    def frame_components(self, r, theta):
        return tuple(self.frame[k](r, theta) for k in _FRAME_KEYS)

    def coordinate_components(self, r, theta):
        """``(g00, gr0, gt0, grr, grt, gtt)`` in the ``(x0, r, theta)`` basis."""
        g00, gr0, gt0, grr, grt, gtt = self.frame_components(r, theta)
        return g00, gr0, gt0 / r, grr, grt / r, gtt / (r * r)

    def delta(self, r, theta):
        """Determinant of the spatial block; rotation invariant, zero on the ergosphere."""
        _, _, _, grr, grt, gtt = self.frame_components(r, theta)
        return grr * gtt - grt * grt

    def coordinate_gradients(self, r, theta):
        """``d/dr`` and ``d/dtheta`` of the coordinate components."""
        if self.is_acoustic:
            A, B = self.A, self.B
            z = 0.0 * np.asarray(r, dtype=float)
            dr = (z, -A / r**2, -2 * B / r**3, -2 * A * A / r**3,
                  -3 * A * B / r**4, 2 / r**3 - 4 * B * B / r**5)
            return dr, (z, z, z, z, z, z)
        h = 1e-5 * max(float(np.max(r)), 1e-3)
        ht = 1e-5
        cp = self.coordinate_components(r + h, theta)
        cm = self.coordinate_components(r - h, theta)
        cp2 = self.coordinate_components(r + 2 * h, theta)
        cm2 = self.coordinate_components(r - 2 * h, theta)
        dr = tuple((-a2 + 8 * a - 8 * b + b2) / (12 * h) for a, b, a2, b2 in zip(cp, cm, cp2, cm2))
        tp = self.coordinate_components(r, theta + ht)
        tm = self.coordinate_components(r, theta - ht)
        tp2 = self.coordinate_components(r, theta + 2 * ht)
        tm2 = self.coordinate_components(r, theta - 2 * ht)
        dt = tuple((-a2 + 8 * a - 8 * b + b2) / (12 * ht) for a, b, a2, b2 in zip(tp, tm, tp2, tm2))
        return dr, dt

    def regular_part(self, r, theta):
        """Frame spatial block minus its ``1/r^2`` singular part, as ``(g2rr, g2rt, g2tt)``."""
        _, _, _, grr, grt, gtt = self.frame_components(r, theta)
        b1 = self.b1(theta)
        b2 = self.b2(theta)
        r2 = r * r
        return grr - b1 * b1 / r2, grt - b1 * b2 / r2, gtt - b2 * b2 / r2

    def check_hypotheses(self, theta_grid=None, radii=(1e-3, 1e-2)):
        """Sampled check that ``b1`` keeps one sign and the regular block is negative definite.

        Returns a list of human-readable problems (empty on success).
        """
        if theta_grid is None:
            theta_grid = np.linspace(0.0, 2 * np.pi, 64, endpoint=False)
        problems = []
        b1 = np.asarray(self.b1(theta_grid), dtype=float) * np.ones_like(theta_grid)
        if np.any(b1 == 0.0) or (np.any(b1 > 0) and np.any(b1 < 0)):
            problems.append("b1 vanishes or changes sign")
        for r in radii:
            a, b, c = (np.asarray(v, dtype=float) * np.ones_like(theta_grid)
                       for v in self.regular_part(r, theta_grid))
            # negative definite iff trace < 0 and det > 0
            if np.any(a + c >= 0.0) or np.any(a * c - b * b <= 0.0):
                problems.append(f"regular spatial block not negative definite at r={r:g}")
        return problems


def acoustic_to_polar2d(A: float, B: float = 0.0) -> PolarMetric2D:
    """Polar form of the stationary planar flow ``v = (A/r) r_hat + (B/r) theta_hat``.

    Raises
    ------
    MetricError
        If ``A == 0``; a purely rotating flow has no radial singular part.
    """
    A = float(A)
    B = float(B)
    if A == 0.0:
        raise MetricError("the radial strength A must be nonzero")

    def const(c):
        return lambda r, theta: c + 0.0 * np.asarray(r, dtype=float)

    frame = {
        "g00": const(1.0),
        "gr0": lambda r, theta: A / r + 0.0 * theta,
        "gt0": lambda r, theta: B / r + 0.0 * theta,
        "grr": lambda r, theta: -1.0 + A * A / (r * r) + 0.0 * theta,
        "grt": lambda r, theta: A * B / (r * r) + 0.0 * theta,
        "gtt": lambda r, theta: -1.0 + B * B / (r * r) + 0.0 * theta,
    }
    return PolarMetric2D(frame=frame, b1=lambda th: A + 0.0 * np.asarray(th, dtype=float),
                         b2=lambda th: B + 0.0 * np.asarray(th, dtype=float),
                         provenance="acoustic", A=A, B=B)
