"""Radial waves: characteristic coordinates and the Dirichlet-to-Neumann map two ways.

The radial wave operator is taken in divergence form with the weight
``W = r**(dim - 1) / sqrt(q)``, where ``q`` is the discriminant.  For
``dim = 1`` the weight is the 1+1 volume density, the operator is conformally
invariant and the ingoing solution is exactly ``u = f(phi1 - a)``; this is the
default.  Larger ``dim`` adds the spherical area factor, for which the
characteristic formula is no longer exact (Minkowski gives ``f' - (dim-1) f / (2a)``
to leading order, ``f' - f/a`` for ``dim = 3``).
"""
from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .metric import MetricError, RadialMetric

log = logging.getLogger(__name__)

DIRECT = "direct-fd"
CHARACTERISTIC = "characteristic"


class ConfigurationError(ValueError):
    """Invalid solver configuration (CFL number, grid, pulse resolution)."""


class SetupError(ValueError):
    """The truncated domain does not contain what the solver needs."""


class DegenerateCoordinatesError(MetricError):
    """The characteristic coordinate map has a (near) singular Jacobian."""


class OutsideMeshError(ValueError):
    """Inverse coordinates requested outside the mesh hull."""


# probe pulses ---------------------------------------------------------------

@dataclass(frozen=True)
class Pulse:
    """Gaussian ``exp(-(x0 - center)^2 / (2 sigma^2))`` lowered by ``floor`` and clipped at zero.

    The shift makes the support compact: ``|x0 - center| <= half_width``.
    ``amplitude`` scales the whole pulse.
    """

    center: float
    sigma: float
    floor: float = 1e-16
    amplitude: float = 1.0

    @property
    def half_width(self):
        return self.sigma * math.sqrt(2.0 * math.log(1.0 / self.floor))

    @property
    def support(self):
        return self.center - self.half_width, self.center + self.half_width

    def __call__(self, x0):
        x = np.asarray(x0, dtype=float)
        g = np.exp(-0.5 * ((x - self.center) / self.sigma) ** 2)
        out = self.amplitude * np.where(g > self.floor, g - self.floor, 0.0)
        return out if out.ndim else float(out)

    def derivative(self, x0):
        x = np.asarray(x0, dtype=float)
        u = (x - self.center) / self.sigma
        g = np.exp(-0.5 * u * u)
        out = self.amplitude * np.where(g > self.floor, -u / self.sigma * g, 0.0)
        return out if out.ndim else float(out)

    def shifted(self, dt):
        return Pulse(self.center + dt, self.sigma, self.floor, self.amplitude)

    def scaled(self, factor):
        return Pulse(self.center, self.sigma, self.floor, self.amplitude * factor)


def gaussian_probe(a: float, center: float = 0.0, sigma: float | None = None) -> Pulse:
    """Default probe: width ``a / 10``."""
    return Pulse(center=center, sigma=a / 10.0 if sigma is None else sigma)


class PulseSum:
    """Linear combination ``sum c_k f_k`` of pulses, for linearity checks."""

    def __init__(self, terms):
        self.terms = [(float(c), p) for c, p in terms]

    def __call__(self, x0):
        return sum(c * p(x0) for c, p in self.terms)

    def derivative(self, x0):
        return sum(c * p.derivative(x0) for c, p in self.terms)

    @property
    def support(self):
        lo = min(p.support[0] for _, p in self.terms)
        hi = max(p.support[1] for _, p in self.terms)
        return lo, hi

    @property
    def sigma(self):
        return min(p.sigma for _, p in self.terms)


# characteristic coordinates -------------------------------------------------

def _speeds(metric, x0, r):
    """``(c_minus, c_plus) = b_-/g00, b_+/g00``."""
    g00, gr0, grr = metric.components(x0, r)
    sq = np.sqrt(gr0 * gr0 - g00 * grr)
    return (gr0 - sq) / g00, (gr0 + sq) / g00


def _cgl(lo, hi, n):
    """Chebyshev-Gauss-Lobatto nodes on ``[lo, hi]``, ascending."""
    t = -np.cos(np.pi * np.arange(n) / (n - 1))
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * t


class _ChebSurface:
    """Tensor Chebyshev interpolant of grid values on CGL nodes, with first derivatives."""

    def __init__(self, x, r, values):
        self.xlo, self.xhi = x[0], x[-1]
        self.rlo, self.rhi = r[0], r[-1]
        tx, tr = self._t(x, r)
        cr = C.chebfit(tr, values.T, len(r) - 1)
        self.coef = C.chebfit(tx, cr.T, len(x) - 1)
        self.dx = C.chebder(self.coef, axis=0) * (2.0 / (self.xhi - self.xlo))
        self.dr = C.chebder(self.coef, axis=1) * (2.0 / (self.rhi - self.rlo))

    def _t(self, x, r):
        tx = (2.0 * np.asarray(x, dtype=float) - (self.xlo + self.xhi)) / (self.xhi - self.xlo)
        tr = (2.0 * np.asarray(r, dtype=float) - (self.rlo + self.rhi)) / (self.rhi - self.rlo)
        return tx, tr

    def __call__(self, x, r, deriv=None):
        tx, tr = self._t(x, r)
        c = self.coef if deriv is None else self.dx if deriv == "x" else self.dr
        return C.chebval2d(tx, tr, c)

    def grid(self, x, r, deriv=None):
        tx, tr = self._t(x, r)
        c = self.coef if deriv is None else self.dx if deriv == "x" else self.dr
        return C.chebgrid2d(tx, tr, c)


@dataclass
class CharCoordinates:
    """``phi1``, ``phi2`` on a Chebyshev mesh ``x0 x r`` of the exterior region ``r_lo <= r <= a``.

    ``phi1`` is constant along ``dr/dx0 = b_-/g00`` and ``phi2`` along
    ``dr/dx0 = b_+/g00``, with ``phi1 = x0 + a`` and ``phi2 = -x0 + a`` on
    ``r = a``.  ``y0 = (phi1 - phi2)/2`` and ``y1 = (phi1 + phi2)/2``.
    Values between nodes come from the tensor Chebyshev interpolant.

    Attributes
    ----------
    nullity : float
        ``max(|G(dphi1, dphi1)|, |G(dphi2, dphi2)|)`` on the mesh, with
        gradients from the interpolant rather than the transport equations.
    jacobian_min : float
        ``min |det d(y0, y1)/d(x0, r)|`` on the mesh.
    """

    x0: np.ndarray
    r: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    a: float
    jacobian_min: float
    nullity: float
    g_s_tau_min: float
    clipped: bool = False
    metric: RadialMetric = field(repr=False, default=None)

    def __post_init__(self):
        self._s1 = _ChebSurface(self.x0, self.r, self.phi1)
        self._s2 = _ChebSurface(self.x0, self.r, self.phi2)

    @property
    def y0(self):
        return 0.5 * (self.phi1 - self.phi2)

    @property
    def y1(self):
        return 0.5 * (self.phi1 + self.phi2)

    def boundary_defect(self):
        """``max |(y0, y1) - (x0, a)|`` on the row ``r = a``."""
        return float(max(np.max(np.abs(self.y0[:, -1] - self.x0)), np.max(np.abs(self.y1[:, -1] - self.a))))

    def gradients(self, x0, r):
        """``(phi1_x0, phi1_r, phi2_x0, phi2_r)`` at points."""
        return (self._s1(x0, r, "x"), self._s1(x0, r, "r"), self._s2(x0, r, "x"), self._s2(x0, r, "r"))

    def forward(self, x0, r):
        """Interpolated ``(y0, y1)`` at physical points inside the mesh."""
        p1, p2 = self._s1(x0, r), self._s2(x0, r)
        return 0.5 * (p1 - p2), 0.5 * (p1 + p2)

    def inverse(self, y0, y1, tol=1e-12, max_iter=50):
        """Physical ``(x0, r)`` with the given ``(y0, y1)``, by Newton on the interpolated map.

        Raises
        ------
        OutsideMeshError
            If an iterate leaves the mesh hull or Newton fails to converge.
        """
        y0 = np.atleast_1d(np.asarray(y0, dtype=float))
        y1 = np.atleast_1d(np.asarray(y1, dtype=float))
        x = y0.copy()
        r = np.clip(y1, self.r[0], self.r[-1])
        lo_x, hi_x = self.x0[0], self.x0[-1]
        tiny = 1e-9 * (1 + abs(self.a))
        for _ in range(max_iter):
            g0, g1 = self.forward(x, r)
            f0, f1 = g0 - y0, g1 - y1
            p1x, p1r, p2x, p2r = self.gradients(x, r)
            a11, a12 = 0.5 * (p1x - p2x), 0.5 * (p1r - p2r)
            a21, a22 = 0.5 * (p1x + p2x), 0.5 * (p1r + p2r)
            det = a11 * a22 - a12 * a21
            dx = (a22 * f0 - a12 * f1) / det
            dr = (-a21 * f0 + a11 * f1) / det
            x = np.clip(x - dx, lo_x, hi_x)
            r = np.clip(r - dr, self.r[0], self.r[-1])
            if np.max(np.abs(dx)) < tol and np.max(np.abs(dr)) < tol:
                g0, g1 = self.forward(x, r)
                if np.max(np.abs(g0 - y0)) > 1e3 * tol + tiny or np.max(np.abs(g1 - y1)) > 1e3 * tol + tiny:
                    raise OutsideMeshError("inverse coordinates fall outside the mesh hull")
                return x, r
        raise OutsideMeshError("Newton inversion of the coordinate map did not converge "
                               "(the target is probably outside the mesh hull)")


def _default_r_lo(metric, a, x0_range):
    b = metric.sup_abs_b1(*x0_range)
    if b == 0.0:
        return 0.5 * a
    return None


def build_char_coords(metric: RadialMetric, a: float, x0_range=(-5.0, 5.0), *, n_x0: int = 81,
                      n_r: int = 41, r_lo: float | None = None, horizon: float | None = None,
                      rtol: float = 1e-12, atol: float = 1e-13, jacobian_tol: float = 1e-8) -> CharCoordinates:
    """Characteristic coordinates by integrating ``x0(r)`` along both families out to ``r = a``.

    The mesh is a tensor grid of Chebyshev-Gauss-Lobatto nodes.  For each
    row ``r_j`` the ``n_x0`` points are carried outward along
    ``dx0/dr = g00/b_-`` (for ``phi1``) and ``g00/b_+`` (for ``phi2``) in one
    vectorised solve; the arrival time ``t`` at ``r = a`` gives
    ``phi1 = t + a`` and ``phi2 = -t + a``.

    ``r_lo`` defaults to ``a / 2`` without a horizon, and otherwise to
    ``horizon + 0.2 (a - horizon)``.  A requested ``r_lo`` at or below
    ``horizon`` is clipped with a warning.
    """
    a = float(a)
    x0 = _cgl(x0_range[0], x0_range[1], n_x0)
    if horizon is None and metric.sup_abs_b1(*x0_range) != 0.0:
        from .horizons import OUTER_BLACK, OUTER_WHITE, separatrix_shoot
        b1 = float(np.asarray(metric.b1(0.5 * (x0_range[0] + x0_range[1]))))
        curve = separatrix_shoot(metric, OUTER_BLACK if b1 < 0 else OUTER_WHITE,
                                 window=tuple(x0_range), samples=41)
        horizon = float(np.max(curve.r))
    clipped = False
    if r_lo is None:
        r_lo = _default_r_lo(metric, a, x0_range) if horizon is None else horizon + 0.2 * (a - horizon)
    if horizon is not None and r_lo <= horizon:
        warnings.warn(f"mesh clipped: r_lo={r_lo:g} is not outside the horizon {horizon:g}", stacklevel=2)
        r_lo = horizon + 0.05 * (a - horizon)
        clipped = True
    if not 0.0 < r_lo < a:
        raise SetupError("need 0 < r_lo < a")
    r = _cgl(r_lo, a, n_r)
    phi = []
    for fam in (0, 1):
        out = np.empty((n_x0, n_r))
        out[:, -1] = x0
        for j in range(n_r - 1):
            def rhs(rr, t, fam=fam):
                c = _speeds(metric, t, rr)[fam]
                return 1.0 / c
            sol = solve_ivp(rhs, (r[j], a), x0.copy(), method="DOP853", rtol=rtol, atol=atol)
            if not sol.success:
                raise DegenerateCoordinatesError(f"characteristic transport failed at r={r[j]:g}: {sol.message}")
            out[:, j] = sol.y[:, -1]
        phi.append(out + a if fam == 0 else -out + a)
    phi1, phi2 = phi
    s1 = _ChebSurface(x0, r, phi1)
    s2 = _ChebSurface(x0, r, phi2)
    p1x, p1r = s1.grid(x0, r, "x"), s1.grid(x0, r, "r")
    p2x, p2r = s2.grid(x0, r, "x"), s2.grid(x0, r, "r")
    X, R = np.meshgrid(x0, r, indexing="ij")
    g00, gr0, grr = (np.broadcast_to(c, X.shape) for c in metric.components(X, R))
    gss = g00 * p1x**2 + 2 * gr0 * p1x * p1r + grr * p1r**2
    gtt = g00 * p2x**2 + 2 * gr0 * p2x * p2r + grr * p2r**2
    gst = g00 * p1x * p2x + gr0 * (p1x * p2r + p1r * p2x) + grr * p1r * p2r
    jac = 0.5 * np.abs(p1x * p2r - p1r * p2x)
    jmin = float(np.min(jac))
    if jmin < jacobian_tol:
        raise DegenerateCoordinatesError(f"coordinate Jacobian {jmin:.3g} below {jacobian_tol:g}")
    return CharCoordinates(x0=x0, r=r, phi1=phi1, phi2=phi2, a=a, jacobian_min=jmin,
                           nullity=float(max(np.max(np.abs(gss)), np.max(np.abs(gtt)))),
                           g_s_tau_min=float(np.min(np.abs(gst))), clipped=clipped, metric=metric)


# d'Alembert solution in characteristic coordinates -----------------------------

@dataclass(frozen=True)
class DAlembertSolution:
    """The ingoing solution ``u_hat(y0, y1) = f(y0 + y1 - a)`` on the half-plane ``y1 < a``."""

    f: object
    a: float

    def __call__(self, y0, y1):
        return self.f(np.asarray(y0) + np.asarray(y1) - self.a)

    def d_y0(self, y0, y1):
        return self.f.derivative(np.asarray(y0) + np.asarray(y1) - self.a)

    def d_y1(self, y0, y1):
        return self.f.derivative(np.asarray(y0) + np.asarray(y1) - self.a)

    def boundary_dn(self, y0):
        """Outward normal derivative ``d u_hat / d y1`` on ``y1 = a``; equals ``f'(y0)``."""
        return self.d_y1(y0, self.a)


def dalembert_solve(coords: CharCoordinates | float, f) -> DAlembertSolution:
    a = coords.a if isinstance(coords, CharCoordinates) else float(coords)
    return DAlembertSolution(f=f, a=a)


# DN samples ------------------------------------------------------------------

@dataclass
class DNSample:
    """Boundary traces on an ``x0`` grid: Dirichlet data ``f`` and normal derivative ``lambda_f``."""

    x0: np.ndarray
    f: np.ndarray
    lambda_f: np.ndarray
    method: str
    diagnostics: dict = field(default_factory=dict)

    def rows(self):
        return [(float(t), float(a), float(b), self.method) for t, a, b in zip(self.x0, self.f, self.lambda_f)]


def dn_characteristic(metric: RadialMetric, f, a: float, x0, coords: CharCoordinates | None = None) -> DNSample:
    """DN map from the characteristic reduction.

    ``u = u_hat(y0, y1)`` with ``u_hat`` the ingoing d'Alembert solution, so
    ``du/dr = u_hat_y0 * y0_r + u_hat_y1 * y1_r = f'(x0) * phi1_r`` on
    ``r = a``.  The transport equation with ``phi1_x0 = 1`` on the boundary
    gives ``phi1_r = -g00 / b_-`` there.  If ``coords`` is given, its mesh
    derivative of ``phi1`` on the boundary row is reported as a cross-check.
    """
    x0 = np.asarray(x0, dtype=float)
    sol = dalembert_solve(a, f)
    g00 = np.broadcast_to(metric.g00(x0, a), x0.shape)
    c_minus, c_plus = _speeds(metric, x0, a)
    phi1_r = -1.0 / c_minus
    phi2_r = 1.0 / c_plus
    y0_r = 0.5 * (phi1_r - phi2_r)
    y1_r = 0.5 * (phi1_r + phi2_r)
    lam = sol.d_y0(x0, a) * y0_r + sol.d_y1(x0, a) * y1_r
    diag = {"g00_min": float(np.min(g00))}
    if coords is not None:
        p1r = coords.gradients(coords.x0, np.full_like(coords.x0, a))[1]
        ref = -1.0 / _speeds(metric, coords.x0, a)[0]
        diag["mesh_phi1_r_defect"] = float(np.max(np.abs(p1r - ref)))
    return DNSample(x0=x0, f=np.asarray(f(x0)), lambda_f=np.asarray(lam), method=CHARACTERISTIC, diagnostics=diag)


# direct finite-difference solve ------------------------------------------------

def _weight(metric, x0, r, dim):
    q = metric.discriminant(x0, r)
    return r ** (dim - 1) / np.sqrt(q)


def _split(metric, x0, r, dim, P, Q):
    """Flux-vector splitting of the system ``d_t (P, Q) + d_r (M (P, Q)) = 0``.

    ``P = W (g00 u_t + g0r u_r)`` and ``Q = u_r``; the eigenvalues of ``M`` are
    ``b_+-/g00`` and the spectral projectors are explicit.
    """
    g00, gr0, grr = metric.components(x0, r)
    g00 = np.broadcast_to(g00, r.shape)
    q = gr0 * gr0 - g00 * grr
    sq = np.sqrt(q)
    W = r ** (dim - 1) / sq
    lam_p = (gr0 + sq) / g00
    lam_m = (gr0 - sq) / g00
    ws = W * sq
    # projections of U onto the two eigen-directions; P_s U = 0.5 * (P - s ws Q) * (1, -s / ws)
    wp = 0.5 * (P - ws * Q)
    wm = 0.5 * (P + ws * Q)
    fp = np.zeros((2,) + r.shape)
    fm = np.zeros((2,) + r.shape)
    for lam, w, s in ((lam_p, wp, 1.0), (lam_m, wm, -1.0)):
        pos = np.maximum(lam, 0.0) * w
        neg = np.minimum(lam, 0.0) * w
        fp[0] += pos
        fp[1] += -s * pos / ws
        fm[0] += neg
        fm[1] += -s * neg / ws
    return fp, fm, (lam_p, lam_m, W, g00, gr0, sq)


def _dminus(F, h):
    """Upwind-biased derivative for right-moving flux (third order inside)."""
    d = np.empty_like(F)
    d[..., 2:-1] = (F[..., :-3] - 6 * F[..., 1:-2] + 3 * F[..., 2:-1] + 2 * F[..., 3:]) / (6 * h)
    d[..., 1] = (F[..., 2] - F[..., 0]) / (2 * h)
    d[..., 0] = (-3 * F[..., 0] + 4 * F[..., 1] - F[..., 2]) / (2 * h)
    d[..., -1] = (3 * F[..., -1] - 4 * F[..., -2] + F[..., -3]) / (2 * h)
    return d


def _dplus(F, h):
    """Upwind-biased derivative for left-moving flux (third order inside)."""
    d = np.empty_like(F)
    d[..., 1:-2] = (-2 * F[..., :-3] - 3 * F[..., 1:-2] + 6 * F[..., 2:-1] - F[..., 3:]) / (6 * h)
    d[..., -2] = (F[..., -1] - F[..., -3]) / (2 * h)
    d[..., -1] = (3 * F[..., -1] - 4 * F[..., -2] + F[..., -3]) / (2 * h)
    d[..., 0] = (-3 * F[..., 0] + 4 * F[..., 1] - F[..., 2]) / (2 * h)
    return d


def _horizon_radius(metric, x0_range):
    from .horizons import OUTER_BLACK, OUTER_WHITE, separatrix_shoot
    b1 = float(np.asarray(metric.b1(0.5 * (x0_range[0] + x0_range[1]))))
    kind = OUTER_BLACK if b1 < 0 else OUTER_WHITE
    curve = separatrix_shoot(metric, kind, window=tuple(x0_range), samples=41)
    return kind, float(np.min(curve.r)), float(np.max(curve.r))


@dataclass
class DirectSolution:
    """Full state of :func:`dn_direct` at the final time, for interior checks."""

    r: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    x0: float
    max_abs_inside: float


def dn_direct(metric: RadialMetric, f, a: float, *, n_cells: int = 320, x0_range=None,
              r_abs: float | None = None, dim: int = 1, cfl: float = 0.4,
              min_points_per_width: float = 20.0, extraction: str = "stencil", return_state: bool = False):
    """DN map by a finite-difference solve of the radial wave equation on ``[r_abs, a]``.

    The first-order system in ``P = W (g00 u_t + g0r u_r)`` and ``Q = u_r``
    is conservative, so the mixed ``x0 r`` terms need no special care.
    Fluxes are split by the sign of the characteristic speeds and
    differenced with third-order upwind-biased stencils; time stepping is
    SSP-RK3.  At ``r = a`` the outgoing characteristic variable is kept and
    the incoming one is set from ``u_t = f'``.  ``u`` itself is carried along
    by ``u_t = (P/W - g0r Q)/g00``; with ``extraction="stencil"`` the normal
    derivative is the third-order one-sided difference of ``u`` at ``r = a``,
    with ``"state"`` it is the boundary value of ``Q``.  The latter is exact
    for constant coefficients, so it cannot show a convergence order there.  At ``r_abs`` every incoming characteristic is set to zero:
    inside a black hole there is none, inside a white hole both are.

    ``r_abs`` defaults to three cells inside the horizon (black or white) and
    to ``a / 2`` when ``b1`` vanishes.

    Raises
    ------
    ConfigurationError
        ``cfl`` outside ``(0, 0.8]`` or fewer than ``min_points_per_width``
        cells across the pulse FWHM.
    SetupError
        ``r_abs`` lies outside the black-hole horizon somewhere in the window.
    """
    if not 0.0 < cfl <= 0.8:
        raise ConfigurationError(f"CFL number {cfl} outside (0, 0.8]")
    lo, hi = f.support
    if x0_range is None:
        x0_range = (lo, hi + 0.25 * (hi - lo))
    t0, t1 = float(x0_range[0]), float(x0_range[1])
    kind = None
    r_h_min = r_h_max = None
    if metric.sup_abs_b1(t0, t1) != 0.0:
        kind, r_h_min, r_h_max = _horizon_radius(metric, (t0, t1))
    if r_abs is None:
        if kind is None:
            r_abs = 0.5 * a
        else:
            h_guess = (a - 0.8 * r_h_min) / n_cells
            r_abs = r_h_min - 3 * h_guess
    elif kind is not None and kind.endswith("black") and r_abs >= r_h_min:
        raise SetupError(f"r_abs={r_abs:g} is not inside the horizon (min radius {r_h_min:g})")
    if not 0.0 < r_abs < a:
        raise SetupError("need 0 < r_abs < a")
    r = np.linspace(r_abs, a, n_cells + 1)
    h = r[1] - r[0]
    fwhm = 2.0 * math.sqrt(2.0 * math.log(2.0)) * f.sigma
    if fwhm / h < min_points_per_width:
        raise ConfigurationError(f"{fwhm / h:.1f} points per pulse width (FWHM); need {min_points_per_width}")
    if extraction not in ("stencil", "state"):
        raise ConfigurationError(f"unknown extraction {extraction!r}")

    # time step from the largest speed on the grid over the window
    ts = np.linspace(t0, t1, 33)
    smax = 0.0
    for t in ts:
        cm, cp = _speeds(metric, t, r)
        smax = max(smax, float(np.max(np.abs(cm))), float(np.max(np.abs(cp))))
    n_steps = int(math.ceil((t1 - t0) * smax / (cfl * h)))
    dt = (t1 - t0) / n_steps

    U = np.zeros((3, len(r)))

    def rhs(t, U):
        fp, fm, (_, _, W, g00, gr0, _) = _split(metric, t, r, dim, U[0], U[1])
        out = np.empty_like(U)
        out[:2] = -(_dminus(fp, h) + _dplus(fm, h))
        out[2] = (U[0] / W - gr0 * U[1]) / g00
        return out

    def boundary(t, U):
        _, _, (lam_p, lam_m, W, g00, gr0, sq) = _split(metric, t, r[[0, -1]], dim, U[0, [0, -1]], U[1, [0, -1]])
        ws = W * sq
        # outer boundary: keep the outgoing variable, impose u_t = f'(t)
        P, Q = U[0, -1], U[1, -1]
        if not lam_p[1] > 0:
            raise SetupError(f"r = a has no outgoing characteristic at x0={t:g}; a is inside the horizon")
        # w_out = P - ws Q = W (g00 u_t + (g0r - sq) Q)
        w_out = P - ws[1] * Q
        ft = f.derivative(t)
        Qn = (w_out / W[1] - g00[1] * ft) / (gr0[1] - sq[1])
        U[1, -1] = Qn
        U[0, -1] = W[1] * (g00[1] * ft + gr0[1] * Qn)
        U[2, -1] = f(t)
        # inner boundary: drop incoming characteristics
        P, Q = U[0, 0], U[1, 0]
        wp = 0.5 * (P - ws[0] * Q)
        wm = 0.5 * (P + ws[0] * Q)
        if lam_p[0] > 0:
            wp = 0.0
        if lam_m[0] > 0:
            wm = 0.0
        U[0, 0] = wp + wm
        U[1, 0] = (wm - wp) / ws[0]
        return U

    times = t0 + dt * np.arange(n_steps + 1)
    lam_trace = np.zeros(n_steps + 1)
    for k in range(n_steps):
        t = times[k]
        U1 = boundary(t + dt, U + dt * rhs(t, U))
        U2 = boundary(t + 0.5 * dt, 0.75 * U + 0.25 * (U1 + dt * rhs(t + dt, U1)))
        U = boundary(t + dt, U / 3.0 + 2.0 / 3.0 * (U2 + dt * rhs(t + 0.5 * dt, U2)))
        if extraction == "state":
            lam_trace[k + 1] = U[1, -1]
        else:
            u = U[2]
            lam_trace[k + 1] = (11 * u[-1] - 18 * u[-2] + 9 * u[-3] - 2 * u[-4]) / (6 * h)
    if not np.all(np.isfinite(U)):
        raise ConfigurationError("direct solve became non-finite; reduce the CFL number")
    inside = 0.0
    if kind is not None and kind.endswith("white"):
        mask = r < r_h_min - 2 * h
        inside = float(np.max(np.abs(U[:, mask]))) if np.any(mask) else 0.0
    sample = DNSample(x0=times, f=np.asarray(f(times)), lambda_f=lam_trace, method=DIRECT,
                      diagnostics={"n_cells": n_cells, "h": h, "dt": dt, "r_abs": r_abs, "dim": dim,
                                   "horizon_kind": kind, "horizon_min": r_h_min, "horizon_max": r_h_max,
                                   "max_abs_inside_white_hole": inside})
    if return_state:
        return sample, DirectSolution(r=r, P=U[0].copy(), Q=U[1].copy(), x0=float(times[-1]), max_abs_inside=inside)
    return sample


# refinement study -------------------------------------------------------------

@dataclass
class RefinementStudy:
    grids: list
    errors: list
    orders: list
    reference: str
    monotone: bool

    def to_dict(self):
        return {"grids": list(self.grids), "errors": list(self.errors), "observed_order": list(self.orders),
                "reference": self.reference, "monotone": self.monotone}


def refinement_study(metric: RadialMetric, a: float, f=None, grids=(160, 320, 640), *, dim: int = 1,
                     reference: str = CHARACTERISTIC, threads: int | None = None, **kw) -> RefinementStudy:
    """Max-abs error of :func:`dn_direct` on successively finer grids.

    ``reference="characteristic"`` measures against the reduction formula;
    ``reference="self"`` measures each grid against the next finer one
    (interpolated onto the coarser time levels), giving one error fewer.
    Grids run concurrently.  Orders are ``log(e_k / e_{k+1}) / log(n_{k+1} / n_k)``.
    """
    if f is None:
        f = gaussian_probe(a)
    if reference not in (CHARACTERISTIC, "self"):
        raise ValueError(f"unknown reference {reference!r}")

    def run(n):
        return dn_direct(metric, f, a, n_cells=n, dim=dim, **kw)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        runs = list(pool.map(run, grids))
    if reference == CHARACTERISTIC:
        errors = [float(np.max(np.abs(d.lambda_f - dn_characteristic(metric, f, a, d.x0).lambda_f)))
                  for d in runs]
        used = list(grids)
    else:
        errors = []
        for coarse, fine in zip(runs[:-1], runs[1:]):
            fine_on_coarse = CubicSpline(fine.x0, fine.lambda_f)(coarse.x0)
            errors.append(float(np.max(np.abs(coarse.lambda_f - fine_on_coarse))))
        used = list(grids[:-1])
    orders = [math.log(errors[k] / errors[k + 1]) / math.log(used[k + 1] / used[k])
              for k in range(len(errors) - 1)]
    return RefinementStudy(grids=list(grids), errors=errors, orders=orders, reference=reference,
                           monotone=all(errors[k + 1] < errors[k] for k in range(len(errors) - 1)))


# isometry map -------------------------------------------------------------------

def pullback_metric(metric: RadialMetric, psi, dpsi, label="pullback") -> RadialMetric:
    """The radial metric in the coordinate ``r'`` with ``r = psi(r')``.

    ``g1^{00} = g^{00}``, ``g1^{0r'} = g^{0r} / psi'`` and ``g1^{r'r'} = g^{rr} / psi'^2``,
    all evaluated at ``psi(r')``.
    """

    def g00(x0, rp):
        return metric.g00(x0, psi(rp))

    def gr0(x0, rp):
        return metric.gr0(x0, psi(rp)) / dpsi(rp)

    def grr(x0, rp):
        return metric.grr(x0, psi(rp)) / dpsi(rp) ** 2

    return RadialMetric(g00=g00, gr0=gr0, grr=grr, b1=metric.b1, provenance="custom", label=label)


@dataclass
class IsometryReport:
    """Defects of the map ``sigma`` built from two metrics' characteristic coordinates.

    ``horizon_defect`` is ``None`` when the metrics have no horizon.
    ``dn_defect`` is the max-abs difference of the two characteristic DN
    traces for the probe; ``dn_match`` compares it with ``dn_tol``.  When the
    inverse coordinates cannot be found (typically for metrics that are not
    isometric) the defects are ``nan`` and ``sigma_error`` says why.
    """

    boundary_defect: float
    pullback_defect: float
    horizon_defect: float | None
    dn_defect: float
    dn_match: bool
    coords_g: CharCoordinates = field(repr=False)
    coords_g1: CharCoordinates = field(repr=False)
    sigma_error: str | None = None

    def sigma(self, x0, r):
        y0, y1 = self.coords_g.forward(x0, r)
        return self.coords_g1.inverse(y0, y1)


def isometry_map(metric_g: RadialMetric, metric_g1: RadialMetric, a: float, x0_range=(-4.0, 4.0), *,
                 n_x0: int = 81, n_r: int = 41, probe=None, horizons=None, dn_tol: float = 1e-6,
                 r_lo=None) -> IsometryReport:
    """Build ``sigma = (coords of g1)^{-1} o (coords of g)`` on the mesh of ``g`` and report its defects.

    (i) boundary: ``|sigma(x0, a) - (x0, a)|``;
    (ii) pullback: ``|u1(sigma(x0, r)) - u(x0, r)|`` for the ingoing probe solutions;
    (iii) horizon: the radial part of ``sigma`` is fitted along each mesh
    column, continued to the horizon of ``g`` and compared with the horizon of ``g1``.
    ``horizons`` may pass ``(R_g, R_g1)`` as constants to skip the shooting.
    Points are taken from the interior of the ``x0`` range so that their
    images stay inside the second mesh.
    """
    probe = gaussian_probe(a) if probe is None else probe
    r_lo_g, r_lo_g1 = (r_lo, r_lo) if not isinstance(r_lo, tuple) else r_lo
    cg = build_char_coords(metric_g, a, x0_range, n_x0=n_x0, n_r=n_r, r_lo=r_lo_g,
                           horizon=None if horizons is None else horizons[0])
    wide = (x0_range[0] - 0.5 * (x0_range[1] - x0_range[0]), x0_range[1] + 0.5 * (x0_range[1] - x0_range[0]))
    h1 = None if horizons is None else horizons[1]
    if r_lo_g1 is None and h1 is None and metric_g1.sup_abs_b1(*wide) == 0.0:
        r_lo_g1 = 0.5 * cg.r[0]
    c1 = build_char_coords(metric_g1, a, wide, n_x0=2 * n_x0 - 1, n_r=n_r, r_lo=r_lo_g1, horizon=h1)
    xs = cg.x0[(cg.x0 >= x0_range[0] + 0.25 * (x0_range[1] - x0_range[0]))
               & (cg.x0 <= x0_range[1] - 0.25 * (x0_range[1] - x0_range[0]))]
    X, R = np.meshgrid(xs, cg.r, indexing="ij")
    boundary = pull = float("nan")
    horizon_defect = None
    sigma_error = None
    try:
        y0, y1 = cg.forward(X.ravel(), R.ravel())
        sx, sr = c1.inverse(y0, y1)
        bx, br = c1.inverse(*cg.forward(xs, np.full_like(xs, a)))
    except OutsideMeshError as exc:
        sigma_error = str(exc)
        log.info("sigma not constructed: %s", exc)
    else:
        boundary = float(max(np.max(np.abs(bx - xs)), np.max(np.abs(br - a))))
        u = probe(y0 + y1 - a)
        u1y0, u1y1 = c1.forward(sx, sr)
        pull = float(np.max(np.abs(probe(u1y0 + u1y1 - a) - u)))
        if horizons is not None and horizons[0] is not None:
            # least-squares Chebyshev fit of sigma_r along each column, continued to the horizon
            SR = sr.reshape(X.shape)
            t = (2 * cg.r - (cg.r[0] + cg.r[-1])) / (cg.r[-1] - cg.r[0])
            th = (2 * horizons[0] - (cg.r[0] + cg.r[-1])) / (cg.r[-1] - cg.r[0])
            coef = C.chebfit(t, SR.T, min(8, len(cg.r) - 1))
            horizon_defect = float(np.max(np.abs(C.chebval(th, coef) - horizons[1])))

    ts = np.linspace(probe.support[0], probe.support[1], 401)
    d_g = dn_characteristic(metric_g, probe, a, ts).lambda_f
    d_g1 = dn_characteristic(metric_g1, probe, a, ts).lambda_f
    dn_defect = float(np.max(np.abs(d_g - d_g1)))
    return IsometryReport(boundary_defect=boundary, pullback_defect=pull, horizon_defect=horizon_defect,
                          dn_defect=dn_defect, dn_match=dn_defect <= dn_tol, coords_g=cg, coords_g1=c1,
                          sigma_error=sigma_error)


__all__ = ["Pulse", "PulseSum", "gaussian_probe", "CharCoordinates", "DAlembertSolution", "DNSample",
           "DirectSolution", "RefinementStudy", "IsometryReport", "build_char_coords", "dalembert_solve",
           "dn_characteristic", "dn_direct", "refinement_study", "pullback_metric", "isometry_map",
           "ConfigurationError", "SetupError", "DegenerateCoordinatesError", "OutsideMeshError",
           "DIRECT", "CHARACTERISTIC"]
