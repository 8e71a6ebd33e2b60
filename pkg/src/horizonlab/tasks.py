"""Scenario task runners.

Each runner returns a list of :class:`SubRun` values computed entirely in
memory; the CLI writes them out only after the whole task has been tried,
so a failing sub-run never leaves half a file behind.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import kernels
from .characteristics import ZERO_ROOT_TOL, DegenerateClassification, classify_surface
from .geodesics import ATOL, RTOL, IntegrationError, integrate_radial
from .horizons import (
    DYNAMIC,
    OUTER_BLACK,
    HorizonError,
    appearance_time,
    disappearance_time,
    dynamic_horizon,
    picard_bounded_solution,
    separatrix_shoot,
)
from .metric import MetricError, acoustic_to_radial
from .profiles import TimeProfile
from .stationary2d import (
    BLACK_HORIZON,
    WHITE_HORIZON,
    OrbitClassificationError,
    extremal_horizons,
    find_closed_orbits,
    locate_ergosphere,
    origin_capture_census,
)
from .waves import (
    ConfigurationError,
    OutsideMeshError,
    Pulse,
    SetupError,
    dn_characteristic,
    dn_direct,
    refinement_study,
)

log = logging.getLogger(__name__)

# errors that mean "the numerics did not work out", as opposed to programming errors
NUMERICAL_ERRORS = (IntegrationError, HorizonError, MetricError, ConfigurationError, SetupError,
                    OutsideMeshError, OrbitClassificationError, FloatingPointError, ArithmeticError)

FIGURE_FAN = (0.2, 0.4, 0.6, 0.8, 0.9, 0.95, 1.05, 1.1, 1.25, 1.5, 2.0, 3.0)


@dataclass
class Table:
    header: tuple
    rows: list


@dataclass
class SubRun:
    """Outcome of one independent piece of a task."""

    name: str
    status: str = "ok"
    tables: dict = field(default_factory=dict)
    documents: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    error: dict | None = None


def _error_record(exc) -> dict:
    rec = {"type": type(exc).__name__, "message": str(exc)}
    for attr in ("x0", "r"):
        if hasattr(exc, attr):
            rec[attr] = getattr(exc, attr)
    return rec


def attempt(name, fn) -> SubRun:
    """Run ``fn() -> SubRun``; numerical errors become a failed sub-run."""
    try:
        sub = fn()
        sub.name = name
        return sub
    except NUMERICAL_ERRORS as exc:
        log.warning("%s failed: %s", name, exc)
        return SubRun(name=name, status="numerical-failure", error=_error_record(exc))


def _pmap(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _tols(sc):
    t = sc.tolerances
    return float(t.get("rtol", RTOL)), float(t.get("atol", ATOL)), float(t.get("tol", 1e-10))


# ---------------------------------------------------------------------------

def run_trajectories(sc, threads=None):
    metric = sc.radial_metric()
    p = sc.params
    window = sc.x0_window
    direction = p.get("direction", "forward")
    x0_start = float(p.get("x0_start", window[0] if direction == "forward" else window[1]))
    families = p.get("families", ["plus", "minus"])
    rtol, atol, _ = _tols(sc)
    jobs = [(fam, float(r0)) for fam in families for r0 in p["r0"]]

    def one(job):
        fam, r0 = job
        return integrate_radial(metric, fam, r0, x0_start, direction, window, rtol=rtol, atol=atol)

    def body():
        runs = _pmap(one, jobs, threads)
        traj = [(fam, r0, x, r) for (fam, r0), t in zip(jobs, runs) for x, r in zip(t.x0, t.r)]
        fates = [(fam, r0, direction, t.fate, t.fate_x0, t.fate_r) for (fam, r0), t in zip(jobs, runs)]
        return SubRun(
            name="trajectories",
            tables={"trajectories.csv": Table(("family", "r0", "x0", "r"), traj),
                    "fates.csv": Table(("family", "r0", "direction", "fate", "fate_x0", "fate_r"), fates)},
            results={"fate": [t.fate for t in runs], "fate_x0": [t.fate_x0 for t in runs],
                     "fate_r": [t.fate_r for t in runs]})

    return [attempt("trajectories", body)]


def run_horizon(sc, threads=None):
    metric = sc.radial_metric()
    p = sc.params
    window = sc.x0_window
    kind = p.get("kind", OUTER_BLACK)
    method = p.get("method", "shooting")
    samples = int(p.get("samples", 401))
    _, _, tol = _tols(sc)

    def body():
        if kind == DYNAMIC:
            curve = dynamic_horizon(metric, window, samples)
        elif method == "picard":
            if kind != OUTER_BLACK:
                raise HorizonError("the fixed-point construction gives the outer black horizon only")
            _, curve = picard_bounded_solution(metric, T_init=float(p.get("picard_T", 0.0)),
                                               tol=min(tol, 1e-13), window=window, samples=samples)
        else:
            curve = separatrix_shoot(metric, kind, p.get("anchor"), window, tol, samples=samples,
                                     threads=threads)
        limits = {"kind": curve.kind, "method": curve.method,
                  "limit_minus_inf": curve.limit_minus_inf, "limit_plus_inf": curve.limit_plus_inf,
                  "R_window_start": float(curve.r[0]), "R_window_end": float(curve.r[-1]),
                  "x0_window_start": float(curve.x0[0]), "x0_window_end": float(curve.x0[-1]),
                  "diagnostics": curve.diagnostics}
        return SubRun(name="horizon",
                      tables={"horizon.csv": Table(("x0", "r", "kind", "method"), list(curve.rows()))},
                      documents={"limits.json": limits},
                      results={"x0": curve.x0, "r": curve.r,
                               "limit_minus_inf": curve.limit_minus_inf, "limit_plus_inf": curve.limit_plus_inf})

    subs = [attempt("horizon", body)]
    which = p.get("origin_time", "none")
    if which != "none":
        def origin():
            fn = appearance_time if which == "appearance" else disappearance_time
            ot = fn(metric, window, tol)
            doc = {"event": which, "x0": ot.x0, "crossings": ot.crossings,
                   "multiple_crossings": ot.multiple_crossings}
            return SubRun(name=which, documents={f"{which}.json": doc}, results={f"{which}_x0": ot.x0})
        subs.append(attempt(which, origin))
    return subs


def run_classify(sc, threads=None):
    metric = sc.radial_metric()
    t = float(sc.params.get("t", 0.0))
    tol = float(sc.tolerances.get("tol", ZERO_ROOT_TOL))

    def body():
        rows = []
        for r_s in sc.params["radii"]:
            try:
                c = classify_surface(metric, t, float(r_s), tol)
                rows.append((t, float(r_s), c.xi0_plus, c.xi0_minus, c.verdict))
            except DegenerateClassification:
                rows.append((t, float(r_s), float("nan"), float("nan"), "degenerate"))
        return SubRun(name="classify",
                      tables={"classify.csv": Table(("t", "r_s", "xi0_plus", "xi0_minus", "verdict"), rows)},
                      results={"xi0_plus": [r[2] for r in rows], "xi0_minus": [r[3] for r in rows],
                               "verdict": [r[4] for r in rows]})

    return [attempt("classify", body)]


def _orbit_meta(idx, o):
    return {"id": idx, "family": o.family, "kind": o.kind, "radius": o.radius, "r_min": o.r_min,
            "r_max": o.r_max, "period": o.period, "closure_defect": o.closure_defect,
            "return_derivative": o.return_derivative, "method": o.method, "votes": list(o.votes)}


def run_stationary2d(sc, threads=None):
    metric = sc.polar_metric()
    p = sc.params
    n_theta = int(p.get("theta_samples", 64))
    _, _, tol = _tols(sc)
    subs = []

    def ergo():
        erg = locate_ergosphere(metric, np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False))
        doc = {"residual": erg.residual, "closure": erg.closure,
               "noncharacteristic_violations": len(erg.noncharacteristic_violations)}
        return SubRun(name="ergosphere", tables={"ergosphere.csv": Table(("theta", "r"), erg.rows())},
                      documents={"ergosphere.json": doc}, results={"ergosphere_r": erg.r})

    subs.append(attempt("ergosphere", ergo))

    searches = []

    def orbits():
        for fam in p.get("families", ["plus", "minus"]):
            searches.append(find_closed_orbits(metric, fam, n_seeds=int(p.get("n_seeds", 8)), seed=sc.seed,
                                               max_time=float(p.get("max_time", 200.0)),
                                               tol=min(tol, 1e-10), dedup_tol=float(p.get("dedup_tol", 1e-6)),
                                               threads=threads))
        found = [o for s in searches for o in s]
        rows = [(i, o.family, o.kind, x, th, r) for i, o in enumerate(found)
                for x, th, r in zip(o.x0, o.theta, o.r)]
        meta = {"orbits": [_orbit_meta(i, o) for i, o in enumerate(found)],
                "searches": [{"family": s.family, "found": len(s), "diagnostics": s.diagnostics} for s in searches]}
        for kind in (BLACK_HORIZON, WHITE_HORIZON):
            pair = extremal_horizons(searches, kind)
            meta[f"{kind}_extremal"] = {
                "inner_radius": None if pair.inner is None else pair.inner.radius,
                "outer_radius": None if pair.outer is None else pair.outer.radius,
                "nested": pair.nested, "same": pair.same, "tol": pair.tol}
        return SubRun(name="orbits",
                      tables={"orbits.csv": Table(("orbit", "family", "kind", "x0", "theta", "r"), rows)},
                      documents={"orbits.json": meta},
                      results={"orbit_radius": [o.radius for o in found], "orbit_kind": [o.kind for o in found]})

    subs.append(attempt("orbits", orbits))

    n_census = int(p.get("census_samples", 50))
    if n_census > 0:
        def census():
            rep = origin_capture_census(metric, p.get("eps"), n_census, sc.seed, threads=threads)
            doc = {"eps": rep.eps, "direction": rep.direction, "n_runs": rep.n_runs, "n_hit": rep.n_hit,
                   "dominance": rep.dominance, "out_of_hypothesis": rep.out_of_hypothesis,
                   "elapsed_max_x0": rep.elapsed_max_x0, "passed": rep.passed,
                   "violators": [{"family": f, "theta0": th,
                                  "outcome": getattr(res, "fate", type(res).__name__)}
                                 for f, th, res in rep.violators]}
            return SubRun(name="census", documents={"census.json": doc},
                          results={"census_n_hit": rep.n_hit, "census_n_runs": rep.n_runs})

        subs.append(attempt("census", census))
    return subs


def run_wave_dn(sc, threads=None):
    metric = sc.radial_metric()
    p = sc.params
    a = float(p["a"])
    pulse = p.get("pulse", {})
    f = Pulse(center=float(pulse.get("center", 0.0)), sigma=float(pulse.get("sigma", a / 10.0)))
    method = p.get("method", "direct")
    dim = int(p.get("dim", 1))
    lo, hi = f.support
    grid = np.linspace(lo, hi + 0.25 * (hi - lo), int(p.get("output_samples", 201)))
    subs = []

    def dn():
        if method == "direct":
            d = dn_direct(metric, f, a, n_cells=int(p.get("n_cells", 320)), dim=dim,
                          cfl=float(p.get("cfl", 0.4)), x0_range=(grid[0], grid[-1]))
            lam = CubicSpline(d.x0, d.lambda_f)(grid)
            diag = d.diagnostics
        elif method == "characteristic":
            if dim != 1:
                raise ConfigurationError("the characteristic DN formula holds for the 1+1 weight (dim=1) only")
            d = dn_characteristic(metric, f, a, grid)
            lam, diag = d.lambda_f, d.diagnostics
        else:
            lam, diag = np.asarray(f.derivative(grid)), {"reference": "f'"}
        rows = [(x, fx, lx, method) for x, fx, lx in zip(grid, f(grid), lam)]
        return SubRun(name="dn", tables={"dn.csv": Table(("x0", "f", "lambda_f", "method"), rows)},
                      documents={"dn.json": {"method": method, "a": a, "dim": dim, "diagnostics": diag}},
                      results={"x0": grid, "lambda_f": lam})

    subs.append(attempt("dn", dn))
    if p.get("refinement"):
        def refine():
            ref = "characteristic" if dim == 1 else "self"
            study = refinement_study(metric, a, f, tuple(p["refinement"]), dim=dim, reference=ref,
                                     threads=threads, cfl=float(p.get("cfl", 0.4)))
            return SubRun(name="refinement", documents={"refinement.json": study.to_dict()},
                          results={"refinement_errors": study.errors, "observed_order": study.orders})
        subs.append(attempt("refinement", refine))
    return subs


def figure_specs(A0):
    """``(name, A, family)`` for the four constant-flow fan plots."""
    a = abs(float(A0))
    return [("fig1a", -a, "plus"), ("fig1b", -a, "minus"), ("fig2a", a, "plus"), ("fig2b", a, "minus")]


def run_figures(sc, threads=None):
    p = sc.params
    A0 = float(sc.metric_spec["A"])
    span = float(p.get("x0_span", 5.0))
    window = (-span, span)
    fan = [abs(A0) * r for r in p.get("r0", FIGURE_FAN)]
    rtol, atol, _ = _tols(sc)
    subs = []
    for name, A, fam in figure_specs(A0):
        metric = acoustic_to_radial(TimeProfile.constant(A))
        jobs = [(r0, d) for r0 in fan for d in ("forward", "backward")]

        def one(job, metric=metric, fam=fam):
            r0, d = job
            return integrate_radial(metric, fam, r0, 0.0, d, window, rtol=rtol, atol=atol)

        def body(jobs=jobs, one=one, name=name, A=A, fam=fam):
            runs = _pmap(one, jobs, threads)
            rows = [(r0, d, x, r, t.fate) for (r0, d), t in zip(jobs, runs) for x, r in zip(t.x0, t.r)]
            meta = {"A": A, "family": fam, "x0_window": list(window),
                    "runs": [{"r0": r0, "direction": d, "fate": t.fate, "fate_x0": t.fate_x0, "fate_r": t.fate_r}
                             for (r0, d), t in zip(jobs, runs)]}
            return SubRun(name=name, tables={f"{name}.csv": Table(("r0", "direction", "x0", "r", "fate"), rows)},
                          documents={f"{name}.json": meta},
                          results={f"{name}_fate": [t.fate for t in runs],
                                   f"{name}_fate_x0": [t.fate_x0 for t in runs]})

        subs.append(attempt(name, body))
    return subs


RUNNERS = {
    "trajectories": run_trajectories,
    "horizon": run_horizon,
    "classify": run_classify,
    "stationary2d": run_stationary2d,
    "wave-dn": run_wave_dn,
    "figures": run_figures,
}


def run_task(sc, threads=None):
    log.info("task %s on scenario %s (kernel backend: %s)", sc.task, sc.name, kernels.BACKEND)
    return RUNNERS[sc.task](sc, threads)
