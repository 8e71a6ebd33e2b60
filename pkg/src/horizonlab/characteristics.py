"""Characteristic roots, signal speeds, cone duality and trapped-surface tests."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metric import HyperbolicityError, MetricError, RadialMetric

TRAPPED = "trapped"
OUTERMOST_TRAPPED = "outermost-trapped"
ANTITRAPPED = "antitrapped"
OUTERMOST_ANTITRAPPED = "outermost-antitrapped"
UNTRAPPED = "untrapped"

ZERO_ROOT_TOL = 1e-8


class DegenerateClassification(MetricError):
    """Raised when both normal roots are numerically zero."""


@dataclass(frozen=True)
class CharRoots:
    """Roots ``S_x0`` of the radial characteristic equation for ``S_r = 1``."""

    s_minus: float
    s_plus: float
    q: float


@dataclass(frozen=True)
class SurfaceClassification:
    xi0_plus: float
    xi0_minus: float
    verdict: str

    @property
    def is_apparent_horizon(self):
        return self.verdict in (OUTERMOST_TRAPPED, OUTERMOST_ANTITRAPPED)


def _checked(metric: RadialMetric, x0, r):
    if np.any(np.asarray(r) <= 0.0):
        raise MetricError("radial characteristic data needs r > 0")
    g00, gr0, grr = metric.components(x0, r)
    q = gr0 * gr0 - g00 * grr
    if np.any(~(np.asarray(q) > 0.0)):
        raise HyperbolicityError(f"discriminant is not positive at x0={x0!r}, r={r!r}: q={q!r}")
    if np.any(~(np.asarray(g00) > 0.0)):
        raise MetricError("g00 must be positive")
    return g00, gr0, q


def radial_char_roots(metric: RadialMetric, x0, r) -> CharRoots:
    """Both roots ``S_x0 = (-g^{r0} -+ sqrt(q)) / g^{00}`` with their discriminant."""
    g00, gr0, q = _checked(metric, x0, r)
    sq = np.sqrt(q)
    return CharRoots(s_minus=(-gr0 - sq) / g00, s_plus=(-gr0 + sq) / g00, q=q)


def char_speeds(metric: RadialMetric, x0, r):
    """Radial signal speeds ``(c_plus, c_minus) = g^{r0}/g^{00} +- sqrt(q)/g^{00}``."""
    g00, gr0, q = _checked(metric, x0, r)
    d = np.sqrt(q) / g00
    base = gr0 / g00
    return base + d, base - d


def factor_speeds_bpm(metric: RadialMetric, x0, r):
    """Factors ``b_+- = g^{0r} +- sqrt(q)`` of the radial wave operator."""
    _, gr0, q = _checked(metric, x0, r)
    sq = np.sqrt(q)
    return gr0 + sq, gr0 - sq


def classify_surface(metric: RadialMetric, t: float, r_s: float, tol: float = ZERO_ROOT_TOL) -> SurfaceClassification:
    """Classify the sphere ``r = r_s`` of the metric frozen at time ``t``.

    With ``S = r - r_s`` the two normal roots ``xi0_+-`` decide the verdict:
    both positive is trapped, a positive root with the other one zero is the
    outermost trapped sphere, and the mirrored patterns are antitrapped.
    "Zero" means ``|xi| < tol * (1 + |other root|)``.
    """
    if r_s <= 0.0:
        raise MetricError("surface radius must be positive")
    roots = radial_char_roots(metric, t, r_s)
    xp = float(roots.s_plus)
    xm = float(roots.s_minus)
    zero_m = abs(xm) < tol * (1.0 + abs(xp))
    zero_p = abs(xp) < tol * (1.0 + abs(xm))
    if zero_m and zero_p:
        raise DegenerateClassification(f"both normal roots vanish at r={r_s}")
    if zero_m:
        verdict = OUTERMOST_TRAPPED if xp > 0 else OUTERMOST_ANTITRAPPED
    elif zero_p:
        verdict = OUTERMOST_ANTITRAPPED if xm < 0 else OUTERMOST_TRAPPED
    elif xp > 0 and xm > 0:
        verdict = TRAPPED
    elif xp < 0 and xm < 0:
        verdict = ANTITRAPPED
    else:
        verdict = UNTRAPPED
    return SurfaceClassification(xi0_plus=xp, xi0_minus=xm, verdict=verdict)


@dataclass(frozen=True)
class ConeReport:
    n_vectors: int
    n_covectors: int
    min_pairing: float
    counterexamples: tuple

    @property
    def passed(self):
        return not self.counterexamples


def _sample_cone(form, nappe, n, rng, batch=4096, max_batches=2000):
    dim = form.shape[0]
    found = []
    total = 0
    for _ in range(max_batches):
        z = rng.standard_normal((batch, dim))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        quad = np.einsum("ij,jk,ik->i", z, form, z)
        z = z[quad > 0.0]
        z *= np.sign(z @ nappe)[:, None]
        found.append(z)
        total += len(z)
        if total >= n:
            return np.concatenate(found)[:n]
    raise MetricError("cone sampling failed: the timelike cone is too thin to hit by rejection")


def cone_pairing_check(inverse_metric, n_samples: int = 1000, seed: int = 0) -> ConeReport:
    """Sample the forward timelike cone and its dual and check every pairing is positive.

    Vectors satisfy ``g(x, x) > 0`` with ``x_0 > 0`` where ``g`` is the inverse of
    ``inverse_metric``; covectors satisfy ``G(xi, xi) > 0`` in the nappe of
    ``(1, 0, ..., 0)``.  All ``n_samples**2`` pairings are tested.
    """
    G = np.asarray(inverse_metric, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise MetricError("inverse metric must be a square matrix")
    if not G[0, 0] > 0.0:
        raise MetricError("the x0 x0 component of the inverse metric must be positive")
    eig = np.linalg.eigvalsh(G)
    if np.sum(eig > 0) != 1 or np.any(eig == 0.0):
        raise HyperbolicityError("inverse metric is not of Lorentzian signature (+, -, ..., -)")
    g = np.linalg.inv(G)
    rng = np.random.default_rng(seed)
    e0 = np.zeros(G.shape[0])
    e0[0] = 1.0
    xdot = _sample_cone(g, e0, n_samples, rng)
    xi = _sample_cone(G, G @ e0, n_samples, rng)
    pairing = xdot @ xi.T
    bad = np.argwhere(pairing <= 0.0)
    examples = tuple((xdot[i].copy(), xi[j].copy(), float(pairing[i, j])) for i, j in bad[:10])
    return ConeReport(n_vectors=len(xdot), n_covectors=len(xi),
                      min_pairing=float(pairing.min()), counterexamples=examples)
