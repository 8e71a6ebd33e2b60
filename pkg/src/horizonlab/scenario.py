"""Scenario files: schema validation and construction of the objects they describe."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator

from .metric import (
    MetricError,
    PolarMetric2D,
    RadialMetric,
    Window,
    _compile,
    acoustic_to_polar2d,
    acoustic_to_radial,
    banded_radial_metric,
)
from .profiles import TimeProfile

DEFAULT_WINDOW = {"x0_min": -10.0, "x0_max": 10.0}


class ScenarioError(ValueError):
    """Scenario rejected before any work is done; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@lru_cache(maxsize=1)
def schema_text() -> str:
    return resources.files("horizonlab").joinpath("scenario_schema.json").read_text(encoding="utf-8")


def schema() -> dict:
    return json.loads(schema_text())


def _where(err) -> str:
    path = "/".join(str(p) for p in err.absolute_path)
    return f"/{path}" if path else "/"


def _mismatched(sub, depth):
    # a branch that fails on the discriminating "kind" or on the value type is not the intended one
    rel = list(sub.absolute_path)[depth:]
    return rel == ["kind"] or (not rel and sub.validator == "type")


def _flatten(err):
    """Leaf messages of an error, descending into the intended branch of oneOf/anyOf."""
    if err.validator not in ("oneOf", "anyOf") or not err.context:
        return [err]
    depth = len(err.absolute_path)
    by_branch = {}
    for sub in err.context:
        by_branch.setdefault(sub.relative_schema_path[0], []).append(sub)
    intended = [subs for subs in by_branch.values() if not any(_mismatched(s, depth) for s in subs)]
    if len(intended) != 1:
        return [err]
    return [leaf for sub in intended[0] for leaf in _flatten(sub)]


def schema_errors(doc) -> list[str]:
    """Every schema violation as ``"<json pointer>: <message>"``, sorted by location."""
    validator = Draft202012Validator(schema())
    out = []
    for err in validator.iter_errors(doc):
        for leaf in _flatten(err):
            out.append(f"{_where(leaf)}: {leaf.message}")
    return sorted(set(out))


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    """A validated scenario; ``raw`` keeps the document as loaded."""

    name: str
    task: str
    metric_spec: dict
    window: dict
    params: dict
    tolerances: dict
    seed: int
    output: str | None
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def x0_window(self):
        return (float(self.window["x0_min"]), float(self.window["x0_max"]))

    def radial_metric(self) -> RadialMetric:
        return build_radial_metric(self.metric_spec)

    def polar_metric(self) -> PolarMetric2D:
        return build_polar_metric(self.metric_spec)


def build_profile(spec) -> TimeProfile:
    return TimeProfile.from_dict(spec)


def build_radial_metric(spec: dict) -> RadialMetric:
    kind = spec["kind"]
    if kind == "acoustic":
        return acoustic_to_radial(build_profile(spec["A"]))
    if kind == "minkowski":
        return acoustic_to_radial(TimeProfile.constant(0.0))
    if kind == "banded":
        kw = {k: float(spec[k]) for k in ("depth", "center", "width") if k in spec}
        return banded_radial_metric(build_profile(spec["b1"]), **kw)
    if kind == "custom":
        return RadialMetric.from_expressions(spec["g00"], spec["gr0"], spec["grr"], spec["b1"], label="custom")
    raise MetricError(f"metric kind {kind!r} has no radial form")


def build_polar_metric(spec: dict) -> PolarMetric2D:
    kind = spec["kind"]
    if kind == "acoustic":
        return acoustic_to_polar2d(float(spec["A"]), float(spec.get("B", 0.0)))
    if kind == "custom-polar":
        frame = {k: _compile(spec[k], ("r", "theta")) for k in ("g00", "gr0", "gt0", "grr", "grt", "gtt")}
        return PolarMetric2D(frame=frame, b1=_compile(spec["b1"], ("theta",)),
                             b2=_compile(spec["b2"], ("theta",)), provenance="custom")
    raise MetricError(f"metric kind {kind!r} has no polar form")


def _semantic_errors(doc) -> list[str]:
    errs = []
    win = doc.get("window", DEFAULT_WINDOW)
    try:
        Window(win["x0_min"], win["x0_max"], win.get("r_min", 1e-6), win.get("r_max", 1e6))
    except MetricError as exc:
        errs.append(f"/window: {exc}")
    spec = doc["metric"]
    try:
        if doc["task"] == "stationary2d":
            m = build_polar_metric(spec)
            m.frame_components(np.array([1.0]), np.array([0.5]))
        else:
            m = build_radial_metric(spec)
            vals = m.components(np.array([0.0]), np.array([1.0]))
            if not all(np.all(np.isfinite(np.asarray(v, float))) for v in vals):
                errs.append("/metric: components are not finite at (x0, r) = (0, 1)")
    except (MetricError, ValueError, KeyError, TypeError, NameError, SyntaxError, ZeroDivisionError) as exc:
        errs.append(f"/metric: {type(exc).__name__}: {exc}")
    p = doc.get("params", {})
    if doc["task"] == "wave-dn":
        grids = p.get("refinement")
        if grids and any(b <= a for a, b in zip(grids, grids[1:])):
            errs.append("/params/refinement: grids must increase")
    if doc["task"] == "figures" and "A" in spec and spec["A"] == 0:
        errs.append("/metric/A: must be nonzero")
    return errs


def validate_document(doc) -> list[str]:
    """Schema errors, or (if the schema passes) semantic errors; empty when valid."""
    errs = schema_errors(doc)
    if errs:
        return errs
    return _semantic_errors(doc)


def from_document(doc, *, seed: int | None = None) -> Scenario:
    errs = validate_document(doc)
    if errs:
        raise ScenarioError(errs)
    return Scenario(
        name=doc["name"],
        task=doc["task"],
        metric_spec=doc["metric"],
        window=dict(doc.get("window", DEFAULT_WINDOW)),
        params=dict(doc.get("params", {})),
        tolerances=dict(doc.get("tolerances", {})),
        seed=int(doc.get("seed", 0) if seed is None else seed),
        output=doc.get("output"),
        raw=doc,
    )


def load(path, *, seed: int | None = None) -> Scenario:
    """Read and validate a scenario file.

    Raises
    ------
    ScenarioError
        Unreadable JSON or any schema/semantic violation (all of them listed).
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ScenarioError([f"{path}: {exc.strerror or exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"]) from exc
    return from_document(doc, seed=seed)
