"""Command-line front-end: ``horizonlab run | compare | schema``.

Exit codes: 0 success, 1 compare found differences above tolerance,
2 invalid input (nothing is written), 3 numerical failure (a
``diagnostics.json`` is written next to the summary).
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .artifacts import read_json, to_jsonable, write_csv, write_json
from .scenario import ScenarioError, load, schema_text
from .tasks import run_task

EXIT_OK = 0
EXIT_DIFFERENT = 1
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

SUMMARY = "summary.json"
DIAGNOSTICS = "diagnostics.json"

log = logging.getLogger("horizonlab")


def _configure_logging():
    name = os.environ.get("HORIZONLAB_LOG", "WARNING").upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def _u64(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


# ---------------------------------------------------------------------------
# run

def run(scenario_path, out=None, seed=None, threads=None, stderr=None) -> int:
    stderr = stderr or sys.stderr
    try:
        sc = load(scenario_path, seed=seed)
    except ScenarioError as exc:
        print(f"invalid scenario {scenario_path}:", file=stderr)
        for e in exc.errors:
            print(f"  {e}", file=stderr)
        return EXIT_INVALID
    out_dir = Path(out or sc.output or Path("runs") / sc.name)
    subs = run_task(sc, threads)
    artifacts = []
    for sub in subs:
        for name, table in sub.tables.items():
            write_csv(out_dir / name, table.header, table.rows)
            artifacts.append(name)
        for name, doc in sub.documents.items():
            write_json(out_dir / name, doc)
            artifacts.append(name)
    failed = [s for s in subs if s.status != "ok"]
    if failed:
        write_json(out_dir / DIAGNOSTICS, {"scenario": sc.name, "task": sc.task,
                                           "failures": [{"subtask": s.name, **s.error} for s in failed]})
        artifacts.append(DIAGNOSTICS)
    results = {}
    for s in subs:
        results.update(s.results)
    summary = {
        "scenario": sc.name,
        "task": sc.task,
        "seed": sc.seed,
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "status": "numerical-failure" if failed else "ok",
        "subtasks": [{"name": s.name, "status": s.status} for s in subs],
        "artifacts": sorted(artifacts),
        "results": results,
    }
    write_json(out_dir / SUMMARY, summary)
    for s in failed:
        print(f"{s.name}: {s.error['type']}: {s.error['message']}", file=stderr)
    return EXIT_NUMERICAL if failed else EXIT_OK


# ---------------------------------------------------------------------------
# compare

def _flatten(prefix, obj, out):
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten(f"{prefix}.{k}" if prefix else k, v, out)
    else:
        out[prefix] = obj


def _numeric(v):
    if v is None:
        return np.array([math.nan])
    arr = np.asarray([math.nan if x is None else x for x in v] if isinstance(v, list) else [v], dtype=object)
    try:
        return arr.astype(float)
    except (TypeError, ValueError):
        return None


def _field_diff(a, b):
    na, nb = _numeric(a), _numeric(b)
    if na is None or nb is None:
        equal = a == b
        return {"kind": "categorical", "equal": equal}, not equal
    if na.shape != nb.shape:
        return {"kind": "numeric", "error": f"length mismatch {na.size} vs {nb.size}"}, True
    both_nan = np.isnan(na) & np.isnan(nb)
    d = np.where(both_nan, 0.0, np.abs(na - nb))
    if np.any(np.isnan(d)):
        return {"kind": "numeric", "error": "value present in one run only", "n": int(na.size)}, True
    return {"kind": "numeric", "n": int(na.size), "max_abs": float(d.max()) if d.size else 0.0,
            "rms": float(np.sqrt(np.mean(d * d))) if d.size else 0.0}, False


class IncompatibleRunsError(ValueError):
    pass


def compare_runs(run_a, run_b, tolerance: float = 0.0) -> dict:
    """Field-wise comparison of the ``results`` blocks of two run summaries.

    Numeric fields get max-abs and RMS differences; categorical ones an
    equality flag.  Fields present in one run only are listed under
    ``only_in`` and otherwise ignored.  ``within_tolerance`` is true when
    every shared numeric max-abs is at most ``tolerance`` and no shared
    field differs in kind, length or category.

    Raises
    ------
    IncompatibleRunsError
        Missing summaries or different task types.
    """
    docs = []
    for d in (run_a, run_b):
        path = Path(d) / SUMMARY
        if not path.is_file():
            raise IncompatibleRunsError(f"{d}: no {SUMMARY}")
        docs.append(read_json(path))
    a, b = docs
    if a.get("task") != b.get("task"):
        raise IncompatibleRunsError(f"task types differ: {a.get('task')!r} vs {b.get('task')!r}")
    fa, fb = {}, {}
    _flatten("", a.get("results", {}), fa)
    _flatten("", b.get("results", {}), fb)
    fields = {}
    bad = False
    overall = 0.0
    unmatched = {"a": sorted(set(fa) - set(fb)), "b": sorted(set(fb) - set(fa))}
    for key in sorted(set(fa) & set(fb)):
        rep, mismatch = _field_diff(fa[key], fb[key])
        fields[key] = rep
        bad |= mismatch
        if "max_abs" in rep:
            overall = max(overall, rep["max_abs"])
    return {"task": a["task"], "run_a": str(run_a), "run_b": str(run_b), "tolerance": tolerance,
            "max_abs": overall, "within_tolerance": (not bad) and overall <= tolerance, "fields": fields,
            "only_in": unmatched}


def compare(run_a, run_b, tolerance=0.0, report=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        rep = compare_runs(run_a, run_b, tolerance)
    except IncompatibleRunsError as exc:
        print(f"cannot compare: {exc}", file=stderr)
        return EXIT_INVALID
    if report:
        write_json(report, rep)
    print(json.dumps(to_jsonable(rep), sort_keys=True, indent=2), file=stdout)
    return EXIT_OK if rep["within_tolerance"] else EXIT_DIFFERENT


# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="horizonlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file and write its artifacts")
    p_run.add_argument("--scenario", required=True, help="scenario JSON file")
    p_run.add_argument("--out", help="output directory (default: the scenario's own, else runs/<name>)")
    p_run.add_argument("--seed", type=_u64, help="override the scenario seed")
    p_run.add_argument("--threads", type=_positive_int, help="worker threads for independent sub-runs")

    p_cmp = sub.add_parser("compare", help="diff the results of two run directories")
    p_cmp.add_argument("run_a")
    p_cmp.add_argument("run_b")
    p_cmp.add_argument("--tolerance", type=float, default=0.0)
    p_cmp.add_argument("--report", help="also write the report JSON here")

    sub.add_parser("schema", help="print the scenario JSON schema")
    return parser


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return run(args.scenario, args.out, args.seed, args.threads)
    if args.command == "compare":
        return compare(args.run_a, args.run_b, args.tolerance, args.report)
    sys.stdout.write(schema_text())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
