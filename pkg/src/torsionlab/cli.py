"""torsionlab command line.

Exit codes: 0 all checks pass, 2 a verification failed (or drifted from its
baseline), 3 configuration error, 4 numerical-method failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path

from . import suites
from .config import ConfigError, RunConfig
from .eta import RootBracketingError
from .gluing import FitRefused as GluingFitRefused
from .lattice_zeta import NonDecayingRemainder
from .theta import FitRefused as ThetaFitRefused

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3, 4
SCHEMA = "torsionlab.report/1"
NUMERIC_ERRORS = (RootBracketingError, GluingFitRefused, ThetaFitRefused, NonDecayingRemainder)


class BaselineError(RuntimeError):
    """Missing baseline without --bless, or a baseline with a different schema."""


def json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): json_safe(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, complex):
        return [json_safe(obj.real), json_safe(obj.imag)]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def dumps(doc) -> str:
    return json.dumps(json_safe(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


def report_document(result: suites.SuiteResult, cfg: RunConfig) -> dict:
    doc = result.report.to_dict()
    doc["schema"] = SCHEMA
    doc["provenance"] = {"config_hash": cfg.hash(), "mode_count": result.mode_count,
                         "mode_cutoff": cfg.mode_cutoff, "seed": cfg.seed}
    return doc


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8", newline="")


def persist_and_diff(doc: dict, baseline_path: Path, bless: bool = False) -> dict:
    """Compare a report with its stored baseline; --bless (re)writes the baseline."""
    baseline_path = Path(baseline_path)
    if bless:
        baseline_path.parent.mkdir(parents=True, exist_ok=True)
        baseline_path.write_text(dumps(doc), encoding="utf-8")
        return {"suite": doc["suite"], "blessed": True, "drift": {}, "within_bounds": True}
    if not baseline_path.exists():
        raise BaselineError(f"no baseline at {baseline_path}; rerun with --bless")
    base = json.loads(baseline_path.read_text(encoding="utf-8"))
    if base.get("schema") != doc.get("schema") or set(base.get("residuals", {})) != set(doc["residuals"]):
        raise BaselineError(f"baseline {baseline_path} has a different schema")
    slack = max(_truncation(base), _truncation(doc))
    drift, exceeded = {}, []
    for label, value in doc["residuals"].items():
        old = base["residuals"][label]
        d = abs(_num(value) - _num(old))
        drift[label] = d
        limit = max(doc["tolerances"].get(label, doc["tolerance"]), slack)
        if not d <= limit:
            exceeded.append(label)
    return {"suite": doc["suite"], "blessed": False, "drift": drift, "exceeded": exceeded,
            "identical": dumps(base) == dumps(doc), "within_bounds": not exceeded,
            "truncation_slack": slack}


def _num(v) -> float:
    return float(v) if not isinstance(v, str) else float(v)


def _truncation(doc: dict) -> float:
    """Largest truncation_error anywhere in the details tree."""
    best = 0.0

    def walk(node):
        nonlocal best
        if isinstance(node, dict):
            for k, v in node.items():
                if k == "truncation_error" and isinstance(v, (int, float)):
                    best = max(best, float(v))
                else:
                    walk(v)

    walk(doc.get("details", {}))
    return best


def run_suite(name: str, cfg: RunConfig, out: Path, baseline: Path | None, bless: bool) -> tuple[int, dict]:
    start = time.perf_counter()
    result = suites.SUITES[name](cfg)
    doc = report_document(result, cfg)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{name}.json").write_text(dumps(doc), encoding="utf-8")
    for table, (header, rows) in result.tables.items():
        write_csv(out / f"{table}.csv", header, rows)
    # wall time kept apart so reports stay bit-identical between runs
    (out / f"{name}.timing.json").write_text(
        dumps({"suite": name, "wall_time_s": time.perf_counter() - start}), encoding="utf-8")
    code = EXIT_OK if doc["passed"] else EXIT_FAIL
    summary = {"passed": doc["passed"], "failures": result.report.failures}
    if baseline is not None or bless:
        base_dir = baseline if baseline is not None else out / "baselines"
        drift = persist_and_diff(doc, base_dir / f"{name}.json", bless)
        (out / f"{name}.drift.json").write_text(dumps(drift), encoding="utf-8")
        summary["drift_within_bounds"] = drift["within_bounds"]
        if not drift["within_bounds"]:
            code = max(code, EXIT_FAIL)
    return code, summary


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="torsionlab", description="Cylinder-model torsion verification suites.")
    p.add_argument("command", nargs="?", choices=list(suites.ORDER) + ["all"],
                   help="suite to run, or 'all'")
    p.add_argument("--suite", choices=list(suites.ORDER) + ["all"], help="same as the positional command")
    p.add_argument("--config", type=Path, help="YAML run configuration")
    p.add_argument("--out", type=Path, help="output directory (default: $TORSIONLAB_OUT or config output_dir)")
    p.add_argument("--baseline", type=Path, help="directory of golden reports to diff against")
    p.add_argument("--bless", action="store_true", help="write current reports as the baseline")
    p.add_argument("--jobs", type=int, help="worker processes for per-mode loops")
    p.add_argument("--cutoff", type=float, help="override mode_cutoff")
    return p


def _error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    changes = {}
    if args.cutoff is not None:
        changes["mode_cutoff"] = args.cutoff
    if args.jobs is not None:
        changes["jobs"] = args.jobs
    return cfg.replace(**changes) if changes else cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    name = args.suite or args.command
    if name is None:
        _error("config", "no command given")
        return EXIT_CONFIG
    if args.command and args.suite and args.command != args.suite:
        _error("config", "positional command and --suite disagree")
        return EXIT_CONFIG
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        _error("config", str(exc))
        return EXIT_CONFIG
    out = args.out or Path(os.environ.get("TORSIONLAB_OUT") or cfg.output_dir)
    names = suites.ORDER if name == "all" else (name,)
    worst = EXIT_OK
    summary = {}
    for suite in names:
        try:
            code, info = run_suite(suite, cfg, out, args.baseline, args.bless)
        except NUMERIC_ERRORS as exc:
            code, info = EXIT_NUMERIC, {"passed": False, "error": f"{type(exc).__name__}: {exc}"}
            _error("numerical", f"{suite}: {exc}")
        except BaselineError as exc:
            _error("config", str(exc))
            return EXIT_CONFIG
        except (ValueError, ConfigError) as exc:
            _error("config", f"{suite}: {exc}")
            return EXIT_CONFIG
        summary[suite] = info
        worst = max(worst, code)
        print(f"{suite}: {'PASS' if info.get('passed') else 'FAIL'}")
    if name == "all":
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.json").write_text(
            dumps({"config_hash": cfg.hash(), "suites": summary, "exit_code": worst}), encoding="utf-8")
    return worst


if __name__ == "__main__":
    raise SystemExit(main())
