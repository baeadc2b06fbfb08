"""``wfq run|sweep|validate <config>``.

Exit codes: 0 all checks pass, 1 a check failed, 2 config error, 3 numerical error.
Environment: WFQ_OUTPUT_DIR overrides the output directory, WFQ_WORKERS the
number of sweep processes.
"""
from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time as _time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .config import ExperimentConfig, load_config, resolve_output_dir, resolve_workers
from .convergence import convergence_study
from .errors import NumericalError, ValidationError
from .experiments import POINT_CHECKS, POINTS, REPORTED_ORDERS, SWEEP_CHECKS
from .io import write_table_csv

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


def _target(cfg: ExperimentConfig) -> str:
    return cfg.convergence["target"] if cfg.name == "convergence" else cfg.name


def _point_job(args):
    cfg, name, N, M = args
    result = POINTS[name](cfg, N, M)
    return N, M, result


def run_points(cfg: ExperimentConfig, pairs, workers: int = 1):
    """Evaluate the point function at each (N, M); results ordered by decreasing eps."""
    name = _target(cfg)
    jobs = [(cfg, name, N, M) for N, M in pairs]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_point_job, jobs))
    else:
        results = [_point_job(job) for job in jobs]
    T = float(cfg.grid["T"])
    return sorted(results, key=lambda r: -T / r[0])


def _compare(value, op, threshold):
    if op == "<":
        return value < threshold
    if op == "<=":
        return value <= threshold
    if op == "abs<":
        return abs(value) < threshold
    if op == "is":
        return value is threshold or value == threshold
    raise ValueError(op)


def point_checks(cfg, metrics, label="", at_grid=True):
    checks = {}
    for check, metric, op, tol, *scope in POINT_CHECKS.get(_target(cfg), []):
        if metric not in metrics or (scope == ["grid"] and not at_grid):
            continue
        threshold = cfg.tolerance(tol) if isinstance(tol, str) else tol
        checks[check + label] = {"metric": metric, "value": metrics[metric], "threshold": threshold,
                                 "passed": bool(_compare(metrics[metric], op, threshold))}
    return checks


def _sweep_specs(cfg):
    if cfg.name == "convergence":
        order = cfg.tolerance("order_min", float(cfg.convergence.get("order_min", 1.0)))
        return [("order", cfg.convergence["metric"], "order", order)]
    specs = []
    for check, metric, kind, default in SWEEP_CHECKS.get(cfg.name, []):
        specs.append((check, metric, kind, cfg.tolerance("order_min", default) if kind == "order" else None))
    return specs


def sweep_analysis(cfg, results):
    """Convergence studies and sweep-level checks."""
    T = float(cfg.grid["T"])
    eps = [T / N for N, _, _ in results]
    studies, checks = {}, {}

    def series(metric):
        values = [r[2]["metrics"].get(metric) for r in results]
        return None if any(v is None for v in values) else values

    specs = _sweep_specs(cfg)
    extra = [m for m in REPORTED_ORDERS.get(_target(cfg), []) if cfg.name != "convergence"]
    for check, metric, kind, threshold in specs:
        values = series(metric)
        if values is None:
            raise ValidationError(f"metric '{metric}' is not produced by experiment '{_target(cfg)}'")
        if kind == "order":
            study = convergence_study(eps, values)
            studies[metric] = study.to_dict()
            passed = study.exact or (study.order >= threshold and study.reliable)
            checks[check] = {"metric": metric, "value": study.order_label(), "threshold": threshold,
                             "reliable": study.reliable, "passed": bool(passed)}
        else:
            values = np.asarray(values, dtype=float)
            passed = bool(values.size >= 2 and np.all(np.diff(values) < 0))
            checks[check] = {"metric": metric, "value": values.tolist(), "threshold": "strictly decreasing",
                             "passed": passed}
    for metric in extra:
        values = series(metric)
        if values is not None and len(values) >= 3 and metric not in studies:
            try:
                studies[metric] = convergence_study(eps, values).to_dict()
            except ValidationError:
                pass
    return studies, checks


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _write_tables(directory, tables):
    os.makedirs(directory, exist_ok=True)
    for filename, (header, rows) in tables.items():
        write_table_csv(rows, header, os.path.join(directory, filename))


def execute(cfg: ExperimentConfig, mode: str, output_dir=None, workers=None) -> dict:
    """Run the experiment, write artifacts and return the report dict."""
    start = _time.perf_counter()
    out = resolve_output_dir(cfg, output_dir)
    n_workers = resolve_workers(cfg, workers)
    if mode == "sweep" and not cfg.sweep:
        raise ValidationError(f"{cfg.source}: 'sweep' needs a [sweep] section with pairs")
    if mode == "sweep" and cfg.name not in SWEEP_CHECKS and cfg.name != "convergence":
        raise ValidationError(f"{cfg.source}: experiment '{cfg.name}' has no sweep form")
    sweeping = cfg.name == "convergence" or (bool(cfg.sweep) and cfg.name in SWEEP_CHECKS)
    pairs = cfg.sweep if sweeping else [(cfg.grid["N"], cfg.grid["M"])]
    if sweeping:
        needed = 3 if any(kind == "order" for _, _, kind, _ in _sweep_specs(cfg)) else 2
        if len(pairs) < needed:
            raise ValidationError(f"{cfg.source}: this sweep needs at least {needed} (N, M) pairs")
    results = run_points(cfg, pairs, n_workers)

    os.makedirs(out, exist_ok=True)
    checks, points = {}, []
    T = float(cfg.grid["T"])
    for N, M, result in results:
        label = f"[N={N},M={M}]" if len(results) > 1 else ""
        at_grid = (N, M) == (cfg.grid["N"], cfg.grid["M"])
        checks.update(point_checks(cfg, result["metrics"], label, at_grid))
        points.append({"N": N, "M": M, "eps": T / N, "metrics": result["metrics"]})
        sub = os.path.join(out, f"N{N}_M{M}") if len(results) > 1 else out
        _write_tables(sub, result["tables"])
    studies = {}
    if sweeping:
        studies, sweep_checks = sweep_analysis(cfg, results)
        checks.update(sweep_checks)

    metric_names = sorted({k for p in points for k in p["metrics"]})
    write_table_csv([[p["N"], p["M"], p["eps"]] + [p["metrics"].get(k, "") for k in metric_names] for p in points],
                    ["N", "M", "eps"] + metric_names, os.path.join(out, "points.csv"))
    if studies:
        rows = []
        for metric, st in studies.items():
            pair = [""] + list(st["pair_orders"])
            rows.extend((metric, e, v, po) for e, v, po in zip(st["eps"], st["metric"], pair))
        write_table_csv(rows, ["metric", "eps", "value", "pair_order"], os.path.join(out, "convergence.csv"))

    passed = all(c["passed"] for c in checks.values())
    report = {
        "schema_version": SCHEMA_VERSION,
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "command": mode,
        "experiment": cfg.name,
        "config": cfg.echo(),
        "points": points,
        "convergence": studies,
        "checks": checks,
        "passed": passed,
        "wall_clock_s": _time.perf_counter() - start,
    }
    with open(os.path.join(out, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, default=_jsonable)
    with open(os.path.join(out, "summary.txt"), "w") as fh:
        fh.write(summary_text(report))
    return report


def summary_text(report) -> str:
    lines = [f"experiment {report['experiment']} ({report['command']}), wfq {report['code_version']}"]
    for p in report["points"]:
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in p["metrics"].items())
        lines.append(f"  N={p['N']} M={p['M']}: {shown}")
    for metric, st in report["convergence"].items():
        order = st["order"] if isinstance(st["order"], str) else f"{st['order']:.3f}"
        flag = "" if st["reliable"] else " (unreliable: non-monotone)"
        lines.append(f"  order[{metric}] = {order}{flag}")
    for name, c in report["checks"].items():
        lines.append(f"  {'PASS' if c['passed'] else 'FAIL'} {name}: {_fmt(c['value'])} vs {c['threshold']}")
    lines.append("PASSED" if report["passed"] else "FAILED")
    return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def build_parser():
    parser = argparse.ArgumentParser(prog="wfq", description="Wave-functional action experiments.")
    parser.add_argument("--version", action="version", version=f"wfq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "run the configured experiment"),
                            ("sweep", "run the experiment over every [sweep] pair and fit orders"),
                            ("validate", "parse and validate a config without running it")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config")
        if name != "validate":
            p.add_argument("-o", "--output-dir", default=None)
            p.add_argument("-j", "--workers", type=int, default=None)
            p.add_argument("-q", "--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "validate":
            print(json.dumps(cfg.echo(), indent=2))
            print(f"{args.config}: ok")
            return EXIT_OK
        report = execute(cfg, args.command, args.output_dir, args.workers)
    except ValidationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if not args.quiet:
        print(summary_text(report), end="")
    return EXIT_OK if report["passed"] else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
