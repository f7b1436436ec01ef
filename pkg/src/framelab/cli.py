"""Command line front end.

``framelab run JOB``       run the job and write a JSON and a text report
``framelab validate JOB``  only parse and validate the job
``framelab sweep JOB``     run a sweep job; also writes a CSV and an SVG plot

Exit status: 0 when the job ran (whatever the verdict), 2 for input
errors, 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    ConstantsError,
    DimensionError,
    ExponentError,
    FrameLabError,
    NonFiniteError,
    NotAFrameError,
    NotARieszBasisError,
    PreconditionError,
    SideConditionError,
    UnsupportedTranslationError,
)
from .jobs import JobError, JobSpec, execute, parse_job

REPORT_SCHEMA = "framelab.report/1"
CSV_HEADER = ("param", "pred_lower", "pred_upper", "act_lower", "act_upper", "verdict")
EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

INPUT_ERRORS = (
    JobError,
    DimensionError,
    NonFiniteError,
    ExponentError,
    ConstantsError,
    NotAFrameError,
    NotARieszBasisError,
    PreconditionError,
    SideConditionError,
    UnsupportedTranslationError,
)


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings, numpy scalars plain."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def dumps_report(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def build_report(job: JobSpec, job_path: str, oracle: str) -> dict:
    return {
        "schema_version": REPORT_SCHEMA,
        "framelab_version": __version__,
        "generated_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "job_file": os.path.basename(job_path),
        "job": job.to_dict(),
        "oracle_mode": oracle,
        "result": execute(job, oracle=oracle),
    }


# ---------------------------------------------------------------------------
# text, CSV and SVG renderings


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def text_report(report: dict) -> str:
    res = report["result"]
    lines = [f"framelab report ({report['schema_version']})", f"job: {report['job_file']}", f"analysis: {res['analysis']}"]
    if "report" in res:
        r = res["report"]
        lines += [
            f"theorem: {r['theorem_id']}",
            f"verdict: {r['verdict']}",
            f"hypothesis: {r['hypothesis_status']}",
            "margins:",
        ]
        lines += [f"  {k}: {_fmt(v)}" for k, v in sorted(r["margins"].items())]
        lines.append(f"delta: {_fmt(r['delta'])}")
        lines.append(f"predicted: [{_fmt(r['predicted_lower'])}, {_fmt(r['predicted_upper'])}]")
        lo, hi = r["actual_lower"], r["actual_upper"]
        if lo or hi:
            lines.append(
                f"actual: lower {_fmt(lo and lo['value'])} (bracket {_fmt(lo and lo['certified_low'])}.."
                f"{_fmt(lo and lo['certified_high'])}), upper {_fmt(hi and hi['value'])} "
                f"(certified <= {_fmt(hi and hi['certified_high'])})"
            )
        if r["checks"]:
            lines.append("checks: " + ", ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in sorted(r["checks"].items())))
        if res.get("oracle"):
            for key, val in sorted(res["oracle"].items()):
                if isinstance(val, dict):
                    lines.append(f"oracle {key}: {_fmt(val['value'])} (gap {_fmt(val['gap'])})")
                else:
                    lines.append(f"oracle {key}: {val}")
    elif "rows" in res:
        lines.append(f"sweep over {res['sweep']['parameter']} for {res['sweep']['analysis']}")
        lines.append("  ".join(CSV_HEADER))
        for row in res["rows"]:
            lines.append("  ".join(_fmt(row[c]) for c in CSV_HEADER))
    else:
        lines.append(json.dumps(_clean(res["result"]), sort_keys=True, indent=2))
    return "\n".join(lines) + "\n"


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in rows:
        w.writerow(["" if row[c] is None else (repr(row[c]) if isinstance(row[c], float) else row[c]) for c in CSV_HEADER])
    return buf.getvalue()


SERIES = (
    ("pred_lower", "#1f77b4", "6,4", "predicted lower"),
    ("pred_upper", "#d62728", "6,4", "predicted upper"),
    ("act_lower", "#1f77b4", "", "actual lower"),
    ("act_upper", "#d62728", "", "actual upper"),
)


def sweep_svg(rows, parameter: str, width: int = 640, height: int = 400) -> str:
    """Line plot of predicted (dashed) and actual (solid) bounds."""
    left, right, top, bottom = 70, 160, 20, 50
    xs = [r["param"] for r in rows]
    ys = [r[k] for r in rows for k, *_ in SERIES if r[k] is not None]
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y0, y1 = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = width - left - right, height - top - bottom

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + (1.0 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    for i in range(5):
        yv = y0 + (y1 - y0) * i / 4
        xv = x0 + (x1 - x0) * i / 4
        out.append(f'<text x="{left - 6}" y="{sy(yv) + 4:.2f}" font-size="11" text-anchor="end">{yv:.4g}</text>')
        out.append(f'<text x="{sx(xv):.2f}" y="{top + ph + 16}" font-size="11" text-anchor="middle">{xv:.4g}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 10}" font-size="12" text-anchor="middle">{parameter}</text>')
    for idx, (key, color, dash, label) in enumerate(SERIES):
        # break the line wherever a value is missing
        segment: list[str] = []
        segments = []
        for r in rows:
            if r[key] is None:
                if segment:
                    segments.append(segment)
                segment = []
            else:
                segment.append(f"{sx(r['param']):.2f},{sy(r[key]):.2f}")
        if segment:
            segments.append(segment)
        style = f' stroke-dasharray="{dash}"' if dash else ""
        for seg in segments:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{style} points="{" ".join(seg)}"/>')
        ly = top + 14 + 18 * idx
        out.append(f'<line x1="{width - right + 10}" y1="{ly}" x2="{width - right + 34}" y2="{ly}" stroke="{color}"{style}/>')
        out.append(f'<text x="{width - right + 40}" y="{ly + 4}" font-size="11">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# commands


def _load(path: str, args) -> JobSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise JobError("<file>", f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise JobError("<json>", f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    env_seed = os.environ.get("FRAMELAB_SEED")
    seed = None
    if env_seed not in (None, ""):
        try:
            seed = int(env_seed)
        except ValueError:
            raise JobError("FRAMELAB_SEED", f"expected an integer, got {env_seed!r}") from None
    overrides = {
        "seed": seed,
        "max_delta": getattr(args, "max_delta", None),
        "tol_residual": getattr(args, "tol_residual", None),
    }
    return parse_job(doc, overrides)


def _write_outputs(report: dict, job_path: str, out_dir: str) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(job_path).stem
    written = []
    json_path = out / f"{stem}.report.json"
    json_path.write_text(dumps_report(report), encoding="utf-8")
    written.append(json_path)
    txt_path = out / f"{stem}.report.txt"
    txt_path.write_text(text_report(report), encoding="utf-8")
    written.append(txt_path)
    res = report["result"]
    if "rows" in res:
        csv_path = out / f"{stem}.sweep.csv"
        csv_path.write_text(sweep_csv(res["rows"]), encoding="utf-8")
        svg_path = out / f"{stem}.sweep.svg"
        svg_path.write_text(sweep_svg(res["rows"], res["sweep"]["parameter"]), encoding="utf-8")
        written += [csv_path, svg_path]
    return written


def cmd_validate(args) -> int:
    job = _load(args.job, args)
    target = job.sweep.analysis if job.sweep else job.analysis
    print(f"ok: {args.job} ({target}, X dim {job.space_X.dim}, Xd dim {job.space_Xd.dim})")
    return EXIT_OK


def cmd_run(args, require_sweep: bool = False) -> int:
    job = _load(args.job, args)
    if require_sweep and job.analysis != "sweep":
        raise JobError("analysis", "the sweep command needs analysis 'sweep' and a 'sweep' object")
    report = build_report(job, args.job, args.oracle)
    for path in _write_outputs(report, args.job, args.out):
        print(path)
    res = report["result"]
    if "report" in res:
        print(f"verdict: {res['report']['verdict']}")
    elif "rows" in res:
        counts: dict = {}
        for row in res["rows"]:
            counts[row["verdict"]] = counts.get(row["verdict"], 0) + 1
        print("verdicts: " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="framelab", description="Perturbation checks for frames in l^p models.")
    parser.add_argument("--version", action="version", version=f"framelab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_options(p):
        p.add_argument("job", help="job JSON file")
        p.add_argument("--out", default="framelab-out", help="output directory (default: %(default)s)")
        p.add_argument("--max-delta", type=float, default=None, help="reject instances whose Delta exceeds this")
        p.add_argument("--tol-residual", type=float, default=None, help="residual tolerance (default 1e-8)")
        p.add_argument("--oracle", choices=("auto", "on", "off"), default="auto", help="brute-force cross-checks")

    add_run_options(sub.add_parser("run", help="run a job"))
    add_run_options(sub.add_parser("sweep", help="run a sweep job"))
    v = sub.add_parser("validate", help="validate a job without running it")
    v.add_argument("job")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return cmd_validate(args)
        return cmd_run(args, require_sweep=args.command == "sweep")
    except INPUT_ERRORS as exc:
        print(f"framelab: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FrameLabError, np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        print(f"framelab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
