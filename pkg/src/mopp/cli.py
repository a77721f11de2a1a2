"""Command line runner: config parsing, iteration tables, JSON reports and weight sweeps.

Usage::

    mopp run CONFIG [--key=value ...]
    mopp sweep CONFIG --weights FILE [--key=value ...]
    mopp validate PROBLEM [--samples N] [--seed S]

A config file is a flat list of ``key=value`` tokens separated by whitespace
or newlines; ``#`` starts a comment. Every key may also be given as a
``--key=value`` flag, which overrides the file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import BudgetError, ConfigError, InnerSolveError, IoError, MoppError
from .inner_solver import InnerConfig
from .model import nondominated_mask
from .outer_loop import AlphaSchedule, SolverConfig, SummableSequence, run
from .problems import get_problem, validate_problem
from .scalarization import normalize_weights

log = logging.getLogger("mopp")

KEYS = (
    "problem",
    "variant",
    "x0",
    "z",
    "alpha",
    "step_tol",
    "crit_tol",
    "crit_measure",
    "max_outer",
    "delta0",
    "delta_power",
    "e0",
    "mode",
    "inner_tol",
    "feas_tol",
    "seed",
    "out_dir",
)
DEFAULT_OUT_DIR = "mopp_out"
EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


def parse_settings(text: str) -> dict:
    """Split ``key=value`` tokens into a dict, rejecting unknown keys."""
    out = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        for token in line.split():
            key, sep, value = token.partition("=")
            if not sep or not key:
                raise ConfigError(f"expected key=value, got {token!r}")
            if key not in KEYS:
                raise ConfigError("unknown key", key=key)
            out[key] = value
    return out


def _float(settings, key, default):
    if key not in settings:
        return default
    try:
        v = float(settings[key])
    except ValueError:
        raise ConfigError(f"malformed number {settings[key]!r}", key=key) from None
    if not math.isfinite(v):
        raise ConfigError("must be finite", key=key)
    return v


def _vector(settings, key):
    try:
        return [float(v) for v in settings[key].split(",") if v != ""]
    except ValueError:
        raise ConfigError(f"malformed number list {settings[key]!r}", key=key) from None


def _alpha(spec: str) -> AlphaSchedule:
    kind, _, arg = spec.partition(":")
    try:
        if kind == "list":
            return AlphaSchedule("list", values=tuple(float(v) for v in arg.split(",")))
        if kind in ("const", "harmonic"):
            return AlphaSchedule(kind, float(arg))
    except ValueError:
        raise ConfigError(f"malformed alpha schedule {spec!r}", key="alpha") from None
    raise ConfigError(f"alpha must be const:<a>, harmonic:<a0> or list:<a,...>, got {spec!r}", key="alpha")


def build_config(settings: dict):
    """Turn raw settings into ``(ProblemSpec, SolverConfig)``."""
    problem = get_problem(settings.get("problem", "paper_example"))
    variant = settings.get("variant", "SPP").upper()
    if variant == "CISPP" and problem.convexity_class != "convex":
        raise ConfigError(f"CISPP needs a convex problem; {problem.name} is {problem.convexity_class}", key="variant")
    for key in ("step_tol", "crit_tol", "inner_tol", "feas_tol", "delta0", "e0"):
        if _float(settings, key, 0.0) < 0:
            raise ConfigError("must be nonnegative", key=key)
    if "x0" not in settings:
        raise ConfigError("starting point is required", key="x0")
    x0 = _vector(settings, "x0")
    z = _vector(settings, "z") if "z" in settings else [1.0] * problem.m
    max_outer = _float(settings, "max_outer", 200)
    seed = _float(settings, "seed", 0)
    if max_outer != int(max_outer) or seed != int(seed):
        raise ConfigError("must be an integer", key="max_outer" if max_outer != int(max_outer) else "seed")
    inner_defaults = InnerConfig()
    try:
        inner = InnerConfig(
            inner_tol=_float(settings, "inner_tol", inner_defaults.inner_tol),
            feas_tol=_float(settings, "feas_tol", inner_defaults.feas_tol),
        )
    except MoppError as err:
        raise ConfigError(str(err), key="inner_tol") from None
    config = SolverConfig(
        variant=variant,
        x0=tuple(x0),
        z=tuple(z),
        alpha=_alpha(settings.get("alpha", "const:1")),
        constraint_mode=settings.get("mode"),
        stop_step_tol=_float(settings, "step_tol", 1e-4),
        stop_criticality_tol=_float(settings, "crit_tol", 1e-6),
        criticality_measure=settings.get("crit_measure", "normalized"),
        max_outer=int(max_outer),
        delta_budget=SummableSequence(_float(settings, "delta0", 0.1), _float(settings, "delta_power", 2.0)),
        e_budget=SummableSequence(_float(settings, "e0", 1e-6), 2.0),
        inner=inner,
        rng_seed=int(seed),
    )
    if len(config.x0) != problem.n:
        raise ConfigError(f"expected {problem.n} coordinates", key="x0")
    if len(config.z) != problem.m:
        raise ConfigError(f"expected {problem.m} weights", key="z")
    return problem, config


def parse_config(path=None, flags=None, text=None):
    """Read a config file and/or flag overrides into ``(ProblemSpec, SolverConfig)``.

    Args:
        path: Config file with ``key=value`` tokens.
        flags: Mapping of overrides (takes precedence over the file).
        text: Config text, used instead of ``path``.
    """
    return build_config(load_settings(path, flags, text))


def load_settings(path=None, flags=None, text=None) -> dict:
    settings = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as err:
            raise ConfigError(f"cannot read config file: {err}", key="config") from None
    if text is not None:
        settings.update(parse_settings(text))
    for key, value in (flags or {}).items():
        if key not in KEYS:
            raise ConfigError("unknown key", key=key)
        if value is not None:
            settings[key] = str(value)
    return settings


# ----------------------------------------------------------------------------
# artifacts
# ----------------------------------------------------------------------------


def _fmt(v):
    return f"{v:.5f}"


def _write(sink, text):
    if sink is None:
        return
    try:
        if isinstance(sink, (str, os.PathLike)):
            Path(sink).write_text(text)
        else:
            sink.write(text)
    except OSError as err:
        raise IoError(f"cannot write artifact: {err}") from err


def emit_iteration_table(report, sink=None) -> str:
    """CSV with one row per record: ``k,inner_iters,x,step_norm,scalarized,F1..Fm``.

    Coordinates of ``x`` are joined by ``;``. Reals use 5 decimals.
    """
    if not report.records:
        raise ValueError("report has no records")
    m = len(report.records[0].f)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "inner_iters", "x", "step_norm", "scalarized"] + [f"F{i + 1}" for i in range(m)])
    for r in report.records:
        w.writerow(
            [r.k, r.inner_iterations, ";".join(_fmt(v) for v in r.x), _fmt(r.step_norm), _fmt(r.scalarized)]
            + [_fmt(v) for v in r.f]
        )
    text = buf.getvalue()
    _write(sink, text)
    return text


def parse_iteration_table(text: str) -> list:
    """Inverse of :func:`emit_iteration_table` (values at 5-decimal precision)."""
    rows = []
    for row in csv.DictReader(io.StringIO(text)):
        rows.append(
            {
                "k": int(row["k"]),
                "inner_iters": int(row["inner_iters"]),
                "x": [float(v) for v in row["x"].split(";")],
                "step_norm": float(row["step_norm"]),
                "scalarized": float(row["scalarized"]),
                "f": [float(row[k]) for k in row if k.startswith("F")],
            }
        )
    return rows


def _clean(obj):
    """Replace non-finite floats by ``None`` so the output is strict JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def report_to_dict(report) -> dict:
    cfg = report.config_echo
    records = [r.to_dict() for r in report.records]
    budget = cfg.delta_budget
    ledger = {
        "delta_sum": report.records[-1].delta_sum,
        "delta_budget_partial_sums": [budget.partial_sum(r.k - 1) if r.k else 0.0 for r in report.records],
        "e_norm_sum": float(sum(r.e_norm for r in report.records)),
    }
    return _clean(
        {
            "problem": report.problem,
            "variant": cfg.variant,
            "termination": report.termination,
            "message": report.message,
            "iterations": report.iterations,
            "x_final": [float(v) for v in report.x_final],
            "config": cfg.to_dict(),
            "final_certificate": None if report.final_certificate is None else report.final_certificate.to_dict(),
            "budget_ledger": ledger,
            "records": records,
        }
    )


def emit_run_report(report, sink=None) -> str:
    """JSON run report with sorted keys; wall time is deliberately omitted."""
    text = json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"
    _write(sink, text)
    return text


# ----------------------------------------------------------------------------
# sweeps
# ----------------------------------------------------------------------------


@dataclass
class SweepRow:
    z: np.ndarray
    x_final: np.ndarray = None
    f_final: np.ndarray = None
    termination: str = ""
    kept: bool = False
    error: str = ""


def sweep_weights(problem, weight_grid, base_config) -> list:
    """Run ``base_config`` once per weight from the same start.

    Final objective vectors are filtered for Pareto dominance; a failed run
    is recorded with its error and never kept.
    """
    if len(weight_grid) == 0:
        raise ConfigError("weight grid is empty", key="weights")
    rows = []
    for w in weight_grid:
        z = normalize_weights(w)
        row = SweepRow(z)
        try:
            rep = run(problem, replace(base_config, z=z))
        except (InnerSolveError, MoppError) as err:
            row.termination, row.error = "error", str(err)
        else:
            row.x_final, row.f_final, row.termination = rep.x_final, rep.records[-1].f, rep.termination
            if rep.termination == "inner_failure":
                row.error = rep.message
        rows.append(row)
    ok = [i for i, r in enumerate(rows) if r.f_final is not None and not r.error]
    if ok:
        mask = nondominated_mask([rows[i].f_final for i in ok])
        for i, keep in zip(ok, mask):
            rows[i].kept = bool(keep)
    return rows


def emit_sweep_table(rows, sink=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "z", "x_final", "F_final", "termination", "kept"])
    for i, r in enumerate(rows):
        join = lambda v: "" if v is None else ";".join(_fmt(t) for t in v)  # noqa: E731
        w.writerow([i, join(r.z), join(r.x_final), join(r.f_final), r.termination, int(r.kept)])
    text = buf.getvalue()
    _write(sink, text)
    return text


def read_weights(path) -> list:
    """One weight vector per line, comma separated; ``#`` comments allowed."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as err:
        raise ConfigError(f"cannot read weights file: {err}", key="weights") from None
    out = []
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if line:
            try:
                out.append([float(v) for v in line.split(",")])
            except ValueError:
                raise ConfigError(f"malformed weight line {line!r}", key="weights") from None
    return out


# ----------------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------------


def _out_dir(settings):
    return Path(os.environ.get("MOPP_OUT_DIR") or settings.get("out_dir") or DEFAULT_OUT_DIR)


def _add_overrides(p):
    for key in KEYS:
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None)


def build_parser():
    parser = argparse.ArgumentParser(prog="mopp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one solver configuration")
    p_run.add_argument("config", nargs="?")
    _add_overrides(p_run)
    p_sweep = sub.add_parser("sweep", help="run one configuration per weight vector")
    p_sweep.add_argument("config", nargs="?")
    p_sweep.add_argument("--weights", required=True)
    _add_overrides(p_sweep)
    p_val = sub.add_parser("validate", help="sample quasiconvexity and nonnegativity of a built-in")
    p_val.add_argument("problem")
    p_val.add_argument("--samples", type=int, default=10_000)
    p_val.add_argument("--seed", type=int, default=42)
    return parser


def _cmd_run(args):
    flags = {k: getattr(args, k) for k in KEYS}
    settings = load_settings(args.config, flags)
    problem, config = build_config(settings)
    out = _out_dir(settings)
    try:
        report = run(problem, config)
    except BudgetError as err:
        log.error("%s", err)
        report = getattr(err, "report", None)
        if report is not None:
            _save(report, out)
        return EXIT_SOLVER
    _save(report, out)
    last = report.records[-1]
    print(f"{report.termination} after {report.iterations} iterations: x = {last.x.tolist()}, F = {last.f.tolist()}")
    return EXIT_SOLVER if report.termination == "inner_failure" else EXIT_OK


def _save(report, out):
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise IoError(f"cannot create output directory {out}: {err}") from err
    emit_iteration_table(report, out / "iterations.csv")
    emit_run_report(report, out / "report.json")
    log.info("wrote %s and %s", out / "iterations.csv", out / "report.json")


def _cmd_sweep(args):
    flags = {k: getattr(args, k) for k in KEYS}
    settings = load_settings(args.config, flags)
    settings.setdefault("z", ",".join(["1"] * get_problem(settings.get("problem", "paper_example")).m))
    problem, config = build_config(settings)
    rows = sweep_weights(problem, read_weights(args.weights), config)
    out = _out_dir(settings)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise IoError(f"cannot create output directory {out}: {err}") from err
    text = emit_sweep_table(rows, out / "sweep.csv")
    sys.stdout.write(text)
    return EXIT_SOLVER if any(r.error for r in rows) else EXIT_OK


def _cmd_validate(args):
    diag = validate_problem(get_problem(args.problem), args.samples, args.seed)
    print(json.dumps(diag.to_dict(), sort_keys=True))
    return EXIT_OK if diag.ok else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return {"run": _cmd_run, "sweep": _cmd_sweep, "validate": _cmd_validate}[args.command](args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (MoppError, OSError) as err:
        print(f"solver error: {err}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
