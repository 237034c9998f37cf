"""Command-line interface.

Every data subcommand writes CSV (17 significant digits) to ``--out`` or
stdout. With ``--out`` a JSON manifest lands next to the CSV as
``<out>.manifest.json``. Parameters come from flags, then a flat
``key = value`` ``--config`` file, then built-in defaults.

Exit codes: 0 success, 1 computation or validation failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from . import __version__, analytic, validation
from .operator import DENSE_CAP, MAX_VECTOR_N
from .remfield import RemField, extreme_set
from .resolvent import ResolventError, admissible_energy, l1_bound_report
from .spectral import Method, phi_vector_check, projector_overlap, scgf_finite, shift_statistic
from .trajectories import activity_estimate, activity_oracle, mgf_estimate


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- value parsing ----------------------------------------------------------

def float_list(text: str) -> list[float]:
    """``1.5``, ``0.5,1,2`` or ``lo:hi:count`` (inclusive linspace)."""
    text = str(text).strip()
    try:
        if ":" in text:
            lo, hi, count = text.split(":")
            k = int(count)
            if k < 1:
                raise ValueError
            return [float(x) for x in np.linspace(float(lo), float(hi), k)]
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, a comma list or lo:hi:count, got {text!r}")
    if not vals or not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError(f"values must be finite, got {text!r}")
    return vals


def int_list(text: str) -> list[int]:
    """``3``, ``1,4,9`` or an inclusive range ``0-4``."""
    out = []
    try:
        for part in str(text).split(","):
            part = part.strip()
            if not part:
                continue
            if "-" in part[1:]:
                lo, hi = part.split("-", 1) if not part.startswith("-") else (part, part)
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers like 3, 1,4 or 0-4, got {text!r}")
    if not out:
        raise argparse.ArgumentTypeError("empty integer list")
    return out


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {v}")
    return v


def method_name(text: str) -> str:
    try:
        return Method(str(text).strip()).value
    except ValueError:
        raise argparse.ArgumentTypeError(f"method must be krylov or dense, got {text!r}")


# name -> (parser, default, help)
OPTIONS = {
    "n": (int_list, "8", "spin counts"),
    "t": (float_list, "1", "times"),
    "lambda": (float_list, "1", "tilting strengths"),
    "s": (float_list, "0", "activity tilts"),
    "u": (float_list, "0", "energy per spin per time (rate)"),
    "beta": (float_list, "1", "inverse temperatures (pressure)"),
    "gamma": (float_list, "0.2", "transversal field"),
    "delta": (float_list, "0.6", "extreme-level depth"),
    "eps": (float, "0.2", "boundary margin (phivec)"),
    "E": (float, None, "spectral parameter (default: derived)"),
    "seed": (int, "0", "master seed for Monte Carlo"),
    "seeds": (int_list, "0", "landscape seeds"),
    "samples": (positive_int, "100000", "trajectory count"),
    "method": (method_name, "krylov", "krylov or dense"),
    "workers": (positive_int, None, "worker cap (default: available cores)"),
}

COMMAND_OPTIONS = {
    "scgf": ("n", "t", "lambda", "s", "seeds", "method", "workers"),
    "sweep": ("n", "t", "lambda", "s", "seeds", "method", "workers"),
    "mc": ("n", "t", "lambda", "seeds", "seed", "samples", "workers"),
    "resolvent-check": ("n", "gamma", "lambda", "seeds", "E"),
    "projector": ("n", "gamma", "lambda", "delta", "seeds"),
    "shift": ("n", "gamma", "lambda", "delta", "seeds"),
    "phivec": ("n", "gamma", "lambda", "delta", "eps", "seeds", "E"),
}

ANALYTIC_OPTIONS = {
    "phase": ("t", "lambda", "s"),
    "rate": ("t", "u", "s"),
    "pressure": ("beta", "lambda", "s"),
    "boundaries": ("lambda",),
}


def read_config(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"--config: cannot read {path}: {exc.strerror}")
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"--config: {path}:{num}: expected key = value")
        key, value = (x.strip() for x in line.split("=", 1))
        key = key.lstrip("-").replace("_", "-")
        if key == "lam":
            key = "lambda"
        out[key] = value
    return out


def resolve(args, names: Iterable[str]) -> dict:
    """Merge flags over config over defaults and parse every value."""
    conf = read_config(args.config) if args.config else {}
    params = {}
    for name in names:
        parser, default, _ = OPTIONS[name]
        flag = getattr(args, _dest(name), None)
        if flag is not None:
            params[name] = flag
            continue
        raw = conf.get(name, default)
        if raw is None:
            params[name] = None
            continue
        try:
            params[name] = parser(raw)
        except argparse.ArgumentTypeError as exc:
            where = "config key" if name in conf else "default"
            raise UsageError(f"{where} {name}: {exc}")
    return params


def _dest(name: str) -> str:
    return "lam" if name == "lambda" else name.replace("-", "_")


# -- output -----------------------------------------------------------------

def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    return str(value)


def render_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


@dataclass
class RunResult:
    header: list
    rows: list
    status: list = field(default_factory=list)  # per-point "ok" or an error message

    @property
    def failed(self) -> bool:
        return any(s != "ok" for s in self.status)


def emit(result: RunResult, out: Optional[str], argv: list, params: dict, seconds: float,
         stdout=None) -> None:
    text = render_csv(result.header, result.rows)
    if out is None:
        (stdout or sys.stdout).write(text)
        return
    data = text.encode("utf-8")
    with open(out, "wb") as fh:
        fh.write(data)
    manifest = {
        "tool": "remdyn",
        "version": __version__,
        "command_line": argv,
        "master_seed": params.get("seed"),
        "parameters": {k: v for k, v in params.items()},
        "grid_points": len(result.status),
        "timing_seconds": round(seconds, 6),
        "status": result.status,
        "failed_points": sum(s != "ok" for s in result.status),
        "outputs": {os.path.basename(out): hashlib.sha256(data).hexdigest()},
    }
    with open(out + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _pool_map(fn: Callable, items: list, workers: Optional[int]) -> list:
    workers = workers or os.cpu_count() or 1
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def _guard(fn: Callable, width: int):
    """Run fn; on failure return a NaN row and the error text."""

    def run(item):
        try:
            return fn(item), "ok"
        except (ValueError, ArithmeticError, RuntimeError, MemoryError) as exc:
            return [math.nan] * width, f"{type(exc).__name__}: {exc}"

    return run


def _collect(items, fn, width, workers=1) -> tuple[list, list]:
    out = _pool_map(_guard(fn, width), list(items), workers)
    rows = [r for r, _ in out]
    status = [s for _, s in out]
    return rows, status


# -- analytic ---------------------------------------------------------------

def run_analytic(which: str, p: dict) -> RunResult:
    if which == "phase":
        header = ["t", "lambda", "s", "theta", "phase", "activity"]
        if any(s != 0.0 for s in p["s"]):
            raise UsageError("--s: phase classification is defined at s = 0 only")
        rows, status = [], []
        for t, lam in itertools.product(p["t"], p["lambda"]):
            try:
                pt = analytic.classify_phase(t, lam)
            except ValueError as exc:
                raise UsageError(f"--t/--lambda: {exc}")
            act = pt.activity
            act_s = f"[{fmt(act[0])};{fmt(act[1])}]" if isinstance(act, tuple) else fmt(act)
            rows.append([t, lam, 0.0, pt.theta, str(pt.label), act_s])
            status.append("ok")
        return RunResult(header, rows, status)
    if which == "rate":
        header = ["t", "u", "s", "phi"]
        rows = []
        for t, u, s in itertools.product(p["t"], p["u"], p["s"]):
            if not t > 0:
                raise UsageError(f"--t: must be positive, got {t}")
            val = analytic.rate_function(t, u, s)
            rows.append([t, u, s, math.inf if analytic.is_infinite(val) else val])
        return RunResult(header, rows, ["ok"] * len(rows))
    if which == "pressure":
        header = ["beta", "lambda", "s", "p_rem", "qrem_pressure"]
        rows = []
        for b, lam, s in itertools.product(p["beta"], p["lambda"], p["s"]):
            if b < 0:
                raise UsageError(f"--beta: must be non-negative, got {b}")
            rows.append([b, lam, s, analytic.p_rem(b * lam), analytic.qrem_pressure(b, lam, s)])
        return RunResult(header, rows, ["ok"] * len(rows))
    if which == "boundaries":
        header = ["lambda", "count", "inv_t_1", "kind_1", "inv_t_2", "kind_2"]
        rows = []
        for lam in p["lambda"]:
            if lam < 0:
                raise UsageError(f"--lambda: must be non-negative, got {lam}")
            lines = analytic.boundary_curves(lam)
            row = [lam, len(lines)]
            for i in range(2):
                row += [lines[i].inv_t, lines[i].detail.value] if i < len(lines) else [None, None]
            rows.append(row)
        return RunResult(header, rows, ["ok"] * len(rows))
    raise UsageError(f"unknown analytic table {which!r}")


# -- numeric subcommands ----------------------------------------------------

def _check_sizes(p: dict, cap: int, why: str) -> None:
    for n in p["n"]:
        if not 1 <= n <= cap:
            raise UsageError(f"--n: {why} needs 1 <= n <= {cap}, got {n}")


def run_scgf(p: dict) -> RunResult:
    method = Method(p["method"])
    _check_sizes(p, DENSE_CAP if method is Method.DENSE else MAX_VECTOR_N, f"method {method.value}")
    header = ["n", "seed", "t", "lambda", "s", "method", "theta_n", "theta_limit", "gap",
              "krylov_dim", "substeps", "residual_estimate"]
    items = list(itertools.product(p["n"], p["t"], p["lambda"], p["s"], p["seeds"]))

    def point(item):
        n, t, lam, s, sd = item
        r = scgf_finite(RemField(sd, n), t, lam, s, method=method)
        return [n, sd, t, lam, s, r.method, r.theta_n, r.theta_limit, r.gap,
                r.krylov_dim, r.substeps, r.residual_estimate]

    rows, status = _collect(items, point, len(header), p["workers"])
    for row, item in zip(rows, items):
        if isinstance(row[0], float) and math.isnan(row[0]):
            n, t, lam, s, sd = item
            row[:6] = [n, sd, t, lam, s, method.value]
    return RunResult(header, rows, status)


def run_sweep(p: dict) -> RunResult:
    """Seed medians over a (t, lambda, s) grid against the limit and phase."""
    method = Method(p["method"])
    _check_sizes(p, DENSE_CAP if method is Method.DENSE else MAX_VECTOR_N, f"method {method.value}")
    header = ["n", "t", "lambda", "s", "seeds", "theta_median", "theta_min", "theta_max",
              "theta_limit", "phase"]
    items = list(itertools.product(p["n"], p["t"], p["lambda"], p["s"]))

    def point(item):
        n, t, lam, s = item
        vals = [scgf_finite(RemField(sd, n), t, lam, s, method=method).theta_n for sd in p["seeds"]]
        phase = str(analytic.classify_phase(t, lam).label) if s == 0.0 else ""
        return [n, t, lam, s, len(vals), float(np.median(vals)), min(vals), max(vals),
                analytic.theta_limit(t, lam, s), phase]

    rows, status = _collect(items, point, len(header), p["workers"])
    return RunResult(header, rows, status)


def run_mc(p: dict) -> RunResult:
    _check_sizes(p, 30, "trajectory sampling")
    header = ["n", "seed", "master_seed", "t", "lambda", "samples", "mgf_mean", "mgf_stderr",
              "mgf_exact", "z", "activity", "activity_stderr", "tilted_activity",
              "tilted_ci_lo", "tilted_ci_hi", "ess", "activity_oracle"]
    items = list(itertools.product(p["n"], p["seeds"], p["t"], p["lambda"]))

    def point(item):
        n, sd, t, lam = item
        f = RemField(sd, n)
        exact = n <= DENSE_CAP
        m = mgf_estimate(f, t, lam, p["samples"], p["seed"], exact=exact, workers=p["workers"] or 1)
        a = activity_estimate(f, t, lam, p["samples"], p["seed"], workers=p["workers"] or 1)
        oracle = activity_oracle(f, t, lam) if exact else None
        return [n, sd, p["seed"], t, lam, p["samples"], m.mean, m.stderr, m.exact, m.z_score,
                a.untilted, a.untilted_stderr, a.tilted, a.tilted_ci[0], a.tilted_ci[1], a.ess,
                oracle]

    rows, status = _collect(items, point, len(header), 1)
    return RunResult(header, rows, status)


def run_resolvent_check(p: dict) -> RunResult:
    _check_sizes(p, MAX_VECTOR_N, "resolvent solves")
    header = ["n", "seed", "gamma", "lambda", "E", "gamma_n", "condition_ok", "l1_norm",
              "max_bound", "worst_margin", "min_lhs", "all_pass"]
    items = list(itertools.product(p["n"], p["gamma"], p["lambda"], p["seeds"]))
    rows, status = [], []
    for n, g, lam, sd in items:
        f = RemField(sd, n)
        try:
            E = p["E"] if p["E"] is not None else admissible_energy(f, g, lam)
            r = l1_bound_report(f, g, lam, E)
            rows.append([n, sd, g, lam, E, r.gamma_n_value, r.condition_ok, r.l1_norm,
                         float(r.rhs.max()), r.worst_margin, float(r.lhs.min()), r.all_pass])
            status.append("ok" if r.all_pass else "bound violated")
        except (ResolventError, ValueError, RuntimeError) as exc:
            rows.append([n, sd, g, lam, p["E"]] + [None] * 7)
            status.append(f"{type(exc).__name__}: {exc}")
    return RunResult(header, rows, status)


def run_projector(p: dict) -> RunResult:
    _check_sizes(p, DENSE_CAP, "dense spectral statistics")
    header = ["n", "seed", "gamma", "lambda", "delta", "threshold", "trace_above",
              "classical_count", "flat_projection", "log_rate", "shift_sup"]
    items = list(itertools.product(p["n"], p["gamma"], p["lambda"], p["delta"], p["seeds"]))

    def point(item):
        n, g, lam, d, sd = item
        f = RemField(sd, n)
        s = projector_overlap(f, g, lam, d, full=False)
        return [n, sd, g, lam, d, s.threshold, s.trace_above, extreme_set(f, d).count,
                s.flat_projection, s.log_rate, s.shift_sup]

    rows, status = _collect(items, point, len(header), 1)
    return RunResult(header, rows, status)


def run_shift(p: dict) -> RunResult:
    _check_sizes(p, DENSE_CAP, "dense spectral statistics")
    header = ["n", "seed", "gamma", "lambda", "delta", "trace_above", "shift_sup", "ratio"]
    items = list(itertools.product(p["n"], p["gamma"], p["lambda"], p["delta"], p["seeds"]))

    def point(item):
        n, g, lam, d, sd = item
        s = shift_statistic(RemField(sd, n), g, lam, d)
        return [n, sd, g, lam, d, s.trace_above, s.shift_sup, s.ratio]

    rows, status = _collect(items, point, len(header), 1)
    return RunResult(header, rows, status)


def run_phivec(p: dict) -> RunResult:
    _check_sizes(p, MAX_VECTOR_N, "restricted resolvent solves")
    header = ["n", "seed", "gamma", "lambda", "delta", "eps", "E", "members", "restricted_top",
              "k", "max_abs", "bound", "passed"]
    rows, status = [], []
    for n, g, lam, d, sd in itertools.product(p["n"], p["gamma"], p["lambda"], p["delta"], p["seeds"]):
        E = p["E"] if p["E"] is not None else 1.05 * lam * d * n
        try:
            r = phi_vector_check(RemField(sd, n), g, lam, d, p["eps"], E, k_max=2)
        except (ResolventError, ValueError, RuntimeError) as exc:
            rows.append([n, sd, g, lam, d, p["eps"], E] + [None] * 6)
            status.append(f"{type(exc).__name__}: {exc}")
            continue
        for k in sorted(r.bounds):
            rows.append([n, sd, g, lam, d, p["eps"], E, int(r.members.size), r.restricted_top,
                         k, r.max_abs[k],
                         r.bounds[k], r.passed[k]])
            status.append("ok" if r.passed[k] else "bound violated")
    return RunResult(header, rows, status)


RUNNERS = {
    "scgf": run_scgf,
    "sweep": run_sweep,
    "mc": run_mc,
    "resolvent-check": run_resolvent_check,
    "projector": run_projector,
    "shift": run_shift,
    "phivec": run_phivec,
}


# -- parser -----------------------------------------------------------------

def _add_options(sub: argparse.ArgumentParser, names) -> None:
    for name in names:
        parser, default, help_ = OPTIONS[name]
        extra = f" (default {default})" if default is not None else ""
        sub.add_argument(f"--{name}", dest=_dest(name), type=parser, default=None,
                         help=help_ + extra)
    sub.add_argument("--out", default=None, help="CSV path; a manifest is written alongside")
    sub.add_argument("--config", default=None, help="flat key = value parameter file")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="remdyn", description="REM trajectory large deviations toolkit")
    ap.add_argument("--version", action="version", version=f"remdyn {__version__}")
    subs = ap.add_subparsers(dest="command", required=True)
    an = subs.add_parser("analytic", help="closed-form tables")
    an_subs = an.add_subparsers(dest="table", required=True)
    for table, names in ANALYTIC_OPTIONS.items():
        _add_options(an_subs.add_parser(table), names)
    for cmd, names in COMMAND_OPTIONS.items():
        _add_options(subs.add_parser(cmd), names)
    val = subs.add_parser("validate", help="run the acceptance suite")
    val.add_argument("level", nargs="?", default="quick", choices=validation.LEVELS)
    val.add_argument("--only", default=None, help="comma list of criterion keys, e.g. c1,c3")
    val.add_argument("--out", default=None, help="write the JSON verdict here")
    return ap


def _validate(args, stdout, stderr) -> int:
    keys = None
    if args.only:
        keys = [k.strip() for k in args.only.split(",") if k.strip()]
        unknown = [k for k in keys if k not in validation.CRITERIA]
        if unknown:
            raise UsageError(f"--only: unknown criteria {', '.join(unknown)}")
    verdict = validation.run_suite(args.level, keys,
                                   echo=lambda line: print(line, file=stderr, flush=True))
    text = json.dumps(verdict, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return 0 if verdict["passed"] else 1


def main(argv: Optional[list] = None, stdout=None, stderr=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=stderr)
        return 2
    except SystemExit as exc:  # --help, --version
        return int(exc.code or 0)
    try:
        if args.command == "validate":
            return _validate(args, stdout, stderr)
        if args.command == "analytic":
            names = ANALYTIC_OPTIONS[args.table]
            params = resolve(args, names)
            t0 = time.perf_counter()
            result = run_analytic(args.table, params)
        else:
            params = resolve(args, COMMAND_OPTIONS[args.command])
            t0 = time.perf_counter()
            result = RUNNERS[args.command](params)
        emit(result, args.out, ["remdyn"] + argv, params, time.perf_counter() - t0, stdout)
    except UsageError as exc:
        print(f"remdyn: error: {exc}", file=stderr)
        return 2
    for s in result.status:
        if s != "ok":
            print(f"remdyn: point failed: {s}", file=stderr)
    return 1 if result.failed else 0


if __name__ == "__main__":
    sys.exit(main())
