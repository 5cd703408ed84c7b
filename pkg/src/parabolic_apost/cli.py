"""Command-line front end.

    parabolic-apost run   --method cn --M 64 [--K 0 | --K-scan] [--out report.csv]
    parabolic-apost table --method bdf2 [--M-list 64,128,256] [--format md] [--out t.md]

Defaults may come from a ``key=value`` file given with ``--config``; flags
on the command line override it.  Exit status 2 means invalid input, 1 a
numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from .elliptic import MeshTooCoarseError
from .estimator import fmt
from .fem1d import MASS_MODES, SingularMatrixError
from .integrators import SchemeId
from .metrics import (
    DESK_M_LIST,
    FULL_M_LIST,
    convergence_study,
    run_scheme,
    table1_csv,
    table1_markdown,
    table2_csv,
    table2_markdown,
)
from .problem import PROBLEMS, ProblemError, get_problem
from .reconstruction import ReconstructionError

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2

_BOOL_KEYS = {"K_scan", "full", "sdirk_fhat"}
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


class ConfigError(ValueError):
    pass


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {v}")
    return v


def _m_list(text: str) -> list[int]:
    text = text.strip()
    if not text:
        return []
    return [_positive_int(s.strip()) for s in text.split(",") if s.strip()]


def read_config(path) -> dict:
    """Parse a ``key=value`` file.  Keys use flag spelling with or without
    the leading dashes (``M-list`` and ``M_list`` are the same key)."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key in _BOOL_KEYS:
            low = value.lower()
            if low not in _TRUE | _FALSE:
                raise ConfigError(f"{path}:{n}: {key} expects a boolean, got {value!r}")
            out[key] = low in _TRUE
        else:
            out[key] = value
    return out


def _common(p: argparse.ArgumentParser):
    p.add_argument("--method", default="euler", help="|".join(s.value for s in SchemeId))
    p.add_argument("--problem", default="paper", help="|".join(sorted(PROBLEMS)))
    p.add_argument("--mass", default="consistent", choices=MASS_MODES)
    p.add_argument(
        "--sdirk-fhat", dest="sdirk_fhat", default=True, action=argparse.BooleanOptionalAction,
        help="SDIRK stage loads from the time-interpolated source (default on)",
    )
    p.add_argument("--K", type=int, default=0, help="split index of the bound (default 0)")
    p.add_argument("--K-scan", dest="K_scan", action="store_true",
                   help="use the K in 0..M-1 giving the smallest bound")
    p.add_argument("--format", default="csv", choices=("csv", "md"))
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--config", default=None, help="key=value file with defaults")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parabolic-apost",
        description="Maximum-norm a posteriori error bounds for 1D parabolic problems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="single run, per-step estimator report")
    _common(run)
    run.add_argument("--M", type=_positive_int, default=64, help="time steps = elements")

    table = sub.add_parser("table", help="convergence and component tables")
    _common(table)
    table.add_argument("--M-list", dest="M_list", type=_m_list, default=None,
                       help="comma separated, e.g. 64,128,256 (default 64..1024)")
    table.add_argument("--full", action="store_true", help="M up to 16384 (slow)")
    table.add_argument("--ref-refine", dest="ref_refine", type=_positive_int, default=8,
                       help="reference mesh refinement over the finest M (even, default 8)")
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    parser = build_parser()
    if known.config:
        defaults = read_config(known.config)
        subparsers = [
            sp for action in parser._subparsers._group_actions for sp in action.choices.values()
        ]
        known_keys = {a.dest for sp in subparsers for a in sp._actions} - {"help", "config"}
        unknown = set(defaults) - known_keys
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for sp in subparsers:
            allowed = {a.dest for a in sp._actions}
            sp.set_defaults(**{k: v for k, v in defaults.items() if k in allowed})
    return parser.parse_args(argv)


def _is_power_of_two(m: int) -> bool:
    return m > 0 and m & (m - 1) == 0


def _resolve(args):
    try:
        args.method = SchemeId.parse(args.method)
        problem, gb = get_problem(args.problem)
    except (ValueError, ProblemError) as exc:
        raise ConfigError(str(exc)) from None
    if args.K < 0:
        raise ConfigError(f"K must be non-negative, got {args.K}")
    return problem, gb


def _emit(text: str, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _markdown_report(report) -> str:
    comps = report.components()
    head = ["K", *comps, "eta_total"]
    row = [str(report.K), *(fmt(v) for v in comps.values()), fmt(report.total)]
    return (
        "| " + " | ".join(head) + " |\n" + "|" + "---|" * len(head) + "\n"
        "| " + " | ".join(row) + " |\n"
    )


def cmd_run(args) -> int:
    problem, gb = _resolve(args)
    if args.M < 2:
        raise ConfigError("M must be at least 2")
    if not args.K_scan and args.K > args.M - 1:
        raise ConfigError(f"K = {args.K} out of range 0..{args.M - 1}")
    res = run_scheme(
        problem, gb, args.method, args.M, "scan" if args.K_scan else args.K,
        args.mass, args.sdirk_fhat,
    )
    if not math.isfinite(res.report.total):
        raise FloatingPointError("estimator is not finite")
    text = res.report.to_csv() if args.format == "csv" else _markdown_report(res.report)
    _emit(text, args.out)
    return EXIT_OK


def _component_path(out: str) -> Path:
    p = Path(out)
    return p.with_name(p.stem + "_components" + p.suffix)


def cmd_table(args) -> int:
    problem, gb = _resolve(args)
    if args.M_list is None:
        M_list = list(FULL_M_LIST if args.full else DESK_M_LIST)
    else:
        M_list = sorted(set(args.M_list))
    bad = [m for m in M_list if not _is_power_of_two(m) or m < 2]
    if bad:
        raise ConfigError(f"M values must be powers of two >= 2, got {bad}")
    if M_list and not args.K_scan and args.K > min(M_list) - 1:
        raise ConfigError(f"K = {args.K} out of range 0..{min(M_list) - 1}")
    if args.ref_refine < 2 or args.ref_refine % 2:
        raise ConfigError("--ref-refine must be an even integer >= 2")
    rows = convergence_study(
        problem, gb, args.method, M_list, "scan" if args.K_scan else args.K,
        args.mass, args.sdirk_fhat, ref_refine=args.ref_refine,
    )
    for r in rows:
        if not (math.isfinite(r.e_M) and math.isfinite(r.eta)):
            raise FloatingPointError(f"non-finite result at M = {r.M}")
    if args.format == "csv":
        t1, t2 = table1_csv(rows), table2_csv(rows)
    else:
        t1, t2 = table1_markdown(rows), table2_markdown(rows)
    if args.out is None:
        sys.stdout.write(t1 + "\n" + t2)
    else:
        Path(args.out).write_text(t1)
        _component_path(args.out).write_text(t2)
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        cmd = cmd_run if args.command == "run" else cmd_table
        return cmd(args)
    except (ConfigError, MeshTooCoarseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SingularMatrixError, ReconstructionError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SystemExit as exc:
        # argparse reports usage errors with status 2
        return int(exc.code) if isinstance(exc.code, int) else EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
