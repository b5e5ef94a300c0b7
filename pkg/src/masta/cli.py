"""Command-line entry point: ``masta run | bench | trace | stats``.

Exit codes: 0 success, 2 usage error, 3 configuration or file-format error,
4 missing file or other I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import config as cfgmod
from .config import (EXPERIMENT_OPTIONS, MASTA_OPTIONS, RUN_OPTIONS, TRACE_OPTIONS, ConfigError,
                     Option)
from .driver import run as run_masta
from .harness import (ExperimentConfig, StatsFormatError, format_report, merge_rows,
                      read_stats_csv, results_to_rows, run_experiment, write_stats_csv)
from .objective import make_benchmark
from .trace import run_trace, write_trace_csv

EXIT_OK, EXIT_USAGE, EXIT_FORMAT, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("masta")


class UsageError(Exception):
    pass


def _show_default(opt: Option) -> str:
    d = opt.default
    if d is None:
        return "none"
    if isinstance(d, bool):
        return "on" if d else "off"
    if isinstance(d, tuple):
        return ",".join(format(v, "g") for v in d)
    return str(d)


def _add_options(p: argparse.ArgumentParser, options) -> None:
    for opt in options:
        help_text = f"{opt.help} (default: {_show_default(opt)})"
        if opt.is_flag:
            p.add_argument(f"--{opt.key}", dest=opt.dest, action=argparse.BooleanOptionalAction,
                           default=None, help=help_text)
        else:
            p.add_argument(f"--{opt.key}", dest=opt.dest, type=_argtype(opt), default=None,
                           metavar=opt.dest.upper(), help=help_text)


def _argtype(opt: Option):
    def parse(s):
        try:
            return opt.parse(s)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    parse.__name__ = opt.key
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="masta", description="Multiagent state transition optimization.")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log progress to stderr (default: off)")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("run", help="one seeded optimization run")
    p.add_argument("--config", help="flat key = value config file (default: none)")
    _add_options(p, RUN_OPTIONS + MASTA_OPTIONS)

    p = sub.add_parser("bench", help="independent runs per case, stats and curve CSVs")
    p.add_argument("--config", help="config file path or bundled name such as paper2d.cfg "
                                    "(default: none)")
    _add_options(p, EXPERIMENT_OPTIONS + MASTA_OPTIONS)

    p = sub.add_parser("trace", help="pure rate-policy trajectories, CSV output")
    p.add_argument("--function", default="paper-example",
                   help="2-D benchmark name (default: paper-example)")
    p.add_argument("--out", default="trace.csv", help="output CSV path (default: trace.csv)")
    trace_keys = ("seed", "policy", "eta", "eta-start", "eta-end", "rate-interval",
                  "rate-factors", "elementwise")
    _add_options(p, TRACE_OPTIONS + [o for o in MASTA_OPTIONS if o.key in trace_keys])

    p = sub.add_parser("stats", help="merge stats CSVs into one side-by-side report")
    p.add_argument("--inputs", nargs="+", required=True,
                   help="stats CSVs produced by bench (required)")
    p.add_argument("--baseline", nargs="*", default=[],
                   help="stats CSVs of other algorithms (default: none)")
    p.add_argument("--out", help="write the merged stats CSV here (default: none)")
    p.add_argument("--primary", default="MASTA",
                   help="algorithm listed first in the report (default: MASTA)")
    return parser


def _merged(args, options) -> dict:
    """Option values after layering the config file and then the flags over defaults."""
    values = cfgmod.defaults(options)
    path = getattr(args, "config", None)
    if path:
        values.update(cfgmod.read_config_file(path))
    for opt in options:
        v = getattr(args, opt.dest, None)
        if v is not None:
            values[opt.key] = v
    return values


def _check_function(name: Optional[str], dim: int) -> None:
    if name is None:
        raise UsageError("--function is required (or set 'function' in the config file)")
    try:
        make_benchmark(name, dim)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_run(args) -> int:
    values = _merged(args, RUN_OPTIONS + MASTA_OPTIONS)
    _check_function(values["function"], values["dim"])
    spec = make_benchmark(values["function"], values["dim"])
    config = cfgmod.build_masta_config(values)
    result = run_masta(config, spec)
    print(f"best_f = {result.best_f!r}")
    print(f"evals_used = {result.evals_used}")
    print(f"generations = {result.generations}  stop_reason = {result.stop_reason}")
    if values["out"]:
        out = Path(values["out"])
        out.parent.mkdir(parents=True, exist_ok=True)
        doc = json.dumps(result.to_dict(config, spec), indent=2, sort_keys=True)
        out.write_text(doc + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_bench(args) -> int:
    values = _merged(args, EXPERIMENT_OPTIONS + MASTA_OPTIONS)
    if not values["cases"]:
        raise UsageError("no cases: pass --cases or a config file that sets 'cases'")
    for name, dim in values["cases"]:
        _check_function(name, dim)
    try:
        exp = ExperimentConfig(cases=values["cases"], runs=values["runs"],
                               masta=cfgmod.build_masta_config(values),
                               output_dir=Path(values["out-dir"]),
                               curve_sampling=values["curve-stride"], workers=values["workers"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    results = run_experiment(exp)
    print(format_report(results_to_rows(results, exp.runs, exp.algo)), end="")
    return EXIT_OK


def cmd_trace(args) -> int:
    values = _merged(args, TRACE_OPTIONS + MASTA_OPTIONS)
    _check_function(args.function, 2)
    spec = make_benchmark(args.function, 2)
    policy = cfgmod.rate_policy(values)
    leader = values["leader"]
    trace = run_trace(spec, policy, values["n-agents"], values["iters"],
                      np.random.default_rng(values["seed"]),
                      leader=None if leader is None else np.array(leader))
    write_trace_csv(args.out, trace)
    d = trace.final_distances()
    print(f"max final distance to leader = {float(d.max())!r}")
    print(f"median final distance to leader = {float(np.median(d))!r}")
    return EXIT_OK


def cmd_stats(args) -> int:
    groups = [(p, read_stats_csv(p)) for p in args.inputs]
    groups += [(p, read_stats_csv(p)) for p in args.baseline]
    rows = merge_rows(groups)
    print(format_report(rows, primary=args.primary), end="")
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        write_stats_csv(out, rows)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "bench": cmd_bench, "trace": cmd_trace, "stats": cmd_stats}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on bad flags
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"masta {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, StatsFormatError) as exc:
        print(f"masta {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"masta {args.command}: file not found: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"masta {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"masta {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FORMAT


if __name__ == "__main__":
    sys.exit(main())
