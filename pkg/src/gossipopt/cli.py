"""Command-line interface: ``gossipopt run|compare|verify|schedule-dump``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .engines import RoundsPolicy
from .errors import ConfigInvalid, DomainViolation, GossipError, NumericalFailure, ScheduleExhausted
from .harness import (
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    EXIT_OK,
    compare_algorithms,
    load_config,
    run_experiment,
    verify_suite,
)
from .network import Scheduler, window_connected


def _rounds_list(text):
    try:
        values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("rounds must be positive integers")
    return values


def _add_overrides(p):
    p.add_argument("--config", required=True, help="experiment config (TOML)")
    p.add_argument("--seed", type=int)
    p.add_argument("--algo", choices=("pe", "pb"))
    p.add_argument("--max-iters", type=int)
    p.add_argument("--stop-v-ratio", type=float)
    p.add_argument("--tol-x", type=float)
    p.add_argument("--skip-gap", type=float)
    p.add_argument("--trace", dest="trace_path")
    p.add_argument("--summary", dest="summary_path")


def _load(args):
    cfg = load_config(args.config)
    overrides = {}
    for key in ("seed", "max_iters", "stop_v_ratio", "tol_x", "skip_gap", "trace_path", "summary_path"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "algo", None):
        overrides["algorithm"] = args.algo
    rounds = getattr(args, "rounds", None)
    if isinstance(rounds, str):
        overrides["rounds"] = RoundsPolicy.parse(rounds)
    if "seed" in overrides:
        overrides["scheduler"] = replace(cfg.scheduler, seed=overrides["seed"])
    return replace(cfg, **overrides) if overrides else cfg


def cmd_run(args):
    summary = run_experiment(_load(args))
    print(summary.to_json())
    return EXIT_OK


def cmd_compare(args):
    rows = compare_algorithms(_load(args), args.rounds)
    header = f"{'algo':<6}{'R':>4}{'iters':>9}{'conv':>6}{'reals':>12}{'funcs':>7}{'tokens':>9}{'reals/it':>10}{'msgs ok':>9}"
    print(header)
    for r in rows:
        print(f"{r['algorithm']:<6}{r['rounds'] or '-':>4}{r['iterations']:>9}{str(r['converged'])[0]:>6}"
              f"{r['tx_reals']:>12}{r['tx_functions']:>7}{r['tx_tokens']:>9}"
              f"{r['reals_per_iteration']:>10.2f}{str(r['transcripts_ok']):>9}")
    return EXIT_OK


def cmd_verify(args):
    code, report = verify_suite(args.suite)
    json.dump(report, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return code


def cmd_schedule_dump(args):
    cfg = _load(args)
    sched = Scheduler(cfg.scheduler, cfg.topology)
    for k in range(1, args.steps + 1):
        i, j = sched.next_pair(k)
        print(f"{k} {i} {j}")
    connected = window_connected(sched.history, min(args.steps, cfg.effective_window), cfg.n_nodes)
    print(f"# window_connected={str(connected).lower()}", file=sys.stderr)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="gossipopt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment, write trace and summary")
    _add_overrides(p)
    p.add_argument("--rounds", help="PB rounds: R or adaptive:<gap>")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="PE vs PB(R) on the same gossip sequence")
    _add_overrides(p)
    p.add_argument("--rounds", type=_rounds_list, default=[1, 2, 4, 8], help="e.g. 1,2,4,8")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("verify", help="check every config of a suite directory")
    p.add_argument("--suite", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("schedule-dump", help="print the gossip pairs u(1..K)")
    _add_overrides(p)
    p.add_argument("--steps", type=int, required=True)
    p.set_defaults(func=cmd_schedule_dump)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigInvalid, ScheduleExhausted) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, DomainViolation) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except GossipError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
