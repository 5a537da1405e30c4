"""Command-line entry point.

Exit codes: 0 schedulable / no violation, 1 negative result, 2 usage or
validation error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from gangsched.analysis import (
    DeadlineMissWitness,
    exact_schedulability_test,
    predictability_probe,
)
from gangsched.engine import HORIZON_CAP_ENV, horizon_cap, simulate
from gangsched.errors import GangSchedError, HorizonOverflow, ValidationError
from gangsched.formats import (
    load_task_set,
    parse_profile,
    result_to_json,
    trace_from_json,
    trace_to_csv,
)
from gangsched.model import ExecutionProfile, generate_jobs, hyperperiod, stabilization_points
from gangsched.plotting import render_gantt
from gangsched.schedulers import POLICIES

log = logging.getLogger("gangsched")

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE = 0, 1, 2


def _write_report(directory: Path, result, stem: str, title: str) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    (directory / f"{stem}.csv").write_text(trace_to_csv(result.trace))
    misses = [(j.task_id, t) for j, t in result.misses]
    render_gantt(result.trace, directory / f"{stem}.svg", misses=misses, title=title)


def cmd_analyze(args) -> int:
    doc = load_task_set(args.file)
    ts = doc.task_set()
    verdict = exact_schedulability_test(ts, args.policy, force=args.force)
    print(f"policy: {verdict.policy}")
    print(f"S: {list(verdict.S)}")
    print(f"P: {verdict.P}")
    print(f"window: [{verdict.window[0]}, {verdict.window[1]})")
    if verdict.witness is None:
        print("witness: none")
    elif isinstance(verdict.witness, DeadlineMissWitness):
        w = verdict.witness
        print(f"witness: deadline-miss task={w.task_id} k={w.k} t={w.t}")
    else:
        print(f"witness: state-mismatch at S_n={verdict.witness.at_start} at S_n+P={verdict.witness.at_end}")
    print(f"verdict: {verdict.wording}")
    if args.report:
        result = simulate(ts, args.policy, None, verdict.window[1])
        directory = Path(args.report)
        _write_report(directory, result, "trace", f"{args.policy}: {verdict.wording}")
        with open(directory / "verdict.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["policy", "schedulable", "S_n", "P", "window_end", "witness"])
            writer.writerow([verdict.policy, int(verdict.schedulable), verdict.S[-1], verdict.P,
                             verdict.window[1], "" if verdict.witness is None else repr(verdict.witness)])
    return EXIT_OK if verdict.schedulable else EXIT_NEGATIVE


def cmd_simulate(args) -> int:
    doc = load_task_set(args.file)
    ts = doc.task_set()
    if args.profile in (None, "worst"):
        profile = ExecutionProfile.worst_case()
    else:
        profile = parse_profile(Path(args.profile).read_text())
    horizon = args.horizon
    if horizon is None:
        horizon = stabilization_points(ts)[-1] + hyperperiod(ts)
    result = simulate(ts, args.policy, profile, horizon)
    if args.out:
        Path(args.out).write_text(result_to_json(result, args.policy))
    if args.csv:
        Path(args.csv).write_text(trace_to_csv(result.trace))
    if args.svg:
        render_gantt(result.trace, args.svg, misses=[(j.task_id, t) for j, t in result.misses], title=args.policy)
    if args.report:
        _write_report(Path(args.report), result, "trace", args.policy)
    print(f"horizon: {horizon}")
    print(f"deadline misses: {len(result.misses)}")
    for job, t in result.misses:
        print(f"  {job.name} missed d={t}")
    return EXIT_OK if not result.misses else EXIT_NEGATIVE


def cmd_fuzz(args) -> int:
    doc = load_task_set(args.file)
    ts = doc.task_set()
    horizon = args.horizon
    if horizon is None:
        horizon = stabilization_points(ts)[-1] + hyperperiod(ts)
    jobs = generate_jobs(ts, horizon)
    bounds = {j.key: (doc.exec_bounds.get(j.task_id, j.e_wc), j.e_wc) for j in jobs}
    print(f"strategy: {args.strategy}" + (f" seed={args.seed} count={args.count}" if args.strategy == "random" else ""))
    report = predictability_probe(jobs, bounds, args.policy, ts.m, args.strategy,
                                  seed=args.seed, count=args.count)
    print(f"policy: {report.policy}")
    print(f"jobs: {len(jobs)} profiles tested: {report.profiles_tested} of {report.coverage}")
    if not report.applicable:
        print("not applicable: the worst-case job set misses a deadline")
        return EXIT_NEGATIVE
    if report.skipped_prefixes:
        print(f"skipped prefixes (worst case unschedulable): {report.skipped_prefixes}")
    print(f"violations: {len(report.violations)}")
    for v in report.violations[: args.show]:
        print(f"  {v}")
    if report.violations:
        return EXIT_NEGATIVE
    print("no violation found (evidence, not proof)")
    return EXIT_OK


def cmd_export(args) -> int:
    trace, misses, policy = trace_from_json(Path(args.trace).read_text())
    if args.format == "csv":
        text = trace_to_csv(trace)
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
    else:
        out = args.out or str(Path(args.trace).with_suffix(".svg"))
        render_gantt(trace, out, misses=[(task, t) for task, _, t in misses], title=policy or None)
        print(out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gangsched", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    policies = sorted(POLICIES)

    p = sub.add_parser("analyze", help="exact schedulability test")
    p.add_argument("file")
    p.add_argument("--policy", choices=policies, required=True)
    p.add_argument("--force", action="store_true",
                   help="allow gang-fjp without parallelism monotonic order (worst-case verdict only)")
    p.add_argument("--report", metavar="DIR", help="write trace.csv, trace.svg and verdict.csv")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="simulate and write a trace")
    p.add_argument("file")
    p.add_argument("--policy", choices=policies, required=True)
    p.add_argument("--horizon", type=int, help="default: S_n + P")
    p.add_argument("--profile", default="worst", help="profile JSON file or 'worst'")
    p.add_argument("--out", help="trace JSON output")
    p.add_argument("--csv", help="sigma(t) CSV output")
    p.add_argument("--svg", help="Gantt chart output")
    p.add_argument("--report", metavar="DIR", help="write trace.csv and trace.svg")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fuzz", help="search for predictability violations")
    p.add_argument("file")
    p.add_argument("--policy", choices=policies, required=True)
    p.add_argument("--strategy", choices=["exhaustive", "random"], default="exhaustive")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--horizon", type=int, help="jobs released before this instant (default: S_n + P)")
    p.add_argument("--show", type=int, default=20, help="violations to print")
    p.set_defaults(func=cmd_fuzz)

    p = sub.add_parser("export", help="convert a trace JSON to CSV or SVG")
    p.add_argument("trace")
    p.add_argument("--format", choices=["csv", "svg"], required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    log.debug("horizon cap %d (%s)", horizon_cap(), HORIZON_CAP_ENV)
    try:
        return args.func(args)
    except ValidationError as exc:
        for v in exc.violations:
            print(f"error: {v}", file=sys.stderr)
        return EXIT_USAGE
    except HorizonOverflow as exc:
        print(f"error: required window {exc.required} exceeds cap {exc.cap}; "
              f"raise {HORIZON_CAP_ENV} to allow it", file=sys.stderr)
        return EXIT_USAGE
    except (GangSchedError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
