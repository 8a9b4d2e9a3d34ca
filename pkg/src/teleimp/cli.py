"""Command-line entry points: headless trial runs, scenario generation,
and the live gateway server."""

from __future__ import annotations

import argparse
import sys

from . import harness, tasks


def _add_run_parser(sub):
    p = sub.add_parser("run", help="run a scenario headlessly with a scripted policy")
    p.add_argument("--scenario", required=True, help="scenario YAML file")
    p.add_argument("--policy", required=True,
                   choices=("scripted-lift", "scripted-slide", "replay"))
    p.add_argument("--condition", default="vis", choices=harness.CONDITIONS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="trial record CSV path")
    p.add_argument("--headless", action="store_true",
                   help="accepted for interface compatibility; runs are headless")
    p.add_argument("--squeeze-depth", type=float, default=0.05,
                   help="scripted squeeze depth in meters")
    p.add_argument("--trace", help="input trace CSV (required for --policy replay)")
    p.add_argument("--record-trace", help="write the emitted input trace here")
    p.add_argument("--state-log", help="write per-tick state lines here")
    p.add_argument("--timeout", type=float, default=harness.DEFAULT_TIMEOUT_S,
                   help="per-target timeout, seconds")


def _cmd_run(args):
    scenario = tasks.load_scenario(args.scenario)
    if args.policy == "replay":
        if not args.trace:
            print("error: --policy replay needs --trace", file=sys.stderr)
            return 2
        policy = harness.make_policy("replay", trace=args.trace)
    else:
        policy = harness.make_policy(args.policy, squeeze_depth=args.squeeze_depth)
    trace_log = [] if args.record_trace else None
    state_fh = open(args.state_log, "w") if args.state_log else None
    try:
        records = harness.run_trial(
            scenario, policy, condition=args.condition, seed=args.seed,
            timeout_s=args.timeout, state_log=state_fh, trace_log=trace_log)
    finally:
        if state_fh:
            state_fh.close()
    harness.export_csv(records, args.out)
    if args.record_trace:
        harness.save_trace(trace_log, args.record_trace)
    completed = sum(r.completed for r in records)
    print(f"{completed}/{len(scenario.targets)} targets completed -> {args.out}")
    return 0 if completed == len(scenario.targets) else 1


def _add_gen_parser(sub):
    p = sub.add_parser("gen-scenario", help="generate a seeded scenario file")
    p.add_argument("--task-type", required=True, choices=tasks.TASK_TYPES)
    p.add_argument("--count", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)


def _cmd_gen(args):
    scenario = tasks.generate_scenario(args.task_type, args.count, args.seed)
    tasks.save_scenario(scenario, args.out)
    print(f"wrote {args.count} {args.task_type} targets -> {args.out}")
    return 0


def _add_serve_parser(sub):
    p = sub.add_parser("serve", help="serve the live teleoperation session")
    p.add_argument("--port", type=int, default=8734)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--scenario", required=True)
    p.add_argument("--condition", default="vis", choices=harness.CONDITIONS)
    p.add_argument("--record-trace", help="write the applied input trace here on stop")


def _cmd_serve(args):
    import uvicorn

    from .gateway import SimSession, create_app

    scenario = tasks.load_scenario(args.scenario)
    session = SimSession(scenario, condition=args.condition,
                         trace_path=args.record_trace)
    app = create_app(session)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="teleimp")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_parser(sub)
    _add_gen_parser(sub)
    _add_serve_parser(sub)
    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "gen-scenario":
        return _cmd_gen(args)
    return _cmd_serve(args)


if __name__ == "__main__":
    sys.exit(main())
