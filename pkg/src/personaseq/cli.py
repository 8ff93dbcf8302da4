"""Command-line entry point: ``personaseq {gen,run,sweep,analyze,report,replay}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from personaseq import __version__
from personaseq.errors import PersonaSeqError
from personaseq.runner import (
    ExperimentConfig,
    analyze_logs,
    build_matrix,
    estimate_requests,
    load_schedules,
    replay_logs,
    report_from_csv,
    run_experiment,
    sweep_temperature,
)
from personaseq.report import table_to_text
from personaseq.schedgen import GenerationParams, generate_schedules, write_schedules


def _csv_list(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def _add_matrix_flags(p: argparse.ArgumentParser, conditions: bool = True):
    p.add_argument("--config", type=Path, help="JSON experiment config; flags override its keys")
    p.add_argument("--output-dir")
    p.add_argument("--count", type=int, help="number of generated schedules")
    p.add_argument("--seed", type=int, help="first schedule seed")
    p.add_argument("--schedules", type=Path, help="import schedules from a JSON file instead")
    if conditions:
        p.add_argument("--conditions", type=_csv_list, help="comma-separated labels, e.g. baseline,openness:forward")
    p.add_argument("--temperatures", type=_csv_list, help="comma-separated temperatures")
    p.add_argument("--parallelism", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--m", type=int, help="comparison count for the Bonferroni correction")
    p.add_argument("--max-retries", type=int)
    g = p.add_argument_group("model (applies to a single configured model)")
    g.add_argument("--backend", choices=("chat", "replay", "scripted"))
    g.add_argument("--model-id")
    g.add_argument("--endpoint")
    g.add_argument("--auth-env", help="name of the environment variable holding the API token")
    g.add_argument("--rate-limit", type=float, help="requests per minute")
    g.add_argument("--transcripts", help="run-log directory for the replay backend")
    g.add_argument("--policy-seed", type=int)
    g.add_argument("--noise-per-temperature", type=float)
    p.add_argument("--dry-run", action="store_true", help="print the request count and exit")


_MODEL_FLAGS = {"backend": "backend", "model_id": "model_id", "endpoint": "endpoint", "auth_env": "auth_env",
                "rate_limit": "rate_limit", "transcripts": "transcripts", "policy_seed": "seed",
                "noise_per_temperature": "noise_per_temperature"}


def config_from_args(args, conditions=None) -> ExperimentConfig:
    data = json.loads(args.config.read_text(encoding="utf-8")) if args.config else {}
    sched = dict(data.get("schedules", {"count": 500, "seed": 1}))
    if args.schedules:
        sched = {"path": str(args.schedules)}
    if args.count is not None:
        sched["count"] = args.count
    if args.seed is not None:
        sched["seed"] = args.seed
    data["schedules"] = sched
    if conditions is not None:
        data["conditions"] = conditions
    elif getattr(args, "conditions", None):
        data["conditions"] = args.conditions
    if args.temperatures:
        data["temperatures"] = [float(t) for t in args.temperatures]
    for flag in ("output_dir", "parallelism", "alpha", "m", "max_retries"):
        if getattr(args, flag) is not None:
            data[flag] = getattr(args, flag)
    overrides = {key: getattr(args, flag) for flag, key in _MODEL_FLAGS.items() if getattr(args, flag) is not None}
    if overrides:
        models = data.get("models") or [{}]
        if len(models) > 1:
            raise PersonaSeqError("model flags are ambiguous with several models configured; edit the config")
        data["models"] = [{**models[0], **overrides}]
    return ExperimentConfig.from_dict(data)


def _progress(n: int, total: int):
    if n == total or n % max(1, total // 20) == 0:
        print(f"  {n}/{total} cells", file=sys.stderr)


def _dry_run(config: ExperimentConfig) -> int:
    schedules = load_schedules(config)
    cells = len(build_matrix(config, schedules))
    n = estimate_requests(config, schedules)
    print(f"{n} agent requests minimum for {cells} cells "
          f"(retries may add up to {config.max_retries} per cycle)")
    return 0


def cmd_gen(args) -> int:
    params = GenerationParams(min_tasks=args.min_tasks, max_tasks=args.max_tasks,
                              window_start=args.window_start, window_end=args.window_end)
    schedules = generate_schedules(args.count, args.seed, params)
    write_schedules(args.out, schedules)
    print(f"wrote {len(schedules)} schedules to {args.out}")
    return 0


def _summarize(result) -> int:
    counts = result.manifest["counts"]
    print(f"{result.output_dir}: {counts['done']} done, {counts['aborted']} aborted, "
          f"{counts['pending']} pending ({result.executed} executed this time)")
    return result.exit_code


def cmd_run(args) -> int:
    config = config_from_args(args)
    if args.dry_run:
        return _dry_run(config)
    return _summarize(run_experiment(config, _progress))


def cmd_sweep(args) -> int:
    config = config_from_args(args, conditions=["baseline"])
    if args.dry_run:
        return _dry_run(config)
    res = sweep_temperature(config, _progress)
    for model_id, rows in res.tables.items():
        print(table_to_text(rows, title=f"{model_id}, baseline across temperatures"))
    return _summarize(res.experiment)


def cmd_analyze(args) -> int:
    records = analyze_logs(args.logs, args.out, args.alpha, args.m)
    print(f"analysed {len(records)} runs into {args.out}")
    return 0


def cmd_report(args) -> int:
    report_from_csv(args.out, args.alpha, args.m)
    print(f"tables and figures written under {args.out}")
    return 0


def cmd_replay(args) -> int:
    runs, mismatched = replay_logs(args.transcripts, args.out, args.alpha, args.m)
    print(f"replayed {len(runs)} transcripts into {args.out}; {len(mismatched)} order mismatches")
    for m in mismatched:
        print("  mismatch:", *m)
    return 1 if mismatched else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="personaseq", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate schedules")
    p.add_argument("--count", type=int, default=500)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--min-tasks", type=int, default=8)
    p.add_argument("--max-tasks", type=int, default=20)
    p.add_argument("--window-start", default="07:00")
    p.add_argument("--window-end", default="10:00")
    p.add_argument("--out", type=Path, default=Path("schedules.json"))
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="run the experiment matrix (resumable)")
    _add_matrix_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="baseline-only temperature sweep")
    _add_matrix_flags(p, conditions=False)
    p.set_defaults(func=cmd_sweep)

    for name, func, helptext in (("analyze", cmd_analyze, "metrics and statistics from run logs"),
                                 ("report", cmd_report, "tables and figures from metrics.csv and deltas.csv"),
                                 ("replay", cmd_replay, "re-derive orders from recorded transcripts")):
        p = sub.add_parser(name, help=helptext)
        if name == "analyze":
            p.add_argument("--logs", type=Path, required=True)
        if name == "replay":
            p.add_argument("--transcripts", type=Path, required=True)
        p.add_argument("--out", type=Path, required=True)
        p.add_argument("--alpha", type=float, default=0.05)
        p.add_argument("--m", type=int, default=50)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except PersonaSeqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
