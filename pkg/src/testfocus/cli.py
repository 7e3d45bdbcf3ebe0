"""Command-line front end for the whole pipeline.

Subcommands mirror the process steps: ``monitor`` gates the defect profile,
``prioritize`` produces a plan (optionally two-stage, optionally with an
effort allocation), ``evaluate`` scores rules retrospectively against test
defects, and ``edb record|list|suggest`` maintains the experience database.

Exit codes: 0 success (warnings noted on stderr), 1 usage or input error,
2 quality-monitor gate failure. Outputs are deterministic: sorted keys,
fixed rounding, identical inputs give byte-identical bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io as tfio
from .edb import ExperienceDb, ExperienceElement, UnknownElementError, locked_db
from .evaluate import EvaluationConfig, evaluate_ruleset, render_evaluation_csv
from .model import compute_part_stats
from .monitor import LEVEL_FAIL, LEVEL_WARN, MonitorConfig, MonitorReport, check_profile
from .prioritize import ORDERINGS, allocate_effort, prioritize, two_stage
from .rules import MissingMetricError

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_MONITOR_FAIL = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="testfocus",
        description="Focus testing on the parts an inspection showed to be defect-prone.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_profile_inputs(p: argparse.ArgumentParser, metrics_required: bool = False) -> None:
        p.add_argument("--defects", required=True, help="defects CSV (part_id,phase,defect_type,severity)")
        p.add_argument("--metrics", required=metrics_required, help="metrics CSV (part_id,metric,value)")
        p.add_argument("--history", help="history CSV (part_id,release_id,defect_count)")

    p_monitor = sub.add_parser("monitor", help="check whether the defect profile is usable")
    add_profile_inputs(p_monitor)
    p_monitor.add_argument("--monitor-config", help="monitor bounds JSON")

    p_prio = sub.add_parser("prioritize", help="produce a prioritization plan from a rule")
    add_profile_inputs(p_prio)
    p_prio.add_argument("--rules", required=True, help="rules JSON")
    p_prio.add_argument("--rule", help="id of the rule to apply (required when the file has several)")
    p_prio.add_argument("--monitor-config", help="monitor bounds JSON (gate runs before prioritizing)")
    p_prio.add_argument("--skip-monitor", action="store_true", help="skip the quality-monitor gate")
    p_prio.add_argument("--ordering", choices=ORDERINGS, default="by_defect_content")
    p_prio.add_argument("--two-stage", action="store_true", help="also rank defect types per selected part")
    p_prio.add_argument("--top-k", type=int, help="defect types to keep per part (two-stage)")
    p_prio.add_argument("--budget", type=float, help="effort budget to allocate across parts")
    p_prio.add_argument("--strategy", choices=["top", "weighted"], default="top")
    p_prio.add_argument("--share", type=float, default=0.8, help="budget share for prioritized parts (weighted)")
    p_prio.add_argument("--out", help="write the plan JSON here instead of stdout")

    p_eval = sub.add_parser("evaluate", help="score rules against observed test defects")
    add_profile_inputs(p_eval)
    p_eval.add_argument("--rules", required=True, help="rules JSON")
    p_eval.add_argument("--tolerance", type=int, default=0, help="missed test defects still counted as covered")
    p_eval.add_argument("--out", help="write the CSV report here instead of stdout")

    p_edb = sub.add_parser("edb", help="maintain the experience database")
    edb_sub = p_edb.add_subparsers(dest="edb_command", required=True)

    p_rec = edb_sub.add_parser("record", help="record a quality assurance run's outcome")
    p_rec.add_argument("--db", required=True, help="experience database JSON file")
    p_rec.add_argument("--element", required=True, help="element id the outcome applies to")
    p_rec.add_argument("--outcome", required=True, choices=["correct", "incorrect", "context_mismatch"])
    p_rec.add_argument("--project", required=True, help="project id of the completed run")
    p_rec.add_argument("--category", help="quality category observed for the rule (I..IV)")
    p_rec.add_argument("--timestamp", help="ISO-8601 timestamp (defaults to now)")
    p_rec.add_argument("--replacement", help="JSON file with the replacement element")
    p_rec.add_argument("--actual-context", help="context JSON observed for the run (context_mismatch)")
    p_rec.add_argument(
        "--succeeded",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="whether the application under the actual context was correct (context_mismatch)",
    )

    p_list = edb_sub.add_parser("list", help="print all elements")
    p_list.add_argument("--db", required=True)

    p_sug = edb_sub.add_parser("suggest", help="print candidate elements for a context")
    p_sug.add_argument("--db", required=True)
    p_sug.add_argument("--context", required=True, help="context JSON file")

    return parser


def _load_stats(args: argparse.Namespace):
    defects = tfio.load_defects(args.defects)
    metrics = tfio.load_metrics(args.metrics) if args.metrics else []
    history = tfio.load_history(args.history) if args.history else []
    return compute_part_stats(defects, metrics, history)


def _format_report(report: MonitorReport) -> str:
    lines = []
    for f in report.findings:
        observed = "n/a" if f.observed is None else f"{f.observed:g}"
        line = f"{f.check}: observed {observed}, bound {f.bound} [{f.level}]"
        if f.detail:
            line += f" -- {f.detail}"
        lines.append(line)
    lines.append(f"verdict: {report.verdict}")
    return "\n".join(lines) + "\n"


def _run_monitor(args: argparse.Namespace) -> tuple[MonitorReport, str]:
    stats = _load_stats(args)
    if getattr(args, "monitor_config", None):
        config, meta = tfio.load_monitor_config(args.monitor_config)
    else:
        config, meta = MonitorConfig(), None
    report = check_profile(stats, meta, config)
    return report, _format_report(report)


def _cmd_monitor(args: argparse.Namespace) -> int:
    report, text = _run_monitor(args)
    sys.stdout.write(text)
    return EXIT_MONITOR_FAIL if report.verdict == LEVEL_FAIL else EXIT_OK


def _pick_rule(entries: list[tfio.RuleEntry], rule_id: str | None):
    if rule_id is not None:
        for entry in entries:
            if entry.rule.id == rule_id:
                return entry.rule
        raise tfio.InputError(f"no rule with id {rule_id!r} in the rules file")
    if not entries:
        raise tfio.InputError("rules file contains no rules")
    if len(entries) > 1:
        ids = ", ".join(e.rule.id or "?" for e in entries)
        raise tfio.InputError(f"rules file contains several rules ({ids}); pass --rule")
    return entries[0].rule


def _cmd_prioritize(args: argparse.Namespace) -> int:
    if not args.skip_monitor:
        report, text = _run_monitor(args)
        if report.verdict == LEVEL_FAIL:
            sys.stderr.write(text)
            sys.stderr.write("error: quality monitor gate failed; plan not produced\n")
            return EXIT_MONITOR_FAIL
        if report.verdict == LEVEL_WARN:
            sys.stderr.write(text)

    stats = _load_stats(args)
    rule = _pick_rule(tfio.load_rules(args.rules), args.rule)

    if args.two_stage:
        plan = two_stage(rule, stats, top_k=args.top_k, ordering=args.ordering)
    else:
        plan = prioritize(rule, stats, ordering=args.ordering)

    if args.budget is not None:
        strategy = "top_only" if args.strategy == "top" else "weighted"
        plan = allocate_effort(
            plan, args.budget, strategy, weighted_share=args.share, all_parts=set(stats)
        )

    payload = json.dumps(plan.to_dict(), indent=2, sort_keys=True) + "\n"
    _write_out(args.out, payload)
    return EXIT_OK


def _cmd_evaluate(args: argparse.Namespace) -> int:
    stats = _load_stats(args)
    entries = tfio.load_rules(args.rules)
    config = EvaluationConfig(missed_defect_tolerance=args.tolerance)
    evaluations = evaluate_ruleset([e.rule for e in entries], stats, config)
    _write_out(args.out, render_evaluation_csv(evaluations))
    return EXIT_OK


def _load_replacement(path: str | None) -> ExperienceElement | None:
    if path is None:
        return None
    if not Path(path).is_file():
        raise tfio.InputError(f"no such file: {path}")
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return ExperienceElement.from_dict(doc)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise tfio.InputError(f"{path}: invalid replacement element: {exc}") from exc


def _cmd_edb(args: argparse.Namespace) -> int:
    if args.edb_command == "list":
        sys.stdout.write(ExperienceDb.load(_existing(args.db)).to_json())
        return EXIT_OK

    if args.edb_command == "suggest":
        db = ExperienceDb.load(_existing(args.db))
        context = tfio.load_context(args.context)
        candidates = db.select_candidates(context)
        docs = [el.to_dict() for el in candidates]
        sys.stdout.write(json.dumps(docs, indent=2, sort_keys=True, ensure_ascii=False) + "\n")
        return EXIT_OK

    # record
    replacement = _load_replacement(args.replacement)
    actual_context = tfio.load_context(args.actual_context) if args.actual_context else None
    with locked_db(_existing(args.db)) as db:
        db.record_outcome(
            args.element,
            args.outcome,
            args.project,
            category=args.category,
            timestamp=args.timestamp,
            replacement=replacement,
            actual_context=actual_context,
            succeeded=args.succeeded,
        )
        significance = db.get(args.element).significance
    sys.stdout.write(f"recorded {args.outcome} for {args.element} (significance now {significance})\n")
    return EXIT_OK


def _existing(path: str) -> str:
    if not Path(path).is_file():
        raise tfio.InputError(f"no such file: {path}")
    return path


def _write_out(out: str | None, payload: str) -> None:
    if out:
        Path(out).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors; we reserve 2 for the gate
        return EXIT_OK if exc.code == 0 else EXIT_INPUT_ERROR

    handlers = {
        "monitor": _cmd_monitor,
        "prioritize": _cmd_prioritize,
        "evaluate": _cmd_evaluate,
        "edb": _cmd_edb,
    }
    try:
        return handlers[args.command](args)
    except (tfio.InputError, MissingMetricError, UnknownElementError, ValueError, OSError) as exc:
        message = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        sys.stderr.write(f"error: {message}\n")
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
