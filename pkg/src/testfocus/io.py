"""Loaders for the on-disk input formats.

All inputs are plain CSV/JSON with fixed schemas:

* defects.csv  -- header ``part_id,phase,defect_type,severity``; one row per
  defect, type/severity cells may be empty.
* metrics.csv  -- header ``part_id,metric,value`` (long format).
* history.csv  -- header ``part_id,release_id,defect_count``.
* rules.json   -- list of ``{id, assumption_id, rule, context}`` objects,
  where ``rule`` is selection-rule text.
* context.json -- flat ``{factor: value}`` object.
* monitor.json -- monitor bounds plus an optional ``meta`` block with
  ``inspected_loc``/``inspection_hours``.

Loaders are strict: wrong headers, wrong column counts, or unparseable
values raise ``InputError`` naming the file and line.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, TypeVar

from .model import DefectRecord, HistoryRecord, PartMetrics
from .monitor import InspectionMeta, MonitorConfig
from .rules import RuleSyntaxError, SelectionRule, parse_rule

T = TypeVar("T")


class InputError(ValueError):
    """An input file is missing or malformed."""


@dataclass(frozen=True)
class RuleEntry:
    """One rules.json entry: the parsed rule plus its context profile."""

    rule: SelectionRule
    context: dict[str, str]


def _read_text(path: str | Path) -> str:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    return path.read_text(encoding="utf-8")


def _read_csv(path: str | Path, header: list[str]) -> list[tuple[int, list[str]]]:
    rows = list(csv.reader(_read_text(path).splitlines()))
    if not rows or rows[0] != header:
        raise InputError(f"{path}: expected header {','.join(header)!r}")
    numbered = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue  # blank line
        if len(row) != len(header):
            raise InputError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
        numbered.append((lineno, row))
    return numbered


def _convert(path: str | Path, lineno: int, fn: Callable[[], T]) -> T:
    try:
        return fn()
    except ValueError as exc:
        raise InputError(f"{path}:{lineno}: {exc}") from exc


def load_defects(path: str | Path) -> list[DefectRecord]:
    records = []
    for lineno, (part_id, phase, defect_type, severity) in _read_csv(
        path, ["part_id", "phase", "defect_type", "severity"]
    ):
        records.append(
            _convert(
                path,
                lineno,
                lambda: DefectRecord(
                    part_id=part_id,
                    phase=phase.strip(),
                    defect_type=defect_type or None,
                    severity=severity or None,
                ),
            )
        )
    return records


def load_metrics(path: str | Path) -> list[PartMetrics]:
    by_part: dict[str, dict[str, float]] = {}
    for lineno, (part_id, metric, value) in _read_csv(path, ["part_id", "metric", "value"]):
        part_id = part_id.strip()
        metric = metric.strip().lower()
        number = _convert(path, lineno, lambda: float(value))
        entries = by_part.setdefault(part_id, {})
        if metric in entries:
            raise InputError(f"{path}:{lineno}: duplicate metric {metric!r} for part {part_id!r}")
        entries[metric] = number
    return [
        PartMetrics(part_id=pid, entries=entries) for pid, entries in by_part.items()
    ]


def load_history(path: str | Path) -> list[HistoryRecord]:
    records = []
    for lineno, (part_id, release_id, count) in _read_csv(
        path, ["part_id", "release_id", "defect_count"]
    ):
        records.append(
            _convert(
                path,
                lineno,
                lambda: HistoryRecord(
                    part_id=part_id, release_id=release_id.strip(), defect_count=int(count)
                ),
            )
        )
    return records


def load_rules(path: str | Path) -> list[RuleEntry]:
    try:
        docs = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(docs, list):
        raise InputError(f"{path}: expected a JSON list of rule objects")

    entries: list[RuleEntry] = []
    seen: set[str] = set()
    for i, doc in enumerate(docs):
        if not isinstance(doc, dict) or "id" not in doc or "rule" not in doc:
            raise InputError(f"{path}: rule #{i + 1} must be an object with 'id' and 'rule'")
        rule_id = str(doc["id"])
        if rule_id in seen:
            raise InputError(f"{path}: duplicate rule id {rule_id!r}")
        seen.add(rule_id)
        try:
            rule = parse_rule(
                str(doc["rule"]),
                rule_id=rule_id,
                assumption_id=str(doc["assumption_id"]) if doc.get("assumption_id") else None,
            )
        except RuleSyntaxError as exc:
            raise InputError(f"{path}: rule {rule_id!r}: {exc}") from exc
        context = doc.get("context", {})
        if not isinstance(context, dict):
            raise InputError(f"{path}: rule {rule_id!r}: context must be an object")
        entries.append(RuleEntry(rule=rule, context={str(k): str(v) for k, v in context.items()}))
    return entries


def load_context(path: str | Path) -> dict[str, str]:
    try:
        doc = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"{path}: expected a JSON object of context factors")
    return {str(k): str(v) for k, v in doc.items()}


def load_monitor_config(path: str | Path) -> tuple[MonitorConfig, InspectionMeta | None]:
    try:
        doc = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"{path}: expected a JSON object")

    def bounds(name: str) -> tuple[float, float] | None:
        raw = doc.get(name)
        if raw is None:
            return None
        if not isinstance(raw, (list, tuple)) or len(raw) != 2:
            raise InputError(f"{path}: {name} must be a [min, max] pair")
        return float(raw[0]), float(raw[1])

    try:
        config = MonitorConfig(
            min_total_inspection_defects=(
                int(doc["min_total_inspection_defects"])
                if doc.get("min_total_inspection_defects") is not None
                else None
            ),
            reading_rate_bounds=bounds("reading_rate_bounds"),
            defects_per_kloc_bounds=bounds("defects_per_kloc_bounds"),
            source=doc.get("source", "historical"),
        )
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc

    meta = None
    raw_meta = doc.get("meta")
    if raw_meta is not None:
        if not isinstance(raw_meta, dict) or not {"inspected_loc", "inspection_hours"} <= set(raw_meta):
            raise InputError(f"{path}: meta must contain inspected_loc and inspection_hours")
        meta = InspectionMeta(
            inspected_loc=float(raw_meta["inspected_loc"]),
            inspection_hours=float(raw_meta["inspection_hours"]),
        )
    return config, meta
