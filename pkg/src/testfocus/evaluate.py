"""Retrospective scoring of selection rules against observed test defects.

Ground truth is binary: a part is defect-prone iff testing found at least
one defect in it. Each rule's selection is then graded twice:

* a four-scale quality category -- exact match (I), superset (II), partial
  overlap (III), disjoint (IV) -- where "match" means the unselected parts
  hide at most ``missed_defect_tolerance`` test defects (0 = strong rule,
  >0 = weak rule). A rule that selects *every* part is set aside as
  ``no_reduction``: it can't be wrong, but it saves no effort either.
* precision / recall / balanced F-measure, for finer ranking; the rules
  with the highest F are the promising candidates to keep using.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .model import PartStats, round_half_up
from .rules import MissingMetricError, SelectionRule, evaluate_rule


class QualityCategory(enum.Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"
    NO_REDUCTION = "no_reduction"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class EvaluationConfig:
    """Coverage criterion: how many test defects may stay uncovered.

    0 is the strong evaluation rule (nothing missed); a positive tolerance
    is the weak rule (a bounded number of defects missed still counts as
    covered). The tolerance counts defects, not parts.
    """

    missed_defect_tolerance: int = 0

    def __post_init__(self) -> None:
        if self.missed_defect_tolerance < 0:
            raise ValueError("missed_defect_tolerance must be >= 0")


@dataclass(frozen=True)
class RuleEvaluation:
    """Outcome of judging one rule against test defect data.

    ``error`` is set (and the scoring fields are None) when the rule could
    not be evaluated at all, e.g. it referenced a metric missing for a part.
    """

    rule_id: str | None
    selected: frozenset[str] = frozenset()
    defect_prone: frozenset[str] = frozenset()
    category: QualityCategory | None = None
    precision: float | None = None
    recall: float | None = None
    f_measure: float | None = None
    missed_defects: int | None = None
    error: str | None = None


def defect_prone_parts(stats: Mapping[str, PartStats]) -> set[str]:
    """Parts in which testing found at least one defect."""
    return {pid for pid, s in stats.items() if s.test_defect_content >= 1}


def precision_recall_f(selected: set[str], defect_prone: set[str]) -> tuple[float, float, float]:
    """Precision (quality of the prioritization), recall (its completeness),
    and balanced F-measure.

    Conventions for degenerate inputs: an empty selection has precision 0
    (it prioritizes nothing), an empty defect-prone set gives recall 1
    (vacuously complete), and F is 0 whenever precision + recall is 0.
    """
    hits = len(selected & defect_prone)
    precision = hits / len(selected) if selected else 0.0
    recall = hits / len(defect_prone) if defect_prone else 1.0
    f_measure = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f_measure


def missed_defect_count(
    selected: set[str],
    defect_prone: set[str],
    test_defect_counts: Mapping[str, int] | None,
) -> int:
    """Test defects sitting in parts the rule did not select.

    Without per-part counts each unselected defect-prone part counts as one
    missed defect.
    """
    missed_parts = defect_prone - selected
    if test_defect_counts is None:
        return len(missed_parts)
    return sum(test_defect_counts.get(p, 1) for p in missed_parts)


def classify_rule(
    selected: set[str],
    defect_prone: set[str],
    all_parts: set[str],
    config: EvaluationConfig = EvaluationConfig(),
    test_defect_counts: Mapping[str, int] | None = None,
) -> QualityCategory:
    """Four-scale category of a selection, given the defect-prone ground truth.

    Selecting every part is reported as ``no_reduction`` rather than II,
    because no test effort would be saved. Otherwise, with "covered"
    meaning missed test defects <= tolerance:

        covered and selected subset of defect_prone  -> I
        covered with extra parts selected            -> II
        not covered, some defect-prone part selected -> III
        not covered, no defect-prone part selected   -> IV
    """
    if not selected <= all_parts:
        raise ValueError("selected parts must be drawn from all_parts")
    if not defect_prone <= all_parts:
        raise ValueError("defect_prone parts must be drawn from all_parts")

    if all_parts and selected == all_parts:
        return QualityCategory.NO_REDUCTION

    missed = missed_defect_count(selected, defect_prone, test_defect_counts)
    covered = missed <= config.missed_defect_tolerance
    if covered:
        return QualityCategory.I if selected <= defect_prone else QualityCategory.II
    return QualityCategory.III if selected & defect_prone else QualityCategory.IV


def evaluate_ruleset(
    rules: Sequence[SelectionRule],
    stats: Mapping[str, PartStats],
    config: EvaluationConfig = EvaluationConfig(),
) -> list[RuleEvaluation]:
    """Judge every rule against the stats table, in input order.

    A rule that cannot be evaluated (missing metric, wrong scope) yields a
    RuleEvaluation with ``error`` set; the rest of the batch is unaffected.
    Values are kept at full precision; rounding happens only in rendering.
    """
    all_parts = set(stats)
    prone = defect_prone_parts(stats)
    counts = {pid: s.test_defect_content for pid, s in stats.items()}

    results: list[RuleEvaluation] = []
    for rule in rules:
        try:
            selected = evaluate_rule(rule, stats)
        except (MissingMetricError, ValueError) as exc:
            results.append(RuleEvaluation(rule_id=rule.id, error=str(exc)))
            continue
        precision, recall, f_measure = precision_recall_f(selected, prone)
        results.append(
            RuleEvaluation(
                rule_id=rule.id,
                selected=frozenset(selected),
                defect_prone=frozenset(prone),
                category=classify_rule(selected, prone, all_parts, config, counts),
                precision=precision,
                recall=recall,
                f_measure=f_measure,
                missed_defects=missed_defect_count(selected, prone, counts),
            )
        )
    return results


def promising_candidates(evaluations: Iterable[RuleEvaluation]) -> list[RuleEvaluation]:
    """Evaluations ranked by F-measure descending (ties by rule id);
    unevaluable rules are left out."""
    scored = [e for e in evaluations if e.error is None]
    return sorted(scored, key=lambda e: (-e.f_measure, e.rule_id or ""))


def render_evaluation_csv(evaluations: Iterable[RuleEvaluation]) -> str:
    """CSV report with one row per rule: selection, category, P/R/F.

    Numbers are rounded half-up to 2 decimals for display; selections are
    semicolon-joined sorted part ids. Unevaluable rules get category
    ``unevaluable`` and empty numeric cells.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["rule_id", "selection", "category", "precision", "recall", "f_measure"])
    for ev in evaluations:
        if ev.error is not None:
            writer.writerow([ev.rule_id or "", "", "unevaluable", "", "", ""])
            continue
        writer.writerow(
            [
                ev.rule_id or "",
                ";".join(sorted(ev.selected)),
                str(ev.category),
                _fmt2(ev.precision),
                _fmt2(ev.recall),
                _fmt2(ev.f_measure),
            ]
        )
    return buf.getvalue()


def _fmt2(value: float) -> str:
    return f"{round_half_up(value, 2):.2f}"
