"""Inspection-guided test focusing.

Use inspection defect profiles to decide where to test: selection rules
over per-part statistics pick the parts (or defect types) expected to be
defect-prone, plans allocate the test effort, and retrospective evaluation
plus an experience database track which rules actually hold in which
context.
"""

from .edb import ExperienceDb, ExperienceElement, match_context
from .evaluate import (
    EvaluationConfig,
    QualityCategory,
    RuleEvaluation,
    classify_rule,
    defect_prone_parts,
    evaluate_ruleset,
    precision_recall_f,
    promising_candidates,
    render_evaluation_csv,
)
from .model import (
    Assumption,
    DefectRecord,
    HistoryRecord,
    PartMetrics,
    PartStats,
    compute_part_stats,
    round_half_up,
)
from .monitor import InspectionMeta, MonitorConfig, MonitorReport, check_profile
from .prioritize import (
    PrioritizationPlan,
    RedirectDecision,
    allocate_effort,
    prioritize,
    prioritize_defect_types,
    redirect,
    two_stage,
)
from .rules import (
    MetricRef,
    MissingMetricError,
    Predicate,
    RuleSyntaxError,
    SelectionRule,
    derive_threshold,
    evaluate_rule,
    parse_rule,
    render_rule,
)

__version__ = "0.1.0"

__all__ = [
    "Assumption",
    "DefectRecord",
    "HistoryRecord",
    "PartMetrics",
    "PartStats",
    "compute_part_stats",
    "round_half_up",
    "MonitorConfig",
    "InspectionMeta",
    "MonitorReport",
    "check_profile",
    "SelectionRule",
    "Predicate",
    "MetricRef",
    "RuleSyntaxError",
    "MissingMetricError",
    "parse_rule",
    "render_rule",
    "evaluate_rule",
    "derive_threshold",
    "PrioritizationPlan",
    "RedirectDecision",
    "prioritize",
    "prioritize_defect_types",
    "two_stage",
    "allocate_effort",
    "redirect",
    "EvaluationConfig",
    "QualityCategory",
    "RuleEvaluation",
    "defect_prone_parts",
    "precision_recall_f",
    "classify_rule",
    "evaluate_ruleset",
    "promising_candidates",
    "render_evaluation_csv",
    "ExperienceDb",
    "ExperienceElement",
    "match_context",
]
