"""Turn rule selections into test prioritization plans.

One-stage plans rank the selected parts (or defect types); two-stage plans
rank parts first and then the defect types to focus on within each selected
part. Plans can carry an effort allocation: either everything goes to the
prioritized parts (``top_only``) or most of it does and the remaining parts
get tested with little effort (``weighted``). Once interim test results
arrive, ``redirect`` checks whether they still back the rule in use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from decimal import Decimal
from fractions import Fraction
from typing import Mapping, Sequence

from .model import DefectRecord, PHASE_TEST, PartStats
from .rules import MissingMetricError, SCOPE_PARTS, SelectionRule, evaluate_rule

ORDER_BY_DEFECT_CONTENT = "by_defect_content"
ORDER_BY_DENSITY = "by_density"
ORDER_BY_ID = "by_id"
ORDERINGS = (ORDER_BY_DEFECT_CONTENT, ORDER_BY_DENSITY, ORDER_BY_ID)

STRATEGY_TOP_ONLY = "top_only"
STRATEGY_WEIGHTED = "weighted"
STRATEGIES = (STRATEGY_TOP_ONLY, STRATEGY_WEIGHTED)

FLAG_NO_EFFORT_REDUCTION = "no_effort_reduction"
FLAG_UNIFORM_FALLBACK = "uniform_fallback"


@dataclass(frozen=True)
class PrioritizationPlan:
    """Ordered outcome of applying one selection rule.

    ``prioritized_types`` is a per-part mapping for two-stage plans, a flat
    tuple for one-stage plans on defect types, and None when types were not
    prioritized. ``allocations`` appears once effort has been assigned and
    then covers every part (non-prioritized parts explicitly at 0 or at
    their low-effort share).
    """

    rule_id: str | None
    prioritized_parts: tuple[str, ...] = ()
    prioritized_types: Mapping[str, tuple[str, ...]] | tuple[str, ...] | None = None
    strategy: str | None = None
    allocations: Mapping[str, float] | None = None
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if len(set(self.prioritized_parts)) != len(self.prioritized_parts):
            raise ValueError("prioritized_parts must not contain duplicates")

    def to_dict(self) -> dict:
        types = self.prioritized_types
        if isinstance(types, Mapping):
            types = {part: list(ranked) for part, ranked in sorted(types.items())}
        elif types is not None:
            types = list(types)
        return {
            "rule_id": self.rule_id,
            "prioritized_parts": list(self.prioritized_parts),
            "prioritized_types": types,
            "strategy": self.strategy,
            "allocations": dict(sorted(self.allocations.items())) if self.allocations is not None else None,
            "flags": list(self.flags),
        }


@dataclass(frozen=True)
class RedirectDecision:
    verdict: str  # "keep" | "redirect"
    reason: str
    replacement_rule_id: str | None = None

    def __post_init__(self) -> None:
        if self.verdict not in ("keep", "redirect"):
            raise ValueError(f"verdict must be 'keep' or 'redirect', got {self.verdict!r}")
        if self.verdict == "redirect" and not self.reason:
            raise ValueError("a redirect decision needs a reason")


def _part_sort_key(ordering: str, stats: Mapping[str, PartStats]):
    if ordering == ORDER_BY_ID:
        return lambda pid: pid

    def key(pid: str):
        part = stats[pid]
        if ordering == ORDER_BY_DEFECT_CONTENT:
            value = part.inspection_defect_content
        else:
            if part.defect_density is None:
                raise MissingMetricError(pid, "defect_density")
            value = part.defect_density
        return (-value, pid)

    return key


def prioritize(
    rule: SelectionRule,
    stats: Mapping[str, PartStats],
    ordering: str = ORDER_BY_DEFECT_CONTENT,
) -> PrioritizationPlan:
    """One-stage prioritization: evaluate the rule and order its selection.

    Parts are ordered by the chosen key descending with ties broken by part
    id ascending (``by_id`` is a plain ascending listing). A rule on defect
    types yields a plan with a flat ranked type list instead.
    """
    if ordering not in ORDERINGS:
        raise ValueError(f"ordering must be one of {ORDERINGS}, got {ordering!r}")
    selected = evaluate_rule(rule, stats)

    if rule.scope != SCOPE_PARTS:
        if ordering == ORDER_BY_ID:
            ranked = tuple(sorted(selected))
        else:
            totals: dict[str, int] = {}
            for part in stats.values():
                for t, n in part.type_counts_for("inspection").items():
                    totals[t] = totals.get(t, 0) + n
            ranked = tuple(sorted(selected, key=lambda t: (-totals.get(t, 0), t)))
        return PrioritizationPlan(rule_id=rule.id, prioritized_types=ranked)

    parts = tuple(sorted(selected, key=_part_sort_key(ordering, stats)))
    return PrioritizationPlan(rule_id=rule.id, prioritized_parts=parts)


def prioritize_defect_types(
    stats: Mapping[str, PartStats],
    within_parts: set[str] | None = None,
    top_k: int | None = None,
) -> list[str]:
    """Rank inspection defect types by count, optionally within given parts.

    Ties break by type name ascending; the list is cut to ``top_k`` when
    given. Untyped defects do not contribute.
    """
    if top_k is not None and top_k < 1:
        raise ValueError("top_k must be >= 1")
    totals: dict[str, int] = {}
    for pid, part in stats.items():
        if within_parts is not None and pid not in within_parts:
            continue
        for t, n in part.type_counts_for("inspection").items():
            totals[t] = totals.get(t, 0) + n
    ranked = sorted(totals, key=lambda t: (-totals[t], t))
    return ranked[:top_k] if top_k is not None else ranked


def two_stage(
    rule: SelectionRule,
    stats: Mapping[str, PartStats],
    top_k: int | None = None,
    ordering: str = ORDER_BY_DEFECT_CONTENT,
) -> PrioritizationPlan:
    """Two-stage prioritization: selected parts first, then the top defect
    types within each selected part."""
    plan = prioritize(rule, stats, ordering)
    per_part = {
        pid: tuple(prioritize_defect_types(stats, within_parts={pid}, top_k=top_k))
        for pid in plan.prioritized_parts
    }
    return replace(plan, prioritized_types=per_part)


def _exact(x: float) -> Fraction:
    return Fraction(Decimal(str(x)))


def allocate_effort(
    plan: PrioritizationPlan,
    budget: float,
    strategy: str,
    weighted_share: float = 0.8,
    all_parts: set[str] | None = None,
) -> PrioritizationPlan:
    """Assign the effort budget across all parts according to the strategy.

    top_only: the budget is split equally among the prioritized parts and
    everything else gets 0. weighted: ``weighted_share`` of the budget is
    split equally among the prioritized parts and the remainder equally
    among the others. The returned allocations always sum to the budget.

    A weighted plan with nothing prioritized degrades to a uniform split
    (flagged); one that prioritizes every part saves nothing and is flagged
    ``no_effort_reduction``.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    if not budget > 0 or not math.isfinite(budget):
        raise ValueError("budget must be a positive finite number")
    if not 0 < weighted_share <= 1:
        raise ValueError("weighted_share must be in (0, 1]")
    if all_parts is None:
        all_parts = set(plan.prioritized_parts)
    prioritized = list(plan.prioritized_parts)
    if not set(prioritized) <= all_parts:
        raise ValueError("plan parts must be a subset of all_parts")
    if not all_parts:
        raise ValueError("cannot allocate a budget over zero parts")

    others = sorted(all_parts - set(prioritized))
    flags = list(plan.flags)
    budget_f = _exact(budget)

    exact: dict[str, Fraction]
    if strategy == STRATEGY_TOP_ONLY:
        if not prioritized:
            raise ValueError("top_only allocation needs at least one prioritized part")
        per_part = budget_f / len(prioritized)
        exact = {pid: per_part for pid in prioritized}
        exact.update({pid: Fraction(0) for pid in others})
    else:
        if not prioritized:
            per_part = budget_f / len(all_parts)
            exact = {pid: per_part for pid in sorted(all_parts)}
            flags.append(FLAG_UNIFORM_FALLBACK)
        elif not others:
            # whole budget must land on the prioritized tier anyway
            per_part = budget_f / len(prioritized)
            exact = {pid: per_part for pid in prioritized}
            flags.append(FLAG_NO_EFFORT_REDUCTION)
        else:
            share = _exact(weighted_share)
            top_each = share * budget_f / len(prioritized)
            rest_each = (1 - share) * budget_f / len(others)
            exact = {pid: top_each for pid in prioritized}
            exact.update({pid: rest_each for pid in others})

    allocations = {pid: float(v) for pid, v in exact.items()}
    # float conversion can lose a few ulps; settle the residue on the
    # largest allocation so the total is conserved bit-exactly
    residue = budget - math.fsum(allocations.values())
    if residue:
        target = min(allocations, key=lambda pid: (-allocations[pid], pid))
        allocations[target] += residue

    return replace(plan, strategy=strategy, allocations=allocations, flags=tuple(flags))


def redirect(
    plan: PrioritizationPlan,
    interim_test_defects: Sequence[DefectRecord],
    alternatives: Sequence[SelectionRule],
    stats: Mapping[str, PartStats],
) -> RedirectDecision:
    """Decide whether interim test results still support the current plan.

    Keep the plan iff every interim test defect lies in a prioritized part.
    Otherwise redirect, proposing the first alternative rule whose selection
    covers all the parts where interim defects appeared (if any does).
    """
    for d in interim_test_defects:
        if d.phase != PHASE_TEST:
            raise ValueError(f"interim defects must have phase 'test', got {d.phase!r}")

    defect_parts = {d.part_id for d in interim_test_defects}
    prioritized = set(plan.prioritized_parts)
    if defect_parts <= prioritized:
        return RedirectDecision(
            verdict="keep",
            reason="all interim test defects lie in prioritized parts",
        )

    outside = ", ".join(sorted(defect_parts - prioritized))
    for alt in alternatives:
        try:
            selection = evaluate_rule(alt, stats)
        except (MissingMetricError, ValueError):
            continue  # an alternative we cannot evaluate cannot be proposed
        if defect_parts <= selection:
            return RedirectDecision(
                verdict="redirect",
                reason=f"interim test defects outside prioritized parts: {outside}",
                replacement_rule_id=alt.id,
            )
    return RedirectDecision(
        verdict="redirect",
        reason=(
            f"interim test defects outside prioritized parts: {outside}; "
            "no alternative rule covers them"
        ),
    )
