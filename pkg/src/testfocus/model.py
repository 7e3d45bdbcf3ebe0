"""Domain types for inspection defect profiles and per-part statistics.

Raw observations (defect records, part metrics, release history) are turned
into one ``PartStats`` row per part. Everything downstream (selection rules,
prioritization, evaluation) works on those rows. All types are plain value
objects; construction validates, after that they are treated as immutable.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Mapping

PHASE_INSPECTION = "inspection"
PHASE_TEST = "test"
PHASES = (PHASE_INSPECTION, PHASE_TEST)

DERIVATION_KINDS = ("analytic", "empirical_adapted", "empirical_observed")

# factor name -> value, e.g. {"inspector_experience": "low"}
ContextProfile = Mapping[str, str]


def normalize_label(label: str | None) -> str | None:
    """Trim and lowercase a severity/type label; empty means absent."""
    if label is None:
        return None
    label = label.strip().lower()
    return label or None


def round_half_up(value: float, ndigits: int = 2) -> float:
    """Round for display: decimal half-up, unlike banker's ``round()``.

    Comparisons elsewhere always use full precision; this exists only so
    rendered reports match hand-rounded figures.
    """
    quantum = Decimal(1).scaleb(-ndigits)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class DefectRecord:
    """One observed defect: where it was found, in which phase, and labels."""

    part_id: str
    phase: str
    defect_type: str | None = None
    severity: str | None = None

    def __post_init__(self) -> None:
        if not self.part_id or not self.part_id.strip():
            raise ValueError("DefectRecord.part_id must be non-empty")
        if self.phase not in PHASES:
            raise ValueError(f"DefectRecord.phase must be one of {PHASES}, got {self.phase!r}")
        object.__setattr__(self, "part_id", self.part_id.strip())
        object.__setattr__(self, "defect_type", normalize_label(self.defect_type))
        object.__setattr__(self, "severity", normalize_label(self.severity))


@dataclass(frozen=True)
class PartMetrics:
    """Numeric metrics for one part, keyed by metric name.

    ``loc`` and ``mean_method_length`` are the names the built-in rule
    metrics recognize; any other name is carried along and reachable via
    ``metric("name")`` in rules.
    """

    part_id: str
    entries: Mapping[str, float]

    def __post_init__(self) -> None:
        if not self.part_id or not self.part_id.strip():
            raise ValueError("PartMetrics.part_id must be non-empty")
        object.__setattr__(self, "part_id", self.part_id.strip())
        cleaned: dict[str, float] = {}
        for name, value in self.entries.items():
            key = name.strip().lower()
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValueError(f"metric {key!r} for part {self.part_id!r} is not numeric: {value!r}")
            value = float(value)
            if not math.isfinite(value):
                raise ValueError(f"metric {key!r} for part {self.part_id!r} is not finite")
            if key in cleaned:
                raise ValueError(f"duplicate metric {key!r} for part {self.part_id!r}")
            cleaned[key] = value
        if "loc" in cleaned and cleaned["loc"] <= 0:
            raise ValueError(f"loc for part {self.part_id!r} must be > 0")
        object.__setattr__(self, "entries", cleaned)


@dataclass(frozen=True)
class HistoryRecord:
    """Defect count of one part in one past release."""

    part_id: str
    release_id: str
    defect_count: int

    def __post_init__(self) -> None:
        if not self.part_id or not self.part_id.strip():
            raise ValueError("HistoryRecord.part_id must be non-empty")
        if self.defect_count < 0:
            raise ValueError("HistoryRecord.defect_count must be >= 0")
        object.__setattr__(self, "part_id", self.part_id.strip())


@dataclass(frozen=True)
class Assumption:
    """A stated relationship between inspection results and expected test
    defects, with how it was derived (analytically or empirically)."""

    id: str
    statement: str
    derivation: str = "empirical_observed"

    def __post_init__(self) -> None:
        if self.derivation not in DERIVATION_KINDS:
            raise ValueError(
                f"Assumption.derivation must be one of {DERIVATION_KINDS}, got {self.derivation!r}"
            )


@dataclass(frozen=True)
class PartStats:
    """Derived per-part statistics that selection rules evaluate against.

    ``defect_density`` is inspection defects per line of code, kept at full
    precision, and present only when ``loc`` is known. ``history_defects``
    maps lookback depth N to the summed defect count of the N most recent
    releases (most recent = highest release_id).
    """

    part_id: str
    inspection_defect_content: int = 0
    test_defect_content: int = 0
    severity_counts: Mapping[str, int] = field(default_factory=dict)
    type_counts: Mapping[str, Mapping[str, int]] = field(default_factory=dict)
    defect_density: float | None = None
    metrics: Mapping[str, float] = field(default_factory=dict)
    history_defects: Mapping[int, int] = field(default_factory=dict)

    def type_counts_for(self, phase: str) -> Mapping[str, int]:
        return self.type_counts.get(phase, {})


def compute_part_stats(
    defects: list[DefectRecord],
    metrics: list[PartMetrics],
    history: list[HistoryRecord],
) -> dict[str, PartStats]:
    """Aggregate raw records into one ``PartStats`` row per part.

    Every part mentioned in any input appears in the result (parts that only
    have metrics get zero counts). The result is keyed and ordered by
    part_id, so it is independent of input row order.

    Raises ValueError on duplicate ``PartMetrics`` for the same part.
    """
    metrics_by_part: dict[str, PartMetrics] = {}
    for pm in metrics:
        if pm.part_id in metrics_by_part:
            raise ValueError(f"duplicate PartMetrics for part {pm.part_id!r}")
        metrics_by_part[pm.part_id] = pm

    inspection_counts: Counter[str] = Counter()
    test_counts: Counter[str] = Counter()
    severity_counts: dict[str, Counter[str]] = defaultdict(Counter)
    type_counts: dict[str, dict[str, Counter[str]]] = defaultdict(lambda: defaultdict(Counter))
    for d in defects:
        if d.phase == PHASE_INSPECTION:
            inspection_counts[d.part_id] += 1
            if d.severity is not None:
                severity_counts[d.part_id][d.severity] += 1
        else:
            test_counts[d.part_id] += 1
        if d.defect_type is not None:
            type_counts[d.part_id][d.phase][d.defect_type] += 1

    release_counts: dict[str, Counter[str]] = defaultdict(Counter)
    for h in history:
        release_counts[h.part_id][h.release_id] += h.defect_count

    part_ids = (
        set(metrics_by_part)
        | {d.part_id for d in defects}
        | {h.part_id for h in history}
    )

    stats: dict[str, PartStats] = {}
    for pid in sorted(part_ids):
        entries = metrics_by_part[pid].entries if pid in metrics_by_part else {}
        loc = entries.get("loc")
        density = inspection_counts[pid] / loc if loc is not None else None

        depth_sums: dict[int, int] = {}
        running = 0
        for depth, release in enumerate(sorted(release_counts[pid], reverse=True), start=1):
            running += release_counts[pid][release]
            depth_sums[depth] = running

        stats[pid] = PartStats(
            part_id=pid,
            inspection_defect_content=inspection_counts[pid],
            test_defect_content=test_counts[pid],
            severity_counts=dict(severity_counts.get(pid, {})),
            type_counts={ph: dict(c) for ph, c in type_counts.get(pid, {}).items()},
            defect_density=density,
            metrics=dict(entries),
            history_defects=depth_sums,
        )
    return stats
