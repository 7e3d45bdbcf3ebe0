"""Quality monitoring: is the inspection defect profile fit for prioritizing?

Before a defect profile drives test prioritization, a few sanity checks run
against configured bounds (total defects found, inspector reading rate,
defects per KLoC). Bounds come from context-specific historical data or from
literature values; none are hard-coded here. A profile with too few defects
fails the gate; rate checks only warn, since monitoring is advisory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .model import PHASE_INSPECTION, PartStats

LEVEL_PASS = "pass"
LEVEL_WARN = "warn"
LEVEL_FAIL = "fail"

SOURCE_KINDS = ("historical", "literature")


@dataclass(frozen=True)
class MonitorConfig:
    """Bounds for the profile checks. Unset bounds mean "don't check".

    ``source`` only annotates where the bounds came from.
    """

    min_total_inspection_defects: int | None = None
    reading_rate_bounds: tuple[float, float] | None = None  # LoC per hour
    defects_per_kloc_bounds: tuple[float, float] | None = None
    source: str = "historical"

    def __post_init__(self) -> None:
        if self.min_total_inspection_defects is not None and self.min_total_inspection_defects < 0:
            raise ValueError("min_total_inspection_defects must be >= 0")
        for name in ("reading_rate_bounds", "defects_per_kloc_bounds"):
            bounds = getattr(self, name)
            if bounds is not None:
                lo, hi = bounds
                if lo > hi:
                    raise ValueError(f"{name}: min {lo} exceeds max {hi}")
        if self.source not in SOURCE_KINDS:
            raise ValueError(f"source must be one of {SOURCE_KINDS}, got {self.source!r}")


@dataclass(frozen=True)
class InspectionMeta:
    """Session-level figures needed for rate checks."""

    inspected_loc: float
    inspection_hours: float


@dataclass(frozen=True)
class Finding:
    check: str
    observed: float | None  # None when the check was not evaluable
    bound: str
    level: str
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "observed": self.observed,
            "bound": self.bound,
            "level": self.level,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class MonitorReport:
    verdict: str
    findings: tuple[Finding, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "findings": [f.to_dict() for f in self.findings]}


def _verdict(findings: list[Finding]) -> str:
    if any(f.level == LEVEL_FAIL for f in findings):
        return LEVEL_FAIL
    if any(f.level == LEVEL_WARN for f in findings):
        return LEVEL_WARN
    return LEVEL_PASS


def check_profile(
    stats: Mapping[str, PartStats],
    inspection_meta: InspectionMeta | None,
    config: MonitorConfig,
) -> MonitorReport:
    """Run every configured check and aggregate the findings.

    Pure function: one finding per configured check, in a fixed order. A
    check whose required inputs are missing yields a warn-level "not
    evaluable" finding instead of being skipped silently. Only the
    total-defects minimum fails the gate; rate violations warn.
    """
    findings: list[Finding] = []
    total_defects = sum(s.inspection_defect_content for s in stats.values())

    if config.min_total_inspection_defects is not None:
        minimum = config.min_total_inspection_defects
        level = LEVEL_PASS if total_defects >= minimum else LEVEL_FAIL
        findings.append(
            Finding(
                check="total_defects",
                observed=float(total_defects),
                bound=f">= {minimum}",
                level=level,
                detail="" if level == LEVEL_PASS else "too few inspection defects to prioritize on",
            )
        )

    if config.reading_rate_bounds is not None:
        lo, hi = config.reading_rate_bounds
        bound = f"within [{lo}, {hi}] LoC/h"
        if inspection_meta is None or inspection_meta.inspection_hours <= 0:
            findings.append(
                Finding(
                    check="reading_rate",
                    observed=None,
                    bound=bound,
                    level=LEVEL_WARN,
                    detail="not evaluable: inspected_loc/inspection_hours unavailable",
                )
            )
        else:
            rate = inspection_meta.inspected_loc / inspection_meta.inspection_hours
            level = LEVEL_PASS if lo <= rate <= hi else LEVEL_WARN
            findings.append(
                Finding(
                    check="reading_rate",
                    observed=rate,
                    bound=bound,
                    level=level,
                    detail="" if level == LEVEL_PASS else "reading rate outside configured bounds",
                )
            )

    if config.defects_per_kloc_bounds is not None:
        lo, hi = config.defects_per_kloc_bounds
        bound = f"within [{lo}, {hi}] defects/KLoC"
        if inspection_meta is not None and inspection_meta.inspected_loc > 0:
            loc_basis: float | None = inspection_meta.inspected_loc
        else:
            total_loc = sum(s.metrics["loc"] for s in stats.values() if "loc" in s.metrics)
            loc_basis = total_loc if total_loc > 0 else None
        if loc_basis is None:
            findings.append(
                Finding(
                    check="defects_per_kloc",
                    observed=None,
                    bound=bound,
                    level=LEVEL_WARN,
                    detail="not evaluable: no LoC figures available",
                )
            )
        else:
            density = total_defects / (loc_basis / 1000.0)
            level = LEVEL_PASS if lo <= density <= hi else LEVEL_WARN
            findings.append(
                Finding(
                    check="defects_per_kloc",
                    observed=density,
                    bound=bound,
                    level=level,
                    detail="" if level == LEVEL_PASS else "defect rate outside configured bounds",
                )
            )

    return MonitorReport(verdict=_verdict(findings), findings=tuple(findings))
