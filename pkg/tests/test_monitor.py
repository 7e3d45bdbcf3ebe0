from __future__ import annotations

import random

import pytest

from testfocus.model import DefectRecord, PartMetrics, compute_part_stats
from testfocus.monitor import InspectionMeta, MonitorConfig, check_profile


def test_total_defects_pass(stats):
    # the case-study profile totals 100 inspection defects
    report = check_profile(stats, None, MonitorConfig(min_total_inspection_defects=1))
    assert report.verdict == "pass"
    assert len(report.findings) == 1
    finding = report.findings[0]
    assert (finding.check, finding.observed, finding.level) == ("total_defects", 100.0, "pass")


def test_total_defects_fail_on_empty_profile():
    stats = compute_part_stats([], [PartMetrics("A", {"loc": 100})], [])
    report = check_profile(stats, None, MonitorConfig(min_total_inspection_defects=1))
    assert report.verdict == "fail"
    finding = report.findings[0]
    assert finding.check == "total_defects"
    assert finding.observed == 0.0
    assert finding.bound == ">= 1"
    assert finding.level == "fail"


def test_reading_rate_outside_bounds_warns(stats):
    # 2411 LoC (sum of the four class lengths) in 5 hours -> 482.2 LoC/h
    meta = InspectionMeta(inspected_loc=2411, inspection_hours=5)
    config = MonitorConfig(reading_rate_bounds=(100, 400))
    report = check_profile(stats, meta, config)
    assert report.verdict == "warn"
    finding = report.findings[0]
    assert finding.check == "reading_rate"
    assert finding.observed == pytest.approx(482.2)
    assert finding.level == "warn"


def test_reading_rate_within_bounds_passes(stats):
    meta = InspectionMeta(inspected_loc=2411, inspection_hours=8)
    report = check_profile(stats, meta, MonitorConfig(reading_rate_bounds=(100, 400)))
    assert report.verdict == "pass"


def test_rate_check_without_meta_is_not_evaluable(stats):
    report = check_profile(stats, None, MonitorConfig(reading_rate_bounds=(100, 400)))
    assert report.verdict == "warn"
    finding = report.findings[0]
    assert finding.observed is None
    assert "not evaluable" in finding.detail


def test_defects_per_kloc_uses_part_locs_when_meta_absent(stats):
    # 100 defects over 2411 LoC -> 41.5 defects/KLoC
    config = MonitorConfig(defects_per_kloc_bounds=(10, 60))
    report = check_profile(stats, None, config)
    assert report.verdict == "pass"
    assert report.findings[0].observed == pytest.approx(100 / 2.411)


def test_defects_per_kloc_not_evaluable_without_any_loc():
    stats = compute_part_stats([DefectRecord("A", "inspection")], [], [])
    report = check_profile(stats, None, MonitorConfig(defects_per_kloc_bounds=(10, 60)))
    assert report.verdict == "warn"
    assert report.findings[0].observed is None


def test_empty_config_passes_with_no_findings(stats):
    report = check_profile(stats, None, MonitorConfig())
    assert report.verdict == "pass"
    assert report.findings == ()


def test_each_configured_check_yields_one_finding(stats):
    config = MonitorConfig(
        min_total_inspection_defects=1,
        reading_rate_bounds=(100, 400),
        defects_per_kloc_bounds=(10, 60),
    )
    report = check_profile(stats, InspectionMeta(2411, 5), config)
    assert [f.check for f in report.findings] == ["total_defects", "reading_rate", "defects_per_kloc"]


def test_invalid_config_rejected():
    with pytest.raises(ValueError):
        MonitorConfig(min_total_inspection_defects=-1)
    with pytest.raises(ValueError):
        MonitorConfig(reading_rate_bounds=(400, 100))
    with pytest.raises(ValueError):
        MonitorConfig(source="folklore")


def test_report_is_pure(stats):
    config = MonitorConfig(min_total_inspection_defects=5, reading_rate_bounds=(100, 400))
    meta = InspectionMeta(2411, 5)
    assert check_profile(stats, meta, config) == check_profile(stats, meta, config)


def test_tightening_bounds_never_turns_fail_into_pass(stats):
    rng = random.Random(13)
    for _ in range(200):
        minimum = rng.randrange(0, 250)
        config = MonitorConfig(min_total_inspection_defects=minimum)
        before = check_profile(stats, None, config)
        tightened = MonitorConfig(min_total_inspection_defects=minimum + rng.randrange(0, 100))
        after = check_profile(stats, None, tightened)
        if before.verdict == "fail":
            assert after.verdict == "fail"
