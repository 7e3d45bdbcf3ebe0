from __future__ import annotations

import random

import pytest

from testfocus.model import DefectRecord, HistoryRecord, PartMetrics, compute_part_stats
from testfocus.rules import (
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

# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def test_parse_single_predicate():
    rule = parse_rule("focus parts where defect_content > 25")
    assert rule.scope == "parts"
    assert rule.predicates == (Predicate(MetricRef("defect_content"), ">", 25.0),)
    assert rule.source_text == "focus parts where defect_content > 25"


def test_parse_conjunction():
    rule = parse_rule("focus parts where defect_density > 0.05 & loc > 500")
    assert len(rule.predicates) == 2
    assert rule.predicates[0] == Predicate(MetricRef("defect_density"), ">", 0.05)
    assert rule.predicates[1] == Predicate(MetricRef("loc"), ">", 500.0)


def test_parse_is_whitespace_insensitive():
    tight = parse_rule("focus parts where defect_content>25&loc>500")
    loose = parse_rule("focus   parts   where  defect_content  >  25  &  loc > 500")
    assert tight == loose


def test_parse_qualified_metrics():
    rule = parse_rule(
        'focus parts where defect_content(severity=crash) > 0'
        ' & metric("fan_out") >= 7 & history_defects(last=2) > 20'
    )
    kinds = [p.metric for p in rule.predicates]
    assert kinds == [
        MetricRef("defect_content", "crash"),
        MetricRef("metric", "fan_out"),
        MetricRef("history_defects", 2),
    ]


def test_parse_quoted_severity_label():
    rule = parse_rule('focus parts where defect_content(severity="Major ") > 8')
    assert rule.predicates[0].metric == MetricRef("defect_content", "major")


def test_parse_defect_types_scope():
    rule = parse_rule("focus defect_types where defect_content > 5")
    assert rule.scope == "defect_types"


@pytest.mark.parametrize(
    "text,fragment",
    [
        ("focus parts where bogus > 1", "unknown metric 'bogus'"),
        ("focus modules where loc > 1", "expected scope"),
        ("focus parts when loc > 1", "expected 'where'"),
        ("focus parts where loc >", "expected numeric threshold"),
        ("focus parts where loc 500", "expected comparison operator"),
        ("focus parts where history_defects(last=0) > 1", "lookback depth"),
        ("focus parts where history_defects(last=1.5) > 1", "lookback depth"),
        ("focus parts where history_defects > 1", "requires a parenthesized qualifier"),
        ("focus parts where loc(severity=crash) > 1", "takes no qualifier"),
        ("focus parts where metric(fan_out) > 1", "quoted metric name"),
        ("focus parts where defect_content(kind=crash) > 1", "expected 'severity'"),
        ("focus parts where loc > 500 trailing", "unexpected trailing input"),
        ("focus parts where loc > 500 ?", "unexpected character"),
    ],
)
def test_parse_errors_carry_position(text, fragment):
    with pytest.raises(RuleSyntaxError) as exc_info:
        parse_rule(text)
    assert fragment in str(exc_info.value)
    assert 0 <= exc_info.value.position <= len(text)
    assert "position" in str(exc_info.value)


def test_unknown_op_and_empty_predicates_rejected():
    with pytest.raises(ValueError):
        Predicate(MetricRef("loc"), "!=", 1.0)
    with pytest.raises(ValueError):
        SelectionRule(scope="parts", predicates=())


ROUND_TRIP_TEXTS = [
    "focus parts where defect_content > 25",
    "focus parts where defect_density > 0.05 & loc > 500",
    "focus parts where defect_content(severity=crash) > 0 & mean_method_length < 10",
    "focus parts where defect_density_kloc > 15",
    'focus parts where metric("fan_out") <= 12.5',
    "focus parts where history_defects(last=2) > 20",
    "focus defect_types where defect_content >= 3 & defect_content < 100",
    'focus parts where defect_content(severity="needs triage") == 0',
]


@pytest.mark.parametrize("text", ROUND_TRIP_TEXTS)
def test_render_parse_round_trip(text):
    rule = parse_rule(text)
    assert parse_rule(render_rule(rule)) == rule


# ---------------------------------------------------------------------------
# evaluation on the case-study profile
# ---------------------------------------------------------------------------


def test_selects_high_defect_content_parts(stats, bundled_rules):
    a101 = bundled_rules[0]
    assert evaluate_rule(a101, stats) == {"II", "III"}


def test_selects_high_density_parts(stats, bundled_rules):
    a102 = bundled_rules[1]
    assert evaluate_rule(a102, stats) == {"I", "III", "IV"}


def test_selects_large_dense_part(stats, bundled_rules):
    a201 = bundled_rules[2]
    assert evaluate_rule(a201, stats) == {"III"}


def test_selects_crash_prone_small_method_parts(stats, bundled_rules):
    a301 = bundled_rules[3]
    assert evaluate_rule(a301, stats) == {"I", "IV"}


def test_unsatisfiable_threshold_selects_nothing(stats):
    rule = parse_rule("focus parts where defect_content > 1000")
    assert evaluate_rule(rule, stats) == set()


def test_density_kloc_variant(stats):
    # 15 defects per 1000 lines of code; all four parts exceed that
    rule = parse_rule("focus parts where defect_density_kloc > 15")
    assert evaluate_rule(rule, stats) == {"I", "II", "III", "IV"}
    rule = parse_rule("focus parts where defect_density_kloc > 55")
    assert evaluate_rule(rule, stats) == {"I", "III", "IV"}


def test_unknown_severity_counts_as_zero(stats):
    rule = parse_rule("focus parts where defect_content(severity=blocker) == 0")
    # no 'blocker' label anywhere: zero occurrences, not missing data
    assert evaluate_rule(rule, stats) == {"I", "II", "III", "IV"}


def test_missing_metric_is_an_error_naming_part_and_metric():
    stats = compute_part_stats(
        [DefectRecord("A", "inspection"), DefectRecord("B", "inspection")],
        [PartMetrics("A", {"loc": 100})],
        [],
    )
    rule = parse_rule("focus parts where loc > 10")
    with pytest.raises(MissingMetricError) as exc_info:
        evaluate_rule(rule, stats)
    assert "'B'" in str(exc_info.value)
    assert "'loc'" in str(exc_info.value)

    with pytest.raises(MissingMetricError):
        evaluate_rule(parse_rule("focus parts where defect_density > 0"), stats)
    with pytest.raises(MissingMetricError):
        evaluate_rule(parse_rule('focus parts where metric("fan_out") > 0'), stats)


def test_history_rule():
    history = [
        HistoryRecord("A", "r1", 5),
        HistoryRecord("A", "r2", 10),
        HistoryRecord("A", "r3", 30),
        HistoryRecord("B", "r3", 2),
    ]
    stats = compute_part_stats([], [], history)
    rule = parse_rule("focus parts where history_defects(last=2) > 20")
    assert evaluate_rule(rule, stats) == {"A"}  # 30 + 10 = 40 for A, 2 for B
    # deeper lookback than recorded history falls back to what exists
    rule = parse_rule("focus parts where history_defects(last=5) > 44")
    assert evaluate_rule(rule, stats) == {"A"}


def test_history_rule_errors_for_part_without_history():
    stats = compute_part_stats([DefectRecord("A", "inspection")], [], [])
    rule = parse_rule("focus parts where history_defects(last=2) > 0")
    with pytest.raises(MissingMetricError):
        evaluate_rule(rule, stats)


def test_defect_types_scope_selects_by_inspection_counts(typed_stats):
    rule = parse_rule("focus defect_types where defect_content > 2")
    assert evaluate_rule(rule, typed_stats) == {"logic", "interface"}
    rule = parse_rule("focus defect_types where defect_content > 100")
    assert evaluate_rule(rule, typed_stats) == set()


def test_defect_types_scope_rejects_other_metrics(typed_stats):
    rule = parse_rule("focus defect_types where defect_content > 1 & loc > 10")
    with pytest.raises(ValueError, match="only bare defect_content"):
        evaluate_rule(rule, typed_stats)
    rule = parse_rule("focus defect_types where defect_content(severity=crash) > 0")
    with pytest.raises(ValueError, match="only bare defect_content"):
        evaluate_rule(rule, typed_stats)


# ---------------------------------------------------------------------------
# threshold heuristic
# ---------------------------------------------------------------------------


def test_derive_threshold_case_study():
    contents = [14, 40, 39, 7]
    # oracle: fraction of the single largest value
    assert derive_threshold(contents, 0.8) == 0.8 * max(contents) == 32
    assert derive_threshold(contents) == 32


def test_derive_threshold_trivial_cases():
    assert derive_threshold([0, 0, 0]) == 0
    assert derive_threshold([10], 0.8) == 8
    assert derive_threshold([5, 5], 1.0) == 5


def test_derive_threshold_rejects_bad_input():
    with pytest.raises(ValueError):
        derive_threshold([])
    with pytest.raises(ValueError):
        derive_threshold([1, 2], 0)
    with pytest.raises(ValueError):
        derive_threshold([1, 2], 1.2)


def test_derived_threshold_rule_selects_top_parts(stats):
    threshold = derive_threshold([s.inspection_defect_content for s in stats.values()], 0.8)
    rule = parse_rule(f"focus parts where defect_content > {threshold:g}")
    selected = evaluate_rule(rule, stats)
    # brute-force check against each part's count
    expected = {p for p, s in stats.items() if s.inspection_defect_content > 32}
    assert threshold == 32
    assert selected == expected == {"II", "III"}


# ---------------------------------------------------------------------------
# randomized invariants
# ---------------------------------------------------------------------------


def _random_stats(rng: random.Random, n_parts: int):
    defects, metrics, history = [], [], []
    for i in range(n_parts):
        pid = f"P{i}"
        for _ in range(rng.randrange(0, 30)):
            defects.append(
                DefectRecord(
                    pid,
                    "inspection",
                    severity=rng.choice([None, "crash", "major", "minor"]),
                )
            )
        metrics.append(
            PartMetrics(
                pid,
                {
                    "loc": rng.uniform(10, 2000),
                    "mean_method_length": rng.uniform(1, 40),
                    "fan_out": rng.uniform(0, 50),
                },
            )
        )
        for r in range(3):
            history.append(HistoryRecord(pid, f"r{r}", rng.randrange(0, 25)))
    return compute_part_stats(defects, metrics, history)


def _random_metric(rng: random.Random) -> MetricRef:
    return rng.choice(
        [
            MetricRef("defect_content"),
            MetricRef("defect_content", rng.choice(["crash", "major", "minor"])),
            MetricRef("defect_density"),
            MetricRef("defect_density_kloc"),
            MetricRef("loc"),
            MetricRef("mean_method_length"),
            MetricRef("metric", "fan_out"),
            MetricRef("history_defects", rng.randrange(1, 4)),
        ]
    )


def test_threshold_and_conjunction_monotonicity_randomized():
    rng = random.Random(20240811)
    for _ in range(300):
        stats = _random_stats(rng, rng.randrange(1, 7))
        metric = _random_metric(rng)
        op = rng.choice([">", ">=", "<", "<="])
        threshold = rng.uniform(-5, 60)
        rule = SelectionRule("parts", (Predicate(metric, op, threshold),))
        base = evaluate_rule(rule, stats)
        assert base <= set(stats)

        # tightening the threshold never enlarges the selection
        delta = rng.uniform(0, 20)
        tightened = threshold + delta if op in (">", ">=") else threshold - delta
        tighter = SelectionRule("parts", (Predicate(metric, op, tightened),))
        assert evaluate_rule(tighter, stats) <= base

        # adding a conjunct never enlarges the selection
        extra = Predicate(_random_metric(rng), rng.choice([">", ">=", "<", "<="]), rng.uniform(-5, 60))
        conjoined = SelectionRule("parts", rule.predicates + (extra,))
        assert evaluate_rule(conjoined, stats) <= base
