"""Selection-rule language: parse, render, and evaluate threshold rules.

A rule is the operational form of an assumption: an action scope (focus on
``parts`` or on ``defect_types``) guarded by a conjunction of threshold
predicates over per-part statistics::

    focus parts where defect_content > 25
    focus parts where defect_density > 0.05 & loc > 500
    focus parts where defect_content(severity=crash) > 0 & mean_method_length < 10
    focus parts where history_defects(last=2) > 20
    focus defect_types where defect_content > 5

Only conjunction is supported; a disjunction is just several rules. A part
is selected iff every predicate holds at full precision. Referencing a
metric that is absent for some part is an error, never silently false.
"""

from __future__ import annotations

import math
import operator
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .model import PartStats, normalize_label

SCOPE_PARTS = "parts"
SCOPE_DEFECT_TYPES = "defect_types"
SCOPES = (SCOPE_PARTS, SCOPE_DEFECT_TYPES)

OPS: dict[str, Callable[[float, float], bool]] = {
    ">": operator.gt,
    ">=": operator.ge,
    "<": operator.lt,
    "<=": operator.le,
    "==": operator.eq,
}

# metric kinds a predicate may reference; bare kinds take no qualifier
_BARE_METRICS = ("defect_content", "defect_density", "defect_density_kloc", "loc", "mean_method_length")
_QUALIFIED_METRICS = ("metric", "history_defects")


class RuleSyntaxError(ValueError):
    """Rule text could not be parsed; ``position`` is a 0-based char offset."""

    def __init__(self, message: str, position: int, text: str):
        self.position = position
        self.text = text
        super().__init__(f"syntax error at position {position}: {message}")


class MissingMetricError(LookupError):
    """A rule referenced a metric that is not available for some part."""

    def __init__(self, part_id: str, metric: str):
        self.part_id = part_id
        self.metric = metric
        super().__init__(f"metric {metric!r} is not available for part {part_id!r}")


@dataclass(frozen=True)
class MetricRef:
    """Reference to one statistic of a part.

    kind/arg combinations:
      defect_content            arg None, or a severity label
      defect_density            arg None
      defect_density_kloc       arg None (density * 1000)
      loc, mean_method_length   arg None
      metric                    arg is the PartMetrics entry name
      history_defects           arg is the lookback depth N >= 1
    """

    kind: str
    arg: str | int | None = None

    def render(self) -> str:
        if self.kind == "metric":
            return f'metric("{self.arg}")'
        if self.kind == "history_defects":
            return f"history_defects(last={self.arg})"
        if self.kind == "defect_content" and self.arg is not None:
            label = str(self.arg)
            if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", label):
                return f"defect_content(severity={label})"
            return f'defect_content(severity="{label}")'
        return self.kind

    def display_name(self) -> str:
        return self.render()


@dataclass(frozen=True)
class Predicate:
    """One threshold comparison, e.g. defect_content > 25."""

    metric: MetricRef
    op: str
    threshold: float

    def __post_init__(self) -> None:
        if self.op not in OPS:
            raise ValueError(f"unknown operator {self.op!r}")
        if not math.isfinite(self.threshold):
            raise ValueError("predicate threshold must be finite")

    def holds(self, value: float) -> bool:
        return OPS[self.op](value, self.threshold)

    def render(self) -> str:
        return f"{self.metric.render()} {self.op} {_format_number(self.threshold)}"


@dataclass(frozen=True)
class SelectionRule:
    """A parsed selection rule: scope plus a conjunction of predicates.

    ``id`` and ``assumption_id`` tie the rule to an assumption record; they
    are attached by whoever loads the rule, not by the grammar. The original
    text is kept for display but does not participate in equality, so a
    rendered-and-reparsed rule compares equal to the original.
    """

    scope: str
    predicates: tuple[Predicate, ...]
    id: str | None = None
    assumption_id: str | None = None
    source_text: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.scope not in SCOPES:
            raise ValueError(f"rule scope must be one of {SCOPES}, got {self.scope!r}")
        if not self.predicates:
            raise ValueError("rule must have at least one predicate")

    def render(self) -> str:
        preds = " & ".join(p.render() for p in self.predicates)
        return f"focus {self.scope} where {preds}"


def _format_number(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
    | (?P<number>-?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
    | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<string>"[^"]*")
    | (?P<op>>=|<=|==|>|<)
    | (?P<punct>[()=&])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # number | name | string | op | punct | end
    value: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise RuleSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.i]

    def _fail(self, message: str) -> RuleSyntaxError:
        return RuleSyntaxError(message, self.cur.pos, self.text)

    def advance(self) -> _Token:
        tok = self.cur
        self.i += 1
        return tok

    def expect(self, kind: str, value: str | None = None) -> _Token:
        tok = self.cur
        if tok.kind != kind or (value is not None and tok.value != value):
            want = value if value is not None else kind
            got = tok.value if tok.kind != "end" else "end of input"
            raise self._fail(f"expected {want!r}, got {got!r}")
        return self.advance()

    def parse_rule(self) -> tuple[str, tuple[Predicate, ...]]:
        self.expect("name", "focus")
        scope_tok = self.cur
        if scope_tok.kind != "name" or scope_tok.value not in SCOPES:
            raise self._fail("expected scope 'parts' or 'defect_types'")
        self.advance()
        self.expect("name", "where")
        predicates = [self.parse_predicate()]
        while self.cur.kind == "punct" and self.cur.value == "&":
            self.advance()
            predicates.append(self.parse_predicate())
        if self.cur.kind != "end":
            raise self._fail(f"unexpected trailing input {self.cur.value!r}")
        return scope_tok.value, tuple(predicates)

    def parse_predicate(self) -> Predicate:
        metric = self.parse_metric_ref()
        op_tok = self.cur
        if op_tok.kind != "op":
            got = op_tok.value if op_tok.kind != "end" else "end of input"
            raise self._fail(f"expected comparison operator, got {got!r}")
        self.advance()
        num_tok = self.cur
        if num_tok.kind != "number":
            got = num_tok.value if num_tok.kind != "end" else "end of input"
            raise self._fail(f"expected numeric threshold, got {got!r}")
        self.advance()
        return Predicate(metric=metric, op=op_tok.value, threshold=float(num_tok.value))

    def parse_metric_ref(self) -> MetricRef:
        name_tok = self.cur
        if name_tok.kind != "name":
            got = name_tok.value if name_tok.kind != "end" else "end of input"
            raise self._fail(f"expected metric name, got {got!r}")
        name = name_tok.value
        if name not in _BARE_METRICS and name not in _QUALIFIED_METRICS:
            raise self._fail(f"unknown metric {name!r}")
        self.advance()

        has_paren = self.cur.kind == "punct" and self.cur.value == "("
        if not has_paren:
            if name in _QUALIFIED_METRICS:
                raise self._fail(f"metric {name!r} requires a parenthesized qualifier")
            return MetricRef(kind=name)

        if name in _BARE_METRICS and name != "defect_content":
            raise self._fail(f"metric {name!r} takes no qualifier")
        self.advance()  # consume '('

        if name == "defect_content":
            self.expect("name", "severity")
            self.expect("punct", "=")
            label_tok = self.cur
            if label_tok.kind == "string":
                label = label_tok.value[1:-1]
            elif label_tok.kind == "name":
                label = label_tok.value
            else:
                raise self._fail("expected severity label")
            label = normalize_label(label)
            if label is None:
                raise self._fail("severity label must be non-empty")
            self.advance()
            self.expect("punct", ")")
            return MetricRef(kind="defect_content", arg=label)

        if name == "metric":
            str_tok = self.cur
            if str_tok.kind != "string":
                raise self._fail('expected quoted metric name, e.g. metric("fan_out")')
            metric_name = normalize_label(str_tok.value[1:-1])
            if metric_name is None:
                raise self._fail("metric name must be non-empty")
            self.advance()
            self.expect("punct", ")")
            return MetricRef(kind="metric", arg=metric_name)

        # history_defects(last=N)
        self.expect("name", "last")
        self.expect("punct", "=")
        num_tok = self.cur
        if num_tok.kind != "number":
            raise self._fail("expected lookback depth, e.g. history_defects(last=2)")
        depth_value = float(num_tok.value)
        if depth_value != int(depth_value) or int(depth_value) < 1:
            raise self._fail(f"lookback depth must be an integer >= 1, got {num_tok.value}")
        self.advance()
        self.expect("punct", ")")
        return MetricRef(kind="history_defects", arg=int(depth_value))


def parse_rule(text: str, rule_id: str | None = None, assumption_id: str | None = None) -> SelectionRule:
    """Parse rule text into a ``SelectionRule``.

    Raises RuleSyntaxError (carrying the offending position) on bad syntax,
    unknown metric names, or malformed qualifiers such as ``last=0``.
    """
    scope, predicates = _Parser(text).parse_rule()
    return SelectionRule(
        scope=scope,
        predicates=predicates,
        id=rule_id,
        assumption_id=assumption_id,
        source_text=text,
    )


def render_rule(rule: SelectionRule) -> str:
    """Canonical text for a rule; ``parse_rule(render_rule(r))`` equals ``r``."""
    return rule.render()


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def resolve_metric(ref: MetricRef, stats: PartStats) -> float:
    """Value of one metric reference for one part.

    Count metrics default to 0 when the label never occurred (counting zero
    occurrences is not missing data); size/density/history metrics raise
    MissingMetricError when the underlying data is absent for the part.
    """
    if ref.kind == "defect_content":
        if ref.arg is None:
            return float(stats.inspection_defect_content)
        return float(stats.severity_counts.get(str(ref.arg), 0))
    if ref.kind in ("defect_density", "defect_density_kloc"):
        if stats.defect_density is None:
            raise MissingMetricError(stats.part_id, ref.display_name())
        scale = 1000.0 if ref.kind == "defect_density_kloc" else 1.0
        return stats.defect_density * scale
    if ref.kind in ("loc", "mean_method_length"):
        try:
            return stats.metrics[ref.kind]
        except KeyError:
            raise MissingMetricError(stats.part_id, ref.kind) from None
    if ref.kind == "metric":
        try:
            return stats.metrics[str(ref.arg)]
        except KeyError:
            raise MissingMetricError(stats.part_id, ref.display_name()) from None
    if ref.kind == "history_defects":
        if not stats.history_defects:
            raise MissingMetricError(stats.part_id, ref.display_name())
        depth = min(int(ref.arg), max(stats.history_defects))
        return float(stats.history_defects[depth])
    raise ValueError(f"unknown metric kind {ref.kind!r}")


def evaluate_rule(rule: SelectionRule, stats: Mapping[str, PartStats]) -> set[str]:
    """Apply a rule to a stats table.

    Scope ``parts``: the selected part ids (a part is in iff every predicate
    holds). Scope ``defect_types``: the selected inspection defect types,
    judged by their inspection-phase counts across all parts; only bare
    ``defect_content`` predicates are legal there.
    """
    if rule.scope == SCOPE_DEFECT_TYPES:
        return _evaluate_type_rule(rule, stats)

    selected: set[str] = set()
    for part_id in sorted(stats):
        part = stats[part_id]
        if all(pred.holds(resolve_metric(pred.metric, part)) for pred in rule.predicates):
            selected.add(part_id)
    return selected


def _evaluate_type_rule(rule: SelectionRule, stats: Mapping[str, PartStats]) -> set[str]:
    for pred in rule.predicates:
        if pred.metric.kind != "defect_content" or pred.metric.arg is not None:
            raise ValueError(
                "scope defect_types supports only bare defect_content predicates, "
                f"got {pred.metric.display_name()!r}"
            )
    totals: dict[str, int] = {}
    for part in stats.values():
        for defect_type, count in part.type_counts_for("inspection").items():
            totals[defect_type] = totals.get(defect_type, 0) + count
    return {
        t for t, count in totals.items()
        if all(pred.holds(float(count)) for pred in rule.predicates)
    }


def derive_threshold(values: list[float], fraction: float = 0.8) -> float:
    """Threshold heuristic: a fraction of the highest observed value.

    With the default 0.8 this picks the 80% mark of the part with the most
    defects, the usual way to make "a large number of defects" concrete.
    """
    if not values:
        raise ValueError("derive_threshold requires at least one value")
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    return fraction * max(values)
