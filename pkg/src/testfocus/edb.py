"""Experience database: rule+assumption pairs with context and significance.

Each element packages a selection rule and its assumption together with the
context profile it is trusted in and a significance counter: how many
consecutive quality assurance runs confirmed it there. Recording a run's
outcome evolves the store:

* correct          -- the rule focused testing appropriately: significance +1.
* incorrect        -- it did not; the element is retired (kept, flagged) and
                      a stated replacement enters with significance 1.
* context_mismatch -- the assumed context turned out wrong. The original
                      element stays untouched under its own context; if the
                      application under the actual context succeeded, the
                      element already covering that context gains +1, or a
                      new element is created there with significance 1.

The store round-trips through a canonical JSON document; unknown fields on
elements are preserved so foreign annotations survive maintenance.
"""

from __future__ import annotations

import fcntl
import json
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator, Mapping

from .model import Assumption, ContextProfile

OUTCOME_CORRECT = "correct"
OUTCOME_INCORRECT = "incorrect"
OUTCOME_CONTEXT_MISMATCH = "context_mismatch"
OUTCOMES = (OUTCOME_CORRECT, OUTCOME_INCORRECT, OUTCOME_CONTEXT_MISMATCH)

_ELEMENT_FIELDS = ("element_id", "rule", "assumption", "context", "significance", "retired", "history")


class UnknownElementError(KeyError):
    def __init__(self, element_id: str):
        self.element_id = element_id
        super().__init__(f"no experience element with id {element_id!r}")


@dataclass(frozen=True)
class HistoryEntry:
    project_id: str
    outcome: str
    category: str | None = None
    timestamp: str = ""

    def to_dict(self) -> dict:
        return {
            "project_id": self.project_id,
            "outcome": self.outcome,
            "category": self.category,
            "timestamp": self.timestamp,
        }


@dataclass
class ExperienceElement:
    """One (selection rule + assumption) pair with its scope of validity."""

    element_id: str
    rule: str  # selection rule source text
    assumption: Assumption
    context: dict[str, str] = field(default_factory=dict)
    significance: int = 0
    retired: bool = False
    history: list[HistoryEntry] = field(default_factory=list)
    extra: dict = field(default_factory=dict)  # unknown JSON fields, preserved

    def to_dict(self) -> dict:
        doc = dict(self.extra)
        doc.update(
            {
                "element_id": self.element_id,
                "rule": self.rule,
                "assumption": {
                    "id": self.assumption.id,
                    "statement": self.assumption.statement,
                    "derivation": self.assumption.derivation,
                },
                "context": dict(self.context),
                "significance": self.significance,
                "retired": self.retired,
                "history": [h.to_dict() for h in self.history],
            }
        )
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ExperienceElement":
        a = doc.get("assumption", {})
        return cls(
            element_id=doc["element_id"],
            rule=doc["rule"],
            assumption=Assumption(
                id=a.get("id", ""),
                statement=a.get("statement", ""),
                derivation=a.get("derivation", "empirical_observed"),
            ),
            context=dict(doc.get("context", {})),
            significance=int(doc.get("significance", 0)),
            retired=bool(doc.get("retired", False)),
            history=[
                HistoryEntry(
                    project_id=h.get("project_id", ""),
                    outcome=h.get("outcome", ""),
                    category=h.get("category"),
                    timestamp=h.get("timestamp", ""),
                )
                for h in doc.get("history", [])
            ],
            extra={k: v for k, v in doc.items() if k not in _ELEMENT_FIELDS},
        )


def match_context(query: ContextProfile, stored: ContextProfile) -> bool:
    """Does a stored context apply to the queried one?

    Every factor the stored context names must have the same value in the
    query; factors it does not name are wildcards, so sparse contexts match
    broadly. The empty stored context matches everything.
    """
    return all(query.get(factor) == value for factor, value in stored.items())


def _now_iso() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


class ExperienceDb:
    """In-memory experience store with JSON persistence."""

    def __init__(self, elements: list[ExperienceElement] | None = None):
        self._elements: dict[str, ExperienceElement] = {}
        for el in elements or []:
            self.add(el)

    def __len__(self) -> int:
        return len(self._elements)

    def __contains__(self, element_id: str) -> bool:
        return element_id in self._elements

    def get(self, element_id: str) -> ExperienceElement:
        try:
            return self._elements[element_id]
        except KeyError:
            raise UnknownElementError(element_id) from None

    def elements(self) -> list[ExperienceElement]:
        return [self._elements[eid] for eid in sorted(self._elements)]

    def add(self, element: ExperienceElement) -> None:
        if element.element_id in self._elements:
            raise ValueError(f"duplicate element id {element.element_id!r}")
        self._elements[element.element_id] = element

    # -- maintenance of evidence ------------------------------------------

    def record_outcome(
        self,
        element_id: str,
        outcome: str,
        project_id: str,
        category: str | None = None,
        timestamp: str | None = None,
        replacement: ExperienceElement | None = None,
        actual_context: ContextProfile | None = None,
        succeeded: bool | None = None,
    ) -> "ExperienceDb":
        """Apply one quality assurance run's verdict on an element.

        ``replacement`` is required for an incorrect outcome (the alternative
        rule+assumption that takes over) and optional for a context mismatch
        (the pair to use under the actual context; defaults to the original
        pair). A context mismatch additionally needs ``actual_context`` and
        ``succeeded``: whether applying the rule under the actual context
        worked out, since only a confirmed application earns significance.
        """
        if outcome not in OUTCOMES:
            raise ValueError(f"outcome must be one of {OUTCOMES}, got {outcome!r}")
        element = self.get(element_id)
        if element.retired:
            raise ValueError(f"element {element_id!r} is retired")
        stamp = timestamp if timestamp is not None else _now_iso()

        if outcome == OUTCOME_CORRECT:
            element.significance += 1
            element.history.append(HistoryEntry(project_id, OUTCOME_CORRECT, category, stamp))
            return self

        if outcome == OUTCOME_INCORRECT:
            if replacement is None:
                raise ValueError("an incorrect outcome requires a replacement element")
            if replacement.element_id in self._elements:
                raise ValueError(f"replacement id {replacement.element_id!r} already exists")
            element.retired = True
            element.history.append(HistoryEntry(project_id, OUTCOME_INCORRECT, category, stamp))
            replacement.significance = 1
            replacement.history = [HistoryEntry(project_id, OUTCOME_CORRECT, category, stamp)]
            self.add(replacement)
            return self

        # context mismatch
        if actual_context is None:
            raise ValueError("a context_mismatch outcome requires actual_context")
        if succeeded is None:
            raise ValueError(
                "a context_mismatch outcome requires succeeded: whether the "
                "application under the actual context was correct"
            )
        element.history.append(HistoryEntry(project_id, OUTCOME_CONTEXT_MISMATCH, category, stamp))
        if not succeeded:
            return self  # nothing to credit under the actual context

        target_rule = replacement.rule if replacement is not None else element.rule
        target_assumption = replacement.assumption if replacement is not None else element.assumption
        existing = self._find_context_match(target_rule, target_assumption, actual_context)
        if existing is not None:
            existing.significance += 1
            existing.history.append(HistoryEntry(project_id, OUTCOME_CORRECT, category, stamp))
            return self

        if replacement is not None:
            new_element = replacement
            new_element.context = dict(actual_context)
        else:
            new_element = ExperienceElement(
                element_id=_context_variant_id(element.element_id, actual_context),
                rule=element.rule,
                assumption=element.assumption,
                context=dict(actual_context),
            )
        if new_element.element_id in self._elements:
            raise ValueError(f"element id {new_element.element_id!r} already exists")
        new_element.significance = 1
        new_element.history = [HistoryEntry(project_id, OUTCOME_CORRECT, category, stamp)]
        self.add(new_element)
        return self

    def _find_context_match(
        self, rule: str, assumption: Assumption, context: ContextProfile
    ) -> ExperienceElement | None:
        candidates = [
            el
            for el in self._elements.values()
            if not el.retired
            and el.rule == rule
            and el.assumption.id == assumption.id
            and match_context(dict(context), el.context)
        ]
        if not candidates:
            return None
        candidates.sort(key=lambda el: (-el.significance, el.element_id))
        return candidates[0]

    def select_candidates(self, context: ContextProfile) -> list[ExperienceElement]:
        """Non-retired elements applicable in the given context, most
        significant first (ties by element id)."""
        matching = [
            el
            for el in self._elements.values()
            if not el.retired and match_context(dict(context), el.context)
        ]
        return sorted(matching, key=lambda el: (-el.significance, el.element_id))

    # -- persistence -------------------------------------------------------

    def to_json(self) -> str:
        docs = [el.to_dict() for el in self.elements()]
        return json.dumps(docs, indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExperienceDb":
        docs = json.loads(text)
        if not isinstance(docs, list):
            raise ValueError("experience database document must be a JSON list")
        return cls([ExperienceElement.from_dict(doc) for doc in docs])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ExperienceDb":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def _context_variant_id(base_id: str, context: ContextProfile) -> str:
    # deterministic id for the same-rule element adopted under a new context
    if not context:
        return f"{base_id}@any"
    factors = ",".join(f"{k}={v}" for k, v in sorted(context.items()))
    return f"{base_id}@{factors}"


@contextmanager
def locked_db(path: str | Path) -> Iterator[ExperienceDb]:
    """Load a db under an exclusive advisory file lock, save it on exit.

    Serializes mutating commands against the same file; the lock is held for
    the whole read-modify-write cycle.
    """
    path = Path(path)
    with open(path, "r+", encoding="utf-8") as handle:
        fcntl.flock(handle, fcntl.LOCK_EX)
        try:
            db = ExperienceDb.from_json(handle.read())
            yield db
            handle.seek(0)
            handle.write(db.to_json())
            handle.truncate()
        finally:
            fcntl.flock(handle, fcntl.LOCK_UN)
