"""Bundled case-study data: four code classes with inspection and test
defect profiles, size metrics, and the accompanying selection rules.

The files are ordinary inputs in the documented CSV/JSON formats, so they
double as format references and as something to point the CLI at.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .io import load_defects, load_metrics, load_rules
from .model import PartStats, compute_part_stats


def case_study_dir() -> Path:
    """Directory containing the bundled case-study files."""
    return Path(str(resources.files("testfocus") / "data" / "case_study"))


def case_study_path(name: str) -> Path:
    path = case_study_dir() / name
    if not path.is_file():
        raise FileNotFoundError(f"no bundled case-study file named {name!r}")
    return path


def case_study_stats(typed: bool = False) -> dict[str, PartStats]:
    """Part statistics of the case study (optionally the variant with
    defect-type labels on one part's inspection defects)."""
    defects_file = "defects_typed.csv" if typed else "defects.csv"
    return compute_part_stats(
        load_defects(case_study_path(defects_file)),
        load_metrics(case_study_path("metrics.csv")),
        [],
    )


def case_study_rules():
    """The four bundled selection rules (parsed, with their contexts)."""
    return load_rules(case_study_path("rules.json"))
