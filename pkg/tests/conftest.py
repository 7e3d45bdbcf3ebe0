from __future__ import annotations

import pytest

from testfocus.datasets import case_study_dir, case_study_rules, case_study_stats


@pytest.fixture(scope="session")
def data_dir():
    return case_study_dir()


@pytest.fixture(scope="session")
def stats():
    """Case-study stats: parts I..IV with inspection/test counts and metrics."""
    return case_study_stats()


@pytest.fixture(scope="session")
def typed_stats():
    """Same profile, but part III carries defect-type labels (5 logic,
    3 interface, 1 documentation)."""
    return case_study_stats(typed=True)


@pytest.fixture(scope="session")
def bundled_rules():
    return [entry.rule for entry in case_study_rules()]
