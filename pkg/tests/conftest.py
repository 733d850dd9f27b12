import math

import pytest
from hypothesis import settings

from geomphase.states import NMAX_ENV

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

OMEGA = math.pi / 4


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    # tests choose their truncation explicitly
    monkeypatch.delenv(NMAX_ENV, raising=False)


# criterion -> list of (part, passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, list] = {}


@pytest.fixture
def acceptance():
    def record(criterion, part, passed, detail):
        ACCEPTANCE.setdefault(criterion, []).append((part, bool(passed), detail))
        print(f"criterion {criterion} [{part}] {'PASS' if passed else 'FAIL'}: {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[criterion]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{name}: {'ok' if good else 'FAILED'} ({d})" for name, good, d in parts)
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")
