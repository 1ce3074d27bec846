import os
import sys

import pytest

# keep CLI runs from writing into the working tree
os.environ.setdefault("SMOOTHMART_OUTPUT_DIR", os.path.join(os.path.dirname(__file__), "..", "reports", "pytest"))


@pytest.fixture
def outdir(tmp_path, monkeypatch):
    monkeypatch.setenv("SMOOTHMART_OUTPUT_DIR", str(tmp_path))
    return tmp_path


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split(".")[0].rstrip("ab")), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
