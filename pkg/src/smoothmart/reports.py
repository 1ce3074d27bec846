"""Report rows and their CSV / JSON / plot-data serializations.

Reports are deterministic functions of the configuration.  Wall-clock times
go to a separate ``*.timing.json`` sidecar so the reports themselves stay
byte-identical across runs.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from importlib import resources

__all__ = ["ReportRow", "CSV_COLUMNS", "write_report", "schema", "atomic_write"]

FORMAT = "smoothmart.report/1"
CSV_COLUMNS = ("method", "functional", "parameters", "value", "reference", "abs_error", "rel_error", "tolerance", "passed")


def _finite(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


@dataclass
class ReportRow:
    method: str
    functional: str
    parameters: dict
    value: float | None
    reference: float | None = None
    tolerance: float | None = None
    wall_time: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def abs_error(self):
        if self.reference is None or self.value is None:
            return None
        return abs(self.value - self.reference)

    @property
    def rel_error(self):
        if self.abs_error is None:
            return None
        return self.abs_error / max(1.0, abs(self.reference))

    @property
    def passed(self):
        """Rows with a tolerance pass when the relative error is within it;
        rows marked ``absolute`` in their diagnostics compare the absolute error."""
        if self.tolerance is None or self.abs_error is None:
            return None
        err = self.abs_error if self.diagnostics.get("tolerance_kind") == "absolute" else self.rel_error
        return bool(err <= self.tolerance)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "functional": self.functional,
            "parameters": self.parameters,
            "value": _finite(self.value),
            "reference": _finite(self.reference),
            "abs_error": _finite(self.abs_error),
            "rel_error": _finite(self.rel_error),
            "tolerance": _finite(self.tolerance),
            "passed": self.passed,
            "diagnostics": self.diagnostics,
        }

    def csv_row(self) -> list:
        d = self.to_dict()
        params = ";".join(f"{k}={v}" for k, v in self.parameters.items())
        return [d["method"], d["functional"], params] + [
            "" if d[c] is None else repr(d[c]) if isinstance(d[c], float) else str(d[c]) for c in CSV_COLUMNS[3:]
        ]


def atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def render_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.csv_row())
    return buf.getvalue()


def render_json(command: str, config: dict, rows, extra: dict | None = None) -> str:
    doc = {"format": FORMAT, "command": command, "config": config, "rows": [r.to_dict() for r in rows]}
    if extra:
        doc["extra"] = extra
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"


def write_report(stem: str, command: str, config: dict, rows, extra: dict | None = None) -> list[str]:
    """Write ``stem.csv``, ``stem.json`` and ``stem.timing.json``; returns the report paths."""
    csv_path, json_path = stem + ".csv", stem + ".json"
    atomic_write(csv_path, render_csv(rows))
    atomic_write(json_path, render_json(command, config, rows, extra))
    timing = {"rows": [{"method": r.method, "functional": r.functional, "wall_time": r.wall_time} for r in rows]}
    atomic_write(stem + ".timing.json", json.dumps(timing, indent=2) + "\n")
    return [csv_path, json_path]


def write_plot_data(path: str, xs, ys, header: str) -> None:
    """Two whitespace-separated columns, ``#`` header line."""
    lines = [f"# {header}"] + [f"{x!r} {y!r}" for x, y in zip(xs, ys)]
    atomic_write(path, "\n".join(lines) + "\n")


def schema() -> dict:
    """The JSON schema shipped with the package for ``*.json`` reports."""
    return json.loads(resources.files("smoothmart").joinpath("data/report.schema.json").read_text())
