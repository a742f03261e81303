"""Report files: versioned CSV with incremental flushing, and JSON documents.

Every CSV report starts with a schema line ``# kernelprobe <kind> v1``,
followed by the column header.  Numbers are written with 12 significant
digits.  Cells that were skipped or failed appear as comment lines
``# skipped: key=value,...`` / ``# failed: key=value,...`` so that the data
rows keep a fixed schema.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

__all__ = ["SCHEMAS", "SCHEMA_VERSION", "CsvReport", "read_csv_report", "write_json", "read_json", "fmt"]

SCHEMA_VERSION = 1

SCHEMAS: dict[str, list[str]] = {
    "sample": ["measure", "n", "m", "t", "seed", "repeat", "n_lambda_plus", "p", "lambda_max"],
    "brute": ["measure", "n", "m", "n_sets", "n_lambda_plus", "p", "lambda_max"],
    "ea": ["measure", "n", "m", "submutation", "seed", "found", "evaluations_used", "best_lambda"],
    "ea-history": ["measure", "n", "m", "submutation", "seed", "generation", "best_lambda"],
    "gp": ["measure", "n", "m", "seed", "lambda_n", "theta", "nugget", "rmse", "fit_status"],
}

_INT_FIELDS = {"n", "m", "t", "seed", "repeat", "n_lambda_plus", "n_sets", "evaluations_used", "generation"}
_FLOAT_FIELDS = {"p", "lambda_max", "best_lambda", "lambda_n", "theta", "nugget", "rmse"}


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return "nan"
        return f"{float(value):.12g}"
    return str(value)


def _header(kind: str) -> str:
    return f"# kernelprobe {kind} v{SCHEMA_VERSION}"


class CsvReport:
    """Append-only CSV report; every row is flushed as soon as it is written."""

    def __init__(self, path: str | Path, kind: str):
        if kind not in SCHEMAS:
            raise ValueError(f"unknown report kind {kind!r}")
        self.path = Path(path)
        self.kind = kind
        self.columns = SCHEMAS[kind]
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("w", newline="")
        self._fh.write(_header(kind) + "\n")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(self.columns)
        self._fh.flush()
        self.rows = 0

    def write(self, row: dict) -> None:
        self._writer.writerow([fmt(row[c]) for c in self.columns])
        self._fh.flush()
        self.rows += 1

    def note(self, tag: str, **info) -> None:
        body = ",".join(f"{k}={fmt(v)}" for k, v in info.items())
        self._fh.write(f"# {tag}: {body}\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _coerce(key: str, value: str):
    if key in _INT_FIELDS:
        return int(value)
    if key in _FLOAT_FIELDS:
        return float(value)
    if key == "found":
        return value == "true"
    return value


def read_csv_report(path: str | Path) -> tuple[str, list[dict], list[tuple[str, dict]]]:
    """Parse a CSV report into ``(kind, rows, notes)``.

    Raises ``ValueError`` on a missing or unknown schema line or on a header
    that does not match the schema.
    """
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# kernelprobe "):
        raise ValueError("missing kernelprobe schema line")
    parts = lines[0].split()
    kind, version = parts[2], parts[3]
    if kind not in SCHEMAS or version != f"v{SCHEMA_VERSION}":
        raise ValueError(f"unsupported report schema {kind} {version}")
    notes: list[tuple[str, dict]] = []
    body = []
    for line in lines[1:]:
        if line.startswith("# "):
            tag, _, rest = line[2:].partition(": ")
            info = dict(item.split("=", 1) for item in rest.split(",") if "=" in item)
            notes.append((tag, info))
        else:
            body.append(line)
    reader = csv.DictReader(io.StringIO("\n".join(body)))
    if reader.fieldnames != SCHEMAS[kind]:
        raise ValueError(f"header {reader.fieldnames} does not match schema {SCHEMAS[kind]}")
    rows = [{k: _coerce(k, v) for k, v in row.items()} for row in reader]
    return kind, rows, notes


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path: str | Path, kind: str, payload: dict) -> None:
    doc = {"schema": f"kernelprobe {kind}", "version": SCHEMA_VERSION, **payload}
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(doc, default=_jsonable, indent=1, allow_nan=True))


def read_json(path: str | Path) -> dict:
    doc = json.loads(Path(path).read_text())
    if not str(doc.get("schema", "")).startswith("kernelprobe ") or doc.get("version") != SCHEMA_VERSION:
        raise ValueError("not a kernelprobe JSON report")
    return doc
