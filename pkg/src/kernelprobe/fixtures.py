"""Known indefinite distance matrices and the plain-text matrix format.

Matrix file format::

    # optional comment / metadata lines ("# key: value")
    n
    D_11 D_12 ... D_1n
    D_22 ... D_2n
    ...
    D_nn

The first non-comment line is the order ``n``; the remaining ``n`` lines are
the rows of the upper triangle (diagonal included), whitespace separated.
Values are written with 17 significant digits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = [
    "Fixture",
    "read_matrix",
    "write_matrix",
    "format_matrix",
    "parse_matrix",
    "list_fixtures",
    "get_fixture",
    "export_fixtures",
]


def format_matrix(d: np.ndarray, metadata: dict | None = None) -> str:
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    lines = [f"# {k}: {v}" for k, v in (metadata or {}).items()]
    lines.append(str(n))
    for i in range(n):
        lines.append(" ".join(f"{v:.17g}" for v in d[i, i:]))
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> tuple[np.ndarray, dict]:
    meta: dict[str, str] = {}
    rows: list[str] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            if sep:
                meta[key.strip()] = value.strip()
            continue
        rows.append(line)
    if not rows:
        raise ValueError("matrix file has no order line")
    try:
        n = int(rows[0])
    except ValueError:
        raise ValueError(f"first line must be the matrix order, got {rows[0]!r}") from None
    if n < 1 or len(rows) - 1 != n:
        raise ValueError(f"expected {n} upper-triangle rows, found {len(rows) - 1}")
    d = np.zeros((n, n))
    for i, row in enumerate(rows[1:]):
        vals = [float(Fraction(tok)) if "/" in tok else float(tok) for tok in row.split()]
        if len(vals) != n - i:
            raise ValueError(f"row {i + 1} should have {n - i} entries, has {len(vals)}")
        d[i, i:] = vals
        d[i:, i] = vals
    return d, meta


def read_matrix(path: str | Path) -> tuple[np.ndarray, dict]:
    return parse_matrix(Path(path).read_text())


def write_matrix(path: str | Path, d: np.ndarray, metadata: dict | None = None) -> None:
    Path(path).write_text(format_matrix(d, metadata))


@dataclass(frozen=True)
class Fixture:
    name: str
    domain: str
    measure: str
    n: int
    m: int | None
    expected_lambda: float
    members: list = field(default_factory=list)
    matrix: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)), repr=False)

    @property
    def filename(self) -> str:
        return f"{self.name}.txt"

    def metadata(self) -> dict:
        return {
            "name": self.name,
            "domain": self.domain,
            "measure": self.measure,
            "n": self.n,
            "m": "" if self.m is None else self.m,
            "expected_lambda": self.expected_lambda,
            "members": json.dumps(self.members),
        }


def _from_text(name: str, text: str) -> Fixture:
    d, meta = parse_matrix(text)
    m = meta.get("m", "")
    return Fixture(
        name=meta.get("name", name),
        domain=meta["domain"],
        measure=meta["measure"],
        n=int(meta["n"]),
        m=int(m) if m else None,
        expected_lambda=float(meta["expected_lambda"]),
        members=json.loads(meta["members"]),
        matrix=d,
    )


def list_fixtures() -> list[Fixture]:
    """The nine shipped minimal indefinite examples, in catalogue order."""
    pkg = resources.files("kernelprobe") / "fixtures"
    index = json.loads((pkg / "index.json").read_text())
    return [_from_text(name, (pkg / f"{name}.txt").read_text()) for name in index]


def get_fixture(name: str) -> Fixture:
    for fx in list_fixtures():
        if fx.name == name:
            return fx
    raise KeyError(f"no fixture named {name!r}")


def export_fixtures(directory: str | Path) -> list[Path]:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for fx in list_fixtures():
        path = out / fx.filename
        write_matrix(path, fx.matrix, fx.metadata())
        paths.append(path)
    return paths
