"""CSV table reading and schema validation for figure inputs.

The generating command line writes comment headers of the form::

    # schema=<name> v<version>
    # config_hash=<hex>
    # generated=<timestamp>

followed by one CSV header row and data rows.  Readers here verify the
schema name, the schema version, and the presence of every column a
figure consumes, and refuse empty tables; all violations raise
:class:`FigureInputError`, which the command line maps to exit code 2
before any output file is written.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

SUPPORTED_SCHEMA_VERSION = 1


class FigureInputError(Exception):
    """Unusable figure input; maps to a nonzero process exit."""

    def __init__(self, message: str, exit_code: int = 2):
        super().__init__(message)
        self.exit_code = exit_code


@dataclass(frozen=True)
class Table:
    """One parsed CSV file: schema identity, comment metadata, columnar data."""

    path: str
    schema: str
    schema_version: int
    columns: tuple[str, ...]
    rows: tuple[dict[str, str], ...]
    meta: dict[str, str]

    def column(self, name: str) -> list[str]:
        if name not in self.columns:
            raise FigureInputError(
                f"{self.path}: schema {self.schema!r} is missing column {name!r}"
            )
        return [row[name] for row in self.rows]

    def floats(self, name: str) -> list[float]:
        out = []
        for i, text in enumerate(self.column(name)):
            try:
                out.append(float(text))
            except ValueError:
                raise FigureInputError(
                    f"{self.path}: column {name!r} row {i} is not numeric: {text!r}"
                ) from None
        return out


def _parse_schema_line(path: Path, line: str) -> tuple[str, int]:
    #  "# schema=<name> v<version>"
    body = line[1:].strip()
    if not body.startswith("schema="):
        raise FigureInputError(f"{path}: first line must declare '# schema=<name> v<n>'")
    name_version = body[len("schema="):].strip()
    name, _, version_text = name_version.rpartition(" v")
    if not name or not version_text.isdigit():
        raise FigureInputError(f"{path}: malformed schema declaration {body!r}")
    return name, int(version_text)


def read_table(path: str | Path) -> Table:
    path = Path(path)
    if not path.exists():
        raise FigureInputError(f"input file not found: {path}")
    with open(path, encoding="utf-8", newline="") as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise FigureInputError(f"{path}: first line must declare '# schema=<name> v<n>'")
        schema, version = _parse_schema_line(path, first)
        if version != SUPPORTED_SCHEMA_VERSION:
            raise FigureInputError(
                f"{path}: schema version {version} is not supported "
                f"(expected {SUPPORTED_SCHEMA_VERSION})"
            )
        meta: dict[str, str] = {}
        data_lines = []
        for ln in fh:
            if ln.startswith("#"):
                body = ln[1:].strip()
                key, eq, value = body.partition("=")
                if eq and " " not in key:
                    meta[key] = value
                continue
            data_lines.append(ln)
    reader = csv.reader(data_lines)
    try:
        header = next(reader)
    except StopIteration:
        raise FigureInputError(f"{path}: no header row") from None
    rows = tuple(dict(zip(header, row)) for row in reader if row)
    if not rows:
        raise FigureInputError(f"{path}: table has no data rows")
    return Table(
        path=str(path),
        schema=schema,
        schema_version=version,
        columns=tuple(header),
        rows=rows,
        meta=meta,
    )


def require(table: Table, schema: str, columns: tuple[str, ...]) -> Table:
    """Assert schema identity and column presence, naming what is missing."""
    if table.schema != schema:
        raise FigureInputError(
            f"{table.path}: expected schema {schema!r}, found {table.schema!r}"
        )
    for col in columns:
        if col not in table.columns:
            raise FigureInputError(
                f"{table.path}: schema {schema!r} is missing column {col!r}"
            )
    return table
