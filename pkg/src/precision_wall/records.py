"""Delimited-file ingestion of audit records, plus dataset digest checks."""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .metrics import AuditRecord

__all__ = ["RecordSchema", "LoadError", "load_records", "file_digest", "verify_digest"]


class LoadError(ValueError):
    """Input file cannot be parsed into records (fatal; CLI exit code 1)."""


@dataclass(frozen=True)
class RecordSchema:
    """Column mapping for a delimited score/outcome export.

    ``score_kind`` is ``continuous`` or ``decile`` (decile scores must be
    integers). With ``binarize_factors`` the factor columns are read as
    numbers and mapped to 1 when nonzero, so count-style columns can serve
    as presence indicators; otherwise factor cells must be exactly 0 or 1.
    """

    score_column: str
    outcome_column: str
    group_column: str | None = None
    factor_columns: tuple[str, ...] = ()
    score_kind: str = "continuous"
    delimiter: str = ","
    binarize_factors: bool = False

    def __post_init__(self):
        if self.score_kind not in ("continuous", "decile"):
            raise ValueError(f"score_kind must be 'continuous' or 'decile', got {self.score_kind!r}")
        object.__setattr__(self, "factor_columns", tuple(self.factor_columns))


def _parse_binary(raw: str):
    v = float(raw)
    if v not in (0.0, 1.0):
        raise ValueError
    return int(v)


def load_records(path, schema: RecordSchema) -> list[AuditRecord]:
    """Parse a UTF-8 delimited file with a header row into AuditRecords.

    Any malformed row is fatal; the error names the offending line.
    """
    path = Path(path)
    try:
        handle = path.open("r", encoding="utf-8", newline="")
    except OSError as exc:
        raise LoadError(f"cannot read {path}: {exc}") from None
    with handle:
        reader = csv.DictReader(handle, delimiter=schema.delimiter)
        header = reader.fieldnames or []
        needed = [schema.score_column, schema.outcome_column]
        if schema.group_column:
            needed.append(schema.group_column)
        needed.extend(schema.factor_columns)
        missing = [c for c in needed if c not in header]
        if missing:
            raise LoadError(f"{path}: missing column(s) {', '.join(repr(c) for c in missing)}")

        records = []
        for row in reader:
            line = reader.line_num
            raw_score = row.get(schema.score_column)
            try:
                score = float(raw_score)
            except (TypeError, ValueError):
                raise LoadError(f"{path} line {line}: unparseable score {raw_score!r}") from None
            if schema.score_kind == "decile" and score != int(score):
                raise LoadError(f"{path} line {line}: decile score must be an integer, got {raw_score!r}")
            raw_outcome = row.get(schema.outcome_column)
            try:
                outcome = _parse_binary(raw_outcome)
            except (TypeError, ValueError):
                raise LoadError(
                    f"{path} line {line}: outcome must be 0 or 1, got {raw_outcome!r}"
                ) from None
            group = None
            if schema.group_column:
                group = row.get(schema.group_column) or None
            factors = None
            if schema.factor_columns:
                factors = {}
                for col in schema.factor_columns:
                    raw = row.get(col)
                    try:
                        if schema.binarize_factors:
                            factors[col] = int(float(raw) != 0.0)
                        else:
                            factors[col] = _parse_binary(raw)
                    except (TypeError, ValueError):
                        raise LoadError(
                            f"{path} line {line}: factor {col!r} must be "
                            f"{'numeric' if schema.binarize_factors else '0 or 1'}, got {raw!r}"
                        ) from None
            try:
                records.append(AuditRecord(score=score, outcome=outcome, group=group, factors=factors))
            except ValueError as exc:
                raise LoadError(f"{path} line {line}: {exc}") from None
    if not records:
        raise LoadError(f"{path}: no data rows")
    return records


def file_digest(path) -> str:
    """SHA-256 hex digest of a file's bytes."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def verify_digest(path, expected: str) -> str:
    """Check a file's SHA-256 digest before an audit that claims comparability."""
    actual = file_digest(path)
    if actual.lower() != expected.lower():
        raise LoadError(f"{path}: content digest {actual} does not match expected {expected}")
    return actual
