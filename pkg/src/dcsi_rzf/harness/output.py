"""CSV and JSON-lines emission."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import astuple
from pathlib import Path
from typing import Iterable, TextIO

from ..rmt_lab import LemmaCheckReport
from .experiments import RECORD_FIELDS, ExperimentRecord

__all__ = ["format_value", "write_records", "records_to_csv", "write_reports_jsonl"]


def format_value(v) -> str:
    # repr round-trips floats exactly, which keeps reruns byte-identical
    if isinstance(v, tuple):
        return ";".join(format_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write(records: Iterable[ExperimentRecord], fh: TextIO) -> int:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(RECORD_FIELDS)
    n = 0
    for rec in records:
        writer.writerow([format_value(v) for v in astuple(rec)])
        n += 1
    return n


def records_to_csv(records: Iterable[ExperimentRecord]) -> str:
    buf = io.StringIO()
    _write(records, buf)
    return buf.getvalue()


def write_records(records: Iterable[ExperimentRecord], path: str | Path | None = None,
                  stream: TextIO | None = None) -> int:
    """Write records to ``path`` (or ``stream``); returns the row count."""
    if path is None:
        if stream is None:
            raise ValueError("need a path or a stream")
        return _write(records, stream)
    with open(path, "w", newline="") as fh:
        return _write(records, fh)


def write_reports_jsonl(reports: Iterable[LemmaCheckReport], path: str | Path | None = None,
                        stream: TextIO | None = None) -> int:
    lines = [r.to_json() for r in reports]
    text = "".join(line + "\n" for line in lines)
    if path is not None:
        Path(path).write_text(text)
    elif stream is not None:
        stream.write(text)
    return len(lines)
