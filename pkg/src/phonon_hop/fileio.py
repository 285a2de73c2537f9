"""Deterministic CSV and JSON serialisation.

Floats are written with Python's shortest round-trip representation and
files always use LF line endings, so repeated runs with identical inputs
produce byte-identical output. Non-finite values become ``null`` in JSON
and the literals ``nan``/``inf`` in CSV.
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .signal_analysis import TimeSeries

TRACE_HEADER = "time_s,p_excited"
TRACE_HEADER_SIGMA = "time_s,p_excited,sigma"


class TraceFormatError(ValueError):
    """Malformed trace CSV, with the offending 1-based row number."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        prefix = f"row {row}: " if row is not None else ""
        super().__init__(prefix + message)


def format_float(value: float) -> str:
    return repr(float(value))


def trace_csv_text(
    times: np.ndarray, values: np.ndarray, sigma: np.ndarray | None = None
) -> str:
    lines = [TRACE_HEADER_SIGMA if sigma is not None else TRACE_HEADER]
    if sigma is None:
        for t, v in zip(times, values):
            lines.append(f"{format_float(t)},{format_float(v)}")
    else:
        for t, v, s in zip(times, values, sigma):
            lines.append(f"{format_float(t)},{format_float(v)},{format_float(s)}")
    return "\n".join(lines) + "\n"


def read_trace_csv(path: str | Path) -> TimeSeries:
    """Read a ``time_s,p_excited[,sigma]`` file into a TimeSeries."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise TraceFormatError(f"cannot read trace file {path}: {exc}") from exc
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise TraceFormatError("empty trace file")
    header = lines[0].strip()
    if header == TRACE_HEADER:
        columns = 2
    elif header == TRACE_HEADER_SIGMA:
        columns = 3
    else:
        raise TraceFormatError(
            f"header must be {TRACE_HEADER!r} or {TRACE_HEADER_SIGMA!r}, got {header!r}",
            row=1,
        )
    times, values, sigmas = [], [], []
    for row, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != columns:
            raise TraceFormatError(
                f"expected {columns} comma-separated fields, got {len(parts)}", row=row
            )
        try:
            numbers = [float(part) for part in parts]
        except ValueError as exc:
            raise TraceFormatError(f"unparseable number: {exc}", row=row) from exc
        times.append(numbers[0])
        values.append(numbers[1])
        if columns == 3:
            sigmas.append(numbers[2])
    return TimeSeries(
        times=np.asarray(times),
        values=np.asarray(values),
        sigma=np.asarray(sigmas) if sigmas else None,
    )


def records_csv_text(
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    footer: Sequence[str] = (),
) -> str:
    """Render records as CSV; footer lines are emitted as '#' comments."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            format_float(cell) if isinstance(cell, float) else str(cell) for cell in row
        ))
    lines.extend(f"# {note}" for note in footer)
    return "\n".join(lines) + "\n"


def json_ready(obj: Any) -> Any:
    """Recursively convert to JSON-serialisable values; non-finite -> null."""
    if isinstance(obj, dict):
        return {key: json_ready(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_ready(value) for value in obj]
    if isinstance(obj, np.ndarray):
        return [json_ready(value) for value in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def json_text(obj: Any) -> str:
    return json.dumps(json_ready(obj), indent=2, allow_nan=False) + "\n"


def write_text(path: str | Path, text: str) -> None:
    """Write with LF endings regardless of platform."""
    with open(path, "w", encoding="utf-8", newline="\n") as stream:
        stream.write(text)
