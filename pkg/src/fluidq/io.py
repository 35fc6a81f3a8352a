"""CSV and JSON serialization for command output."""

from __future__ import annotations

import io
import json
import math
from typing import Any, Iterable, Sequence, TextIO

TABLE_COLUMNS = ("x", "k", "y", "z", "region", "method", "log_F", "F", "oracle_log_F", "rel_log_err")
MARGINAL_COLUMNS = ("x", "method", "log_M", "M", "oracle_log_M", "rel_log_err")
_TEXT = {"region", "method", "probe", "regime"}


def format_value(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    return str(v)


def parse_value(column: str, s: str) -> Any:
    if s == "":
        return None
    if column in _TEXT:
        return s
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def write_csv(stream: TextIO, columns: Sequence[str], rows: Iterable[dict[str, Any]],
              comments: Sequence[str] = ()) -> None:
    for line in comments:
        stream.write(f"# {line}\n")
    stream.write(",".join(columns) + "\n")
    for row in rows:
        stream.write(",".join(format_value(row.get(c)) for c in columns) + "\n")


def to_csv_text(columns: Sequence[str], rows: Iterable[dict[str, Any]], comments: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    write_csv(buf, columns, rows, comments)
    return buf.getvalue()


def read_csv(text: str) -> tuple[list[str], list[str], list[dict[str, Any]]]:
    """Inverse of write_csv: (comment lines, columns, rows)."""
    comments, columns, rows = [], None, []
    for line in text.splitlines():
        if not line:
            continue
        if line.startswith("#"):
            comments.append(line[1:].strip())
            continue
        fields = line.split(",")
        if columns is None:
            columns = fields
            continue
        if len(fields) != len(columns):
            raise ValueError(f"row has {len(fields)} fields, header has {len(columns)}: {line!r}")
        rows.append({c: parse_value(c, f) for c, f in zip(columns, fields)})
    if columns is None:
        raise ValueError("no header line found")
    return comments, columns, rows


def _json_default(o: Any) -> Any:
    try:
        return float(o)
    except (TypeError, ValueError):
        return str(o)


def _clean(o: Any) -> Any:
    # JSON has no infinities; encode them as strings so the output stays valid
    if isinstance(o, float) and not math.isfinite(o):
        return format_value(o)
    if isinstance(o, dict):
        return {k: _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    return o


def to_json(obj: Any) -> str:
    return json.dumps(_clean(obj), default=_json_default, indent=2, sort_keys=True)
