"""Pretty formatting utilities for CLI output."""

import csv
import io
import json
import shutil
from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel


def get_term_width() -> int:
    """Get terminal width, default to 80 if can't detect."""
    try:
        return shutil.get_terminal_size().columns
    except Exception:
        return 80


def header(text: str, width: Optional[int] = None) -> str:
    """Boxed section header for human-readable reports."""
    width = width or get_term_width()
    width = max(width, len(text) + 4)
    h_line = "─" * (width - 2)
    v_line = "│"

    result = [
        f"┌{h_line}┐",
        f"{v_line} {text}{' ' * (width - len(text) - 3)}{v_line}",
        f"└{h_line}┘"
    ]

    return "\n".join(result)


def jsonable(data: object) -> object:
    """Pydantic models become plain JSON data; unset optional fields are dropped."""
    if isinstance(data, BaseModel):
        return data.model_dump(mode='json', exclude_none=True)
    if isinstance(data, (list, tuple)):
        return [jsonable(item) for item in data]  # type: ignore[misc]
    return data


def pretty_json(data: object, prefix: str = "") -> str:
    """Format JSON data with optional prefix."""
    raw = json.dumps(jsonable(data), indent=2)
    if prefix:
        lines = raw.split("\n")
        return "\n".join(f"{prefix}{line}" for line in lines)
    return raw


def csv_table(rows: Sequence[BaseModel], columns: Sequence[str]) -> str:
    """CSV with a header row; floats keep their full repr."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        values: Dict[str, Any] = row.model_dump()
        writer.writerow([repr(values[c]) if isinstance(values[c], float) else values[c] for c in columns])
    return out.getvalue()


def text_table(rows: List[List[str]], headers: List[str]) -> str:
    """Left-aligned plain-text table."""
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines)
