"""Tabular reports rendered as aligned text, versioned CSV or JSON.

CSV starts with the line ``schema=exitbounds.v1``, then the column names, then
one line per row with floats written to 17 significant digits. The JSON form
carries the same columns and rows and validates against :data:`JSON_SCHEMA`.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

SCHEMA_TAG = "exitbounds.v1"

JSON_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "exitbounds report",
    "type": "object",
    "required": ["schema", "kind", "columns", "rows", "meta"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": SCHEMA_TAG},
        "kind": {"type": "string", "minLength": 1},
        "columns": {"type": "array", "items": {"type": "string"}, "uniqueItems": True},
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": {"type": ["number", "string", "boolean", "null"]},
            },
        },
        "meta": {
            "type": "object",
            "additionalProperties": {"type": ["number", "string", "boolean", "null"]},
        },
    },
}


def _clean(v):
    if hasattr(v, "item"):  # numpy scalar
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, (list, tuple)):
        return " ".join(format(float(x), ".17g") for x in v)
    return v


@dataclass
class Report:
    kind: str
    rows: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = [{k: _clean(v) for k, v in r.items()} for r in self.rows]
        self.meta = {k: _clean(v) for k, v in self.meta.items()}

    @property
    def columns(self) -> list[str]:
        cols = []
        for r in self.rows:
            for k in r:
                if k not in cols:
                    cols.append(k)
        return cols

    def to_dict(self) -> dict:
        return {"schema": SCHEMA_TAG, "kind": self.kind, "columns": self.columns,
                "rows": self.rows, "meta": self.meta}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"schema={SCHEMA_TAG}\n")
        cols = self.columns
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.rows:
            w.writerow([_csv_cell(r.get(c)) for c in cols])
        return buf.getvalue()

    def to_table(self) -> str:
        lines = [f"# {self.kind}"]
        lines += [f"# {k} = {_table_cell(v)}" for k, v in self.meta.items()]
        cols = self.columns
        if len(self.rows) == 1:
            # one record reads better vertically
            width = max(map(len, cols), default=0)
            lines += [f"{c:<{width}}  {_table_cell(self.rows[0].get(c))}" for c in cols]
            return "\n".join(lines) + "\n"
        cells = [[_table_cell(r.get(c)) for c in cols] for r in self.rows]
        widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(cols)]
        lines.append("  ".join(c.rjust(w) for c, w in zip(cols, widths)))
        lines += ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
        return "\n".join(lines) + "\n"

    def render(self, output: str) -> str:
        if output == "json":
            return self.to_json()
        if output == "csv":
            return self.to_csv()
        if output == "table":
            return self.to_table()
        raise ValueError(f"unknown output format {output!r}")


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _table_cell(v):
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".10g")
    return str(v)
