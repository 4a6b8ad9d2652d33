from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import msgpack

from banachmc.common_values import (
    NORM_COLUMNS,
    RATES_COLUMNS,
    SWEEP_COLUMNS,
    RecordLayout,
)

LAYOUT_COLUMNS = {
    RecordLayout.SWEEP: SWEEP_COLUMNS,
    RecordLayout.RATES: RATES_COLUMNS,
    RecordLayout.NORM: NORM_COLUMNS,
}

# column -> cell type; anything not listed is a float
COLUMN_TYPES = {
    "level_L": "int",
    "M_list": "int_list",
    "case_label": "str",
    "M": "int",
    "instance": "int",
    "iterations": "int",
    "converged": "bool",
    "restarts_used": "int",
}


def format_cell(column: str, value: Any) -> str:
    if value is None:
        return ""
    kind = COLUMN_TYPES.get(column, "float")
    if kind == "int_list":
        return ";".join(str(int(m)) for m in value)
    if kind == "bool":
        return "true" if value else "false"
    if kind == "int":
        return str(int(value))
    if kind == "str":
        return str(value)
    return repr(float(value))


def parse_cell(column: str, text: str) -> Any:
    if text == "":
        return None
    kind = COLUMN_TYPES.get(column, "float")
    if kind == "int_list":
        return tuple(int(m) for m in text.split(";"))
    if kind == "bool":
        if text not in ("true", "false"):
            raise ValueError(f"column {column}: expected true/false, got {text!r}")
        return text == "true"
    if kind == "int":
        return int(text)
    if kind == "str":
        return text
    return float(text)


def _normalize(column: str, value: Any) -> Any:
    if value is None:
        return None
    kind = COLUMN_TYPES.get(column, "float")
    if kind == "int_list":
        return tuple(int(m) for m in value)
    if kind == "bool":
        return bool(value)
    if kind == "int":
        return int(value)
    if kind == "str":
        return str(value)
    return float(value)


@dataclass
class RunRecord:
    """Rows of one experiment run together with the configuration that produced them."""

    experiment: str
    layout: RecordLayout
    rows: list[dict[str, Any]] = field(default_factory=list)
    config: dict[str, Any] = field(default_factory=dict)
    config_hash: str = ""
    fits: dict[str, list[float]] = field(default_factory=dict)
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.layout = RecordLayout(self.layout)

    @property
    def columns(self) -> tuple[str, ...]:
        return LAYOUT_COLUMNS[self.layout]

    def add_row(self, **values: Any) -> None:
        unknown = set(values) - set(self.columns)
        if unknown:
            raise KeyError(f"unknown columns for the {self.layout.value} layout: {sorted(unknown)}")
        self.rows.append({column: _normalize(column, values.get(column)) for column in self.columns})

    def column(self, name: str) -> list[Any]:
        return [row[name] for row in self.rows]

    def emit_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([format_cell(column, row[column]) for column in self.columns])
        return buffer.getvalue()

    @classmethod
    def parse_csv(
        cls, text: str, experiment: str = "", layout: RecordLayout | str | None = None
    ) -> RunRecord:
        reader = csv.reader(io.StringIO(text))
        header = tuple(next(reader))
        if layout is None:
            matches = [kind for kind, columns in LAYOUT_COLUMNS.items() if columns == header]
            if not matches:
                raise ValueError(f"unrecognized CSV header: {header}")
            layout = matches[0]
        record = cls(experiment, layout)
        if header != record.columns:
            raise ValueError(f"header {header} does not match the {record.layout.value} layout")
        for cells in reader:
            if len(cells) != len(header):
                raise ValueError(f"expected {len(header)} cells, got {len(cells)}")
            record.rows.append(
                {column: parse_cell(column, text) for column, text in zip(header, cells)}
            )
        return record

    def write_csv(self, file_name: str | Path) -> Path:
        path = Path(file_name)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.emit_csv())
        return path

    def to_payload(self) -> dict[str, Any]:
        rows = [
            {
                key: list(value) if isinstance(value, tuple) else value
                for key, value in row.items()
            }
            for row in self.rows
        ]
        return {
            "experiment": self.experiment,
            "layout": self.layout.value,
            "rows": rows,
            "config": self.config,
            "config_hash": self.config_hash,
            "fits": self.fits,
            "metadata": self.metadata,
        }

    def save(self, file_name: str | Path) -> Path:
        path = Path(file_name)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("wb+") as f:
            f.write(msgpack.packb(self.to_payload()))
        return path

    @classmethod
    def read_from_file(cls, file_name: str | Path) -> RunRecord:
        with Path(file_name).open("rb") as f:
            payload = msgpack.unpackb(f.read())
        record = cls(
            payload["experiment"],
            payload["layout"],
            config=payload["config"],
            config_hash=payload["config_hash"],
            fits={key: list(value) for key, value in payload["fits"].items()},
            metadata=payload["metadata"],
        )
        for row in payload["rows"]:
            record.rows.append({column: _normalize(column, row[column]) for column in record.columns})
        return record

    def finite_rows(self, column: str) -> list[dict[str, Any]]:
        return [
            row for row in self.rows if row[column] is not None and math.isfinite(row[column])
        ]

    def __repr__(self) -> str:
        return (
            f"RunRecord({self.experiment}, layout={self.layout.value}, "
            f"rows={len(self.rows)}, hash={self.config_hash[:8]})"
        )
