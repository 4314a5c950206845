import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

NULL = "null"


@dataclass
class ResultTable:
    """
    One output table. Rows follow the column order; None marks a missing
    value (singular sample) and is written as an explicit null.
    """
    name: str
    columns: List[str]
    rows: List[Sequence[Any]] = field(default_factory=list)

    def add(self, *values: Any) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"table {self.name}: expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(values)


def _cell(value: Any) -> str:
    if value is None:
        return NULL
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return NULL if not math.isfinite(value) else repr(value)
    return str(value)


def _json_value(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _json_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_json_value(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_csv(table: ResultTable, path: str) -> str:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_cell(v) for v in row])
    return path


def write_json(tables: Sequence[ResultTable], metadata: Dict[str, Any], path: str) -> str:
    payload = {
        "metadata": _json_value(metadata),
        "tables": {
            t.name: {"columns": list(t.columns), "rows": [_json_value(list(r)) for r in t.rows]}
            for t in tables
        },
    }
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(payload, f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")
    return path


def emit_results(
    tables: Sequence[ResultTable],
    metadata: Dict[str, Any],
    directory: str,
    formats: Sequence[str] = ("csv", "json"),
    stem: Optional[str] = None,
) -> List[str]:
    """
    Write one CSV per table plus one JSON mirror carrying all tables and the
    run metadata. File names carry no timestamp so reruns are byte-identical.
    """
    os.makedirs(directory, exist_ok=True)
    stem = stem or "results"
    written = []
    if "csv" in formats:
        for t in tables:
            written.append(write_csv(t, os.path.join(directory, f"{stem}_{t.name}.csv")))
    if "json" in formats:
        written.append(write_json(tables, metadata, os.path.join(directory, f"{stem}.json")))
    return written
