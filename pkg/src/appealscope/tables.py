"""CSV/JSON table writing shared by the pipeline stages."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence


def write_table(stem: Path, header: Sequence[str], rows: Sequence[Sequence], fmt: str = "csv") -> Path:
    """Write ``rows`` to ``stem.csv`` or ``stem.json`` and return the path."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        path = stem.with_suffix(".csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    elif fmt == "json":
        path = stem.with_suffix(".json")
        payload = [dict(zip(header, row)) for row in rows]
        path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unsupported table format {fmt!r}")
    return path


def read_csv(path: Path) -> list[dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
