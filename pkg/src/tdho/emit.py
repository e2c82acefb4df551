"""Time-series and report emitters.

The JSON document is the source of truth; CSV is a flat projection of it.
Complex series become ``<name>_re`` / ``<name>_im`` columns and masked
samples are written as ``null`` (JSON) or an empty cell (CSV).
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

__all__ = ["atomic_write", "csv_text", "read_series_csv", "series_document", "write_csv", "write_json"]


def atomic_write(path, text: str) -> Path:
    """Write ``text`` to a temporary sibling and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _values(a):
    mask = np.ma.getmaskarray(a) if np.ma.isMaskedArray(a) else None
    data = np.ma.getdata(a)
    out = [float(x) for x in data]
    if mask is not None:
        out = [None if m else x for x, m in zip(out, mask)]
    return out


def series_document(times, series: dict) -> dict:
    """JSON-ready mapping: real series as lists, complex ones as {"re": [...], "im": [...]}."""
    doc = {"t": [float(x) for x in times], "series": {}}
    for name, values in series.items():
        values = values if np.ma.isMaskedArray(values) else np.asarray(values)
        if len(values) != len(times):
            raise ValueError(f"series {name!r} has {len(values)} samples, grid has {len(times)}")
        if np.iscomplexobj(values):
            doc["series"][name] = {"re": _values(values.real), "im": _values(values.imag)}
        else:
            doc["series"][name] = _values(values)
    return doc


def _columns(doc: dict):
    cols = [("t", doc["t"])]
    for name, values in doc["series"].items():
        if isinstance(values, dict):
            cols.append((f"{name}_re", values["re"]))
            cols.append((f"{name}_im", values["im"]))
        else:
            cols.append((name, values))
    return cols


def _cell(x):
    return "" if x is None else repr(x)


def csv_text(doc: dict) -> str:
    cols = _columns(doc)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([name for name, _ in cols])
    for row in zip(*(values for _, values in cols)):
        writer.writerow([_cell(x) for x in row])
    return buf.getvalue()


def write_json(path, doc: dict) -> Path:
    return atomic_write(path, json.dumps(doc, indent=1) + "\n")


def write_csv(path, doc: dict) -> Path:
    return atomic_write(path, csv_text(doc))


def read_series_csv(path) -> dict[str, list]:
    """Column name -> list of floats (None for empty cells)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {name: [float(r[i]) if r[i] != "" else None for r in body] for i, name in enumerate(header)}
