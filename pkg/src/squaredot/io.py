"""Deterministic CSV / JSON writers with a provenance header."""

from __future__ import annotations

import csv
import json
import math
import os

import numpy as np

from . import __version__


def header_line(config_hash: str) -> str:
    return f"# squaredot {__version__} config_sha256={config_hash}"


def _clean(value):
    """JSON-safe plain Python values; non-finite floats become strings."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else repr(v)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def write_csv(path, columns, rows, config_hash):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(header_line(config_hash) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def write_json(path, payload, config_hash, config_dict):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    doc = {"_meta": {"header": header_line(config_hash), "tool": "squaredot",
                     "version": __version__, "config_sha256": config_hash,
                     "config": config_dict}}
    doc.update(payload)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean(doc), fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_table(out_dir, stem, columns, rows, fmt, config_hash, config_dict):
    """Tabular data as CSV or as a JSON document with a ``rows`` list."""
    if fmt == "csv":
        path = os.path.join(out_dir, stem + ".csv")
        write_csv(path, columns, rows, config_hash)
    else:
        path = os.path.join(out_dir, stem + ".json")
        write_json(path, {"columns": list(columns), "rows": [list(r) for r in rows]},
                   config_hash, config_dict)
    return path


def read_params(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return doc.get("params", doc)
