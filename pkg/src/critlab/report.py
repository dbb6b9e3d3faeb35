"""JSON and CSV serialization of harness reports."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from .experiments import SweepReport, _jsonable

__all__ = ["SCHEMA_VERSION", "CSV_COLUMNS", "report_document", "write_report", "csv_rows"]

SCHEMA_VERSION = 1
CSV_COLUMNS = ("eps", "quantity", "norm_spec", "value", "target_exponent", "fitted_slope", "stderr")


def _num(x) -> str:
    if x is None:
        return "nan"
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17e}"


def report_document(rep: SweepReport, config_text: str | None = None) -> dict:
    doc = {"schema_version": SCHEMA_VERSION, **rep.to_dict()}
    if config_text is not None:
        doc["config_text"] = config_text
    return doc


def csv_rows(rep: SweepReport) -> list[list[str]]:
    out = []
    for r in rep.rows:
        fit = rep.fits.get(f"{r['quantity']}:{r['norm_spec']}") or rep.fits.get(r["quantity"]) or {}
        out.append(
            [
                _num(r["eps"]),
                r["quantity"],
                r["norm_spec"],
                _num(r["value"]),
                _num(r["target_exponent"]),
                _num(fit.get("slope")),
                _num(fit.get("stderr")),
            ]
        )
    return out


def write_report(rep: SweepReport, out_dir, stem: str | None = None, config_text: str | None = None):
    """Write ``<stem>.json`` and ``<stem>.csv`` into ``out_dir``; returns both paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or rep.kind
    jpath = out / f"{stem}.json"
    cpath = out / f"{stem}.csv"
    doc = _jsonable(report_document(rep, config_text))
    jpath.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    with cpath.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerows(csv_rows(rep))
    return jpath, cpath
