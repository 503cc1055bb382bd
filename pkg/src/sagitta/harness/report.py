"""Report records and their JSON / CSV serialisations.

A report is a plain dict with a fixed key order::

    schema, library, version, experiment, config, records, summary, wall_time

Each record has ``case``, ``inputs``, ``estimate``, ``stderr``, ``oracle``
and ``verdict`` (one of ``pass``, ``fail``, ``inconclusive``) followed by
experiment specific fields.  Non-finite floats are written as the strings
``"inf"``, ``"-inf"`` and ``"nan"`` so the JSON stays standard.

CSV flattening: one row per record, nested mappings joined with dots
(``inputs.k``), lists JSON-encoded; columns in order of first appearance.
"""

import csv
import io
import json

import numpy as np

from .. import __version__

SCHEMA = "report/1"
PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


def clean(value):
    """Convert numpy scalars/arrays and non-finite floats to JSON-safe values."""
    if isinstance(value, dict):
        return {str(k): clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return [clean(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return value


def record(case, inputs, verdict, estimate=None, stderr=None, oracle=None, **extra):
    rec = {
        "case": case,
        "inputs": inputs,
        "estimate": estimate,
        "stderr": stderr,
        "oracle": oracle,
        "verdict": verdict,
    }
    rec.update(extra)
    return clean(rec)


def verdict_of(ok):
    return PASS if ok else FAIL


def summarize(records):
    counts = {PASS: 0, FAIL: 0, INCONCLUSIVE: 0}
    for rec in records:
        counts[rec["verdict"]] += 1
    if counts[FAIL]:
        overall = FAIL
    elif counts[PASS]:
        overall = PASS
    else:
        overall = INCONCLUSIVE
    return {
        "cases": len(records),
        "pass": counts[PASS],
        "fail": counts[FAIL],
        "inconclusive": counts[INCONCLUSIVE],
        "verdict": overall,
    }


def make_report(experiment, config, records, extra=None, wall_time=None):
    rep = {
        "schema": SCHEMA,
        "library": "sagitta",
        "version": __version__,
        "experiment": experiment,
        "config": clean(config),
        "records": records,
        "summary": summarize(records),
    }
    if extra:
        rep["summary"].update(clean(extra))
    rep["wall_time"] = wall_time
    return rep


def to_json(report):
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def _flatten(prefix, value, out):
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else k, v, out)
    elif isinstance(value, list):
        out[prefix] = json.dumps(value)
    else:
        out[prefix] = value


def to_csv(report):
    rows = []
    columns = {}
    for rec in report["records"]:
        flat = {}
        _flatten("", rec, flat)
        rows.append(flat)
        for key in flat:
            columns.setdefault(key, None)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def dumps(report, fmt="json"):
    if fmt == "json":
        return to_json(report)
    if fmt == "csv":
        return to_csv(report)
    raise ValueError(f"unknown report format {fmt!r}")
