"""Parsing for the delimited tables omnical emits.

Both formats begin with a "# schema=<name>" line followed by a CSV header.
Empty value cells paired with undefined=1 are undefined markers and come
back as None.
"""

from __future__ import annotations

import csv
import re

SWEEP_SCHEMA = "sweep.v1"
METRICS_SCHEMA = "metrics.v1"
SUPPORTED = (SWEEP_SCHEMA, METRICS_SCHEMA)


class SchemaMismatch(ValueError):
    pass


def read_table(path) -> tuple[str, list[dict]]:
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        m = re.fullmatch(r"#\s*schema=(\S+)", first)
        if not m or m.group(1) not in SUPPORTED:
            raise SchemaMismatch(
                f"{path}: expected one of {SUPPORTED}, got {first!r}"
            )
        schema = m.group(1)
        rows = []
        for rec in csv.DictReader(fh):
            out = dict(rec)
            for key in ("value", "median", "max", "median_over_sqrt_t", "median_over_t23"):
                if key in out:
                    out[key] = float(out[key]) if out[key] not in ("", None) else None
            if "horizon" in out:
                out["horizon"] = int(out["horizon"])
            if "undefined" in out:
                out["undefined"] = out["undefined"] == "1"
            rows.append(out)
    return schema, rows


_SPAN = re.compile(r"(\d+)-(\d+)$")


def interval_span(subseq_id: str) -> tuple[int, int] | None:
    """Span of an interval-style subsequence id, if it names one.

    Understood forms: trailing "<start>-<end>" (interval:5-9, dyadic:3:9-16)
    and "prefix:<k>" meaning [1, k].
    """
    if subseq_id.startswith("prefix:"):
        return 1, int(subseq_id.split(":", 1)[1])
    m = _SPAN.search(subseq_id)
    if m:
        return int(m.group(1)), int(m.group(2))
    return None
