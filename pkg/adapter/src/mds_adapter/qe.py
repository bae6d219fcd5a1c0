"""Dump reference-free quality-estimation scores."""

from __future__ import annotations

import logging

from .formats import write_qe

log = logging.getLogger(__name__)


def dump_qe(records, scorer, path) -> list[str]:
    """scorer: callable (src, mt) -> float in [0, 1].

    Values outside the range (numeric drift) are clamped with a warning;
    records without mt are skipped and their ids returned.
    """
    values, skipped = [], []
    for rec in records:
        rid = rec["id"]
        if not rec.get("mt"):
            log.warning("no mt for %s, skipping qe", rid)
            skipped.append(rid)
            continue
        value = float(scorer(rec["src"], rec["mt"]))
        if not 0.0 <= value <= 1.0:
            log.warning("qe value %s for %s clamped to [0, 1]", value, rid)
            value = min(max(value, 0.0), 1.0)
        values.append((rid, value))
    write_qe(values, path)
    return skipped
