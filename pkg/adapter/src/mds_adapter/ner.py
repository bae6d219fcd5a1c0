"""Align character-level NER predictions to MT token indices.

The recognizer is any callable text -> list of {"start", "end", "label",
"score"} character spans (the HuggingFace token-classification pipeline
with aggregation satisfies this).  A token belongs to an entity when its
character range overlaps the entity's; overlapping or adjacent entity
token runs are merged into one span per contiguous run.
"""

from __future__ import annotations

import logging

from .formats import write_spans

log = logging.getLogger(__name__)


def token_char_ranges(text: str, tokens) -> list[tuple[int, int]]:
    """Best-effort char range per token, scanning left to right.

    Tokens that cannot be located (e.g. specials that do not occur in the
    detokenized text) get an empty range and can never join a span.
    """
    ranges = []
    pos = 0
    for tok in tokens:
        found = text.find(tok, pos)
        if found < 0:
            stripped = tok.lstrip("▁Ġ#")  # common subword markers
            found = text.find(stripped, pos) if stripped else -1
            tok = stripped
        if found < 0 or not tok:
            ranges.append((pos, pos))
            continue
        ranges.append((found, found + len(tok)))
        pos = found + len(tok)
    return ranges


def _merge_runs(token_hits: dict[int, tuple[str, float]]):
    """Group hit token indices into contiguous [start, end) spans."""
    spans = []
    for idx in sorted(token_hits):
        label, score = token_hits[idx]
        if spans and idx == spans[-1][1]:
            start, _, old_label, old_score = spans[-1]
            spans[-1] = (start, idx + 1, old_label, max(old_score, score))
        else:
            spans.append((idx, idx + 1, label, score))
    return spans


def align_entities(text: str, tokens, entities) -> list[tuple[int, int, str, float]]:
    """(start_token, end_token, label, score) spans for one sentence."""
    ranges = token_char_ranges(text, tokens)
    hits: dict[int, tuple[str, float]] = {}
    for ent in entities:
        for i, (ts, te) in enumerate(ranges):
            if ts < te and ts < ent["end"] and ent["start"] < te:
                prev = hits.get(i)
                score = float(ent.get("score", 1.0))
                if prev is None or score > prev[1]:
                    hits[i] = (ent.get("label", ent.get("entity_group", "ENT")), score)
    return _merge_runs(hits)


def dump_ner(records, recognizer, spans_path) -> list[str]:
    """Run NER over each record's mt text and write the span lines.

    Returns ids whose alignment failed entirely (emitted with zero spans).
    """
    all_spans, warned = [], []
    for rec in records:
        rid = rec["id"]
        text = rec["mt"]
        tokens = rec.get("mt_tokens") or text.split()
        try:
            entities = recognizer(text)
            for start, end, label, score in align_entities(text, tokens, entities):
                all_spans.append((rid, start, end, label, min(max(score, 0.0), 1.0)))
        except Exception as exc:
            log.warning("ner alignment failed for %s: %s", rid, exc)
            warned.append(rid)
    write_spans(all_spans, spans_path)
    return warned
