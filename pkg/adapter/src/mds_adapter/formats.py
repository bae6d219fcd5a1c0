"""Standalone writers for the mdselect interchange formats.

The adapter talks to the selection toolkit only through these files, so
the serializers are implemented here against the published layouts
(MDSD1, MDSE, JSONL corpus, TSV span/QE lines) rather than imported.
All multi-byte fields are little-endian.  Files are written to a temp
path and atomically renamed into place.
"""

from __future__ import annotations

import json
import os
import struct
from contextlib import contextmanager
from pathlib import Path

import numpy as np

MDSD_MAGIC = b"MDSD"
MDSE_MAGIC = b"MDSE"
MODE_DENSE = 0
MODE_SPARSE = 1


@contextmanager
def atomic_write(path, mode="wb"):
    tmp = Path(str(path) + ".tmp")
    fh = open(tmp, mode, **({"encoding": "utf-8"} if "b" not in mode else {}))
    try:
        yield fh
        fh.close()
        os.replace(tmp, path)
    except BaseException:
        fh.close()
        tmp.unlink(missing_ok=True)
        raise


class DistributionWriter:
    """Streams sentence records into an MDSD1 file.

    Each add() call takes a (L, V) float probability matrix; sparse mode
    keeps the top-k entries per row and folds the rest into the tail mass.
    """

    def __init__(self, vocab_size: int, top_k: int = 0,
                 teacher_forced: bool = False):
        if top_k > vocab_size:
            raise ValueError(f"top_k {top_k} exceeds vocab size {vocab_size}")
        self.vocab_size = vocab_size
        self.top_k = top_k
        self.sparse = top_k > 0
        self.teacher_forced = teacher_forced
        self._records: list[bytes] = []
        self._has_refs = False

    def add(self, rid: str, probs: np.ndarray, reference_ids=None) -> None:
        probs = np.asarray(probs, dtype=np.float64)
        if probs.ndim != 2 or probs.shape[1] != self.vocab_size:
            raise ValueError(f"sentence '{rid}': expected (L, {self.vocab_size}) matrix")
        if probs.shape[0] < 1:
            raise ValueError(f"sentence '{rid}': no decode steps")
        parts = [struct.pack("<I", len(rid.encode("utf-8"))),
                 rid.encode("utf-8"),
                 struct.pack("<I", probs.shape[0])]
        if reference_ids is not None:
            self._has_refs = True
            refs = np.asarray(reference_ids, dtype="<u4")
            parts.append(struct.pack("<I", len(refs)))
            parts.append(refs.tobytes())
        elif self._has_refs:
            raise ValueError("all sentences must carry reference ids once any does")
        if self.sparse:
            for row in probs:
                idx = np.sort(np.argpartition(row, -self.top_k)[-self.top_k:])
                kept = row[idx].astype(np.float32)
                tail = max(0.0, 1.0 - float(kept.sum(dtype=np.float64)))
                parts.append(struct.pack("<I", self.top_k))
                parts.append(idx.astype("<u4").tobytes())
                parts.append(kept.astype("<f4").tobytes())
                parts.append(struct.pack("<f", tail))
        else:
            parts.append(probs.astype("<f4").tobytes())
        self._records.append(b"".join(parts))

    def write(self, path) -> None:
        flags = bytes([1 if self.teacher_forced else 0,
                       1 if self._has_refs else 0])
        with atomic_write(path) as fh:
            fh.write(MDSD_MAGIC)
            fh.write(struct.pack("<BB", 1, MODE_SPARSE if self.sparse else MODE_DENSE))
            fh.write(flags)
            fh.write(struct.pack("<IQ", self.vocab_size, len(self._records)))
            for rec in self._records:
                fh.write(rec)


def write_embeddings(ids, rows: np.ndarray, path) -> None:
    rows = np.ascontiguousarray(rows, dtype="<f4")
    with atomic_write(path) as fh:
        fh.write(MDSE_MAGIC)
        fh.write(struct.pack("<B3x", 1))
        fh.write(struct.pack("<IQ", rows.shape[1] if rows.ndim == 2 else 0,
                             len(ids)))
        fh.write(rows.tobytes())
        for rid in ids:
            b = rid.encode("utf-8")
            fh.write(struct.pack("<I", len(b)))
            fh.write(b)


def write_corpus(records, path) -> None:
    """records: iterables of dicts with id/src/mt and optional tgt/mt_tokens."""
    with atomic_write(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def write_spans(spans, path) -> None:
    """spans: (id, start_token, end_token, label, score) tuples."""
    with atomic_write(path, "w") as fh:
        for rid, start, end, label, score in spans:
            fh.write(f"{rid}\t{start}\t{end}\t{label}\t{score!r}\n")


def write_qe(values, path) -> None:
    with atomic_write(path, "w") as fh:
        for rid, value in values:
            fh.write(f"{rid}\t{value!r}\n")
