"""Dump source-sentence embeddings to an MDSE file."""

from __future__ import annotations

import numpy as np

from .config import AdapterConfig
from .formats import write_embeddings


def dump_embeddings(records, encoder, config: AdapterConfig, path) -> np.ndarray:
    """encoder: callable list[str] -> (len, D) array.  Row order = corpus order."""
    ids = [rec["id"] for rec in records]
    texts = [rec["src"] for rec in records]
    chunks = []
    for i in range(0, len(texts), config.batch_size):
        chunks.append(np.asarray(encoder(texts[i:i + config.batch_size]),
                                 dtype=np.float32))
    rows = np.concatenate(chunks) if chunks else np.empty((0, 0), np.float32)
    if config.normalize_embeddings and len(rows):
        norms = np.linalg.norm(rows, axis=1, keepdims=True)
        rows = rows / np.where(norms > 0, norms, 1.0)
    write_embeddings(ids, rows, path)
    return rows
