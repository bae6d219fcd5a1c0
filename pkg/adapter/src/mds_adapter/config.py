"""Run configuration for all dump commands."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass
class AdapterConfig:
    translation_model: Optional[str] = None
    ner_model: Optional[str] = None
    embedding_model: Optional[str] = None
    qe_model: Optional[str] = None
    src_lang: Optional[str] = None
    tgt_lang: Optional[str] = None
    batch_size: int = 8
    top_k: int = 128            # sparse export width; <= 0 means dense
    teacher_forced: bool = False
    max_new_tokens: int = 64
    min_new_tokens: int = 1
    normalize_embeddings: bool = False

    @property
    def dense(self) -> bool:
        return self.top_k <= 0
