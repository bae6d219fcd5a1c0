"""Dump per-step decode distributions from a seq2seq translation model.

Free-running decode is the default (the unsupervised setting: translate
unlabeled source text).  Teacher-forced mode feeds the reference through
the decoder instead, which yields one distribution per reference token
plus the reference ids themselves; that is the input EL2N needs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import torch

from .config import AdapterConfig
from .formats import DistributionWriter, write_corpus
from .tokenizers import Tokenizer

log = logging.getLogger(__name__)


@dataclass
class TranslationDump:
    records: list            # corpus dicts with mt / mt_tokens filled in
    failed_ids: list[str]

    @property
    def ok(self) -> bool:
        return not self.failed_ids


def _free_running(model, tokenizer, src_ids, config):
    out = model.generate(
        input_ids=torch.tensor([src_ids]),
        max_new_tokens=config.max_new_tokens,
        min_new_tokens=config.min_new_tokens,
        do_sample=False,
        num_beams=1,
        output_scores=True,
        return_dict_in_generate=True,
    )
    generated = out.sequences[0][1:].tolist()  # drop decoder start token
    probs = [torch.softmax(step[0].float(), dim=-1).numpy() for step in out.scores]
    # keep steps up to (excluding) the first EOS
    if tokenizer.eos_id in generated:
        cut = generated.index(tokenizer.eos_id)
        generated, probs = generated[:cut], probs[:cut]
    return generated, np.asarray(probs), None


def _teacher_forced(model, tokenizer, src_ids, tgt_ids):
    labels = torch.tensor([tgt_ids])
    with torch.no_grad():
        logits = model(input_ids=torch.tensor([src_ids]), labels=labels).logits
    probs = torch.softmax(logits[0].float(), dim=-1).numpy()
    mt_ids = probs.argmax(axis=1).tolist()
    return mt_ids, probs, tgt_ids


def dump_translation(records, model, tokenizer: Tokenizer,
                     config: AdapterConfig, dists_path, corpus_path) -> TranslationDump:
    """Decode every record, writing MDSD1 + the updated corpus JSONL.

    records: dicts with at least id/src (and tgt in teacher-forced mode).
    Failed sentences are skipped and listed; callers should exit nonzero
    when any are present.
    """
    vocab_size = tokenizer.vocab_size
    top_k = 0 if config.dense else min(config.top_k, vocab_size)
    writer = DistributionWriter(vocab_size, top_k=top_k,
                                teacher_forced=config.teacher_forced)
    model.eval()
    out_records, failed = [], []
    for rec in records:
        rid = rec["id"]
        try:
            src_ids = tokenizer.encode(rec["src"]) + [tokenizer.eos_id]
            if config.teacher_forced:
                if not rec.get("tgt"):
                    raise ValueError("teacher-forced decode needs tgt")
                tgt_ids = tokenizer.encode(rec["tgt"]) + [tokenizer.eos_id]
                mt_ids, probs, refs = _teacher_forced(model, tokenizer, src_ids, tgt_ids)
            else:
                with torch.no_grad():
                    mt_ids, probs, refs = _free_running(model, tokenizer, src_ids, config)
            if len(probs) == 0:
                raise ValueError("empty generation")
            writer.add(rid, probs, reference_ids=refs)
            out = dict(rec)
            out["mt"] = tokenizer.decode(mt_ids)
            out["mt_tokens"] = tokenizer.tokens(mt_ids)
            out_records.append(out)
        except Exception as exc:  # per-sentence failure: record and continue
            log.warning("sentence %s failed: %s", rid, exc)
            failed.append(rid)
    writer.write(dists_path)
    write_corpus(out_records, corpus_path)
    return TranslationDump(records=out_records, failed_ids=failed)
