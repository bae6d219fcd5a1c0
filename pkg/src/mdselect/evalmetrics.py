"""Corpus-level BLEU and ChrF++ with fully documented, pinned variants.

BLEU: modified n-gram precisions (n=1..4) with counts pooled over the whole
corpus, geometric mean, brevity penalty exp(1 - r/c) when c < r.  No
smoothing by default; optional floor smoothing replaces zero pooled match
counts with 0.1.  Tokenization is the caller's; the CLI splits on Unicode
whitespace, which differs from standardized BLEU tokenizers and is stated
in every report header.

ChrF++: character n-grams (1..6) on whitespace-stripped text plus word
n-grams (1..2), counts pooled over the corpus, F with beta=2, arithmetic
mean over the orders present in either side.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MdsError

BLEU_MAX_ORDER = 4
CHRF_CHAR_ORDER = 6
CHRF_WORD_ORDER = 2
CHRF_BETA = 2.0


@dataclass
class EvalReport:
    metric: str
    score: float                 # in [0, 100]
    components: dict = field(default_factory=dict)
    sentence_count: int = 0
    notes: str = ""

    def to_json(self) -> str:
        return json.dumps(self.__dict__, ensure_ascii=False, indent=2) + "\n"


def write_report(report: EvalReport, path) -> None:
    Path(path).write_text(report.to_json(), encoding="utf-8")


def load_report(path) -> EvalReport:
    return EvalReport(**json.loads(Path(path).read_text(encoding="utf-8")))


def _ngrams(tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(hyps, refs, smooth_floor: bool = False) -> EvalReport:
    """BLEU over tokenized sentences, single reference per hypothesis."""
    if len(hyps) != len(refs):
        raise MdsError(f"length mismatch: {len(hyps)} hypotheses, {len(refs)} references")
    if not hyps:
        raise MdsError("empty corpus")

    matches = [0] * BLEU_MAX_ORDER
    totals = [0] * BLEU_MAX_ORDER
    hyp_len = ref_len = 0
    for hyp, ref in zip(hyps, refs):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, BLEU_MAX_ORDER + 1):
            hc = _ngrams(hyp, n)
            rc = _ngrams(ref, n)
            matches[n - 1] += sum(min(count, rc[g]) for g, count in hc.items())
            totals[n - 1] += max(len(hyp) - n + 1, 0)

    # orders with no n-grams at all (corpus shorter than n) are skipped so
    # that identical corpora always score 100
    precisions: list = []
    for m, t in zip(matches, totals):
        if t == 0:
            precisions.append(None)
            continue
        if m == 0 and smooth_floor:
            m = 0.1
        precisions.append(m / t)

    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / max(hyp_len, 1))
    if hyp_len == 0:
        bp = 0.0
    defined = [p for p in precisions if p is not None]
    if not defined or any(p == 0.0 for p in defined):
        score = 0.0
    else:
        log_mean = sum(math.log(p) for p in defined) / len(defined)
        score = bp * math.exp(log_mean) * 100.0

    return EvalReport(
        metric="bleu",
        score=score,
        components={
            "precisions": precisions,
            "brevity_penalty": bp,
            "hyp_length": hyp_len,
            "ref_length": ref_len,
            "smooth_floor": smooth_floor,
        },
        sentence_count=len(hyps),
        notes="caller-supplied tokens; pooled clipped counts; not comparable "
              "to scores from standardized tokenizers",
    )


def _fbeta(precision: float, recall: float, beta: float) -> float:
    denom = beta * beta * precision + recall
    if denom == 0.0:
        return 0.0
    return (1.0 + beta * beta) * precision * recall / denom


def chrf_pp(hyps, refs) -> EvalReport:
    """ChrF++ over raw sentence strings, single reference per hypothesis."""
    if len(hyps) != len(refs):
        raise MdsError(f"length mismatch: {len(hyps)} hypotheses, {len(refs)} references")
    if not hyps:
        raise MdsError("empty corpus")

    n_orders = CHRF_CHAR_ORDER + CHRF_WORD_ORDER
    tp = [0] * n_orders
    hyp_total = [0] * n_orders
    ref_total = [0] * n_orders

    for hyp, ref in zip(hyps, refs):
        hyp_chars = "".join(hyp.split())
        ref_chars = "".join(ref.split())
        hyp_words = hyp.split()
        ref_words = ref.split()
        for n in range(1, CHRF_CHAR_ORDER + 1):
            hc = _ngrams(hyp_chars, n)
            rc = _ngrams(ref_chars, n)
            tp[n - 1] += sum(min(count, rc[g]) for g, count in hc.items())
            hyp_total[n - 1] += sum(hc.values())
            ref_total[n - 1] += sum(rc.values())
        for n in range(1, CHRF_WORD_ORDER + 1):
            i = CHRF_CHAR_ORDER + n - 1
            hc = _ngrams(hyp_words, n)
            rc = _ngrams(ref_words, n)
            tp[i] += sum(min(count, rc[g]) for g, count in hc.items())
            hyp_total[i] += sum(hc.values())
            ref_total[i] += sum(rc.values())

    f_scores = []
    per_order = []
    for i in range(n_orders):
        if hyp_total[i] == 0 and ref_total[i] == 0:
            per_order.append(None)  # order absent from both sides: skipped
            continue
        precision = tp[i] / hyp_total[i] if hyp_total[i] else 0.0
        recall = tp[i] / ref_total[i] if ref_total[i] else 0.0
        f = _fbeta(precision, recall, CHRF_BETA)
        f_scores.append(f)
        per_order.append(f)

    score = (sum(f_scores) / len(f_scores)) * 100.0 if f_scores else 0.0
    return EvalReport(
        metric="chrf++",
        score=score,
        components={
            "char_order": CHRF_CHAR_ORDER,
            "word_order": CHRF_WORD_ORDER,
            "beta": CHRF_BETA,
            "f_per_order": per_order,
        },
        sentence_count=len(hyps),
    )
