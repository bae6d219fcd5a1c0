"""mds-dump: export model artifacts into the mdselect formats."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import AdapterConfig
from .embed import dump_embeddings
from .ner import dump_ner
from .qe import dump_qe
from .tokenizers import HfTokenizer
from .translate import dump_translation


def read_corpus(path):
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def cmd_translate(args) -> int:
    from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

    records = read_corpus(args.corpus)
    hf_tok = AutoTokenizer.from_pretrained(args.model)
    if args.src_lang:
        hf_tok.src_lang = args.src_lang
    if args.tgt_lang:
        hf_tok.tgt_lang = args.tgt_lang
    model = AutoModelForSeq2SeqLM.from_pretrained(args.model)
    config = AdapterConfig(translation_model=args.model,
                           src_lang=args.src_lang, tgt_lang=args.tgt_lang,
                           top_k=0 if args.dense else args.top_k,
                           teacher_forced=args.teacher_forced,
                           max_new_tokens=args.max_new_tokens)
    dump = dump_translation(records, model, HfTokenizer(hf_tok), config,
                            args.dists_out, args.corpus_out)
    print(f"translated {len(dump.records)} sentences -> {args.dists_out}")
    if dump.failed_ids:
        print(f"failed: {', '.join(dump.failed_ids)}", file=sys.stderr)
        return 1
    return 0


def cmd_ner(args) -> int:
    from transformers import pipeline

    recognizer_pipe = pipeline("token-classification", model=args.model,
                               aggregation_strategy="simple")

    def recognizer(text):
        return [{"start": e["start"], "end": e["end"],
                 "label": e["entity_group"], "score": float(e["score"])}
                for e in recognizer_pipe(text)]

    records = read_corpus(args.corpus)
    warned = dump_ner(records, recognizer, args.out)
    print(f"ner spans for {len(records)} sentences -> {args.out}")
    if warned:
        print(f"zero spans after alignment failure: {', '.join(warned)}",
              file=sys.stderr)
    return 0


def cmd_embed(args) -> int:
    from sentence_transformers import SentenceTransformer

    model = SentenceTransformer(args.model)
    records = read_corpus(args.corpus)
    config = AdapterConfig(embedding_model=args.model,
                           batch_size=args.batch_size,
                           normalize_embeddings=args.normalize)
    rows = dump_embeddings(records, model.encode, config, args.out)
    print(f"embedded {rows.shape[0]} sentences (D={rows.shape[1]}) -> {args.out}")
    return 0


def cmd_qe(args) -> int:
    from comet import download_model, load_from_checkpoint

    model = load_from_checkpoint(download_model(args.model))

    def scorer(src, mt):
        out = model.predict([{"src": src, "mt": mt}], batch_size=1,
                            progress_bar=False)
        return float(out.scores[0])

    records = read_corpus(args.corpus)
    skipped = dump_qe(records, scorer, args.out)
    print(f"qe for {len(records) - len(skipped)} sentences -> {args.out}")
    if skipped:
        print(f"skipped (no mt): {', '.join(skipped)}", file=sys.stderr)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="mds-dump", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("translate")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--src-lang")
    p.add_argument("--tgt-lang")
    p.add_argument("--top-k", type=int, default=128)
    p.add_argument("--dense", action="store_true")
    p.add_argument("--teacher-forced", action="store_true")
    p.add_argument("--max-new-tokens", type=int, default=64)
    p.add_argument("--dists-out", required=True)
    p.add_argument("--corpus-out", required=True)
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("ner")
    p.add_argument("--corpus", required=True, help="corpus with mt filled in")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ner)

    p = sub.add_parser("embed")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("qe")
    p.add_argument("--corpus", required=True, help="corpus with mt filled in")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_qe)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
