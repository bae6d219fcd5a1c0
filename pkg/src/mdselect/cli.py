"""Command-line entry point: validate | score | select | eval | report."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .bundle import validate_bundle
from .corpus import load_corpus, load_ner_spans, load_qe
from .distio import load_distributions, load_embeddings
from .errors import MdsError
from .evalmetrics import chrf_pp, corpus_bleu, load_report, write_report
from .metrics import MdsMethod, load_scores, score_corpus, write_scores
from .selection import (default_segment_index, load_manifest, select,
                        write_manifest)


def _apply_thread_cap() -> None:
    threads = int(os.environ.get("MDS_THREADS", "0"))
    if threads > 0:
        try:
            import numba
            numba.set_num_threads(threads)
        except ImportError:
            pass


def _load_bundle(args):
    corpus = load_corpus(args.corpus)
    dists = load_distributions(args.dists) if args.dists else None
    ner = load_ner_spans(args.ner) if args.ner else None
    emb = load_embeddings(args.emb) if args.emb else None
    qe = load_qe(args.qe) if args.qe else None
    return validate_bundle(corpus, dists=dists, ner=ner, emb=emb, qe=qe)


def _add_bundle_args(p, require_corpus=True):
    p.add_argument("--corpus", required=require_corpus)
    p.add_argument("--dists")
    p.add_argument("--ner")
    p.add_argument("--emb")
    p.add_argument("--qe")


def cmd_validate(args) -> int:
    bundle, report = _load_bundle(args)
    print(report.format())
    return 0 if bundle is not None else 1


def cmd_score(args) -> int:
    bundle, report = _load_bundle(args)
    if bundle is None:
        print(report.format(), file=sys.stderr)
        return 1
    method = MdsMethod(name=args.method, aggregation=args.aggregation,
                       k=args.k, seed=args.cluster_seed,
                       normalize=args.normalize)
    table = score_corpus(bundle, method)
    write_scores(table, args.out)
    present = sum(1 for v in table.entries.values() if v is not None)
    print(f"scored {present}/{len(table)} sentences with {args.method} -> {args.out}")
    return 0


def cmd_select(args) -> int:
    scores = load_scores(args.scores)
    seeds = [int(s) for s in args.seeds.split(",") if s]
    if args.all_segments:
        indices = list(range(args.segments))
    elif args.segment_index is not None:
        indices = [args.segment_index]
    else:
        indices = [default_segment_index(scores.method.name, args.segments)]
    written = []
    for idx in indices:
        manifests = select(scores, segment_count=args.segments,
                           sample_size=args.per_segment, seeds=seeds,
                           segment_index=idx, direction=args.direction,
                           missing_policy=args.missing_policy)
        for m in manifests:
            written.append(write_manifest(m, args.out))
    print(f"wrote {len(written)} manifests to {args.out}")
    return 0


def cmd_eval(args) -> int:
    hyps = Path(args.hyps).read_text(encoding="utf-8").splitlines()
    refs = Path(args.refs).read_text(encoding="utf-8").splitlines()
    if args.metric == "bleu":
        report = corpus_bleu([h.split() for h in hyps], [r.split() for r in refs],
                             smooth_floor=args.smooth_floor)
    else:
        report = chrf_pp(hyps, refs)
    write_report(report, args.out)
    print(f"{report.metric}: {report.score:.2f} ({report.sentence_count} sentences) -> {args.out}")
    return 0


def cmd_report(args) -> int:
    manifest_dir = Path(args.manifests)
    eval_dir = Path(args.evals) if args.evals else None
    groups: dict[tuple, list] = {}
    for path in sorted(manifest_dir.glob("*.manifest")):
        m = load_manifest(path)
        groups.setdefault((m.method, m.segment_index), []).append((path, m))
    if not groups:
        print(f"no manifests found in {manifest_dir}", file=sys.stderr)
        return 1

    lines = ["method\tsegment_index\tseeds\tselected\tmetric\tscore"]
    for (method, idx), entries in sorted(groups.items()):
        seeds = ",".join(str(m.seed) for _, m in entries)
        selected = sum(len(m.selected_ids) for _, m in entries)
        rows = []
        if eval_dir is not None:
            scores: dict[str, list[float]] = {}
            for path, _m in entries:
                for ev_path in sorted(eval_dir.glob(path.stem + ".*.eval")):
                    ev = load_report(ev_path)
                    scores.setdefault(ev.metric, []).append(ev.score)
            for metric, values in sorted(scores.items()):
                rows.append((metric, sum(values) / len(values)))
        if not rows:
            stat = entries[0][1].segment_stats[idx]
            rows.append(("mds_mean", stat["mean"]))
        for metric, value in rows:
            value_s = "null" if value is None else f"{value:.6f}"
            lines.append(f"{method}\t{idx}\t{seeds}\t{selected}\t{metric}\t{value_s}")

    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mdselect",
                                     description=__doc__.strip())
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="cross-check artifacts into a bundle")
    _add_bundle_args(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("score", help="compute one MDS score table")
    _add_bundle_args(p)
    p.add_argument("--method", required=True,
                   choices=["el2n", "avg_entropy", "perents", "selfsup", "qe"])
    p.add_argument("--aggregation", choices=["max", "mean"], default="max")
    p.add_argument("--k", type=int, default=None, help="selfsup cluster count")
    p.add_argument("--cluster-seed", type=int, default=0)
    p.add_argument("--normalize", action="store_true",
                   help="length-normalize embeddings before clustering")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("select", help="rank, segment, and sample ids")
    p.add_argument("--scores", required=True)
    p.add_argument("--segments", type=int, default=4)
    p.add_argument("--per-segment", type=int, default=2000)
    p.add_argument("--seeds", default="1,2,3")
    p.add_argument("--segment-index", type=int, default=None)
    p.add_argument("--all-segments", action="store_true",
                   help="write manifests for every segment index")
    p.add_argument("--direction", choices=["ascending", "descending"],
                   default="ascending")
    p.add_argument("--missing-policy",
                   choices=["exclude", "rank_lowest", "rank_highest"],
                   default="exclude")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("eval", help="score translations with BLEU or ChrF++")
    p.add_argument("--metric", choices=["bleu", "chrf"], required=True)
    p.add_argument("--hyps", required=True)
    p.add_argument("--refs", required=True)
    p.add_argument("--smooth-floor", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="per-segment table from manifests (+evals)")
    p.add_argument("--manifests", required=True)
    p.add_argument("--evals", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    _apply_thread_cap()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MdsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
