"""Cross-artifact validation joining all inputs into an immutable Bundle."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional

from .corpus import CorpusTable, NeSpanTable, QeTable
from .distio import DistributionStore, EmbeddingMatrix

_MAX_LISTED_IDS = 20


@dataclass
class CheckResult:
    name: str
    passed: int
    failed: int
    offenders: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.failed == 0


@dataclass
class ValidationReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def format(self) -> str:
        lines = []
        for c in self.checks:
            status = "PASS" if c.ok else "FAIL"
            line = f"[{status}] {c.name}: {c.passed} passed, {c.failed} failed"
            if c.offenders:
                shown = ", ".join(c.offenders[:_MAX_LISTED_IDS])
                if c.failed > _MAX_LISTED_IDS:
                    shown += ", ..."
                line += f" ({shown})"
            lines.append(line)
        lines.append("bundle: " + ("OK" if self.ok else "REJECTED"))
        return "\n".join(lines)


@dataclass
class Bundle:
    corpus: CorpusTable
    dists: Optional[DistributionStore] = None
    ner: Optional[NeSpanTable] = None
    emb: Optional[EmbeddingMatrix] = None
    qe: Optional[QeTable] = None
    report: Optional[ValidationReport] = None

    @property
    def vocab_size(self) -> Optional[int]:
        return self.dists.vocab_size if self.dists is not None else None

    def digest(self) -> str:
        h = hashlib.sha256()
        for part in (self.corpus.digest,
                     self.dists.digest if self.dists else "",
                     self.ner.digest if self.ner else "",
                     self.emb.digest if self.emb else "",
                     self.qe.digest if self.qe else ""):
            h.update(part.encode("ascii") + b"\x00")
        return h.hexdigest()


def _membership_check(name, ids, corpus) -> CheckResult:
    missing = [rid for rid in ids if rid not in corpus]
    return CheckResult(name=name, passed=len(ids) - len(missing),
                       failed=len(missing), offenders=missing)


def validate_bundle(corpus: CorpusTable,
                    dists: Optional[DistributionStore] = None,
                    ner: Optional[NeSpanTable] = None,
                    emb: Optional[EmbeddingMatrix] = None,
                    qe: Optional[QeTable] = None) -> tuple[Optional[Bundle], ValidationReport]:
    """Cross-check all artifacts; a Bundle is returned only on a clean report."""
    report = ValidationReport()

    if dists is not None:
        report.checks.append(_membership_check(
            "distribution ids in corpus", list(dists.sentences), corpus))

    if ner is not None:
        report.checks.append(_membership_check(
            "ner ids in corpus", list(ner.spans), corpus))
        if dists is not None:
            bad, good = [], 0
            for rid, spans in ner.spans.items():
                if rid not in dists:
                    continue
                token_count = dists.get(rid).token_count
                for sp in spans:
                    if sp.end_token > token_count:
                        bad.append(rid)
                        break
                else:
                    good += 1
            report.checks.append(CheckResult(
                "ner spans within token bounds", good, len(bad), bad))

    if emb is not None:
        report.checks.append(_membership_check(
            "embedding ids in corpus", list(emb.ids), corpus))
        covered = sum(1 for r in corpus.records if r.id in emb._index)
        report.checks.append(CheckResult(
            "embedding coverage of corpus", covered, 0,
            [] if covered == len(corpus) else [f"{len(corpus) - covered} uncovered"]))

    if qe is not None:
        report.checks.append(_membership_check(
            "qe ids in corpus", list(qe.values), corpus))
        bad = [rid for rid, v in qe.values.items() if not 0.0 <= v <= 1.0]
        report.checks.append(CheckResult(
            "qe values in [0, 1]", len(qe.values) - len(bad), len(bad), bad))

    if not report.ok:
        return None, report
    bundle = Bundle(corpus=corpus, dists=dists, ner=ner, emb=emb, qe=qe, report=report)
    return bundle, report
