"""Line-based interchange formats: corpus records, NE spans, QE scores.

Corpus files are JSON lines (one object per line).  NE spans and QE scores
are tab-separated lines.  All files are UTF-8.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import FormatError


def _file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass(frozen=True)
class CorpusRecord:
    id: str
    src: str
    mt: str
    tgt: Optional[str] = None
    mt_tokens: Optional[tuple[str, ...]] = None


@dataclass
class CorpusTable:
    records: list[CorpusRecord]
    digest: str = ""
    _by_id: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._by_id = {r.id: r for r in self.records}

    def __len__(self):
        return len(self.records)

    def __contains__(self, rid: str):
        return rid in self._by_id

    def get(self, rid: str) -> CorpusRecord:
        return self._by_id[rid]

    def ids(self) -> list[str]:
        return [r.id for r in self.records]


@dataclass(frozen=True)
class NeSpan:
    id: str
    start_token: int
    end_token: int  # exclusive
    label: str
    score: float


@dataclass
class NeSpanTable:
    spans: dict[str, list[NeSpan]]  # per-id, sorted by start_token
    digest: str = ""

    def token_indices(self, rid: str) -> set[int]:
        """All token indices covered by any span of this sentence."""
        out: set[int] = set()
        for sp in self.spans.get(rid, ()):
            out.update(range(sp.start_token, sp.end_token))
        return out


@dataclass
class QeTable:
    values: dict[str, float]
    digest: str = ""


def load_corpus(path) -> CorpusTable:
    """Load a JSONL corpus, rejecting duplicate ids and malformed lines."""
    records = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: malformed JSON line: {exc}") from None
            for key in ("id", "src", "mt"):
                if key not in obj:
                    raise FormatError(f"{path}:{lineno}: missing required field '{key}'")
            rid = obj["id"]
            if not rid:
                raise FormatError(f"{path}:{lineno}: empty id")
            if rid in seen:
                raise FormatError(f"{path}:{lineno}: duplicate id '{rid}'")
            seen.add(rid)
            mt_tokens = obj.get("mt_tokens")
            records.append(CorpusRecord(
                id=rid,
                src=obj["src"],
                mt=obj["mt"],
                tgt=obj.get("tgt"),
                mt_tokens=tuple(mt_tokens) if mt_tokens is not None else None,
            ))
    return CorpusTable(records=records, digest=_file_digest(path))


def write_corpus(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            obj = {"id": r.id, "src": r.src, "mt": r.mt}
            if r.tgt is not None:
                obj["tgt"] = r.tgt
            if r.mt_tokens is not None:
                obj["mt_tokens"] = list(r.mt_tokens)
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def load_ner_spans(path) -> NeSpanTable:
    """Load tab-separated NE spans: id, start_token, end_token, label, score."""
    spans: dict[str, list[NeSpan]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 5:
                raise FormatError(f"{path}:{lineno}: expected 5 tab-separated fields, got {len(parts)}")
            rid, start_s, end_s, label, score_s = parts
            try:
                start, end, score = int(start_s), int(end_s), float(score_s)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            if start < 0 or end <= start:
                raise FormatError(f"{path}:{lineno}: empty or inverted span [{start}, {end})")
            if not 0.0 <= score <= 1.0:
                raise FormatError(f"{path}:{lineno}: score {score} outside [0, 1]")
            spans.setdefault(rid, []).append(NeSpan(rid, start, end, label, score))
    for rid in spans:
        spans[rid].sort(key=lambda sp: sp.start_token)
    return NeSpanTable(spans=spans, digest=_file_digest(path))


def write_ner_spans(spans, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sp in spans:
            fh.write(f"{sp.id}\t{sp.start_token}\t{sp.end_token}\t{sp.label}\t{sp.score!r}\n")


def load_qe(path) -> QeTable:
    """Load tab-separated QE lines: id, value in [0, 1]."""
    values: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FormatError(f"{path}:{lineno}: expected 2 tab-separated fields")
            rid, value_s = parts
            try:
                value = float(value_s)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            values[rid] = value
    return QeTable(values=values, digest=_file_digest(path))


def write_qe(values: dict[str, float], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rid, value in values.items():
            fh.write(f"{rid}\t{value!r}\n")
