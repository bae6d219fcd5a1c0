"""Per-sentence data-selection scores: EL2N, AvgEntropy, PerEnts, Selfsup, QE.

Entropies use the natural log and are scaled by 1/V.  For a fixed vocabulary
this scaling (and any other log base) is a positive constant factor, so
rankings and segment assignments are unaffected; the convention is recorded
in every manifest.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import _kernels
from .bundle import Bundle
from .cluster import default_k, kmeans_fit, selfsup_distances
from .distio import SentenceDistributions, TokenDistribution
from .errors import CapabilityError, FormatError, MdsError

METHOD_NAMES = ("el2n", "avg_entropy", "perents", "selfsup", "qe")


@dataclass(frozen=True)
class MdsMethod:
    name: str
    aggregation: str = "max"      # perents only: max | mean
    k: Optional[int] = None       # selfsup only
    seed: int = 0                 # selfsup only
    normalize: bool = False       # selfsup only

    def __post_init__(self):
        if self.name not in METHOD_NAMES:
            raise MdsError(f"unknown method '{self.name}'")
        if self.aggregation not in ("max", "mean"):
            raise MdsError(f"unknown aggregation '{self.aggregation}'")
        if self.aggregation != "max" and self.name != "perents":
            raise MdsError("aggregation is a perents-only parameter")
        if self.k is not None and (self.name != "selfsup" or self.k < 1):
            raise MdsError("k >= 1 is a selfsup-only parameter")

    def params(self) -> dict:
        out = {"method": self.name}
        if self.name == "perents":
            out["aggregation"] = self.aggregation
        if self.name == "selfsup":
            out.update(k=self.k, seed=self.seed, normalize=self.normalize)
        return out

    def params_digest(self) -> str:
        blob = json.dumps(self.params(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


@dataclass
class ScoreTable:
    method: MdsMethod
    entries: dict[str, Optional[float]]  # None marks missing, corpus order
    bundle_digest: str = ""

    def __len__(self):
        return len(self.entries)

    def present(self) -> dict[str, float]:
        return {k: v for k, v in self.entries.items() if v is not None}


def token_entropy(d: TokenDistribution, vocab_size: int) -> float:
    """1/V-scaled natural-log entropy of one vocabulary distribution."""
    if vocab_size < 2:
        raise MdsError("vocab size must be >= 2")
    if d.dense is not None:
        p = np.asarray(d.dense, dtype=np.float64)
        if np.any(p < 0):
            raise MdsError("negative probability")
        return float(_kernels.entropy_dense(p.reshape(1, -1), vocab_size)[0])
    probs = np.asarray(d.probs, dtype=np.float64)
    if np.any(probs < 0) or d.tail_mass < 0:
        raise MdsError("negative probability")
    out = _kernels.entropy_sparse(
        probs, np.array([0, len(probs)], dtype=np.int64),
        np.array([d.tail_mass], dtype=np.float64), vocab_size,
        np.array([len(probs)], dtype=np.int64))
    return float(out[0])


def sentence_entropies(s: SentenceDistributions) -> np.ndarray:
    """Per-token 1/V-scaled entropies of one sentence."""
    if s.dense is not None:
        return _kernels.entropy_dense(s.dense.astype(np.float64), s.vocab_size)
    ks = np.diff(s.sp_offsets)
    return _kernels.entropy_sparse(s.sp_probs.astype(np.float64), s.sp_offsets,
                                   s.sp_tails.astype(np.float64),
                                   s.vocab_size, ks)


def avg_entropy(s: SentenceDistributions) -> float:
    if s.token_count < 1:
        raise MdsError(f"sentence '{s.id}' has no tokens")
    return float(sentence_entropies(s).mean())


def perents(s: SentenceDistributions, ne_indices: Iterable[int],
            aggregation: str = "max") -> Optional[float]:
    """Entropy over named-entity token positions only; None when no NEs."""
    idx = sorted(set(ne_indices))
    if not idx:
        return None
    if idx[-1] >= s.token_count or idx[0] < 0:
        raise MdsError(f"sentence '{s.id}': NE index {idx[-1]} out of bounds "
                       f"for {s.token_count} tokens")
    ents = sentence_entropies(s)[idx]
    return float(ents.mean() if aggregation == "mean" else ents.max())


def el2n(s: SentenceDistributions) -> float:
    """Mean L2 error between one-hot references and predictions over the
    first min(|Y|, |Yhat|) positions."""
    refs = s.reference_token_ids
    if refs is None:
        raise MdsError(f"sentence '{s.id}': reference token ids required for el2n")
    if len(refs) < 1:
        raise MdsError(f"sentence '{s.id}': empty reference")
    if int(np.max(refs)) >= s.vocab_size:
        raise MdsError(f"sentence '{s.id}': reference id >= V")
    L = min(len(refs), s.token_count)
    ref = np.asarray(refs[:L], dtype=np.int64)
    if s.dense is not None:
        norms = _kernels.el2n_dense(s.dense[:L].astype(np.float64), ref)
    else:
        norms = _kernels.el2n_sparse(
            s.sp_indices.astype(np.int64), s.sp_probs.astype(np.float64),
            s.sp_offsets[:L + 1], s.sp_tails[:L].astype(np.float64),
            s.vocab_size, ref)
    return float(norms.mean())


def qe_passthrough(qe_values: dict[str, float], corpus_ids: Iterable[str]) -> dict[str, Optional[float]]:
    out: dict[str, Optional[float]] = {}
    for rid in corpus_ids:
        if rid in qe_values:
            v = qe_values[rid]
            if not 0.0 <= v <= 1.0:
                raise MdsError(f"qe value {v} for '{rid}' outside [0, 1]")
            out[rid] = float(v)
        else:
            out[rid] = None
    return out


def _require(bundle: Bundle, attr: str, label: str, method: str):
    artifact = getattr(bundle, attr)
    if artifact is None:
        raise CapabilityError(label, method)
    return artifact


def score_corpus(bundle: Bundle, method: MdsMethod) -> ScoreTable:
    """One score (or missing marker) per corpus id, deterministic per inputs."""
    ids = bundle.corpus.ids()
    entries: dict[str, Optional[float]] = {}

    if method.name in ("avg_entropy", "el2n", "perents"):
        dists = _require(bundle, "dists", "dists", method.name)
        ner = _require(bundle, "ner", "ner", method.name) if method.name == "perents" else None
        for rid in ids:
            if rid not in dists:
                entries[rid] = None
                continue
            s = dists.get(rid)
            if method.name == "avg_entropy":
                entries[rid] = avg_entropy(s)
            elif method.name == "el2n":
                entries[rid] = el2n(s)
            else:
                entries[rid] = perents(s, ner.token_indices(rid), method.aggregation)
    elif method.name == "selfsup":
        emb = _require(bundle, "emb", "emb", method.name)
        if len(emb) == 0:
            raise MdsError("selfsup needs a non-empty embedding matrix")
        k = method.k if method.k is not None else default_k(len(emb))
        clustering = kmeans_fit(emb, k=k, seed=method.seed, normalize=method.normalize)
        dist = selfsup_distances(emb, clustering)
        for rid in ids:
            entries[rid] = dist.get(rid)
    elif method.name == "qe":
        qe = _require(bundle, "qe", "qe", method.name)
        entries = qe_passthrough(qe.values, ids)

    return ScoreTable(method=method, entries=entries, bundle_digest=bundle.digest())


def write_scores(table: ScoreTable, path) -> None:
    """Persist as UTF-8 lines: id, method, value-or-null, params digest."""
    pd = table.method.params_digest()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# method={table.method.name}\n")
        fh.write(f"# params={json.dumps(table.method.params(), sort_keys=True)}\n")
        fh.write(f"# bundle_digest={table.bundle_digest}\n")
        for rid, value in table.entries.items():
            v = "null" if value is None else repr(value)
            fh.write(f"{rid}\t{table.method.name}\t{v}\t{pd}\n")


def load_scores(path) -> ScoreTable:
    method = None
    params: dict = {}
    bundle_digest = ""
    entries: dict[str, Optional[float]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                if key == "params":
                    params = json.loads(value)
                elif key == "bundle_digest":
                    bundle_digest = value
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise FormatError(f"{path}: malformed score line: {line!r}")
            rid, name, value_s, _pd = parts
            method = name
            entries[rid] = None if value_s == "null" else float(value_s)
    if method is None:
        method = params.get("method", "qe")
    m = MdsMethod(name=method,
                  aggregation=params.get("aggregation", "max"),
                  k=params.get("k"), seed=params.get("seed", 0),
                  normalize=params.get("normalize", False))
    return ScoreTable(method=m, entries=entries, bundle_digest=bundle_digest)
