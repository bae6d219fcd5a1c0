"""Binary interchange formats.

MDSD1 (per-token vocabulary distributions), little-endian:
  magic "MDSD" | u8 version=1 | u8 mode (0 dense, 1 sparse) | 2 flag bytes
  | u32 vocab size V | u64 sentence count
  per sentence: u32 id length | UTF-8 id | u32 L
    | (if flag byte 1 set) u32 R | R u32 reference token ids
    | dense: L rows of V float32
    | sparse: per token: u32 k | k u32 indices | k float32 probs | float32 tail

Flag byte 0 records the decode mode (0 free-running, 1 teacher-forced);
flag byte 1 records whether reference token ids are present (needed for
EL2N).  Sparse tail mass is interpreted as spread uniformly over the
V - k unlisted vocabulary entries.

MDSE (sentence embeddings), little-endian:
  magic "MDSE" | u8 version=1 | 3 pad bytes | u32 D | u64 N
  | N * D float32 row-major | N * (u32 id length | UTF-8 id)
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import FormatError

PROB_SUM_TOL = 1e-4

MDSD_MAGIC = b"MDSD"
MDSE_MAGIC = b"MDSE"

MODE_DENSE = 0
MODE_SPARSE = 1


@dataclass(frozen=True)
class TokenDistribution:
    """One predicted vocabulary distribution, dense or sparse top-k."""
    dense: Optional[np.ndarray] = None
    indices: Optional[np.ndarray] = None
    probs: Optional[np.ndarray] = None
    tail_mass: float = 0.0

    @property
    def is_sparse(self) -> bool:
        return self.dense is None

    def to_dense(self, vocab_size: int) -> np.ndarray:
        """Full-vocabulary float64 view, tail spread uniformly."""
        if self.dense is not None:
            return self.dense.astype(np.float64)
        k = len(self.indices)
        out = np.full(vocab_size, self.tail_mass / (vocab_size - k) if vocab_size > k else 0.0)
        out[self.indices] = self.probs.astype(np.float64)
        return out


@dataclass
class SentenceDistributions:
    """All per-token distributions of one decoded sentence, kernel-ready.

    Sparse data is flattened: indices/probs concatenated across tokens with
    offsets[l]:offsets[l+1] delimiting token l.
    """
    id: str
    vocab_size: int
    dense: Optional[np.ndarray] = None          # (L, V) float32
    sp_indices: Optional[np.ndarray] = None     # u32, flattened
    sp_probs: Optional[np.ndarray] = None       # f32, flattened
    sp_offsets: Optional[np.ndarray] = None     # i64, length L+1
    sp_tails: Optional[np.ndarray] = None       # f32, length L
    reference_token_ids: Optional[np.ndarray] = None

    @property
    def token_count(self) -> int:
        if self.dense is not None:
            return self.dense.shape[0]
        return len(self.sp_tails)

    @property
    def is_sparse(self) -> bool:
        return self.dense is None

    def token_distribution(self, l: int) -> TokenDistribution:
        if self.dense is not None:
            return TokenDistribution(dense=self.dense[l])
        lo, hi = self.sp_offsets[l], self.sp_offsets[l + 1]
        return TokenDistribution(indices=self.sp_indices[lo:hi],
                                 probs=self.sp_probs[lo:hi],
                                 tail_mass=float(self.sp_tails[l]))


def dense_sentence(rid, matrix, vocab_size, reference_token_ids=None) -> SentenceDistributions:
    matrix = np.asarray(matrix, dtype=np.float32)
    ref = None if reference_token_ids is None else np.asarray(reference_token_ids, dtype=np.uint32)
    return SentenceDistributions(id=rid, vocab_size=vocab_size, dense=matrix,
                                 reference_token_ids=ref)


def sparse_sentence(rid, token_rows, vocab_size, reference_token_ids=None) -> SentenceDistributions:
    """Build from per-token (indices, probs, tail_mass) triples."""
    offsets = [0]
    all_idx, all_probs, tails = [], [], []
    for idx, probs, tail in token_rows:
        all_idx.append(np.asarray(idx, dtype=np.uint32))
        all_probs.append(np.asarray(probs, dtype=np.float32))
        tails.append(tail)
        offsets.append(offsets[-1] + len(idx))
    ref = None if reference_token_ids is None else np.asarray(reference_token_ids, dtype=np.uint32)
    return SentenceDistributions(
        id=rid, vocab_size=vocab_size,
        sp_indices=np.concatenate(all_idx) if all_idx else np.empty(0, np.uint32),
        sp_probs=np.concatenate(all_probs) if all_probs else np.empty(0, np.float32),
        sp_offsets=np.asarray(offsets, dtype=np.int64),
        sp_tails=np.asarray(tails, dtype=np.float32),
        reference_token_ids=ref,
    )


@dataclass
class DistributionStore:
    vocab_size: int
    mode: int
    sentences: dict[str, SentenceDistributions] = field(default_factory=dict)
    teacher_forced: bool = False
    digest: str = ""

    def __len__(self):
        return len(self.sentences)

    def __contains__(self, rid):
        return rid in self.sentences

    def get(self, rid: str) -> SentenceDistributions:
        return self.sentences[rid]

    @property
    def has_reference_ids(self) -> bool:
        return any(s.reference_token_ids is not None for s in self.sentences.values())


def _check_sentence(s: SentenceDistributions, vocab_size: int) -> None:
    if s.token_count < 1:
        raise FormatError(f"sentence '{s.id}': token count must be >= 1")
    if s.dense is not None:
        if np.any(s.dense < 0):
            raise FormatError(f"sentence '{s.id}': negative probability")
        sums = s.dense.sum(axis=1, dtype=np.float64)
        bad = np.nonzero(np.abs(sums - 1.0) > PROB_SUM_TOL)[0]
        if len(bad):
            raise FormatError(
                f"sentence '{s.id}' token {bad[0]}: probabilities sum to "
                f"{sums[bad[0]]:.6f}, not 1 within {PROB_SUM_TOL}")
    else:
        for l in range(s.token_count):
            lo, hi = s.sp_offsets[l], s.sp_offsets[l + 1]
            idx = s.sp_indices[lo:hi]
            probs = s.sp_probs[lo:hi]
            tail = float(s.sp_tails[l])
            if len(idx) > vocab_size:
                raise FormatError(f"sentence '{s.id}' token {l}: k > V")
            if len(idx) > 1 and np.any(np.diff(idx.astype(np.int64)) <= 0):
                raise FormatError(f"sentence '{s.id}' token {l}: indices not strictly increasing")
            if len(idx) and idx[-1] >= vocab_size:
                raise FormatError(f"sentence '{s.id}' token {l}: index {idx[-1]} >= V")
            if np.any(probs < 0) or tail < 0:
                raise FormatError(f"sentence '{s.id}' token {l}: negative probability")
            total = float(probs.sum(dtype=np.float64)) + tail
            if abs(total - 1.0) > PROB_SUM_TOL:
                raise FormatError(
                    f"sentence '{s.id}' token {l}: probabilities + tail sum to "
                    f"{total:.6f}, not 1 within {PROB_SUM_TOL}")
    if s.reference_token_ids is not None:
        if len(s.reference_token_ids) and int(s.reference_token_ids.max()) >= vocab_size:
            raise FormatError(f"sentence '{s.id}': reference token id >= V")


def write_distributions(store: DistributionStore, path) -> None:
    flags = bytes([1 if store.teacher_forced else 0,
                   1 if store.has_reference_ids else 0])
    has_refs = store.has_reference_ids
    with open(path, "wb") as fh:
        fh.write(MDSD_MAGIC)
        fh.write(struct.pack("<BB", 1, store.mode))
        fh.write(flags)
        fh.write(struct.pack("<IQ", store.vocab_size, len(store.sentences)))
        for s in store.sentences.values():
            rid = s.id.encode("utf-8")
            fh.write(struct.pack("<I", len(rid)))
            fh.write(rid)
            L = s.token_count
            fh.write(struct.pack("<I", L))
            if has_refs:
                refs = s.reference_token_ids
                if refs is None or len(refs) == 0:
                    raise FormatError(f"sentence '{s.id}': reference ids missing")
                fh.write(struct.pack("<I", len(refs)))
                fh.write(np.asarray(refs, dtype="<u4").tobytes())
            if store.mode == MODE_DENSE:
                fh.write(np.ascontiguousarray(s.dense, dtype="<f4").tobytes())
            else:
                for l in range(L):
                    lo, hi = s.sp_offsets[l], s.sp_offsets[l + 1]
                    fh.write(struct.pack("<I", int(hi - lo)))
                    fh.write(np.ascontiguousarray(s.sp_indices[lo:hi], dtype="<u4").tobytes())
                    fh.write(np.ascontiguousarray(s.sp_probs[lo:hi], dtype="<f4").tobytes())
                    fh.write(struct.pack("<f", float(s.sp_tails[l])))


class _Reader:
    def __init__(self, data: bytes, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(f"{self.path}: truncated record at byte {self.pos}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_distributions(path) -> DistributionStore:
    data = Path(path).read_bytes()
    r = _Reader(data, path)
    if r.take(4) != MDSD_MAGIC:
        raise FormatError(f"{path}: bad magic, not an MDSD file")
    version, mode = r.unpack("<BB")
    if version != 1:
        raise FormatError(f"{path}: unsupported version {version}")
    if mode not in (MODE_DENSE, MODE_SPARSE):
        raise FormatError(f"{path}: unknown mode {mode}")
    decode_flag, refs_flag = r.take(2)
    vocab_size, count = r.unpack("<IQ")
    store = DistributionStore(vocab_size=vocab_size, mode=mode,
                              teacher_forced=bool(decode_flag),
                              digest=hashlib.sha256(data).hexdigest())
    for _ in range(count):
        (id_len,) = r.unpack("<I")
        rid = r.take(id_len).decode("utf-8")
        (L,) = r.unpack("<I")
        refs = None
        if refs_flag:
            (ref_count,) = r.unpack("<I")
            refs = np.frombuffer(r.take(4 * ref_count), dtype="<u4")
        if mode == MODE_DENSE:
            rows = np.frombuffer(r.take(4 * L * vocab_size), dtype="<f4")
            s = SentenceDistributions(id=rid, vocab_size=vocab_size,
                                      dense=rows.reshape(L, vocab_size),
                                      reference_token_ids=refs)
        else:
            offsets = [0]
            idx_parts, prob_parts, tails = [], [], []
            for _l in range(L):
                (k,) = r.unpack("<I")
                idx_parts.append(np.frombuffer(r.take(4 * k), dtype="<u4"))
                prob_parts.append(np.frombuffer(r.take(4 * k), dtype="<f4"))
                (tail,) = r.unpack("<f")
                tails.append(tail)
                offsets.append(offsets[-1] + k)
            s = SentenceDistributions(
                id=rid, vocab_size=vocab_size,
                sp_indices=np.concatenate(idx_parts) if idx_parts else np.empty(0, "<u4"),
                sp_probs=np.concatenate(prob_parts) if prob_parts else np.empty(0, "<f4"),
                sp_offsets=np.asarray(offsets, dtype=np.int64),
                sp_tails=np.asarray(tails, dtype=np.float32),
                reference_token_ids=refs)
        _check_sentence(s, vocab_size)
        if rid in store.sentences:
            raise FormatError(f"{path}: duplicate sentence id '{rid}'")
        store.sentences[rid] = s
    if r.pos != len(data):
        raise FormatError(f"{path}: {len(data) - r.pos} trailing bytes")
    return store


@dataclass
class EmbeddingMatrix:
    ids: list[str]
    rows: np.ndarray  # (N, D) float32
    digest: str = ""
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._index = {rid: i for i, rid in enumerate(self.ids)}

    @property
    def dim(self) -> int:
        return self.rows.shape[1] if self.rows.ndim == 2 else 0

    def __len__(self):
        return len(self.ids)

    def row(self, rid: str) -> np.ndarray:
        return self.rows[self._index[rid]]

    def content_digest(self) -> str:
        h = hashlib.sha256()
        for rid in self.ids:
            h.update(rid.encode("utf-8") + b"\x00")
        h.update(np.ascontiguousarray(self.rows, dtype="<f4").tobytes())
        return h.hexdigest()


def write_embeddings(emb: EmbeddingMatrix, path) -> None:
    with open(path, "wb") as fh:
        fh.write(MDSE_MAGIC)
        fh.write(struct.pack("<B3x", 1))
        fh.write(struct.pack("<IQ", emb.dim, len(emb.ids)))
        fh.write(np.ascontiguousarray(emb.rows, dtype="<f4").tobytes())
        for rid in emb.ids:
            b = rid.encode("utf-8")
            fh.write(struct.pack("<I", len(b)))
            fh.write(b)


def load_embeddings(path) -> EmbeddingMatrix:
    data = Path(path).read_bytes()
    r = _Reader(data, path)
    if r.take(4) != MDSE_MAGIC:
        raise FormatError(f"{path}: bad magic, not an MDSE file")
    (version,) = r.unpack("<B3x")
    if version != 1:
        raise FormatError(f"{path}: unsupported version {version}")
    dim, count = r.unpack("<IQ")
    rows = np.frombuffer(r.take(4 * dim * count), dtype="<f4").reshape(count, dim)
    bad = np.nonzero(~np.isfinite(rows).all(axis=1))[0]
    if len(bad):
        raise FormatError(f"{path}: non-finite value in row {bad[0]}")
    ids = []
    for _ in range(count):
        (id_len,) = r.unpack("<I")
        ids.append(r.take(id_len).decode("utf-8"))
    if r.pos != len(data):
        raise FormatError(f"{path}: {len(data) - r.pos} trailing bytes")
    if len(set(ids)) != len(ids):
        raise FormatError(f"{path}: duplicate embedding ids")
    return EmbeddingMatrix(ids=ids, rows=rows,
                           digest=hashlib.sha256(data).hexdigest())
