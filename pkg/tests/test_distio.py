import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdselect.distio import (MODE_DENSE, MODE_SPARSE, DistributionStore,
                             EmbeddingMatrix, dense_sentence,
                             load_distributions, load_embeddings,
                             sparse_sentence, write_distributions,
                             write_embeddings)
from mdselect.errors import FormatError


def dense_store(vocab_size=4, rows=None, rid="s1", refs=None):
    rows = np.asarray(rows if rows is not None else [[0.25] * 4] * 2, dtype=np.float32)
    s = dense_sentence(rid, rows, vocab_size, refs)
    return DistributionStore(vocab_size=vocab_size, mode=MODE_DENSE,
                             sentences={rid: s})


class TestMdsd:
    def test_dense_roundtrip(self, tmp_path):
        p = tmp_path / "d.mdsd"
        write_distributions(dense_store(), p)
        store = load_distributions(p)
        assert store.vocab_size == 4
        assert len(store) == 1
        assert store.get("s1").token_count == 2

    def test_sparse_sum_violation(self, tmp_path):
        p = tmp_path / "d.mdsd"
        s = sparse_sentence("s1", [([0, 2], [0.5, 0.4], 0.08)], 4)
        store = DistributionStore(vocab_size=4, mode=MODE_SPARSE,
                                  sentences={"s1": s})
        write_distributions(store, p)
        with pytest.raises(FormatError, match="s1.*token 0"):
            load_distributions(p)

    def test_unsupported_version(self, tmp_path):
        p = tmp_path / "d.mdsd"
        write_distributions(dense_store(), p)
        data = bytearray(p.read_bytes())
        data[4] = 7
        p.write_bytes(bytes(data))
        with pytest.raises(FormatError, match="version 7"):
            load_distributions(p)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "d.mdsd"
        p.write_bytes(b"NOPE" + b"\x00" * 20)
        with pytest.raises(FormatError, match="magic"):
            load_distributions(p)

    def test_truncated(self, tmp_path):
        p = tmp_path / "d.mdsd"
        write_distributions(dense_store(), p)
        p.write_bytes(p.read_bytes()[:-5])
        with pytest.raises(FormatError, match="truncated"):
            load_distributions(p)

    def test_reference_ids_roundtrip(self, tmp_path):
        p = tmp_path / "d.mdsd"
        store = dense_store(refs=[1, 3])
        store.teacher_forced = True
        write_distributions(store, p)
        loaded = load_distributions(p)
        assert loaded.teacher_forced
        assert list(loaded.get("s1").reference_token_ids) == [1, 3]

    def test_sparse_indices_must_increase(self, tmp_path):
        p = tmp_path / "d.mdsd"
        # bypass sparse_sentence ordering by writing raw bytes
        header = b"MDSD" + struct.pack("<BB", 1, 1) + b"\x00\x00" + struct.pack("<IQ", 4, 1)
        body = struct.pack("<I", 2) + b"s1" + struct.pack("<I", 1)
        body += struct.pack("<I", 2) + struct.pack("<II", 2, 0)
        body += struct.pack("<ff", 0.5, 0.4) + struct.pack("<f", 0.1)
        p.write_bytes(header + body)
        with pytest.raises(FormatError, match="strictly increasing"):
            load_distributions(p)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2 ** 31), st.integers(2, 12), st.integers(1, 5),
           st.booleans())
    def test_roundtrip_bitwise(self, tmp_path_factory, seed, vocab_size,
                               n_sent, sparse):
        rng = np.random.default_rng(seed)
        sentences = {}
        for i in range(n_sent):
            rid = f"s{i}"
            length = int(rng.integers(1, 5))
            dense = rng.random((length, vocab_size))
            dense /= dense.sum(axis=1, keepdims=True)
            if sparse:
                rows = []
                for l in range(length):
                    k = int(rng.integers(1, vocab_size + 1))
                    top = np.sort(np.argsort(dense[l])[-k:])
                    probs = dense[l][top].astype(np.float32)
                    tail = max(0.0, 1.0 - float(probs.sum(dtype=np.float64)))
                    rows.append((top, probs, tail))
                sentences[rid] = sparse_sentence(rid, rows, vocab_size)
            else:
                sentences[rid] = dense_sentence(rid, dense, vocab_size)
        store = DistributionStore(vocab_size=vocab_size,
                                  mode=MODE_SPARSE if sparse else MODE_DENSE,
                                  sentences=sentences)
        p = tmp_path_factory.mktemp("rt") / "d.mdsd"
        write_distributions(store, p)
        loaded = load_distributions(p)
        assert list(loaded.sentences) == list(store.sentences)
        for rid in store.sentences:
            a, b = store.get(rid), loaded.get(rid)
            if sparse:
                assert np.array_equal(a.sp_indices, b.sp_indices)
                assert np.array_equal(a.sp_probs.astype(np.float32), b.sp_probs)
                assert np.array_equal(a.sp_tails.astype(np.float32), b.sp_tails)
            else:
                assert np.array_equal(a.dense.astype(np.float32), b.dense)

    def test_written_file_is_reproducible(self, tmp_path):
        p1, p2 = tmp_path / "a.mdsd", tmp_path / "b.mdsd"
        write_distributions(dense_store(), p1)
        write_distributions(dense_store(), p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestMdse:
    def test_roundtrip(self, tmp_path):
        p = tmp_path / "e.mdse"
        emb = EmbeddingMatrix(ids=["a", "b"],
                              rows=np.arange(6, dtype=np.float32).reshape(2, 3))
        write_embeddings(emb, p)
        loaded = load_embeddings(p)
        assert loaded.ids == ["a", "b"]
        assert loaded.dim == 3
        assert np.array_equal(loaded.rows, emb.rows)

    def test_nan_rejected(self, tmp_path):
        p = tmp_path / "e.mdse"
        rows = np.ones((2, 3), dtype=np.float32)
        rows[1, 2] = np.nan
        write_embeddings(EmbeddingMatrix(ids=["a", "b"], rows=rows), p)
        with pytest.raises(FormatError, match="row 1"):
            load_embeddings(p)

    def test_empty_matrix_accepted(self, tmp_path):
        p = tmp_path / "e.mdse"
        write_embeddings(EmbeddingMatrix(ids=[], rows=np.empty((0, 3), np.float32)), p)
        assert len(load_embeddings(p)) == 0

    def test_truncated(self, tmp_path):
        p = tmp_path / "e.mdse"
        emb = EmbeddingMatrix(ids=["a"], rows=np.ones((1, 3), np.float32))
        write_embeddings(emb, p)
        p.write_bytes(p.read_bytes()[:-3])
        with pytest.raises(FormatError, match="truncated"):
            load_embeddings(p)
