import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from mdselect.bundle import Bundle
from mdselect.distio import TokenDistribution, dense_sentence, sparse_sentence
from mdselect.errors import CapabilityError, MdsError
from mdselect.metrics import (MdsMethod, avg_entropy, el2n, perents,
                              qe_passthrough, score_corpus, sentence_entropies,
                              token_entropy, load_scores, write_scores)


def dense_dist(probs):
    return TokenDistribution(dense=np.asarray(probs, dtype=np.float64))


class TestTokenEntropy:
    def test_one_hot_is_zero(self):
        assert token_entropy(dense_dist([0, 0, 1, 0]), 4) == 0.0

    @pytest.mark.parametrize("v", [2, 4, 37, 32000])
    def test_uniform_closed_form(self, v):
        h = token_entropy(dense_dist(np.full(v, 1.0 / v)), v)
        assert h == pytest.approx(math.log(v) / v, abs=1e-12)

    def test_skewed_matches_oracle(self):
        probs = [0.7, 0.2, 0.1, 0.0]
        expected = oracle.token_entropy(probs, 4)  # ~0.2004546381
        assert expected == pytest.approx(0.2004546381358343, abs=1e-12)
        assert token_entropy(dense_dist(probs), 4) == pytest.approx(expected, rel=1e-12)

    def test_sparse_tail_uniform_spread(self):
        # tail 0.5 over 2 unlisted entries == dense [0.25]*4
        d = TokenDistribution(indices=np.array([0, 1]),
                              probs=np.array([0.25, 0.25]), tail_mass=0.5)
        assert token_entropy(d, 4) == pytest.approx(math.log(4) / 4, rel=1e-12)

    def test_tiny_tail_ignored(self):
        d = TokenDistribution(indices=np.array([0]), probs=np.array([1.0]),
                              tail_mass=1e-13)
        assert token_entropy(d, 4) == pytest.approx(0.0, abs=1e-12)

    def test_small_vocab_rejected(self):
        with pytest.raises(MdsError):
            token_entropy(dense_dist([1.0]), 1)

    def test_negative_prob_rejected(self):
        with pytest.raises(MdsError):
            token_entropy(dense_dist([1.1, -0.1, 0, 0]), 4)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 10 ** 9), st.integers(2, 64))
    def test_bounds(self, seed, v):
        rng = np.random.default_rng(seed)
        p = rng.random(v)
        p /= p.sum()
        h = token_entropy(dense_dist(p), v)
        assert -1e-15 <= h <= math.log(v) / v + 1e-12


class TestAvgEntropy:
    def test_all_one_hot(self):
        s = dense_sentence("x", np.eye(4)[[0, 2, 1]], 4)
        assert avg_entropy(s) == 0.0

    def test_all_uniform(self):
        s = dense_sentence("x", np.full((3, 4), 0.25), 4)
        assert avg_entropy(s) == pytest.approx(math.log(4) / 4, rel=1e-12)

    def test_mean_of_token_entropies(self):
        rows = [[0, 0, 1, 0], [0.7, 0.2, 0.1, 0.0]]
        assert (0.0 + oracle.token_entropy(rows[1], 4)) / 2 == pytest.approx(
            0.1002273190679171, abs=1e-12)
        s = dense_sentence("x", rows, 4)
        # oracle reads the same float32-stored probabilities
        expected = sum(oracle.token_entropy(oracle.densify(s, l), 4)
                       for l in range(2)) / 2
        assert avg_entropy(s) == pytest.approx(expected, rel=1e-9)


class TestPerents:
    def _sentence(self):
        rows = np.full((6, 4), 0.25)
        rows[1] = [0.9, 0.1, 0, 0]
        rows[4] = [0.5, 0.5, 0, 0]
        return dense_sentence("x", rows, 4)

    def test_max_and_mean(self):
        s = self._sentence()
        ents = sentence_entropies(s)
        assert perents(s, {1, 4}) == pytest.approx(max(ents[1], ents[4]), rel=1e-12)
        assert perents(s, {1, 4}, "mean") == pytest.approx((ents[1] + ents[4]) / 2, rel=1e-12)

    def test_empty_set_is_missing(self):
        assert perents(self._sentence(), set()) is None

    def test_out_of_bounds(self):
        with pytest.raises(MdsError, match="out of bounds"):
            perents(self._sentence(), {99})

    def test_non_ne_locality(self):
        s = self._sentence()
        before = perents(s, {1, 4})
        mutated = s.dense.copy()
        mutated[0] = [1, 0, 0, 0]
        mutated[5] = [0, 1, 0, 0]
        s2 = dense_sentence("x", mutated, 4)
        assert perents(s2, {1, 4}) == before

    def test_max_ge_mean(self):
        s = self._sentence()
        assert perents(s, {0, 1, 4}) >= perents(s, {0, 1, 4}, "mean")


class TestEl2n:
    def test_exact_match_is_zero(self):
        s = dense_sentence("x", np.eye(4)[[2]], 4, reference_token_ids=[2])
        assert el2n(s) == 0.0

    @pytest.mark.parametrize("v", [2, 4, 64])
    def test_uniform_closed_form(self, v):
        s = dense_sentence("x", np.full((1, v), 1.0 / v), v, reference_token_ids=[0])
        assert el2n(s) == pytest.approx(math.sqrt(1 - 1 / v), rel=1e-9)

    @pytest.mark.parametrize("ref_len,mt_len", [(3, 5), (5, 3)])
    def test_min_length_truncation(self, ref_len, mt_len):
        rng = np.random.default_rng(0)
        rows = rng.random((mt_len, 4))
        rows /= rows.sum(axis=1, keepdims=True)
        refs = rng.integers(0, 4, size=ref_len)
        s = dense_sentence("x", rows, 4, reference_token_ids=refs)
        length = min(ref_len, mt_len)
        stored = s.dense  # float32, as persisted
        manual = np.mean([
            math.sqrt(sum((float(stored[l][i]) - (1.0 if i == refs[l] else 0.0)) ** 2
                          for i in range(4)))
            for l in range(length)])
        assert el2n(s) == pytest.approx(manual, rel=1e-9)

    def test_missing_refs_rejected(self):
        s = dense_sentence("x", np.full((1, 4), 0.25), 4)
        with pytest.raises(MdsError, match="reference"):
            el2n(s)

    def test_ref_id_out_of_vocab(self):
        s = dense_sentence("x", np.full((1, 4), 0.25), 4, reference_token_ids=[9])
        with pytest.raises(MdsError, match=">= V"):
            el2n(s)

    def test_sparse_matches_densified_oracle(self):
        rows = [(np.array([1, 3]), np.array([0.6, 0.3], dtype=np.float32), 0.1)]
        for ref in (1, 0):  # listed and unlisted reference id
            s = sparse_sentence("x", rows, 8, reference_token_ids=[ref])
            assert el2n(s) == pytest.approx(oracle.el2n(s), rel=1e-9)

    def test_each_term_bounded_by_sqrt2(self, synth_bundle):
        for rid in synth_bundle.corpus.ids():
            val = el2n(synth_bundle.dists.get(rid))
            assert 0.0 <= val <= math.sqrt(2) + 1e-12


class TestQePassthrough:
    def test_identity(self):
        out = qe_passthrough({"s1": 0.91, "s2": 0.40}, ["s1", "s2"])
        assert out == {"s1": 0.91, "s2": 0.40}

    def test_absent_id_missing(self):
        out = qe_passthrough({"s1": 0.5}, ["s1", "s3"])
        assert out["s3"] is None

    def test_boundary_accepted(self):
        assert qe_passthrough({"s1": 1.0}, ["s1"])["s1"] == 1.0

    def test_out_of_range(self):
        with pytest.raises(MdsError):
            qe_passthrough({"s1": 1.2}, ["s1"])


class TestMdsMethod:
    def test_aggregation_only_for_perents(self):
        with pytest.raises(MdsError):
            MdsMethod(name="el2n", aggregation="mean")

    def test_k_only_for_selfsup(self):
        with pytest.raises(MdsError):
            MdsMethod(name="qe", k=3)

    def test_params_digest_stable(self):
        a = MdsMethod(name="perents", aggregation="mean")
        b = MdsMethod(name="perents", aggregation="mean")
        assert a.params_digest() == b.params_digest()
        assert a.params_digest() != MdsMethod(name="perents").params_digest()


class TestScoreCorpus:
    @pytest.mark.parametrize("bundle_fixture", ["synth_bundle", "sparse_bundle"])
    @pytest.mark.parametrize("method,agg", [
        ("avg_entropy", "max"), ("el2n", "max"),
        ("perents", "max"), ("perents", "mean"),
    ])
    def test_matches_oracle(self, request, bundle_fixture, method, agg):
        bundle = request.getfixturevalue(bundle_fixture)
        table = score_corpus(bundle, MdsMethod(name=method, aggregation=agg))
        for rid in bundle.corpus.ids():
            s = bundle.dists.get(rid)
            if method == "avg_entropy":
                expected = oracle.avg_entropy(s)
            elif method == "el2n":
                expected = oracle.el2n(s)
            else:
                expected = oracle.perents(s, bundle.ner.token_indices(rid), agg)
            got = table.entries[rid]
            if expected is None:
                assert got is None
            else:
                assert got == pytest.approx(expected, rel=1e-9)

    def test_qe_and_selfsup(self, synth_bundle):
        qe_table = score_corpus(synth_bundle, MdsMethod(name="qe"))
        assert qe_table.entries == dict(synth_bundle.qe.values)

        table = score_corpus(synth_bundle, MdsMethod(name="selfsup", k=3, seed=1))
        from mdselect.cluster import kmeans_fit
        clustering = kmeans_fit(synth_bundle.emb, k=3, seed=1)
        for i, rid in enumerate(synth_bundle.emb.ids):
            expected = oracle.nearest_centroid_distance(
                synth_bundle.emb.rows[i].astype(float), clustering.centroids)
            assert table.entries[rid] == pytest.approx(expected, rel=1e-9)

    def test_capability_errors(self, synth_bundle):
        bare = Bundle(corpus=synth_bundle.corpus)
        for name, artifact in [("avg_entropy", "dists"), ("perents", "dists"),
                               ("selfsup", "emb"), ("qe", "qe")]:
            with pytest.raises(CapabilityError, match=artifact):
                score_corpus(bare, MdsMethod(name=name))
        no_ner = Bundle(corpus=synth_bundle.corpus, dists=synth_bundle.dists)
        with pytest.raises(CapabilityError, match="ner"):
            score_corpus(no_ner, MdsMethod(name="perents"))

    def test_deterministic(self, synth_bundle):
        m = MdsMethod(name="perents")
        a = score_corpus(synth_bundle, m)
        b = score_corpus(synth_bundle, m)
        assert a.entries == b.entries
        assert a.bundle_digest == b.bundle_digest

    def test_score_roundtrip(self, synth_bundle, tmp_path):
        table = score_corpus(synth_bundle, MdsMethod(name="perents"))
        p = tmp_path / "scores.tsv"
        write_scores(table, p)
        loaded = load_scores(p)
        assert loaded.entries == table.entries
        assert loaded.method == table.method
        assert loaded.bundle_digest == table.bundle_digest


class TestLogBaseInvariance:
    def test_rank_order_unchanged(self, synth_bundle):
        # ln -> log2 is a positive constant factor on every entropy score
        table = score_corpus(synth_bundle, MdsMethod(name="avg_entropy"))
        base = {k: v for k, v in table.entries.items() if v is not None}
        scaled = {k: v / math.log(2) for k, v in base.items()}
        order_a = sorted(base, key=lambda k: base[k])
        order_b = sorted(scaled, key=lambda k: scaled[k])
        assert order_a == order_b
